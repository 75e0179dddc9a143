// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError, PowerModel};

/// Denominator of the percentage RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    /// Largest observed test-set power.
    #[default]
    Peak,
    Mean,
    /// `max - min` of the test-set power.
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Watts.
    pub rmse: f64,
    /// Percent of the normalizer.
    pub nrmse: f64,
    pub r2: f64,
}

pub fn evaluate(m: &PowerModel, test: &Dataset, normalizer: Normalizer) -> Result<Metrics, ModelError> {
    if test.n_rows() == 0 {
        return Err(ModelError::EmptyTestSet);
    }
    let pred = m.predict_dataset(test)?;
    let y = &test.y;
    let n = y.len() as f64;
    let ss_res: f64 = pred.iter().zip(y).map(|(p, v)| (p - v) * (p - v)).sum();
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let rmse = libm::sqrt(ss_res / n);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let denom = match normalizer {
        Normalizer::Peak => max,
        Normalizer::Mean => mean,
        Normalizer::Range => max - min,
    };
    if !(denom > 0.0) {
        return Err(ModelError::DegenerateNormalizer(denom));
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Metrics { rmse, nrmse: rmse / denom * 100.0, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::{CounterType, FeatureDesc};
    use crate::model::Term;
    use alloc::vec;
    use alloc::vec::Vec;

    fn data() -> Dataset {
        let f = FeatureDesc { signal: "top.a.b".into(), counter_type: CounterType::Hw };
        let x: Vec<f64> = (0..20).map(|i| (i % 5) as f64).collect();
        let y = x.iter().map(|v| 0.5 + 0.1 * v).collect();
        Dataset::new(vec![f], vec![x], y).unwrap()
    }

    #[test]
    fn perfect_model() {
        let d = data();
        let m = PowerModel {
            intercept: 0.5,
            terms: vec![Term { feature: d.features[0].clone(), weight: 0.1 }],
            budget: 1,
        };
        let r = evaluate(&m, &d, Normalizer::Peak).unwrap();
        assert!(r.rmse < 1e-15 && r.nrmse < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_model_has_zero_r2() {
        let d = data();
        let mean = d.y.iter().sum::<f64>() / d.n_rows() as f64;
        let m = PowerModel { intercept: mean, terms: vec![], budget: 1 };
        let r = evaluate(&m, &d, Normalizer::Peak).unwrap();
        assert_eq!(r.r2, 0.0);
        // Peak is 0.9 W; population std of 0.1·(i mod 5) is 0.1·√2.
        assert!((r.nrmse - 0.1 * libm::sqrt(2.0) / 0.9 * 100.0).abs() < 1e-9);
        let by_range = evaluate(&m, &d, Normalizer::Range).unwrap();
        assert!((by_range.nrmse - 0.1 * libm::sqrt(2.0) / 0.4 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_features() {
        let d = data();
        let m = PowerModel {
            intercept: 0.0,
            terms: vec![Term { feature: FeatureDesc { signal: "top.q".into(), counter_type: CounterType::St }, weight: 1.0 }],
            budget: 1,
        };
        assert_eq!(evaluate(&m, &d, Normalizer::Peak), Err(ModelError::FeatureMismatch("top.q:ST".into())));
    }
}
