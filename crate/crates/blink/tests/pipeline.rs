// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use blink::artifacts::{ModelFile, MONITOR, REPORT_JSON, REPORT_TXT};
use blink::fixture::{gen_fixture, FixtureParams, Truth};
use blink::report::{PhaseStatus, RunReport, REPORT_SCHEMA};
use blink::{BlinkError, ExitCode, Overrides, Phase, Pipeline, PipelineConfig, RunOptions};

fn small() -> FixtureParams {
    let mut p = FixtureParams::default();
    p.vcd.n_windows = 200;
    p
}

fn load(dir: &Path) -> PipelineConfig {
    PipelineConfig::load(&dir.join("blink.toml"), &Overrides::default()).unwrap()
}

/// Every file under `dir` except the state directory, by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_file() {
            out.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    out
}

fn schema_errors(report: &str) -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let instance: serde_json::Value = serde_json::from_str(report).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    v.iter_errors(&instance).map(|e| format!("{e} at {}", e.instance_path)).collect()
}

#[test]
fn all_then_rerun_is_a_no_op() {
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(3, &small(), tmp.path()).unwrap();
    let pipeline = Pipeline::new(load(tmp.path()));

    let first = pipeline.run(&Phase::ALL, RunOptions::default()).unwrap();
    assert_eq!(first.outcomes.len(), 4);
    assert!(first.outcomes.iter().all(|o| o.status == PhaseStatus::Ran));
    assert!(first.report_written);
    let out = pipeline.output_dir().to_path_buf();
    let before = snapshot(&out);

    let report: RunReport = serde_json::from_slice(&before[REPORT_JSON]).unwrap();
    assert_eq!(report.phases.len(), 4);
    assert!(report.phases.iter().all(|p| p.seconds.is_some()));
    assert!(report.metrics.is_some() && report.overhead.is_some());
    assert_eq!(report.artifacts.len(), 9);

    let second = pipeline.run(&Phase::ALL, RunOptions::default()).unwrap();
    assert!(second.outcomes.iter().all(|o| o.status == PhaseStatus::UpToDate));
    assert!(!second.did_work() && !second.report_written);
    assert_eq!(snapshot(&out), before);
    assert!(!out.join(".blink/lock").exists());

    let forced = pipeline.run(&[Phase::Identify], RunOptions { force: true }).unwrap();
    assert_eq!(forced.outcomes[0].status, PhaseStatus::Ran);
    let after = snapshot(&out);
    for (name, bytes) in &before {
        if name != REPORT_JSON && name != REPORT_TXT {
            assert_eq!(&after[name], bytes, "{name} changed on a forced re-run");
        }
    }
}

#[test]
fn config_change_reruns_downstream_only() {
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(4, &small(), tmp.path()).unwrap();
    Pipeline::new(load(tmp.path())).run(&Phase::ALL, RunOptions::default()).unwrap();
    let ov = Overrides { budget: Some(3), ..Overrides::default() };
    let cfg = PipelineConfig::load(&tmp.path().join("blink.toml"), &ov).unwrap();
    let run = Pipeline::new(cfg).run(&Phase::ALL, RunOptions::default()).unwrap();
    let status: Vec<PhaseStatus> = run.outcomes.iter().map(|o| o.status).collect();
    assert_eq!(status, [PhaseStatus::UpToDate, PhaseStatus::UpToDate, PhaseStatus::Ran, PhaseStatus::Ran]);
    let model: ModelFile = serde_json::from_slice(&fs::read(tmp.path().join("out/model.json")).unwrap()).unwrap();
    assert!(model.terms.len() <= 3);
}

#[test]
fn fixture_recovers_its_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut p = small();
    p.scope.noise_sigma = 0.0;
    gen_fixture(11, &p, tmp.path()).unwrap();
    let pipeline = Pipeline::new(load(tmp.path()));
    pipeline.run(&Phase::ALL, RunOptions::default()).unwrap();
    let truth: Truth = serde_json::from_slice(&fs::read(tmp.path().join("truth.json")).unwrap()).unwrap();
    let model: ModelFile = serde_json::from_slice(&fs::read(tmp.path().join("out/model.json")).unwrap()).unwrap();
    let got = model.model();
    let mut want: Vec<_> = truth.model.terms.iter().map(|t| t.feature.clone()).collect();
    let mut have: Vec<_> = got.terms.iter().map(|t| t.feature.clone()).collect();
    want.sort();
    have.sort();
    assert_eq!(have, want);
    for t in &truth.model.terms {
        let g = got.terms.iter().find(|g| g.feature == t.feature).unwrap();
        assert!((g.weight - t.weight).abs() <= 1e-6 * t.weight.abs(), "{}: {} vs {}", t.feature, g.weight, t.weight);
    }
    let monitor: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("out").join(MONITOR)).unwrap()).unwrap();
    assert_eq!(monitor["self_check"]["mismatched_windows"], 0);
    assert_eq!(monitor["self_check"]["counter_overflow"], false);
}

#[test]
fn fixture_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_fixture(7, &small(), a.path()).unwrap();
    gen_fixture(7, &small(), b.path()).unwrap();
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), ["blink.toml", "design.vcd", "scope.csv", "truth.json"]);
    assert_eq!(sa, sb);
}

#[test]
fn report_matches_schema() {
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(5, &small(), tmp.path()).unwrap();
    let pipeline = Pipeline::new(load(tmp.path()));
    pipeline.run(&[Phase::ExtractActivity, Phase::IngestPower, Phase::Identify], RunOptions::default()).unwrap();
    let out = pipeline.output_dir();
    let partial = fs::read_to_string(out.join(REPORT_JSON)).unwrap();
    assert_eq!(schema_errors(&partial), Vec::<String>::new());
    let report: RunReport = serde_json::from_str(&partial).unwrap();
    assert!(report.overhead.is_none() && report.summary.lut_estimate.is_none());
    let text = fs::read_to_string(out.join(REPORT_TXT)).unwrap();
    let row = text.lines().find(|l| l.starts_with("fixture-5")).unwrap();
    assert_eq!(row.matches("n/a").count(), 2, "{row}");
    assert!(text.contains("ID") && text.contains("LUT~") && text.contains("FF~") && text.contains("NRMSE"));

    pipeline.run(&Phase::ALL, RunOptions::default()).unwrap();
    let full = fs::read_to_string(out.join(REPORT_JSON)).unwrap();
    assert_eq!(schema_errors(&full), Vec::<String>::new());
    let report: RunReport = serde_json::from_str(&full).unwrap();
    assert!(report.overhead.is_some());
    assert_eq!(report.reference[0].id, "A10");
    assert!(!report.reference[0].comparable);

    let mut broken: serde_json::Value = serde_json::from_str(&full).unwrap();
    broken["phases"][0]["status"] = "skipped".into();
    assert!(!schema_errors(&broken.to_string()).is_empty());
}

#[test]
fn missing_scope_file() {
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(6, &small(), tmp.path()).unwrap();
    fs::remove_file(tmp.path().join("scope.csv")).unwrap();
    let pipeline = Pipeline::new(load(tmp.path()));
    pipeline.run(&[Phase::ExtractActivity], RunOptions::default()).unwrap();
    let err = pipeline.run(&[Phase::IngestPower], RunOptions::default()).unwrap_err();
    assert!(matches!(&err, BlinkError::MissingInput(p) if p.ends_with("scope.csv")), "{err}");
    assert_eq!(err.exit_code(), ExitCode::MissingInput);
    assert!(err.to_string().contains("scope.csv"));
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_blink");
    let tmp = tempfile::tempdir().unwrap();
    let fx = tmp.path().join("fx");
    let st = Command::new(bin).args(["gen-fixture", "--seed", "2", "--windows", "150", "--out"]).arg(&fx).status().unwrap();
    assert!(st.success());

    let out = Command::new(bin).arg("all").arg("-c").arg(fx.join("blink.toml")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = Command::new(bin).arg("all").arg("-c").arg(fx.join("blink.toml")).output().unwrap();
    assert_eq!(again.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&again.stdout);
    assert_eq!(stdout.matches("up-to-date").count(), 4, "{stdout}");

    fs::remove_file(fx.join("scope.csv")).unwrap();
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    let cfg = fx.join("blink.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&["ingest-power", "-c", cfg]), Some(3));
    assert_eq!(code(&["identify", "-c", cfg, "--budget", "0"]), Some(2));
    assert_eq!(code(&["all", "-c", tmp.path().join("nope.toml").to_str().unwrap()]), Some(2));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[inputs]\nvcd = \"fx/design.vcd\"\nscope = [\"fx/garbage.csv\"]\n[output]\ndir = \"o\"\n").unwrap();
    fs::write(tmp.path().join("fx/garbage.csv"), "time,shunt,trigger\n0,1,0\n1,1,0\n5,1,0\n").unwrap();
    assert_eq!(code(&["all", "-c", bad.to_str().unwrap()]), Some(4));
}

#[test]
fn output_root_from_environment() {
    let bin = env!("CARGO_BIN_EXE_blink");
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(8, &small(), &tmp.path().join("fx")).unwrap();
    let root = tmp.path().join("elsewhere");
    let st = Command::new(bin)
        .args(["extract-activity", "-c"])
        .arg(tmp.path().join("fx/blink.toml"))
        .env("BLINK_OUTPUT_ROOT", &root)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(root.join("activity.blka").exists());
    assert!(!tmp.path().join("fx/out").exists());
}

#[test]
fn lock_excludes_a_second_run() {
    let tmp = tempfile::tempdir().unwrap();
    gen_fixture(9, &small(), tmp.path()).unwrap();
    let cfg = load(tmp.path());
    fs::create_dir_all(cfg.output.dir.join(".blink")).unwrap();
    fs::write(cfg.output.dir.join(".blink/lock"), "1\n").unwrap();
    let err = Pipeline::new(cfg).run(&Phase::ALL, RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("lock"), "{err}");
}
