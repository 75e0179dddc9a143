// SPDX-License-Identifier: Apache-2.0

//! Phase orchestration with digest-gated re-runs.
//!
//! Every phase records the digests of its inputs, its outputs and the part
//! of the configuration it reads in `<out>/.blink/state.json`. A phase whose
//! recorded digests all match the files on disk is skipped. Artifacts are
//! written to a temporary file in the output directory and renamed into
//! place, and a lock file keeps two runs out of the same directory.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use blink_core::activity::{detect_trigger_window, window_activity, ActivityMatrix, ActivityOptions};
use blink_core::candidates::resolve_candidates;
use blink_core::model::{assemble_dataset, evaluate, identify_model, split_dataset, IdentifyOptions, ModelError};
use blink_core::monitor::{
    emit_monitor_rtl, emit_wrapper, estimate_overhead, events_to_cycles, quantize_weights, simulate_monitor,
    MonitorSpec, PortDecl, WrapperConfig,
};
use blink_core::power::{align_and_resample, compute_power, stitch, Supply};
use blink_core::vcd::{PortRole, SignalTable};
use blink_core::Femtos;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::*;
use crate::config::PipelineConfig;
use crate::container;
use crate::error::{BlinkError, Result};
use crate::report::{reference_rows, ArtifactRecord, PhaseRecord, PhaseStatus, RunReport, SummaryRow, TapRecord};
use crate::scope_csv::read_scope_csv;
use crate::source::open_vcd;

pub const STATE_DIR: &str = ".blink";
const STATE_FILE: &str = "state.json";
const LOCK_FILE: &str = "lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    ExtractActivity,
    IngestPower,
    Identify,
    EmitMonitor,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::ExtractActivity, Phase::IngestPower, Phase::Identify, Phase::EmitMonitor];

    pub fn name(self) -> &'static str {
        match self {
            Phase::ExtractActivity => "extract-activity",
            Phase::IngestPower => "ingest-power",
            Phase::Identify => "identify",
            Phase::EmitMonitor => "emit-monitor",
        }
    }

    pub fn from_name(s: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.name() == s)
    }

    fn error(self, e: impl std::fmt::Display) -> BlinkError {
        BlinkError::data(self.name(), e)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run phases even when their digests match.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome {
    pub phase: Phase,
    pub status: PhaseStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcomes: Vec<PhaseOutcome>,
    /// Whether report.json and report.txt were rewritten.
    pub report_written: bool,
    pub report_path: PathBuf,
}

impl RunSummary {
    pub fn did_work(&self) -> bool {
        self.outcomes.iter().any(|o| o.status == PhaseStatus::Ran)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct PhaseState {
    config: String,
    inputs: Digests,
    outputs: Digests,
    seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct State {
    format_version: u32,
    phases: BTreeMap<String, PhaseState>,
}

/// SHA-256 of a file, hex encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let f = File::open(path).map_err(|e| BlinkError::io(path, e))?;
    let mut r = BufReader::with_capacity(1 << 16, f);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf).map_err(|e| BlinkError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn text_digest(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let target = dir.join(name);
    let io_err = |e: io::Error| BlinkError::Io { path: target.clone(), source: e };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644)).map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(&target).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, phase: Phase) -> Result<T> {
    let f = File::open(path).map_err(|e| BlinkError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| phase.error(format!("{}: {e}", path.display())))
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(state_dir: &Path) -> Result<Lock> {
        let path = state_dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock(path))
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(BlinkError::Other(format!(
                "{} exists; another run owns this output directory (remove the file if it is stale)",
                path.display()
            ))),
            Err(e) => Err(BlinkError::Io { path, source: e }),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Inputs, configuration slice and outputs of a phase.
struct PhasePlan {
    /// Key in the state file and path on disk.
    inputs: Vec<(String, PathBuf)>,
    config: String,
    outputs: &'static [&'static str],
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
    state_dir: PathBuf,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        let out = cfg.output.dir.clone();
        let state_dir = out.join(STATE_DIR);
        Pipeline { cfg, out, state_dir }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn plan(&self, phase: Phase) -> PhasePlan {
        let c = &self.cfg;
        let art = |n: &str| (n.to_string(), self.artifact(n));
        let ext = |p: &PathBuf| (format!("input:{}", p.display()), p.clone());
        let cfg_json = |v: serde_json::Value| text_digest(&v.to_string());
        match phase {
            Phase::ExtractActivity => PhasePlan {
                inputs: vec![ext(&c.inputs.vcd)],
                config: cfg_json(serde_json::json!({ "candidates": c.candidates, "activity": c.activity })),
                outputs: &[ACTIVITY, SIGNALS, ACTIVITY_META],
            },
            Phase::IngestPower => {
                let mut inputs: Vec<_> = c.inputs.scope.iter().map(ext).collect();
                inputs.push(art(ACTIVITY_META));
                PhasePlan {
                    inputs,
                    config: cfg_json(serde_json::json!({ "power": c.power, "activity": c.activity })),
                    outputs: &[POWER, POWER_META],
                }
            }
            Phase::Identify => PhasePlan {
                inputs: vec![art(ACTIVITY), art(POWER)],
                config: cfg_json(serde_json::json!({ "identify": c.identify })),
                outputs: &[MODEL],
            },
            Phase::EmitMonitor => {
                let mut inputs = vec![art(MODEL), art(SIGNALS), art(ACTIVITY_META), art(ACTIVITY)];
                if c.monitor.verify {
                    inputs.push(ext(&c.inputs.vcd));
                }
                PhasePlan {
                    inputs,
                    config: cfg_json(serde_json::json!({ "monitor": c.monitor, "activity": c.activity })),
                    outputs: &[MONITOR_RTL, WRAPPER_RTL, MONITOR],
                }
            }
        }
    }

    fn load_state(&self) -> State {
        let path = self.state_dir.join(STATE_FILE);
        fs::read(&path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or(State { format_version: FORMAT_VERSION, ..State::default() })
    }

    fn digest_inputs(plan: &PhasePlan) -> Result<Digests> {
        plan.inputs.iter().map(|(k, p)| Ok((k.clone(), file_digest(p)?))).collect()
    }

    fn digest_outputs(&self, outputs: &[&str]) -> Option<Digests> {
        outputs.iter().map(|n| file_digest(&self.artifact(n)).ok().map(|d| (n.to_string(), d))).collect()
    }

    /// Runs `phases` in order.
    pub fn run(&self, phases: &[Phase], opts: RunOptions) -> Result<RunSummary> {
        fs::create_dir_all(&self.state_dir).map_err(|e| BlinkError::Io { path: self.state_dir.clone(), source: e })?;
        let _lock = Lock::acquire(&self.state_dir)?;
        let mut state = self.load_state();
        let mut outcomes = Vec::new();
        let mut warnings = Vec::new();

        for &phase in phases {
            let plan = self.plan(phase);
            let inputs = Self::digest_inputs(&plan)?;
            let fresh = state.phases.get(phase.name()).is_some_and(|s| {
                s.config == plan.config
                    && s.inputs == inputs
                    && self.digest_outputs(plan.outputs).as_ref() == Some(&s.outputs)
            });
            if fresh && !opts.force {
                info!("{}: up-to-date", phase.name());
                outcomes.push(PhaseOutcome { phase, status: PhaseStatus::UpToDate, seconds: 0.0 });
                continue;
            }
            info!("{}: running", phase.name());
            let t0 = Instant::now();
            match phase {
                Phase::ExtractActivity => self.extract_activity()?,
                Phase::IngestPower => self.ingest_power(&mut warnings)?,
                Phase::Identify => self.identify()?,
                Phase::EmitMonitor => self.emit_monitor(&mut warnings)?,
            }
            let seconds = t0.elapsed().as_secs_f64();
            let outputs = self
                .digest_outputs(plan.outputs)
                .ok_or_else(|| BlinkError::Other(format!("{} did not write all of its outputs", phase.name())))?;
            state.phases.insert(phase.name().into(), PhaseState { config: plan.config, inputs, outputs, seconds });
            write_atomic(&self.state_dir, STATE_FILE, &to_json(&state))?;
            outcomes.push(PhaseOutcome { phase, status: PhaseStatus::Ran, seconds });
        }

        let report_path = self.artifact(REPORT_JSON);
        let ran = outcomes.iter().any(|o| o.status == PhaseStatus::Ran);
        let report_written = ran || opts.force || !report_path.exists() || !self.artifact(REPORT_TXT).exists();
        if report_written {
            let report = self.build_report(&state, &outcomes, warnings)?;
            write_atomic(&self.out, REPORT_JSON, report.to_json().as_bytes())?;
            write_atomic(&self.out, REPORT_TXT, report.to_text().as_bytes())?;
        }
        Ok(RunSummary { outcomes, report_written, report_path })
    }

    fn extract_activity(&self) -> Result<()> {
        let phase = Phase::ExtractActivity;
        let c = &self.cfg;
        let vcd = &c.inputs.vcd;
        let (mut table, _) = open_vcd(vcd)?;
        let filter = c.candidates.filter();
        filter.classify(&mut table);
        let settle = Femtos::from_micros(c.activity.settle_us)
            .ok_or_else(|| BlinkError::Config("activity.settle_us is out of range".into()))?;
        let resolution = Femtos::from_micros(c.activity.resolution_us)
            .ok_or_else(|| BlinkError::Config("activity.resolution_us is out of range".into()))?;
        let (_, events) = open_vcd(vcd)?;
        let window = detect_trigger_window(events, &table, &c.activity.trigger, settle).map_err(|e| phase.error(e))?;
        let candidates = resolve_candidates(&table, &filter).map_err(|e| phase.error(e))?;
        let (_, events) = open_vcd(vcd)?;
        let opts = ActivityOptions { collapse_same_timestamp: c.activity.collapse_same_timestamp };
        let acts = window_activity(events, &table, &candidates, &window, resolution, opts).map_err(|e| phase.error(e))?;
        info!("{} windows x {} features from {} candidates", acts.n_windows, acts.n_features(), candidates.len());

        let meta = ActivityMeta {
            format_version: FORMAT_VERSION,
            n_windows: acts.n_windows,
            n_features: acts.n_features(),
            resolution_us: c.activity.resolution_us,
            settle_us: c.activity.settle_us,
            trigger: c.activity.trigger.clone(),
            window,
            tick_fs: table.timescale.tick().0,
            n_candidates: candidates.len(),
        };
        let mut blka = Vec::new();
        container::write_activity(&acts, &mut blka).map_err(|e| phase.error(e))?;
        write_atomic(&self.out, ACTIVITY, &blka)?;
        write_atomic(&self.out, SIGNALS, &to_json(&table))?;
        write_atomic(&self.out, ACTIVITY_META, &to_json(&meta))?;
        Ok(())
    }

    fn ingest_power(&self, warnings: &mut Vec<String>) -> Result<()> {
        let phase = Phase::IngestPower;
        let c = &self.cfg;
        let meta: ActivityMeta = read_json(&self.artifact(ACTIVITY_META), phase)?;
        let mut captures = Vec::new();
        let mut infos = Vec::new();
        for path in &c.inputs.scope {
            let f = File::open(path).map_err(|e| BlinkError::io(path, e))?;
            let cap = read_scope_csv(BufReader::new(f)).map_err(|e| phase.error(format!("{}: {e}", path.display())))?;
            infos.push(CaptureInfo {
                file: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
                capture_id: cap.capture_id.clone(),
                instrument: cap.instrument.clone(),
                samples: cap.len(),
                sample_period_s: cap.sample_period,
            });
            captures.push(cap);
        }
        let mut merged = captures.remove(0);
        for next in &captures {
            merged = stitch(&merged, next).map_err(|e| phase.error(e))?;
        }
        let supply = c.power.supply_v.map_or(Supply::Channel, Supply::Constant);
        let trace = compute_power(&merged, c.power.r_shunt_ohm, supply).map_err(|e| phase.error(e))?;
        if trace.clamped > 0 {
            let msg = format!("{} power samples were negative and clamped to zero", trace.clamped);
            warn!("{msg}");
            warnings.push(msg);
        }
        let windowed = align_and_resample(&trace, c.activity.settle_us * 1e-6, c.activity.resolution_us * 1e-6, meta.n_windows)
            .map_err(|e| phase.error(e))?;
        let peak = windowed.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = windowed.values.iter().sum::<f64>() / windowed.values.len() as f64;
        let pmeta = PowerMeta {
            format_version: FORMAT_VERSION,
            n_windows: windowed.values.len(),
            resolution_us: c.activity.resolution_us,
            settle_us: c.activity.settle_us,
            r_shunt_ohm: c.power.r_shunt_ohm,
            supply_v: c.power.supply_v,
            captures: infos,
            trigger_index: trace.t0_trigger,
            clamped_samples: trace.clamped,
            peak_window_w: peak,
            mean_window_w: mean,
        };
        let mut blkp = Vec::new();
        container::write_power(&windowed, &mut blkp).map_err(|e| phase.error(e))?;
        write_atomic(&self.out, POWER, &blkp)?;
        write_atomic(&self.out, POWER_META, &to_json(&pmeta))?;
        Ok(())
    }

    fn read_activity(&self, phase: Phase) -> Result<ActivityMatrix> {
        let path = self.artifact(ACTIVITY);
        let f = File::open(&path).map_err(|e| BlinkError::io(&path, e))?;
        container::read_activity(BufReader::new(f)).map_err(|e| phase.error(format!("{}: {e}", path.display())))
    }

    fn identify(&self) -> Result<()> {
        let phase = Phase::Identify;
        let c = &self.cfg.identify;
        let acts = self.read_activity(phase)?;
        let path = self.artifact(POWER);
        let f = File::open(&path).map_err(|e| BlinkError::io(&path, e))?;
        let power = container::read_power(BufReader::new(f)).map_err(|e| phase.error(format!("{}: {e}", path.display())))?;

        let data = assemble_dataset(&acts, &power).map_err(|e| phase.error(e))?;
        let ident = |e: ModelError| BlinkError::Identification(e.to_string());
        let (train, test, _) = split_dataset(&data, c.split_ratio, c.seed).map_err(ident)?;
        let opts = IdentifyOptions { budget: c.budget, mode: c.mode, non_negative: c.non_negative };
        let id = identify_model(&train, opts).map_err(ident)?;
        let metrics = evaluate(&id.model, &test, c.normalizer).map_err(ident)?;
        info!(
            "selected {} of {} features, test NRMSE {:.3}%",
            id.model.terms.len(),
            data.n_features(),
            metrics.nrmse
        );
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            intercept_w: id.model.intercept,
            terms: ModelFile::terms_of(&id.model),
            budget: id.model.budget,
            resolution_us: self.cfg.activity.resolution_us,
            split_ratio: c.split_ratio,
            seed: c.seed,
            n_train: train.n_rows(),
            n_test: test.n_rows(),
            normalizer: c.normalizer,
            metrics,
            peak_test_w: test.y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            selection: SelectionInfo {
                mode: c.mode,
                non_negative: c.non_negative,
                train_rmse_w: id.train_rmse,
                steps: id.steps,
                dropped_collinear: id.dropped,
                removed_negative: id.removed_negative,
            },
        };
        write_atomic(&self.out, MODEL, &to_json(&file))
    }

    fn emit_monitor(&self, warnings: &mut Vec<String>) -> Result<()> {
        let phase = Phase::EmitMonitor;
        let c = &self.cfg.monitor;
        let model_file: ModelFile = read_json(&self.artifact(MODEL), phase)?;
        let table: SignalTable = read_json(&self.artifact(SIGNALS), phase)?;
        let meta: ActivityMeta = read_json(&self.artifact(ACTIVITY_META), phase)?;
        if (meta.resolution_us - self.cfg.activity.resolution_us).abs() > 1e-9 * meta.resolution_us {
            return Err(phase.error("activity artifacts were extracted at a different resolution"));
        }
        let model = model_file.model();
        let window_cycles = self.cfg.window_cycles()?;
        let widths = model
            .terms
            .iter()
            .map(|t| {
                table
                    .find(&t.feature.signal)
                    .map(|(_, e)| e.width)
                    .ok_or_else(|| phase.error(format!("model signal `{}` is not in the VCD", t.feature.signal)))
            })
            .collect::<Result<Vec<u32>>>()?;
        let q = quantize_weights(&model, c.weight_width, c.output_width, c.max_frac_bits).map_err(|e| phase.error(e))?;
        let spec = MonitorSpec::new(&model, q, &widths, window_cycles).map_err(|e| phase.error(e))?;
        let monitor_rtl = emit_monitor_rtl(&spec).map_err(|e| phase.error(e))?;

        let mut ports = PortDecl::from_table(&table);
        for name in [&c.clock, &c.reset_n] {
            match ports.iter_mut().find(|p| &p.name == name) {
                Some(p) => p.role = PortRole::Input,
                None => ports.push(PortDecl { name: name.clone(), role: PortRole::Input, width: 1 }),
            }
        }
        let wcfg = WrapperConfig {
            top_module: c.top_module.clone().unwrap_or_else(|| table.top_scope.clone()),
            top_scope: table.top_scope.clone(),
            ports,
            clock: c.clock.clone(),
            reset_n: c.reset_n.clone(),
        };
        let wrapper = emit_wrapper(&spec, &wcfg, &table).map_err(|e| phase.error(e))?;
        let overhead = estimate_overhead(&spec);

        let (self_check, skipped) = if c.verify {
            match self.self_check(&spec, &model, &table, &meta) {
                Ok(sc) => {
                    if sc.mismatched_windows > 0 || sc.counter_overflow {
                        let msg = format!(
                            "monitor replay disagrees with the quantized model in {} of {} windows",
                            sc.mismatched_windows, sc.windows
                        );
                        warn!("{msg}");
                        warnings.push(msg);
                    }
                    (Some(sc), None)
                }
                Err(SkipReason(why)) => {
                    warn!("monitor self-check skipped: {why}");
                    (None, Some(why))
                }
            }
        } else {
            (None, Some("disabled by configuration".to_string()))
        };

        let q = &spec.quantized;
        let file = MonitorFile {
            format_version: FORMAT_VERSION,
            frac_bits: q.frac_bits,
            scale_w_per_lsb: q.scale(),
            weight_width: q.weight_width,
            output_width: q.output_width,
            accumulator_width: spec.accumulator_width(),
            window_cycles,
            window_counter_width: spec.window_counter_width(),
            clock_mhz: c.clock_mhz,
            intercept_q: q.intercept,
            taps: spec
                .taps
                .iter()
                .zip(&q.weights)
                .zip(wrapper.routes)
                .map(|((t, &w), route)| MonitorTap {
                    signal: t.hier_name.clone(),
                    width: t.width,
                    counter_type: t.counter_type,
                    counter_width: t.counter_width,
                    weight_q: w,
                    route,
                })
                .collect(),
            overhead,
            self_check,
            self_check_skipped: skipped,
        };
        write_atomic(&self.out, MONITOR_RTL, monitor_rtl.as_bytes())?;
        write_atomic(&self.out, WRAPPER_RTL, wrapper.text.as_bytes())?;
        write_atomic(&self.out, MONITOR, &to_json(&file))?;
        Ok(())
    }

    /// Replays the VCD through the cycle model of the monitor.
    fn self_check(
        &self,
        spec: &MonitorSpec,
        model: &blink_core::PowerModel,
        table: &SignalTable,
        meta: &ActivityMeta,
    ) -> std::result::Result<SelfCheck, SkipReason> {
        let skip = |s: String| SkipReason(s);
        let cycle_fs = Femtos::from_secs(1e-6 / self.cfg.monitor.clock_mhz).ok_or_else(|| skip("bad clock".into()))?;
        let cycle_ticks = cycle_fs
            .in_ticks(Femtos(meta.tick_fs))
            .ok_or_else(|| skip(format!("clock period of {} fs is not a whole number of VCD ticks", cycle_fs.0)))?;
        let start = meta.window.analysis_start();
        if !start.is_multiple_of(cycle_ticks) {
            return Err(skip("analysis window does not start on a clock edge".into()));
        }
        let acts = self.read_activity(Phase::EmitMonitor).map_err(|e| skip(e.to_string()))?;
        let cols = model.bind(&acts.features).map_err(|e| skip(e.to_string()))?;
        let (_, events) = open_vcd(&self.cfg.inputs.vcd).map_err(|e| skip(e.to_string()))?;
        let mut parse_error = None;
        let cycles = events_to_cycles(spec, table, cycle_ticks, events).map_while(|r| match r {
            Ok(ev) => Some(ev),
            Err(e) => {
                parse_error = Some(e);
                None
            }
        });
        let run = simulate_monitor(spec, start / cycle_ticks, acts.n_windows, cycles);
        if let Some(e) = parse_error {
            return Err(skip(e.to_string()));
        }
        let q = &spec.quantized;
        let float = model.predict_activity(&acts).map_err(|e| skip(e.to_string()))?;
        let mut mismatched = 0;
        let mut max_err = 0.0f64;
        let mut max_count = 0u32;
        for (w, (&est, &f)) in run.estimates.iter().zip(&float).enumerate() {
            let counts: Vec<u32> = cols.iter().map(|&c| acts.get(w, c)).collect();
            max_count = max_count.max(counts.iter().copied().max().unwrap_or(0));
            if q.apply(&counts) != est {
                mismatched += 1;
            }
            max_err = max_err.max((f - est as f64 * q.scale()).abs());
        }
        Ok(SelfCheck {
            windows: run.estimates.len(),
            mismatched_windows: mismatched,
            saturated_windows: run.saturated.iter().filter(|&&s| s).count(),
            counter_overflow: run.counter_overflow.iter().any(|&o| o),
            max_float_error_w: max_err,
            error_bound_w: q.error_bound(max_count),
        })
    }

    fn build_report(&self, state: &State, outcomes: &[PhaseOutcome], warnings: Vec<String>) -> Result<RunReport> {
        let previous: Option<RunReport> =
            fs::read(self.artifact(REPORT_JSON)).ok().and_then(|b| serde_json::from_slice(&b).ok());
        let phases: Vec<PhaseRecord> = Phase::ALL
            .iter()
            .filter_map(|&p| {
                let recorded = state.phases.get(p.name())?;
                let status = outcomes.iter().find(|o| o.phase == p).map_or(PhaseStatus::UpToDate, |o| o.status);
                Some(PhaseRecord { name: p.name().into(), status, seconds: Some(recorded.seconds) })
            })
            .collect();
        // Warnings of phases skipped this time come from the previous report.
        let mut warnings = warnings;
        if phases.iter().any(|p| p.status == PhaseStatus::UpToDate) {
            for w in previous.iter().flat_map(|r| &r.warnings) {
                if !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
        }

        let mut inputs: Vec<ArtifactRecord> = Vec::new();
        for s in state.phases.values() {
            for (k, d) in &s.inputs {
                if let Some(name) = k.strip_prefix("input:") {
                    if !inputs.iter().any(|a| a.name == name) {
                        inputs.push(ArtifactRecord { name: name.into(), sha256: d.clone() });
                    }
                }
            }
        }
        inputs.sort_by(|a, b| a.name.cmp(&b.name));

        let names = [ACTIVITY, SIGNALS, ACTIVITY_META, POWER, POWER_META, MODEL, MONITOR_RTL, WRAPPER_RTL, MONITOR];
        let mut artifacts = Vec::new();
        for n in names {
            let p = self.artifact(n);
            if p.exists() {
                artifacts.push(ArtifactRecord { name: n.into(), sha256: file_digest(&p)? });
            }
        }
        let digest_of = |n: &str| artifacts.iter().find(|a| a.name == n).map(|a| a.sha256.clone());

        let model: Option<ModelFile> = self.artifact(MODEL).exists().then(|| read_json(&self.artifact(MODEL), Phase::Identify)).transpose()?;
        // Overhead is reported only for a monitor built from the current model.
        let monitor_current = state
            .phases
            .get(Phase::EmitMonitor.name())
            .is_some_and(|s| s.inputs.get(MODEL) == digest_of(MODEL).as_ref() && s.outputs.get(MONITOR) == digest_of(MONITOR).as_ref());
        let monitor: Option<MonitorFile> = if monitor_current {
            Some(read_json(&self.artifact(MONITOR), Phase::EmitMonitor)?)
        } else {
            None
        };

        let (hw, st) = model.as_ref().map(ModelFile::counter_mix).unzip();
        let summary = SummaryRow {
            id: self.cfg.id.clone(),
            hw,
            st,
            lut_estimate: monitor.as_ref().map(|m| m.overhead.lut),
            ff_estimate: monitor.as_ref().map(|m| m.overhead.ff),
            peak_power_w: model.as_ref().map(|m| m.peak_test_w),
            nrmse_pct: model.as_ref().map(|m| m.metrics.nrmse),
        };
        let taps = model
            .as_ref()
            .map(|m| m.terms.iter().map(|t| TapRecord { signal: t.signal.clone(), counter_type: t.counter_type }).collect())
            .unwrap_or_default();
        Ok(RunReport {
            schema: crate::report::REPORT_SCHEMA_ID.into(),
            tool: "blink".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            id: self.cfg.id.clone(),
            config: self.cfg.clone(),
            inputs,
            phases,
            artifacts,
            summary,
            taps,
            metrics: model.as_ref().map(|m| m.metrics),
            overhead: monitor.as_ref().map(|m| m.overhead),
            reference: reference_rows(),
            warnings,
        })
    }
}

struct SkipReason(String);
