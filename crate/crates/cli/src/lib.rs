//! Command implementations behind the `mzsim` binary.
//!
//! Each command returns a [`CmdOutput`] holding the exit code and the text
//! destined for standard output and standard error, so the binary is a thin
//! printer and the commands can be tested directly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use mzsim_core::builtins::builtin;
use mzsim_core::dsl::{parse, serialize, ExperimentDoc, ParseError};
use mzsim_core::format::float17;
use mzsim_core::particle::{run_ensemble, EnsembleReport};
use mzsim_core::stats::{compare, Verdict, DEFAULT_ALPHA};
use mzsim_core::{enumerate_outcomes, OutcomeDistribution};
use serde_json::value::RawValue;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Builtin(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub engine: Engine,
    pub trials: u64,
    pub seed: u64,
    pub format: Format,
    pub alpha: f64,
    pub emit_dsl: bool,
}

impl RunConfig {
    pub fn new(input: Input) -> Self {
        Self {
            input,
            engine: Engine::Analytic,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            format: Format::Json,
            alpha: DEFAULT_ALPHA,
            emit_dsl: false,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.engine == Engine::Sample && self.trials == 0 {
            return Err("--trials must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("--alpha {} must lie in (0, 1)", self.alpha));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CmdOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CmdOutput {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn config_error(message: impl AsRef<str>) -> Self {
        Self {
            code: EXIT_CONFIG,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.as_ref()),
        }
    }

    fn parse_error(path: &str, e: &ParseError) -> Self {
        Self {
            code: EXIT_FAIL,
            stdout: String::new(),
            stderr: format!("{path}: {e}\n"),
        }
    }

    fn note(mut self, lines: &[String]) -> Self {
        for l in lines {
            self.stderr.push_str(&format!("warning: {l}\n"));
        }
        self
    }
}

/// Loads the experiment named by `input`; failures come back as finished output.
pub fn load(input: &Input) -> Result<ExperimentDoc, CmdOutput> {
    match input {
        Input::Builtin(name) => builtin(name).map_err(|e| CmdOutput::config_error(e.to_string())),
        Input::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CmdOutput::config_error(format!("cannot read {}: {e}", path.display())))?;
            parse(&text).map_err(|e| CmdOutput::parse_error(&path.display().to_string(), &e))
        }
    }
}

fn raw(text: String) -> Box<RawValue> {
    RawValue::from_string(text).expect("valid JSON fragment")
}

fn json_float(x: f64) -> Box<RawValue> {
    if x.is_finite() {
        raw(float17(x))
    } else {
        raw("null".into())
    }
}

fn json_object(entries: BTreeMap<String, Box<RawValue>>) -> Box<RawValue> {
    raw(serde_json::to_string(&entries).expect("serializable map"))
}

fn distribution_json(d: &OutcomeDistribution) -> Box<RawValue> {
    json_object(d.iter().map(|(k, p)| (k.to_owned(), json_float(p))).collect())
}

fn report_json(r: &EnsembleReport) -> String {
    let counts = r
        .counts
        .iter()
        .map(|(k, v)| (k.clone(), raw(v.to_string())))
        .collect();
    let frequencies = r
        .frequencies
        .iter()
        .map(|(k, v)| (k.clone(), json_float(*v)))
        .collect();
    let top: BTreeMap<String, Box<RawValue>> = BTreeMap::from([
        ("chi_square".into(), json_float(r.chi_square)),
        ("counts".into(), json_object(counts)),
        ("dof".into(), raw(r.dof.to_string())),
        ("frequencies".into(), json_object(frequencies)),
        ("n_trials".into(), raw(r.n_trials.to_string())),
        ("predicted".into(), distribution_json(&r.predicted)),
        ("seed".into(), raw(r.seed.to_string())),
    ]);
    serde_json::to_string(&top).expect("serializable map")
}

fn verdict_json(v: &Verdict, alpha: f64) -> String {
    let per_outcome = v
        .per_outcome
        .iter()
        .map(|(k, c)| {
            let fields = BTreeMap::from([
                ("frequency".to_owned(), json_float(c.frequency)),
                ("predicted".to_owned(), json_float(c.predicted)),
                ("sigma_distance".to_owned(), json_float(c.sigma_distance)),
            ]);
            (k.clone(), json_object(fields))
        })
        .collect();
    let top: BTreeMap<String, Box<RawValue>> = BTreeMap::from([
        ("alpha".into(), json_float(alpha)),
        ("chi_square".into(), json_float(v.chi_square)),
        ("dof".into(), raw(v.dof.to_string())),
        ("p_value".into(), json_float(v.p_value)),
        ("pass".into(), raw(v.pass.to_string())),
        ("per_outcome".into(), json_object(per_outcome)),
    ]);
    serde_json::to_string(&top).expect("serializable map")
}

/// Analytic distribution or sampled ensemble for one experiment.
pub fn cmd_run(cfg: &RunConfig) -> CmdOutput {
    if let Err(e) = cfg.validate() {
        return CmdOutput::config_error(e);
    }
    let doc = match load(&cfg.input) {
        Ok(d) => d,
        Err(out) => return out,
    };
    let warnings = doc.apparatus.warnings();
    if cfg.emit_dsl {
        return CmdOutput::ok(serialize(&doc)).note(&warnings);
    }
    let out = match cfg.engine {
        Engine::Analytic => match enumerate_outcomes(&doc.apparatus) {
            Ok((d, _)) => CmdOutput::ok(match cfg.format {
                Format::Json => format!("{}\n", distribution_json(&d)),
                Format::Csv => {
                    let mut s = String::from("outcome,probability\n");
                    for (k, p) in d.iter() {
                        writeln!(s, "{k},{}", float17(p)).unwrap();
                    }
                    s
                }
            }),
            Err(e) => CmdOutput::config_error(e.to_string()),
        },
        Engine::Sample => match run_ensemble(&doc.apparatus, cfg.trials, cfg.seed) {
            Ok(r) => CmdOutput::ok(match cfg.format {
                Format::Json => format!("{}\n", report_json(&r)),
                Format::Csv => {
                    let mut s = String::from("outcome,count,frequency,predicted\n");
                    for (k, n) in &r.counts {
                        writeln!(
                            s,
                            "{k},{n},{},{}",
                            float17(r.frequency(k)),
                            float17(r.predicted.get(k))
                        )
                        .unwrap();
                    }
                    s
                }
            }),
            Err(e) => CmdOutput::config_error(e.to_string()),
        },
    };
    out.note(&warnings)
}

/// Reads a `{"label": probability, ...}` JSON prediction.
pub fn load_prediction(path: &std::path::Path) -> Result<OutcomeDistribution, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let map: BTreeMap<String, f64> =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some((k, p)) = map.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(format!("{}: probability {p} for {k} outside [0, 1]", path.display()));
    }
    let total: f64 = map.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("{}: probabilities sum to {total}", path.display()));
    }
    Ok(OutcomeDistribution::from_entries(map))
}

/// Samples the experiment and tests the ensemble against the analytic
/// prediction, or against `predicted` when given. Exit 0 iff the test passes.
pub fn cmd_compare(cfg: &RunConfig, predicted: Option<&std::path::Path>) -> CmdOutput {
    let cfg = RunConfig {
        engine: Engine::Sample,
        ..cfg.clone()
    };
    if let Err(e) = cfg.validate() {
        return CmdOutput::config_error(e);
    }
    let doc = match load(&cfg.input) {
        Ok(d) => d,
        Err(out) => return out,
    };
    let override_prediction = match predicted.map(load_prediction).transpose() {
        Ok(p) => p,
        Err(e) => return CmdOutput::config_error(e),
    };
    let report = match run_ensemble(&doc.apparatus, cfg.trials, cfg.seed) {
        Ok(r) => r,
        Err(e) => return CmdOutput::config_error(e.to_string()),
    };
    let report = match override_prediction {
        Some(p) => match EnsembleReport::from_counts(report.counts, cfg.seed, p) {
            Ok(r) => r,
            Err(e) => return CmdOutput::config_error(e.to_string()),
        },
        None => report,
    };
    let verdict = match compare(&report, cfg.alpha) {
        Ok(v) => v,
        Err(e) => return CmdOutput::config_error(e.to_string()),
    };
    let stdout = match cfg.format {
        Format::Json => format!("{}\n", verdict_json(&verdict, cfg.alpha)),
        Format::Csv => {
            let mut s = String::from("outcome,frequency,predicted,sigma_distance\n");
            for (k, c) in &verdict.per_outcome {
                writeln!(
                    s,
                    "{k},{},{},{}",
                    float17(c.frequency),
                    float17(c.predicted),
                    float17(c.sigma_distance)
                )
                .unwrap();
            }
            s
        }
    };
    CmdOutput {
        code: if verdict.pass { EXIT_OK } else { EXIT_FAIL },
        stdout,
        stderr: format!(
            "{}: chi-square {:.4} (dof {}), p-value {:.4e}, alpha {}\n",
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.chi_square,
            verdict.dof,
            verdict.p_value,
            cfg.alpha
        ),
    }
    .note(&doc.apparatus.warnings())
}

/// Apparatus-only fringe; see [`mzsim_core::scan::phase_scan`].
pub fn phase_scan(doc: &ExperimentDoc, stage: usize, points: usize) -> Result<Vec<(f64, OutcomeDistribution)>, String> {
    mzsim_core::scan::phase_scan(&doc.apparatus, stage, points).map_err(|e| e.to_string())
}

pub fn cmd_scan_phase(input: &Input, stage: usize, points: usize, format: Format) -> CmdOutput {
    let doc = match load(input) {
        Ok(d) => d,
        Err(out) => return out,
    };
    let rows = match phase_scan(&doc, stage, points) {
        Ok(r) => r,
        Err(e) => return CmdOutput::config_error(e),
    };
    let stdout = match format {
        Format::Json => {
            let items: Vec<String> = rows
                .iter()
                .map(|(phi, d)| {
                    let row = BTreeMap::from([
                        ("distribution".to_owned(), distribution_json(d)),
                        ("phi".to_owned(), json_float(*phi)),
                    ]);
                    json_object(row).get().to_owned()
                })
                .collect();
            format!("[{}]\n", items.join(","))
        }
        Format::Csv => {
            let labels: std::collections::BTreeSet<&str> = rows.iter().flat_map(|(_, d)| d.labels()).collect();
            let mut s = String::from("phi");
            for l in &labels {
                write!(s, ",{l}").unwrap();
            }
            s.push('\n');
            for (phi, d) in &rows {
                s.push_str(&float17(*phi));
                for l in &labels {
                    write!(s, ",{}", float17(d.get(l))).unwrap();
                }
                s.push('\n');
            }
            s
        }
    };
    CmdOutput::ok(stdout).note(&doc.apparatus.warnings())
}
