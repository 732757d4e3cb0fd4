//! Runs every requested check over every momentum and assembles a
//! deterministic report.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::coefficients::{check_constraints, check_recursions};
use crate::config::{Group, MomentaConfig, RunConfig};
use crate::error::{Error, Result};
use crate::momentum::{generic_margin, random_generic, resonance_check, Momentum};
use crate::report::{fmt_f64, CheckReport, Outcome};
use crate::rmatrix::{build_constant_r, RMatrixSpec};
use crate::tensor::{Operator, Residual};
use crate::verify::{
    check_additive_dybe, check_constant_ybe, check_dynamical_ybe, check_hecke_normalized, check_hermiticity,
    check_reflection, check_spectral_dybe, check_unitarity,
};

/// Fresh momenta tried for one check before it is recorded as failed.
pub const MAX_RESAMPLES: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub id: String,
    pub momentum_index: Option<usize>,
    /// Number of momenta discarded because of a resonance.
    pub resampled: u32,
    pub note: Option<String>,
    pub report: CheckReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub resampled: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: RunConfig,
    pub summary: Summary,
    pub checks: Vec<SuiteEntry>,
    /// Not serialized, so that reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SuiteReport {
    /// 0 when everything passed or was skipped, 1 when anything failed.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }

    /// Pretty JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        fix_floats(&mut value);
        let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|e| e.id.len()).max().unwrap_or(2).max(2);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:<7}  {:>24}  {:>24}", "id", "outcome", "relative", "tolerance");
        for e in &self.checks {
            let outcome = match e.report.outcome {
                Outcome::Pass => "pass",
                Outcome::Fail => "FAIL",
                Outcome::Skip => "skip",
            };
            let _ = write!(
                out,
                "{:<width$}  {:<7}  {:>24}  {:>24}",
                e.id,
                outcome,
                fmt_f64(e.report.residual.relative),
                fmt_f64(e.report.tolerance)
            );
            if let Some(reason) = &e.report.skip_reason {
                let _ = write!(out, "  ({reason})");
            }
            if let Some(note) = &e.note {
                let _ = write!(out, "  [{note}]");
            }
            out.push('\n');
        }
        let s = self.summary;
        let _ = writeln!(
            out,
            "{} checks: {} passed, {} failed, {} skipped, {} resampled; {:.3} s",
            s.total,
            s.passed,
            s.failed,
            s.skipped,
            s.resampled,
            self.wall_time.as_secs_f64()
        );
        out
    }
}

fn fix_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *n = fmt_f64(x).parse::<Number>().expect("formatted float parses");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_floats),
        Value::Object(map) => map.values_mut().for_each(fix_floats),
        _ => {}
    }
}

#[derive(Debug, Clone, Copy)]
enum Param {
    None,
    Pair(usize),
    Theta(usize),
}

#[derive(Debug, Clone)]
struct Task {
    check: &'static str,
    momentum: Option<usize>,
    param: Param,
}

impl Task {
    fn id(&self) -> String {
        let mut id = self.check.to_string();
        if let Some(i) = self.momentum {
            let _ = write!(id, "/m{i:03}");
        }
        match self.param {
            Param::None => {}
            Param::Pair(k) => {
                let _ = write!(id, "/yz{k}");
            }
            Param::Theta(k) => {
                let _ = write!(id, "/theta{k}");
            }
        }
        id
    }
}

fn tasks(cfg: &RunConfig) -> Vec<Task> {
    let count = cfg.momenta.count();
    let mut out = Vec::new();
    for name in &cfg.checks {
        let check: &'static str = crate::verify::CHECK_NAMES
            .iter()
            .find(|c| **c == name.as_str())
            .expect("validated check name");
        if check == "constant_ybe" {
            out.push(Task { check, momentum: None, param: Param::None });
            continue;
        }
        for i in 0..count {
            match check {
                "spectral_dybe" | "unitarity" => {
                    for k in 0..cfg.spectral.pairs.len() {
                        out.push(Task { check, momentum: Some(i), param: Param::Pair(k) });
                    }
                }
                "additive_dybe" => {
                    for k in 0..cfg.spectral.theta.len() {
                        out.push(Task { check, momentum: Some(i), param: Param::Theta(k) });
                    }
                }
                _ => out.push(Task { check, momentum: Some(i), param: Param::None }),
            }
        }
    }
    out
}

fn derived_seed(seed: u64, index: usize, attempt: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((index as u64) << 20)
        .wrapping_add(attempt as u64)
}

/// The `index`-th momentum on its `attempt`-th draw, or `None` when it is
/// too close to a pole within two shifts.
fn sample(cfg: &RunConfig, index: usize, attempt: u32) -> Result<Option<Momentum>> {
    let (n, h) = (cfg.n, cfg.h);
    let m = match &cfg.momenta {
        MomentaConfig::Explicit { vectors } => Momentum::new(vectors[index].clone(), h)?,
        MomentaConfig::Seeded { seed, scale, .. } => {
            let m = random_generic(n, h, derived_seed(*seed, index, attempt), *scale)?;
            if cfg.group == Group::Slq {
                let mean = m.p().iter().sum::<f64>() / n as f64;
                Momentum::traceless(m.p().iter().map(|x| x - mean).collect(), h)?
            } else {
                m
            }
        }
    };
    for point in m.shift_neighbourhood(2)? {
        if !resonance_check(&point, cfg.scheme(), generic_margin(n, h)).ok {
            return Ok(None);
        }
    }
    Ok(Some(m))
}

fn run_check(cfg: &RunConfig, spec: &RMatrixSpec, task: &Task, m: Option<&Momentum>) -> Result<CheckReport> {
    let tol = cfg.tolerance;
    let lambda = cfg.lambda();
    let factor = spec.normalization();
    let m = match m {
        Some(m) => m,
        None => return check_constant_ybe(&build_constant_r(cfg.n, cfg.q)?, tol),
    };
    let hecke_builder = |p: &Momentum| -> Result<Operator> { Ok(spec.build(p)?.scale(factor.inv())) };
    let pair = |k: usize| cfg.spectral.pairs[k];
    match (task.check, task.param) {
        ("hecke", _) => check_hecke_normalized(&spec.build(m)?, lambda, factor, tol),
        ("constraints", _) => check_constraints(cfg.scheme(), m, tol),
        ("recursions", _) => check_recursions(cfg.scheme(), m, tol),
        ("dynamical_ybe", _) => check_dynamical_ybe(|p: &Momentum| spec.build(p), m, tol),
        ("reflection", _) => check_reflection(|p: &Momentum| spec.build(p), m, tol),
        ("hermiticity", _) => check_hermiticity(cfg.scheme(), m, tol),
        ("spectral_dybe", Param::Pair(k)) => {
            let (y, z) = pair(k);
            check_spectral_dybe(hecke_builder, m, y, z, lambda, tol)
        }
        ("unitarity", Param::Pair(k)) => check_unitarity(&hecke_builder(m)?, pair(k).0, lambda, tol),
        ("additive_dybe", Param::Theta(k)) => {
            let (theta, theta2) = cfg.spectral.theta[k];
            check_additive_dybe(m, theta, theta2, cfg.h, tol)
        }
        (other, _) => Err(Error::InvalidParameter(format!("no runner for check {other}"))),
    }
}

fn run_task(cfg: &RunConfig, spec: &RMatrixSpec, task: &Task) -> Result<SuiteEntry> {
    let seed_label = match &cfg.momenta {
        MomentaConfig::Seeded { seed, .. } => seed.to_string(),
        MomentaConfig::Explicit { .. } => "explicit".into(),
    };
    let digest = |report: &CheckReport| format!("seed={seed_label} {} | {}", cfg.scheme().digest(), report.inputs_digest);
    let Some(index) = task.momentum else {
        let report = run_check(cfg, spec, task, None)?;
        let report = report.clone().with_digest(digest(&report));
        return Ok(SuiteEntry { id: task.id(), momentum_index: None, resampled: 0, note: None, report });
    };
    let retries = match cfg.momenta {
        MomentaConfig::Seeded { .. } => MAX_RESAMPLES,
        MomentaConfig::Explicit { .. } => 0,
    };
    let mut last_problem = String::new();
    for attempt in 0..=retries {
        let Some(m) = sample(cfg, index, attempt)? else {
            last_problem = "momentum within the resonance margin".into();
            continue;
        };
        match run_check(cfg, spec, task, Some(&m)) {
            Ok(report) => {
                let report = report.clone().with_digest(digest(&report));
                let note = (attempt > 0).then(|| format!("resampled {attempt} time(s)"));
                return Ok(SuiteEntry { id: task.id(), momentum_index: Some(index), resampled: attempt, note, report });
            }
            Err(Error::Resonance { i, j, reason }) => {
                last_problem = format!("resonance at pair ({i},{j}): {reason}");
            }
            Err(e) => return Err(e),
        }
    }
    let report = CheckReport::new(
        task.check,
        Residual { absolute: f64::INFINITY, relative: f64::INFINITY },
        cfg.tolerance,
        format!("seed={seed_label} {}", cfg.scheme().digest()),
    );
    Ok(SuiteEntry {
        id: task.id(),
        momentum_index: Some(index),
        resampled: retries + 1,
        note: Some(format!("no usable momentum after {} draw(s); last: {last_problem}", retries + 1)),
        report,
    })
}

/// Executes every (check, momentum, parameter) triple in parallel and
/// collects the results sorted by id.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let spec = cfg.rmatrix_spec();
    let mut checks = tasks(cfg)
        .par_iter()
        .map(|task| run_task(cfg, &spec, task))
        .collect::<Result<Vec<_>>>()?;
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let mut summary = Summary { total: checks.len(), ..Summary::default() };
    for e in &checks {
        match e.report.outcome {
            Outcome::Pass => summary.passed += 1,
            Outcome::Fail => summary.failed += 1,
            Outcome::Skip => summary.skipped += 1,
        }
        if e.resampled > 0 {
            summary.resampled += 1;
        }
    }
    Ok(SuiteReport {
        version: format!("twisted-ybe {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        summary,
        checks,
        wall_time: start.elapsed(),
    })
}
