//! Verification reports and the deterministic trial runner.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random::trial_rng;

/// Seed and parameters sufficient to rerun a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDigest {
    pub seed: u64,
    pub trials: usize,
    pub params: BTreeMap<String, f64>,
}

/// Outcome of one statement's trials. Margins are signed: positive means
/// the inequality held with that much slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub statement_id: String,
    pub trials: usize,
    /// Trials with some margin below `-tolerance`, plus trials that errored.
    pub failures: usize,
    pub errors: usize,
    /// Trials that produced no margin (no admissible configuration).
    pub skipped: usize,
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    pub config_digest: ConfigDigest,
    /// First few error messages, in trial order.
    pub error_samples: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "statement_id,trials,failures,worst_margin";

    pub fn csv_row(&self) -> String {
        let w = self.worst_margin.map_or_else(String::new, |w| format!("{w:.6e}"));
        format!("{},{},{},{}", self.statement_id, self.trials, self.failures, w)
    }
}

/// What one trial produced.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Margins(Vec<f64>),
    Skipped,
    Error(String),
}

impl From<crate::Result<Vec<f64>>> for TrialOutcome {
    fn from(r: crate::Result<Vec<f64>>) -> Self {
        match r {
            Ok(m) if m.is_empty() => TrialOutcome::Skipped,
            Ok(m) => TrialOutcome::Margins(m),
            Err(e) => TrialOutcome::Error(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

const MAX_ERROR_SAMPLES: usize = 5;

/// Static description of a check run.
#[derive(Debug, Clone)]
pub struct Trials {
    pub id: String,
    pub salt: u64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub params: BTreeMap<String, f64>,
}

impl Trials {
    pub fn new(id: &str, salt: u64, trials: usize, seed: u64, tolerance: f64) -> Self {
        Trials { id: id.into(), salt, trials, seed, tolerance, params: BTreeMap::new() }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Run `f` on trials `0..trials`, each with its own generator, and fold
    /// the outcomes in trial order. Parallel and serial runs agree exactly.
    pub fn run<F>(self, exec: Execution, f: F) -> VerificationReport
    where
        F: Fn(usize, &mut ChaCha8Rng) -> TrialOutcome + Sync,
    {
        let one = |k: usize| {
            let mut rng = trial_rng(self.seed, self.salt, k as u64);
            f(k, &mut rng)
        };
        let outcomes: Vec<TrialOutcome> = match exec {
            Execution::Serial => (0..self.trials).map(one).collect(),
            Execution::Parallel => (0..self.trials).into_par_iter().map(one).collect(),
        };
        fold(self, outcomes)
    }
}

fn fold(t: Trials, outcomes: Vec<TrialOutcome>) -> VerificationReport {
    let mut report = VerificationReport {
        statement_id: t.id,
        trials: t.trials,
        failures: 0,
        errors: 0,
        skipped: 0,
        worst_margin: None,
        tolerance: t.tolerance,
        config_digest: ConfigDigest { seed: t.seed, trials: t.trials, params: t.params },
        error_samples: Vec::new(),
    };
    for o in outcomes {
        match o {
            TrialOutcome::Margins(ms) => {
                let w = ms.iter().copied().fold(f64::INFINITY, f64::min);
                // NaN margins count as failures
                if w.is_nan() || w < -t.tolerance {
                    report.failures += 1;
                }
                let w = if w.is_nan() { f64::NEG_INFINITY } else { w };
                report.worst_margin = Some(report.worst_margin.map_or(w, |m| m.min(w)));
            }
            TrialOutcome::Skipped => report.skipped += 1,
            TrialOutcome::Error(msg) => {
                report.errors += 1;
                report.failures += 1;
                if report.error_samples.len() < MAX_ERROR_SAMPLES {
                    report.error_samples.push(msg);
                }
            }
        }
    }
    if report.worst_margin.is_some_and(|w| !w.is_finite()) {
        report.worst_margin = None;
    }
    report
}
