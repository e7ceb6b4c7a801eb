//! Named groups of checks and their aggregate output.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{QhError, Result};

use super::checks::*;
use super::report::{Execution, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Algebraic,
    Balls,
    Divergence,
    Uniqueness,
    Regularity,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["algebraic", "balls", "divergence", "uniqueness", "regularity", "all"];

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Algebraic, Suite::Balls, Suite::Divergence, Suite::Uniqueness, Suite::Regularity],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = QhError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "algebraic" => Suite::Algebraic,
            "balls" => Suite::Balls,
            "divergence" => Suite::Divergence,
            "uniqueness" => Suite::Uniqueness,
            "regularity" => Suite::Regularity,
            "all" => Suite::All,
            _ => {
                return Err(QhError::Input(format!(
                    "unknown suite {s:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Suite::Algebraic, Suite::Balls, Suite::Divergence, Suite::Uniqueness, Suite::Regularity, Suite::All]
            .iter()
            .position(|s| s == self)
            .unwrap();
        f.write_str(Suite::NAMES[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutput {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub reports: Vec<VerificationReport>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite output serializes")
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(VerificationReport::CSV_HEADER);
        s.push('\n');
        for r in &self.reports {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Run every check of `suite` with `trials` trials each. The sharpness
/// witness is a single fixed configuration.
pub fn run_suite(suite: Suite, trials: usize, seed: u64, exec: Execution) -> Result<SuiteOutput> {
    let mut reports = Vec::new();
    for part in suite.parts() {
        match part {
            Suite::Algebraic => {
                for dim in [2, 3, 8] {
                    reports.push(check_prop_curv(trials, dim, seed, exec)?);
                }
                reports.push(check_prop_distcurv(trials, seed, exec)?);
            }
            Suite::Balls => {
                reports.push(check_prop_quasis(trials, seed, exec)?);
                reports.push(check_smallballs(trials, seed, exec)?);
                reports.push(check_small_ball_convexity(trials, seed, exec)?);
            }
            Suite::Divergence => {
                reports.push(check_angle_divergence(trials, seed, exec)?);
                reports.push(check_divergence_bound(trials, seed, exec)?);
                reports.push(check_midpoint_bound(trials, seed, exec)?);
            }
            Suite::Uniqueness => {
                reports.push(check_uniqueness_below_pi(trials, seed, exec)?);
                reports.push(check_uniqueness_sharpness(seed)?);
            }
            Suite::Regularity => reports.push(check_regularity(trials, seed, exec)?),
            Suite::All => unreachable!("expanded by parts"),
        }
    }
    Ok(SuiteOutput { suite: suite.to_string(), seed, trials, reports })
}
