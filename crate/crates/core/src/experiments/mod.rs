//! Experiment drivers: PDR and throughput sweeps, the quadrant distance study,
//! the single-fault detour scan and training-curve runs.
//!
//! Every stochastic input is drawn from a stream derived with
//! [`crate::seed::derive_seed`] from the configured master seed, a purpose
//! label and the trial index, so results are reproducible bit-for-bit and
//! independent of how trials are scheduled across threads.

pub mod detour;
pub mod metrics;
pub mod quadrant;
pub mod svg;
pub mod sweep;
pub mod training;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::greedy::{route_greedy, RouteResult};
use crate::ppo::{route_rl, PolicyParams};
use crate::topology::{DistanceMode, Topology};

pub use detour::{detour_demo, DetourConfig, DetourReport, DetourRow};
pub use metrics::{
    adaptive_score, calibrate_beta, evaluate_policy, normalized_throughput, reachable_fraction,
    sample_pairs, Evaluation, BETA_ANCHOR_LOAD, GREEDY_ANCHOR, RL_ANCHOR,
};
pub use quadrant::{quadrant_study, QuadrantConfig, QuadrantRecord, QuadrantStudy, ORACLE_LABEL};
pub use svg::{LineChart, Series};
pub use sweep::{
    run_pdr_sweep, run_throughput_sweep, run_trials, MetricsRecord, PdrSweep, SweepConfig,
    ThroughputRecord, ThroughputSweep, TrialOutcome, TrialRecord,
};
pub use training::{
    convergence_runs, pair_training_defaults, sweep_training_defaults, train_pair_policy,
    train_trial_policy, ConvergenceConfig, CurveSummary, RlTraining,
};

/// The two routers under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Greedy,
    Rl,
}

impl PolicyKind {
    pub const BOTH: [PolicyKind; 2] = [PolicyKind::Greedy, PolicyKind::Rl];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::Rl => "rl",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(PolicyKind::Greedy),
            "rl" => Ok(PolicyKind::Rl),
            other => Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
        }
    }
}

/// A ready-to-use router.
#[derive(Debug, Clone, Copy)]
pub enum Router<'a> {
    Greedy(DistanceMode),
    Rl(&'a PolicyParams),
}

impl Router<'_> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Router::Greedy(_) => PolicyKind::Greedy,
            Router::Rl(_) => PolicyKind::Rl,
        }
    }

    pub fn route(
        &self,
        t: &Topology,
        src: usize,
        dst: usize,
        faults: &FaultSet,
    ) -> Result<RouteResult> {
        match *self {
            Router::Greedy(mode) => route_greedy(t, src, dst, faults, mode),
            Router::Rl(params) => route_rl(t, params, src, dst, faults),
        }
    }
}

/// Sample mean with standard error `s / √n` (`s` with `n − 1` in the
/// denominator; zero when `n < 2`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanStderr {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, stderr, n }
    }
}

/// Six significant digits, `%g` style: fixed notation for moderate
/// magnitudes, scientific otherwise, trailing zeros trimmed. Non-finite
/// values print as an empty field.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit (999999.5 → 1000000)
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// Optional value in a CSV field.
pub fn fmt6_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Parse `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse range {s:?}"));
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(bad());
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // snap to the step grid so 0.1 + 0.05·k prints as 0.15 and not 0.15000000000000002
        Ok((0..=n)
            .map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        s.split(',').map(num).collect()
    }
}
