//! Machine-readable run output.

use serde::{Deserialize, Serialize};

use crate::doppler::DopplerRange;
use crate::geometry::{DirectionVector, Point};
use crate::solver::SolveResult;

use super::scenario::{Mode, ScenarioFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopplerOutput {
    pub f_emitted: f64,
    pub f_received: f64,
    pub shift_hz: f64,
    pub range: DopplerRange,
}

/// One solve, or one Doppler reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRecord {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SolveResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler: Option<DopplerOutput>,
    /// Mean receiver-to-estimate unit vector, as averaged (not unit length).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionVector>,
    /// `direction` rescaled to unit length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<DirectionVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Point>,
    /// Distance between estimate and truth, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SolveRecord {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            result: None,
            doppler: None,
            direction: None,
            heading: None,
            truth: None,
            error_m: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub trial: usize,
    pub sigma_t: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Error statistics over the successful trials at one noise level, m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSummary {
    pub sigma_t: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_m: Option<f64>,
    pub p90_m: Option<f64>,
    pub p95_m: Option<f64>,
    pub max_m: Option<f64>,
    pub mean_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloReport {
    /// Which estimate the trial errors measure.
    pub target: String,
    pub levels: Vec<SigmaSummary>,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub generated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub input: ScenarioFile,
    pub mode: Mode,
    pub solves: Vec<SolveRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloReport>,
    pub provenance: Provenance,
}

impl Report {
    /// Whether any solve or trial raised an error.
    pub fn has_errors(&self) -> bool {
        self.solves.iter().any(|s| s.error.is_some())
            || self
                .monte_carlo
                .as_ref()
                .is_some_and(|mc| mc.trials.iter().any(|t| t.error.is_some()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Nearest-rank quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Summary of one noise level; failed trials are counted but excluded.
pub fn summarize(sigma_t: f64, trials: &[TrialRecord]) -> SigmaSummary {
    let mut errors: Vec<f64> = trials.iter().filter_map(|t| t.error_m).collect();
    errors.sort_by(f64::total_cmp);
    let mean = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    SigmaSummary {
        sigma_t,
        trials: trials.len(),
        failures: trials.iter().filter(|t| t.error.is_some()).count(),
        median_m: quantile(&errors, 0.5),
        p90_m: quantile(&errors, 0.9),
        p95_m: quantile(&errors, 0.95),
        max_m: errors.last().copied(),
        mean_m: mean,
    }
}
