//! Machine-readable report shapes.
//!
//! Plain serde structs with stable field order, so serialized reports
//! are byte-deterministic for fixed inputs (wall time aside). Assortments
//! flatten to sorted index arrays rather than exposing internal types.

use crate::model::ResourceModel;
use crate::oracle::CheckOutcome;
use crate::pipeline::PipelineResult;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct MixtureEntry {
    pub assortment: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleSegment {
    pub assortment: Vec<usize>,
    /// Fractions of the planning horizon.
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResourceLine {
    pub usage: f64,
    pub capacity: Option<f64>,
}

/// Full output of a solve run.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionReport {
    pub status: String,
    pub mode: String,
    pub objective: f64,
    pub duality_gap: f64,
    pub prices: Vec<f64>,
    pub intensities: Vec<f64>,
    pub mixture: Vec<MixtureEntry>,
    pub schedule: Vec<ScheduleSegment>,
    pub resources: Vec<ResourceLine>,
    pub iterations: usize,
    /// Wall time varies run to run; determinism tests mask this field.
    pub wall_time_ms: u64,
    /// Hex SHA-256 of the instance file bytes.
    pub instance_digest: String,
}

impl SolutionReport {
    pub fn from_pipeline(
        result: &PipelineResult,
        resources: &ResourceModel,
        instance_digest: String,
        wall_time_ms: u64,
    ) -> SolutionReport {
        SolutionReport {
            status: "optimal".into(),
            mode: result.mode.label().into(),
            objective: result.objective,
            duality_gap: result.duality_gap,
            prices: result.decision.prices.clone(),
            intensities: result.decision.intensities.clone(),
            mixture: result
                .mixture
                .assortments
                .iter()
                .zip(&result.mixture.weights)
                .map(|(a, &w)| MixtureEntry {
                    assortment: a.as_slice().to_vec(),
                    weight: w,
                })
                .collect(),
            schedule: result
                .schedule
                .entries
                .iter()
                .map(|e| ScheduleSegment {
                    assortment: e.assortment.as_slice().to_vec(),
                    start: e.start,
                    end: e.end,
                })
                .collect(),
            resources: (0..resources.n_resources())
                .map(|r| ResourceLine {
                    usage: result.resource_usage[r],
                    capacity: resources.capacity(r),
                })
                .collect(),
            iterations: result.iterations,
            wall_time_ms,
            instance_digest,
        }
    }
}

/// One verification suite in a verify report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    pub worst_margin: f64,
    pub detail: String,
    /// Where the counterexample dump was written, if the check failed.
    pub counterexample_path: Option<String>,
}

/// Output of a verify run.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub instance_digest: String,
}

impl VerifyReport {
    /// Assembles a report; `paths[i]` is where check `i`'s counterexample
    /// was dumped (only failing checks have one).
    pub fn from_outcomes(
        outcomes: &[CheckOutcome],
        paths: &[Option<String>],
        instance_digest: String,
    ) -> VerifyReport {
        VerifyReport {
            passed: outcomes.iter().all(|c| c.passed),
            checks: outcomes
                .iter()
                .zip(paths)
                .map(|(c, p)| CheckLine {
                    name: c.name.clone(),
                    passed: c.passed,
                    trials: c.trials,
                    worst_margin: c.worst_margin,
                    detail: c.detail.clone(),
                    counterexample_path: p.clone(),
                })
                .collect(),
            instance_digest,
        }
    }
}
