//! Resilience metrics: the topological coefficient τ, the recovery
//! indicator vector `[T_r, C_r, τ, CL_r, SO]`, AHP weighting, composite plan
//! scores and the real-time operational score.

mod ahp;
mod realtime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Network;
use crate::spectral;

pub use ahp::{ahp_weights, random_index, AhpConfig, AhpModel, AhpSolution, CrPolicy, CR_LIMIT};
pub use realtime::{realtime_score, RealtimeWeights, ScoreComponents, ScoreRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("pairwise entry ({row}, {col}) = {value} is not positive")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("pairwise entries ({row}, {col}) are not reciprocal (product {product})")]
    NotReciprocal { row: usize, col: usize, product: f64 },
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("consistency ratio {ratio:.4} exceeds {limit}")]
    Inconsistent { ratio: f64, limit: f64 },
    #[error("bad matrix shape: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("indicator vector is not a member of the candidate set")]
    NotACandidate,
}

/// Recovery indicator, in the fixed AHP criteria order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "T_r")]
    RepairTime,
    #[serde(rename = "C_r")]
    RepairCost,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "CL_r")]
    CriticalLoadsRestored,
    #[serde(rename = "SO")]
    SwitchingOps,
}

impl Criterion {
    pub const ORDER: [Criterion; 5] = [
        Criterion::RepairTime,
        Criterion::RepairCost,
        Criterion::Tau,
        Criterion::CriticalLoadsRestored,
        Criterion::SwitchingOps,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Criterion::RepairTime => "T_r",
            Criterion::RepairCost => "C_r",
            Criterion::Tau => "tau",
            Criterion::CriticalLoadsRestored => "CL_r",
            Criterion::SwitchingOps => "SO",
        }
    }

    /// Higher raw value is better.
    pub fn is_benefit(self) -> bool {
        matches!(self, Criterion::Tau | Criterion::CriticalLoadsRestored)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceIndicators {
    /// Total repair time, hours.
    #[serde(rename = "T_r")]
    pub repair_hours: f64,
    /// Cost of repairs.
    #[serde(rename = "C_r")]
    pub repair_cost: f64,
    #[serde(rename = "tau")]
    pub tau: f64,
    #[serde(rename = "CL_r")]
    pub critical_restored: u32,
    #[serde(rename = "SO")]
    pub switching_ops: u32,
}

impl ResilienceIndicators {
    /// Raw values in [`Criterion::ORDER`].
    pub fn values(&self) -> [f64; 5] {
        [
            self.repair_hours,
            self.repair_cost,
            self.tau,
            f64::from(self.critical_restored),
            f64::from(self.switching_ops),
        ]
    }
}

/// τ: algebraic connectivity of the conducting topology over all nodes.
pub fn topological_coefficient(net: &Network) -> f64 {
    spectral::algebraic_connectivity(net.nodes().len(), &net.edge_pairs(|e| e.conducts()))
}

/// Min-max normalization per criterion across the candidate set, oriented
/// so that 1 is best. A criterion on which all candidates agree maps to 1.
pub fn normalize_indicators(candidates: &[ResilienceIndicators]) -> Result<Vec<[f64; 5]>, MetricsError> {
    if candidates.is_empty() {
        return Err(MetricsError::EmptyCandidateSet);
    }
    let raw: Vec<[f64; 5]> = candidates.iter().map(ResilienceIndicators::values).collect();
    let mut out = vec![[0.0; 5]; raw.len()];
    for (k, criterion) in Criterion::ORDER.iter().enumerate() {
        let lo = raw.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
        for (row, r) in out.iter_mut().zip(&raw) {
            row[k] = if hi == lo {
                1.0
            } else if criterion.is_benefit() {
                (r[k] - lo) / (hi - lo)
            } else {
                (hi - r[k]) / (hi - lo)
            };
        }
    }
    Ok(out)
}

fn weighted(weights: &[f64; 5], normalized: &[f64; 5]) -> f64 {
    weights.iter().zip(normalized).map(|(w, x)| w * x).sum::<f64>().clamp(0.0, 1.0)
}

/// Composite score of every candidate, in input order.
pub fn composite_scores(candidates: &[ResilienceIndicators], model: &AhpModel) -> Result<Vec<f64>, MetricsError> {
    Ok(normalize_indicators(candidates)?
        .iter()
        .map(|n| weighted(&model.weights, n))
        .collect())
}

/// Composite score of `r` relative to the candidate set it belongs to.
pub fn composite_score(
    r: &ResilienceIndicators,
    candidates: &[ResilienceIndicators],
    model: &AhpModel,
) -> Result<f64, MetricsError> {
    let idx = candidates.iter().position(|c| c == r).ok_or(MetricsError::NotACandidate)?;
    Ok(composite_scores(candidates, model)?[idx])
}
