//! Operational resilience score, evaluated on every telemetry tick.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::grid::{EventStage, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealtimeWeights {
    pub w_cl: f64,
    pub w_ld: f64,
    pub w_rsv: f64,
    pub w_tau: f64,
}

impl Default for RealtimeWeights {
    fn default() -> Self {
        Self {
            w_cl: 0.4,
            w_ld: 0.2,
            w_rsv: 0.2,
            w_tau: 0.2,
        }
    }
}

impl RealtimeWeights {
    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let w: Self = serde_json::from_str(text).map_err(|e| MetricsError::Config(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn shipped_default() -> Self {
        Self::from_json(crate::fixtures::DEFAULT_REALTIME_WEIGHTS).expect("shipped weights are valid")
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let all = [self.w_cl, self.w_ld, self.w_rsv, self.w_tau];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MetricsError::Config("real-time weights must be nonnegative".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricsError::Config(format!("real-time weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Normalized score inputs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    /// Served share of critical kW.
    pub critical_served: f64,
    /// Served share of all kW.
    pub load_served: f64,
    /// Spare supply capacity relative to total load, capped at 1.
    pub reserve: f64,
    /// Energized τ relative to the as-designed τ, capped at 1.
    pub topology: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub timestamp: NaiveDateTime,
    pub score: f64,
    pub components: ScoreComponents,
    pub stage: EventStage,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Scores the current operating condition. A component whose denominator
/// is zero (no critical load, no load, τ undefined) counts as fully met.
pub fn realtime_score(
    net: &Network,
    stage: EventStage,
    weights: &RealtimeWeights,
    timestamp: NaiveDateTime,
) -> ScoreRecord {
    let en = net.energize();
    let critical = net.critical_summary_of(&en);
    let total_load = net.total_load_kw();
    let components = ScoreComponents {
        critical_served: ratio(critical.served_kw, critical.total_kw),
        load_served: ratio(en.served_load_kw(net), total_load),
        reserve: ratio(en.spare_capacity_kw(), total_load),
        topology: ratio(net.energized_tau(&en), net.nominal_tau()),
    };
    let score = weights.w_cl * components.critical_served
        + weights.w_ld * components.load_served
        + weights.w_rsv * components.reserve
        + weights.w_tau * components.topology;
    ScoreRecord {
        timestamp,
        score: score.clamp(0.0, 1.0),
        components,
        stage,
    }
}
