//! Analytic hierarchy process over the five recovery indicators.
//!
//! Weights are the principal eigenvector of a positive reciprocal pairwise
//! comparison matrix, found by power iteration. Judgement consistency is
//! reported as Saaty's consistency ratio `CR = CI / RI(n)` with
//! `CI = (λ_max - n) / (n - 1)`.

use serde::{Deserialize, Deserializer, Serialize};

use super::{Criterion, MetricsError};

/// Saaty's random consistency index for matrices of order 1 through 10.
const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

pub const CR_LIMIT: f64 = 0.10;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const RECIPROCAL_TOL: f64 = 1e-12;

pub fn random_index(n: usize) -> Option<f64> {
    n.checked_sub(1).and_then(|i| RANDOM_INDEX.get(i)).copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhpSolution {
    pub weights: Vec<f64>,
    pub lambda_max: f64,
    pub consistency_index: f64,
    pub consistency_ratio: f64,
    pub iterations: usize,
}

/// Principal-eigenvector weights of a square positive reciprocal matrix.
pub fn ahp_weights(pairwise: &[Vec<f64>]) -> Result<AhpSolution, MetricsError> {
    let n = pairwise.len();
    if n == 0 || pairwise.iter().any(|row| row.len() != n) {
        return Err(MetricsError::Shape(format!("pairwise matrix must be square, got {n} rows")));
    }
    let ri = random_index(n).ok_or_else(|| MetricsError::Shape(format!("no random index for order {n}")))?;

    for (i, row) in pairwise.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MetricsError::NonPositiveEntry { row: i, col: j, value: v });
            }
        }
    }
    for (i, row) in pairwise.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().skip(i) {
            let product = v * pairwise[j][i];
            if (product - 1.0).abs() > RECIPROCAL_TOL {
                return Err(MetricsError::NotReciprocal { row: i, col: j, product });
            }
        }
    }

    let multiply = |w: &[f64]| -> Vec<f64> {
        pairwise
            .iter()
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    };

    let mut w = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    loop {
        if iterations == POWER_MAX_ITER {
            return Err(MetricsError::NoConvergence(POWER_MAX_ITER));
        }
        iterations += 1;
        let mut next = multiply(&w);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>();
        w = next;
        if change <= POWER_TOL {
            break;
        }
    }

    let aw = multiply(&w);
    let lambda_max = aw.iter().zip(&w).map(|(a, b)| a / b).sum::<f64>() / n as f64;
    let consistency_index = if n > 1 {
        ((lambda_max - n as f64) / (n as f64 - 1.0)).max(0.0)
    } else {
        0.0
    };
    let consistency_ratio = if ri > 0.0 { consistency_index / ri } else { 0.0 };

    Ok(AhpSolution {
        weights: w,
        lambda_max,
        consistency_index,
        consistency_ratio,
        iterations,
    })
}

/// What to do when a configured matrix exceeds the CR limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrPolicy {
    #[default]
    Error,
    Warn,
}

/// A pairwise entry: a number or a `"a/b"` fraction string.
fn judgement<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }
    let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
    rows.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|e| match e {
                    Entry::Num(v) => Ok(v),
                    Entry::Text(s) => parse_fraction(&s).ok_or_else(|| serde::de::Error::custom(format!("bad judgement {s:?}"))),
                })
                .collect()
        })
        .collect()
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => s.trim().parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AhpConfig {
    #[serde(default)]
    pub version: Option<u32>,
    pub criteria: Vec<Criterion>,
    #[serde(deserialize_with = "judgement")]
    pub pairwise: Vec<Vec<f64>>,
    #[serde(default)]
    pub policy: CrPolicy,
}

impl AhpConfig {
    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        serde_json::from_str(text).map_err(|e| MetricsError::Config(e.to_string()))
    }

    /// The shipped default matrix (CL_r > T_r > τ > SO > C_r).
    pub fn shipped_default() -> Self {
        Self::from_json(crate::fixtures::DEFAULT_AHP).expect("shipped AHP config parses")
    }
}

/// Solved AHP weighting over [`Criterion::ORDER`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhpModel {
    pub criteria: [Criterion; 5],
    pub pairwise: Vec<Vec<f64>>,
    pub weights: [f64; 5],
    pub lambda_max: f64,
    pub consistency_ratio: f64,
    /// Set when the CR limit was exceeded under [`CrPolicy::Warn`].
    pub warning: Option<String>,
}

impl AhpModel {
    pub fn from_config(config: &AhpConfig) -> Result<Self, MetricsError> {
        if config.criteria.as_slice() != Criterion::ORDER {
            return Err(MetricsError::Config(format!(
                "criteria must be exactly {:?}",
                Criterion::ORDER.map(Criterion::key)
            )));
        }
        let sol = ahp_weights(&config.pairwise)?;
        let mut warning = None;
        if sol.consistency_ratio > CR_LIMIT {
            match config.policy {
                CrPolicy::Error => {
                    return Err(MetricsError::Inconsistent {
                        ratio: sol.consistency_ratio,
                        limit: CR_LIMIT,
                    })
                }
                CrPolicy::Warn => {
                    let msg = format!(
                        "AHP consistency ratio {:.4} exceeds {CR_LIMIT}; continuing under warn policy",
                        sol.consistency_ratio
                    );
                    log::warn!("{msg}");
                    warning = Some(msg);
                }
            }
        }
        let mut weights = [0.0; 5];
        weights.copy_from_slice(&sol.weights);
        Ok(Self {
            criteria: Criterion::ORDER,
            pairwise: config.pairwise.clone(),
            weights,
            lambda_max: sol.lambda_max,
            consistency_ratio: sol.consistency_ratio,
            warning,
        })
    }

    /// Equal weights, CR 0.
    pub fn uniform() -> Self {
        Self::from_config(&AhpConfig {
            version: None,
            criteria: Criterion::ORDER.to_vec(),
            pairwise: vec![vec![1.0; 5]; 5],
            policy: CrPolicy::Error,
        })
        .expect("uniform matrix is consistent")
    }

    pub fn shipped_default() -> Self {
        Self::from_config(&AhpConfig::shipped_default()).expect("shipped AHP config is consistent")
    }
}
