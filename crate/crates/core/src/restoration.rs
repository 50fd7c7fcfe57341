//! Switch-reconfiguration search.
//!
//! Every subset of up to `max_actions` switchable, unfaulted edges is
//! tried, each action toggling its switch. A plan is feasible when the
//! energized topology stays radial and no energized edge has to carry more
//! than its rating. Ratings are checked by cutting each energized tree edge:
//! the deficit of whichever side cannot cover its own served load must
//! cross that edge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Energization, GridError, Network, SwitchState};
use crate::ids::EdgeId;
use crate::metrics::{self, AhpModel, MetricsError, ResilienceIndicators};

pub const MAX_ACTIONS: usize = 4;
/// Remote switching latency per action.
pub const SWITCH_MINUTES: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RestorationError {
    #[error("max_actions must be between 1 and {MAX_ACTIONS}, got {0}")]
    ActionLimit(usize),
    #[error("no feasible restoration plan")]
    NoFeasiblePlan,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwitchAction {
    pub edge: EdgeId,
    pub state: SwitchState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub actions: Vec<SwitchAction>,
    pub restored_critical: u32,
    pub restored_kw: f64,
    pub so_count: u32,
    pub feasible: bool,
    pub resulting_tau: f64,
    /// Why the plan was rejected, when it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite: Option<f64>,
}

impl RestorationPlan {
    pub fn indicators(&self) -> ResilienceIndicators {
        ResilienceIndicators {
            repair_hours: SWITCH_MINUTES / 60.0 * f64::from(self.so_count),
            repair_cost: 0.0,
            tau: self.resulting_tau,
            critical_restored: self.restored_critical,
            switching_ops: self.so_count,
        }
    }

    /// Applies the plan's actions in order.
    pub fn apply(&self, net: &Network) -> Result<Network, GridError> {
        self.actions
            .iter()
            .try_fold(net.clone(), |n, a| n.apply_switch_action(&a.edge, a.state))
    }
}

/// Edges a plan may operate, ascending by id.
pub fn switch_candidates(net: &Network) -> Vec<EdgeId> {
    let mut ids: Vec<EdgeId> = net
        .edges()
        .iter()
        .filter(|e| e.switchable && e.state != crate::grid::EdgeState::Faulted)
        .map(|e| e.id.clone())
        .collect();
    ids.sort();
    ids
}

/// First energized edge whose required transfer exceeds its rating.
pub fn overloaded_edge(net: &Network, en: &Energization) -> Option<(EdgeId, f64)> {
    let n = net.nodes().len();
    let served_load: Vec<f64> = net
        .nodes()
        .iter()
        .zip(&en.served)
        .map(|(node, &s)| if s { node.load_kw } else { 0.0 })
        .collect();
    let supply: Vec<f64> = net
        .nodes()
        .iter()
        .map(|node| if node.kind.is_supply() { node.capacity_kw } else { 0.0 })
        .collect();

    let tree: Vec<(usize, usize, &crate::grid::Edge)> = net
        .edges()
        .iter()
        .filter(|e| e.conducts())
        .map(|e| {
            let (a, b) = net.endpoints(e);
            (a, b, e)
        })
        .filter(|&(a, b, _)| en.connected[a] && en.connected[b])
        .collect();
    let mut adj = vec![Vec::new(); n];
    for (k, &(a, b, _)) in tree.iter().enumerate() {
        adj[a].push((b, k));
        adj[b].push((a, k));
    }

    // (served load, supply) of the side containing `root` once edge `cut` is removed
    let side = |root: usize, cut: usize| -> (f64, f64) {
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        let (mut load, mut cap) = (0.0, 0.0);
        while let Some(v) = stack.pop() {
            load += served_load[v];
            cap += supply[v];
            for &(w, k) in &adj[v] {
                if k != cut && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (load, cap)
    };

    for (k, &(a, b, edge)) in tree.iter().enumerate() {
        let (load_a, cap_a) = side(a, k);
        let (load_b, cap_b) = side(b, k);
        let required = (load_b - cap_b).max(load_a - cap_a).max(0.0);
        if required > edge.capacity_kw {
            return Some((edge.id.clone(), required));
        }
    }
    None
}

/// Radiality and rating check on a network state.
pub fn check_feasible(net: &Network) -> Result<(), String> {
    let en = net.energize();
    if !net.is_radial(&en) {
        return Err("energized topology contains a loop".into());
    }
    if let Some((edge, required)) = overloaded_edge(net, &en) {
        return Err(format!("edge {edge} would carry {required:.1} kW"));
    }
    Ok(())
}

/// Rounds to 1e-12 so that mirror-image topologies score identically.
fn quantize(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn simulate(net: &Network, actions: Vec<SwitchAction>) -> Result<RestorationPlan, GridError> {
    let base = net.critical_load_summary().served_critical;
    let base_kw = net.energize().served_load_kw(net);
    let probe = RestorationPlan {
        so_count: actions.len() as u32,
        actions,
        restored_critical: 0,
        restored_kw: 0.0,
        feasible: false,
        resulting_tau: 0.0,
        violation: None,
        composite: None,
    };
    let after = probe.apply(net)?;
    let en = after.energize();
    let violation = check_feasible(&after).err();
    Ok(RestorationPlan {
        restored_critical: after.critical_summary_of(&en).served_critical.saturating_sub(base),
        restored_kw: en.served_load_kw(&after) - base_kw,
        feasible: violation.is_none(),
        resulting_tau: quantize(metrics::topological_coefficient(&after)),
        violation,
        ..probe
    })
}

fn toggle(net: &Network, id: &EdgeId) -> SwitchAction {
    let closed = net.edge(id).is_some_and(|e| e.conducts());
    SwitchAction {
        edge: id.clone(),
        state: if closed { SwitchState::Open } else { SwitchState::Closed },
    }
}

fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn grow(start: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..n {
            cur.push(i);
            out.push(cur.clone());
            if cur.len() < max {
                grow(i + 1, n, max, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(0, n, max, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Every non-empty action subset of size at most `max_actions`, feasible
/// or not, ordered by size and then by edge ids.
pub fn enumerate_plans(net: &Network, max_actions: usize) -> Result<Vec<RestorationPlan>, RestorationError> {
    if !(1..=MAX_ACTIONS).contains(&max_actions) {
        return Err(RestorationError::ActionLimit(max_actions));
    }
    let switches = switch_candidates(net);
    subsets(switches.len(), max_actions)
        .into_iter()
        .map(|set| {
            let actions = set.iter().map(|&i| toggle(net, &switches[i])).collect();
            simulate(net, actions).map_err(RestorationError::from)
        })
        .collect()
}

/// The do-nothing plan.
pub fn baseline_plan(net: &Network) -> Result<RestorationPlan, RestorationError> {
    Ok(simulate(net, Vec::new())?)
}

/// Feasible plans including the baseline, scored and sorted best first.
/// Ties go to fewer actions, then the smaller action list.
pub fn rank_plans(net: &Network, max_actions: usize, ahp: &AhpModel) -> Result<Vec<RestorationPlan>, RestorationError> {
    let mut plans: Vec<RestorationPlan> = std::iter::once(baseline_plan(net))
        .chain(enumerate_plans(net, max_actions)?.into_iter().map(Ok))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.feasible)
        .collect();
    if plans.is_empty() {
        return Err(RestorationError::NoFeasiblePlan);
    }
    let indicators: Vec<ResilienceIndicators> = plans.iter().map(RestorationPlan::indicators).collect();
    let scores = metrics::composite_scores(&indicators, ahp)?;
    for (p, s) in plans.iter_mut().zip(scores) {
        p.composite = Some(s);
    }
    plans.sort_by(|a, b| {
        b.composite
            .unwrap_or(0.0)
            .total_cmp(&a.composite.unwrap_or(0.0))
            .then(a.so_count.cmp(&b.so_count))
            .then_with(|| a.actions.cmp(&b.actions))
    });
    Ok(plans)
}

pub fn best_restoration(net: &Network, max_actions: usize, ahp: &AhpModel) -> Result<RestorationPlan, RestorationError> {
    Ok(rank_plans(net, max_actions, ahp)?.remove(0))
}
