//! Safe crew dispatch.
//!
//! Crews travel along the distribution network's own geometry. Each edge
//! becomes a pair of arcs whose cost grows with the hotspot risk at the edge
//! midpoint; arcs at or above the no-go threshold are removed outright.
//! Repair tours are open tours from the depot, searched exhaustively over
//! visit orders, and the cheapest few are scored on the five recovery
//! indicators and ranked by AHP composite.

mod graph;
mod search;

use std::path::Path as FsPath;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, Network};
use crate::hotspot::RiskField;
use crate::ids::{EdgeId, NodeId, RouteId, TaskId};
use crate::metrics::{self, AhpModel, MetricsError, ResilienceIndicators};

pub use graph::{arc_cost, build_travel_graph, shortest_path, ArcSpec, Path, TravelArc, TravelGraph};
pub use search::candidate_routes;

pub const MAX_TASKS: usize = 9;

fn join_ids(ids: &[TaskId]) -> String {
    ids.iter().map(TaskId::as_str).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("invalid routing input: {0}")]
    Validation(String),
    #[error("task {task}: target {target} is neither an edge nor a node")]
    UnknownTarget { task: TaskId, target: String },
    #[error("vertex {0} is not in the travel graph")]
    UnknownVertex(NodeId),
    #[error("no unblocked path from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("every task lies in a no-go zone: {}", join_ids(.0))]
    AllTasksDeferred(Vec<TaskId>),
    #[error("unknown route {0}")]
    UnknownRoute(RouteId),
    #[error("route {route} cannot move from {from} to {to}")]
    InvalidTransition {
        route: RouteId,
        from: RouteStatus,
        to: RouteStatus,
    },
    #[error("route {route} crosses a blocked arc {from} -> {to}")]
    BlockedLeg { route: RouteId, from: NodeId, to: NodeId },
    #[error("task file: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairTask {
    pub id: TaskId,
    /// An edge id or a node id of the network.
    pub target: String,
    pub repair_hours: f64,
    pub repair_cost: f64,
    #[serde(default)]
    pub requires_parts: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Edge(EdgeId),
    Node(NodeId),
}

impl RepairTask {
    pub fn resolve(&self, net: &Network) -> Result<Target, RoutingError> {
        let as_edge = EdgeId::new(self.target.as_str());
        let as_node = NodeId::new(self.target.as_str());
        match (net.edge(&as_edge).is_some(), net.node(&as_node).is_some()) {
            (true, false) => Ok(Target::Edge(as_edge)),
            (false, true) => Ok(Target::Node(as_node)),
            (true, true) => Err(RoutingError::Validation(format!(
                "task {}: target {} names both an edge and a node",
                self.id, self.target
            ))),
            (false, false) => Err(RoutingError::UnknownTarget {
                task: self.id.clone(),
                target: self.target.clone(),
            }),
        }
    }

    fn validate(&self) -> Result<(), RoutingError> {
        if !(self.repair_hours > 0.0 && self.repair_hours.is_finite()) {
            return Err(RoutingError::Validation(format!("task {}: repair_hours must be positive", self.id)));
        }
        if !(self.repair_cost >= 0.0 && self.repair_cost.is_finite()) {
            return Err(RoutingError::Validation(format!("task {}: repair_cost must be nonnegative", self.id)));
        }
        Ok(())
    }
}

pub fn parse_tasks(text: &str) -> Result<Vec<RepairTask>, RoutingError> {
    let tasks: Vec<RepairTask> = serde_json::from_str(text).map_err(|e| RoutingError::Parse(e.to_string()))?;
    for t in &tasks {
        t.validate()?;
    }
    Ok(tasks)
}

pub fn load_tasks(path: impl AsRef<FsPath>) -> Result<Vec<RepairTask>, RoutingError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RoutingError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_tasks(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouteParams {
    pub k: usize,
    /// No-go threshold on point risk.
    pub theta: f64,
    /// Risk penalty: a fully red arc costs `1 + beta` times its travel time.
    pub beta: f64,
    pub speed_kmh: f64,
}

impl Default for RouteParams {
    fn default() -> Self {
        Self {
            k: 3,
            theta: 0.75,
            beta: 4.0,
            speed_kmh: 40.0,
        }
    }
}

impl RouteParams {
    pub fn validate(&self) -> Result<(), RoutingError> {
        if self.k == 0 {
            return Err(RoutingError::Validation("k must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(RoutingError::Validation(format!("theta {} outside (0, 1]", self.theta)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(RoutingError::Validation(format!("beta {} must be nonnegative", self.beta)));
        }
        if !(self.speed_kmh > 0.0 && self.speed_kmh.is_finite()) {
            return Err(RoutingError::Validation("crew speed must be positive".into()));
        }
        Ok(())
    }
}

/// Where the crew goes to work on a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSite {
    pub task: TaskId,
    pub vertex: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeferredTask {
    pub task: TaskId,
    pub target: String,
    pub risk: f64,
    pub reason: String,
}

/// Splits tasks into reachable work sites and deferrals. An edge task is
/// worked from the edge's `from` node and deferred when the edge midpoint
/// is no-go; a node task is deferred when the node itself is no-go.
pub fn plan_sites(
    net: &Network,
    field: &RiskField,
    tasks: &[RepairTask],
    theta: f64,
) -> Result<(Vec<TaskSite>, Vec<DeferredTask>), RoutingError> {
    let mut sites = Vec::new();
    let mut deferred = Vec::new();
    for task in tasks {
        task.validate()?;
        let (vertex, lat, lon) = match task.resolve(net)? {
            Target::Edge(id) => {
                let e = net.edge(&id).expect("resolved edge exists");
                let (a, b) = net.endpoints(e);
                let (na, nb) = (&net.nodes()[a], &net.nodes()[b]);
                (e.from.clone(), (na.lat + nb.lat) / 2.0, (na.lon + nb.lon) / 2.0)
            }
            Target::Node(id) => {
                let n = net.node(&id).expect("resolved node exists");
                (id.clone(), n.lat, n.lon)
            }
        };
        let risk = field.point_risk(lat, lon);
        if risk >= theta {
            deferred.push(DeferredTask {
                task: task.id.clone(),
                target: task.target.clone(),
                risk,
                reason: "target inside a no-go zone; defer or restore by reconfiguration".into(),
            });
        } else {
            sites.push(TaskSite {
                task: task.id.clone(),
                vertex,
            });
        }
    }
    Ok((sites, deferred))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteStatus {
    Candidate,
    Proposed,
    SignedOff,
    Rejected,
}

impl std::fmt::Display for RouteStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RouteStatus::Candidate => "candidate",
            RouteStatus::Proposed => "proposed",
            RouteStatus::SignedOff => "signed_off",
            RouteStatus::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusChange {
    pub status: RouteStatus,
    pub at: NaiveDateTime,
    pub operator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrewRoute {
    pub id: RouteId,
    pub task_order: Vec<TaskId>,
    /// One vertex path per visited task, depot first.
    pub legs: Vec<Vec<NodeId>>,
    pub total_travel_hours: f64,
    /// Risk-penalized travel cost used to select candidates.
    pub weighted_cost: f64,
    pub max_leg_risk: f64,
    /// Filled in by [`rank_routes`].
    pub indicators: Option<ResilienceIndicators>,
    pub composite: Option<f64>,
    pub status: RouteStatus,
    #[serde(default)]
    pub history: Vec<StatusChange>,
}

impl CrewRoute {
    fn transition(
        &mut self,
        from: RouteStatus,
        to: RouteStatus,
        at: NaiveDateTime,
        operator: Option<&str>,
    ) -> Result<(), RoutingError> {
        if self.status != from {
            return Err(RoutingError::InvalidTransition {
                route: self.id.clone(),
                from: self.status,
                to,
            });
        }
        self.status = to;
        self.history.push(StatusChange {
            status: to,
            at,
            operator: operator.map(str::to_owned),
        });
        Ok(())
    }

    pub fn propose(&mut self, at: NaiveDateTime) -> Result<(), RoutingError> {
        self.transition(RouteStatus::Candidate, RouteStatus::Proposed, at, None)
    }

    pub fn sign_off(&mut self, operator: &str, at: NaiveDateTime) -> Result<(), RoutingError> {
        self.transition(RouteStatus::Proposed, RouteStatus::SignedOff, at, Some(operator))
    }

    pub fn reject(&mut self, operator: &str, at: NaiveDateTime) -> Result<(), RoutingError> {
        self.transition(RouteStatus::Proposed, RouteStatus::Rejected, at, Some(operator))
    }

    /// Steps of the route with no unblocked arc in `g`.
    pub fn blocked_steps(&self, g: &TravelGraph) -> Vec<(NodeId, NodeId)> {
        self.legs
            .iter()
            .flat_map(|leg| leg.windows(2))
            .filter(|w| match (g.vertex(&w[0]), g.vertex(&w[1])) {
                (Some(a), Some(b)) => g.best_arc(a, b).is_none(),
                _ => true,
            })
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect()
    }

    pub fn ensure_unblocked(&self, g: &TravelGraph) -> Result<(), RoutingError> {
        match self.blocked_steps(g).into_iter().next() {
            Some((from, to)) => Err(RoutingError::BlockedLeg {
                route: self.id.clone(),
                from,
                to,
            }),
            None => Ok(()),
        }
    }
}

/// Indicators of completing `tasks` by a tour with the given travel time.
/// `so` is the switching count of the accompanying restoration plan.
pub fn route_indicators(
    net: &Network,
    tasks: &[&RepairTask],
    travel_hours: f64,
    so: u32,
) -> Result<ResilienceIndicators, RoutingError> {
    let mut repaired = net.clone();
    for t in tasks {
        if let Target::Edge(id) = t.resolve(net)? {
            repaired = repaired.repair_edge(&id)?;
        }
    }
    let before = net.critical_load_summary().served_critical;
    let after = repaired.critical_load_summary().served_critical;
    Ok(ResilienceIndicators {
        repair_hours: travel_hours + tasks.iter().map(|t| t.repair_hours).sum::<f64>(),
        repair_cost: tasks.iter().map(|t| t.repair_cost).sum(),
        tau: metrics::topological_coefficient(&repaired),
        critical_restored: after.saturating_sub(before),
        switching_ops: so,
    })
}

/// Scores candidates and sorts them by composite (descending), then
/// `T_r` (ascending), then route id.
pub fn rank_routes(
    mut candidates: Vec<CrewRoute>,
    net: &Network,
    tasks: &[RepairTask],
    so: u32,
    ahp: &AhpModel,
) -> Result<Vec<CrewRoute>, RoutingError> {
    let mut indicators = Vec::with_capacity(candidates.len());
    for route in &candidates {
        let visited = route
            .task_order
            .iter()
            .map(|id| {
                tasks.iter().find(|t| &t.id == id).ok_or_else(|| {
                    RoutingError::Validation(format!("route {} visits unknown task {id}", route.id))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        indicators.push(route_indicators(net, &visited, route.total_travel_hours, so)?);
    }
    let scores = metrics::composite_scores(&indicators, ahp)?;
    for ((route, ind), score) in candidates.iter_mut().zip(indicators).zip(scores) {
        route.indicators = Some(ind);
        route.composite = Some(score);
    }
    candidates.sort_by(|a, b| {
        let (ca, cb) = (a.composite.unwrap_or(0.0), b.composite.unwrap_or(0.0));
        let ta = a.indicators.map_or(0.0, |i| i.repair_hours);
        let tb = b.indicators.map_or(0.0, |i| i.repair_hours);
        cb.total_cmp(&ca).then(ta.total_cmp(&tb)).then_with(|| a.id.cmp(&b.id))
    });
    Ok(candidates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub routes: Vec<CrewRoute>,
    pub deferred: Vec<DeferredTask>,
}

/// The full dispatch pipeline: travel graph, deferral, candidate tours,
/// indicator scoring and ranking.
pub fn search_routes(
    net: &Network,
    field: &RiskField,
    tasks: &[RepairTask],
    params: &RouteParams,
    so: u32,
    ahp: &AhpModel,
) -> Result<RouteReport, RoutingError> {
    params.validate()?;
    if tasks.is_empty() || tasks.len() > MAX_TASKS {
        return Err(RoutingError::Validation(format!(
            "between 1 and {MAX_TASKS} tasks are required, got {}",
            tasks.len()
        )));
    }
    let g = build_travel_graph(net, field, params)?;
    let (sites, deferred) = plan_sites(net, field, tasks, params.theta)?;
    if sites.is_empty() {
        return Err(RoutingError::AllTasksDeferred(deferred.into_iter().map(|d| d.task).collect()));
    }
    let candidates = candidate_routes(&g, net.depot(), &sites, params.k)?;
    let routes = rank_routes(candidates, net, tasks, so, ahp)?;
    Ok(RouteReport { routes, deferred })
}
