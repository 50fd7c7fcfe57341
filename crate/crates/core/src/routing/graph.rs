use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::{RouteParams, RoutingError};
use crate::grid::Network;
use crate::hotspot::RiskField;
use crate::ids::{EdgeId, NodeId};

/// Risk-penalized traversal cost of an arc.
pub fn arc_cost(travel_hours: f64, risk: f64, beta: f64) -> f64 {
    travel_hours * (1.0 + beta * risk)
}

/// Arc description used to assemble a graph by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub from: NodeId,
    pub to: NodeId,
    pub edge: Option<EdgeId>,
    pub travel_hours: f64,
    pub risk: f64,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelArc {
    /// Vertex indices.
    pub from: usize,
    pub to: usize,
    pub edge: Option<EdgeId>,
    pub travel_hours: f64,
    pub risk: f64,
    pub blocked: bool,
    pub cost: f64,
}

/// Directed travel graph. Vertices are kept in ascending id order, so
/// comparing index sequences compares id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelGraph {
    vertices: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    arcs: Vec<TravelArc>,
    out: Vec<Vec<usize>>,
    beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Vertex ids from start to end; empty when start and end coincide.
    pub vertices: Vec<NodeId>,
    pub cost: f64,
    pub travel_hours: f64,
    pub max_risk: f64,
}

impl TravelGraph {
    pub fn new(mut vertices: Vec<NodeId>, arcs: Vec<ArcSpec>, beta: f64) -> Result<Self, RoutingError> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(RoutingError::Validation(format!("beta must be nonnegative, got {beta}")));
        }
        vertices.sort();
        vertices.dedup();
        let index: HashMap<NodeId, usize> = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let lookup = |id: &NodeId| index.get(id).copied().ok_or_else(|| RoutingError::UnknownVertex(id.clone()));

        let mut out = vec![Vec::new(); vertices.len()];
        let mut built = Vec::with_capacity(arcs.len());
        for a in arcs {
            if !(a.travel_hours > 0.0 && a.travel_hours.is_finite()) {
                return Err(RoutingError::Validation(format!(
                    "arc {}->{}: travel time must be positive",
                    a.from, a.to
                )));
            }
            if !(0.0..=1.0).contains(&a.risk) {
                return Err(RoutingError::Validation(format!("arc {}->{}: risk outside [0, 1]", a.from, a.to)));
            }
            let (from, to) = (lookup(&a.from)?, lookup(&a.to)?);
            out[from].push(built.len());
            built.push(TravelArc {
                from,
                to,
                cost: arc_cost(a.travel_hours, a.risk, beta),
                edge: a.edge,
                travel_hours: a.travel_hours,
                risk: a.risk,
                blocked: a.blocked,
            });
        }
        Ok(Self {
            vertices,
            index,
            arcs: built,
            out,
            beta,
        })
    }

    pub fn vertices(&self) -> &[NodeId] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[TravelArc] {
        &self.arcs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vertex(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Cheapest unblocked arc from `a` to `b`.
    pub fn best_arc(&self, a: usize, b: usize) -> Option<&TravelArc> {
        self.out[a]
            .iter()
            .map(|&i| &self.arcs[i])
            .filter(|arc| arc.to == b && !arc.blocked)
            .min_by(|x, y| x.cost.total_cmp(&y.cost))
    }

    /// Best `(cost, path)` label from `src` to every vertex. Labels order
    /// by cost, then lexicographically by vertex sequence.
    pub(crate) fn labels_from(&self, src: usize) -> Vec<Option<Label>> {
        let mut best: Vec<Option<Label>> = vec![None; self.vertices.len()];
        let mut done = vec![false; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        let start = Label {
            cost: 0.0,
            path: vec![src],
        };
        best[src] = Some(start.clone());
        heap.push(std::cmp::Reverse(start));
        while let Some(std::cmp::Reverse(label)) = heap.pop() {
            let v = *label.path.last().expect("labels are non-empty");
            if done[v] {
                continue;
            }
            done[v] = true;
            for &ai in &self.out[v] {
                let arc = &self.arcs[ai];
                if arc.blocked || done[arc.to] {
                    continue;
                }
                let mut path = label.path.clone();
                path.push(arc.to);
                let cand = Label {
                    cost: label.cost + arc.cost,
                    path,
                };
                if best[arc.to].as_ref().is_none_or(|b| cand < *b) {
                    best[arc.to] = Some(cand.clone());
                    heap.push(std::cmp::Reverse(cand));
                }
            }
        }
        best
    }

    pub(crate) fn path_of(&self, label: &Label) -> Path {
        if label.path.len() < 2 {
            return Path {
                vertices: Vec::new(),
                cost: 0.0,
                travel_hours: 0.0,
                max_risk: 0.0,
            };
        }
        let mut travel_hours = 0.0;
        let mut max_risk: f64 = 0.0;
        for pair in label.path.windows(2) {
            let arc = self.best_arc(pair[0], pair[1]).expect("label follows unblocked arcs");
            travel_hours += arc.travel_hours;
            max_risk = max_risk.max(arc.risk);
        }
        Path {
            vertices: label.path.iter().map(|&i| self.vertices[i].clone()).collect(),
            cost: label.cost,
            travel_hours,
            max_risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Label {
    pub cost: f64,
    pub path: Vec<usize>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One arc per network edge in each direction, whatever its electrical
/// state. Risk and blocking are evaluated at the midpoint of the edge.
pub fn build_travel_graph(net: &Network, field: &RiskField, params: &RouteParams) -> Result<TravelGraph, RoutingError> {
    params.validate()?;
    let vertices: Vec<NodeId> = net.nodes().iter().map(|n| n.id.clone()).collect();
    let mut arcs = Vec::with_capacity(2 * net.edges().len());
    for e in net.edges() {
        let (a, b) = net.endpoints(e);
        let (na, nb) = (&net.nodes()[a], &net.nodes()[b]);
        let (lat, lon) = ((na.lat + nb.lat) / 2.0, (na.lon + nb.lon) / 2.0);
        let risk = field.point_risk(lat, lon);
        let blocked = risk >= params.theta;
        let travel_hours = e.length_km / params.speed_kmh;
        for (from, to) in [(&e.from, &e.to), (&e.to, &e.from)] {
            arcs.push(ArcSpec {
                from: from.clone(),
                to: to.clone(),
                edge: Some(e.id.clone()),
                travel_hours,
                risk,
                blocked,
            });
        }
    }
    TravelGraph::new(vertices, arcs, params.beta)
}

/// Minimum-cost path over unblocked arcs, ties broken by the
/// lexicographically smallest vertex-id sequence.
pub fn shortest_path(g: &TravelGraph, a: &NodeId, b: &NodeId) -> Result<Path, RoutingError> {
    let ia = g.vertex(a).ok_or_else(|| RoutingError::UnknownVertex(a.clone()))?;
    let ib = g.vertex(b).ok_or_else(|| RoutingError::UnknownVertex(b.clone()))?;
    let labels = g.labels_from(ia);
    let label = labels[ib].as_ref().ok_or_else(|| RoutingError::Unreachable {
        from: a.clone(),
        to: b.clone(),
    })?;
    Ok(g.path_of(label))
}
