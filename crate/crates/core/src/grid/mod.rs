//! Distribution-network model.
//!
//! A [`Network`] is an immutable snapshot of buses, sources, DERs and the
//! line sections between them. Every mutation (switching, faults, repairs,
//! load scaling) returns a new snapshot. Construction validates the
//! structural invariants: unique ids, existing endpoints, a known depot, and
//! a radial closed topology.

mod energize;
mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{EdgeId, NodeId};
use crate::spectral;

pub use energize::{CriticalLoadSummary, Energization, Island};
pub use io::{load_network, parse_network, save_network, EdgeRecord, NetworkFile, NodeRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Bus,
    Source,
    Der,
}

impl NodeKind {
    pub fn is_supply(self) -> bool {
        matches!(self, NodeKind::Source | NodeKind::Der)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub lat: f64,
    pub lon: f64,
    pub load_kw: f64,
    pub critical: bool,
    /// Telemetry-carried; 1.0 p.u. until the simulator reports otherwise.
    pub voltage_pu: f64,
    pub capacity_kw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Closed,
    Open,
    Faulted,
}

/// Commanded position of a switchable edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchState {
    Open,
    Closed,
}

impl From<SwitchState> for EdgeState {
    fn from(s: SwitchState) -> Self {
        match s {
            SwitchState::Open => EdgeState::Open,
            SwitchState::Closed => EdgeState::Closed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_km: f64,
    pub switchable: bool,
    pub state: EdgeState,
    pub capacity_kw: f64,
}

impl Edge {
    /// Carries power: closed and not faulted.
    pub fn conducts(&self) -> bool {
        self.state == EdgeState::Closed
    }
}

/// Stage of the multi-temporal resilience cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventStage {
    #[default]
    PreEvent,
    DuringEvent,
    PostEvent,
}

impl EventStage {
    /// The only stage reachable from `self`.
    pub fn successor(self) -> EventStage {
        match self {
            EventStage::PreEvent => EventStage::DuringEvent,
            EventStage::DuringEvent => EventStage::PostEvent,
            EventStage::PostEvent => EventStage::PreEvent,
        }
    }

    pub fn can_transition_to(self, next: EventStage) -> bool {
        self.successor() == next
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventStage::PreEvent => "pre_event",
            EventStage::DuringEvent => "during_event",
            EventStage::PostEvent => "post_event",
        }
    }
}

/// High-impact low-probability event taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatClass {
    PhysicalManmade,
    PhysicalNatural,
    Cyber,
    NonphysicalNatural,
}

impl ThreatClass {
    pub const ALL: [ThreatClass; 4] = [
        ThreatClass::PhysicalManmade,
        ThreatClass::PhysicalNatural,
        ThreatClass::Cyber,
        ThreatClass::NonphysicalNatural,
    ];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {0} is not switchable")]
    NotSwitchable(EdgeId),
    #[error("edge {0} is faulted")]
    EdgeFaulted(EdgeId),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    depot: NodeId,
    nominal_tau: f64,
    switch_ops: u32,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
}

impl Network {
    /// Validates and builds a network, caching τ of the as-designed
    /// topology (closed and faulted edges; open ties excluded).
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, depot: NodeId) -> Result<Self, GridError> {
        let invalid = |msg: String| Err(GridError::Validation(msg));

        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return invalid(format!("duplicate node id {}", n.id));
            }
            if !(n.lat.is_finite() && n.lon.is_finite()) || n.lat.abs() > 90.0 || n.lon.abs() > 180.0
            {
                return invalid(format!("node {}: coordinates out of range", n.id));
            }
            if !(n.load_kw >= 0.0 && n.load_kw.is_finite()) {
                return invalid(format!("node {}: load_kw must be nonnegative", n.id));
            }
            if !(n.capacity_kw >= 0.0 && n.capacity_kw.is_finite()) {
                return invalid(format!("node {}: capacity_kw must be nonnegative", n.id));
            }
            if n.voltage_pu.is_nan() || n.voltage_pu <= 0.0 {
                return invalid(format!("node {}: voltage_pu must be positive", n.id));
            }
            if n.kind == NodeKind::Source && n.load_kw != 0.0 {
                return invalid(format!("node {}: source nodes carry no load", n.id));
            }
            if n.kind == NodeKind::Bus && n.capacity_kw != 0.0 {
                return invalid(format!("node {}: bus nodes have no capacity", n.id));
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return invalid(format!("duplicate edge id {}", e.id));
            }
            for end in [&e.from, &e.to] {
                if !node_index.contains_key(end) {
                    return invalid(format!("edge {} references missing node {}", e.id, end));
                }
            }
            if e.from == e.to {
                return invalid(format!("edge {} is a self-loop", e.id));
            }
            if !(e.length_km > 0.0 && e.length_km.is_finite()) {
                return invalid(format!("edge {}: length_km must be positive", e.id));
            }
            if !(e.capacity_kw > 0.0 && e.capacity_kw.is_finite()) {
                return invalid(format!("edge {}: capacity_kw must be positive", e.id));
            }
        }

        if !node_index.contains_key(&depot) {
            return invalid(format!("depot {depot} is not a node"));
        }

        let mut net = Network {
            nodes,
            edges,
            depot,
            nominal_tau: 0.0,
            switch_ops: 0,
            node_index,
            edge_index,
        };

        if let Some(e) = net.first_cycle_edge(|e| e.conducts()) {
            return invalid(format!("closed topology is not radial (cycle through edge {e})"));
        }

        let designed: Vec<(usize, usize)> = net
            .edges
            .iter()
            .filter(|e| e.state != EdgeState::Open)
            .map(|e| net.endpoints(e))
            .collect();
        net.nominal_tau = spectral::algebraic_connectivity(net.nodes.len(), &designed);
        Ok(net)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn depot(&self) -> &NodeId {
        &self.depot
    }

    pub fn nominal_tau(&self) -> f64 {
        self.nominal_tau
    }

    /// Switching operations applied to this snapshot's lineage.
    pub fn switch_ops(&self) -> u32 {
        self.switch_ops
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edge_index.get(id).map(|&i| &self.edges[i])
    }

    pub fn node_position(&self, id: &NodeId) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Node indices of an edge's endpoints.
    pub fn endpoints(&self, e: &Edge) -> (usize, usize) {
        (self.node_index[&e.from], self.node_index[&e.to])
    }

    /// Index pairs of edges passing `keep`.
    pub fn edge_pairs(&self, keep: impl Fn(&Edge) -> bool) -> Vec<(usize, usize)> {
        self.edges.iter().filter(|e| keep(e)).map(|e| self.endpoints(e)).collect()
    }

    pub fn total_load_kw(&self) -> f64 {
        self.nodes.iter().map(|n| n.load_kw).sum()
    }

    /// Edge id closing a cycle among edges passing `keep`, if any.
    pub(crate) fn first_cycle_edge(&self, keep: impl Fn(&Edge) -> bool) -> Option<EdgeId> {
        let mut dsu = DisjointSet::new(self.nodes.len());
        for e in self.edges.iter().filter(|e| keep(e)) {
            let (a, b) = self.endpoints(e);
            if !dsu.union(a, b) {
                return Some(e.id.clone());
            }
        }
        None
    }

    /// Opens or closes a switchable edge. A no-op command (edge already in
    /// the target state) is not counted as a switching operation.
    pub fn apply_switch_action(&self, edge: &EdgeId, target: SwitchState) -> Result<Network, GridError> {
        let idx = *self
            .edge_index
            .get(edge)
            .ok_or_else(|| GridError::UnknownEdge(edge.clone()))?;
        let e = &self.edges[idx];
        if e.state == EdgeState::Faulted {
            return Err(GridError::EdgeFaulted(edge.clone()));
        }
        if !e.switchable {
            return Err(GridError::NotSwitchable(edge.clone()));
        }
        let mut next = self.clone();
        let new_state = EdgeState::from(target);
        if next.edges[idx].state != new_state {
            next.edges[idx].state = new_state;
            next.switch_ops += 1;
        }
        Ok(next)
    }

    /// Marks an edge faulted.
    pub fn fault_edge(&self, edge: &EdgeId) -> Result<Network, GridError> {
        self.with_edge_state(edge, EdgeState::Faulted)
    }

    /// Returns a faulted edge to service in the closed position.
    pub fn repair_edge(&self, edge: &EdgeId) -> Result<Network, GridError> {
        let e = self.edge(edge).ok_or_else(|| GridError::UnknownEdge(edge.clone()))?;
        if e.state != EdgeState::Faulted {
            return Ok(self.clone());
        }
        self.with_edge_state(edge, EdgeState::Closed)
    }

    fn with_edge_state(&self, edge: &EdgeId, state: EdgeState) -> Result<Network, GridError> {
        let idx = *self
            .edge_index
            .get(edge)
            .ok_or_else(|| GridError::UnknownEdge(edge.clone()))?;
        let mut next = self.clone();
        next.edges[idx].state = state;
        Ok(next)
    }

    /// Multiplies `load_kw` of the given nodes (all nodes when `None`).
    pub fn scale_loads(&self, factor: f64, only: Option<&[NodeId]>) -> Result<Network, GridError> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(GridError::Validation(format!("load scale factor {factor} must be nonnegative")));
        }
        let mut next = self.clone();
        match only {
            None => next.nodes.iter_mut().for_each(|n| n.load_kw *= factor),
            Some(ids) => {
                for id in ids {
                    let i = *self
                        .node_index
                        .get(id)
                        .ok_or_else(|| GridError::UnknownNode(id.clone()))?;
                    next.nodes[i].load_kw *= factor;
                }
            }
        }
        Ok(next)
    }

    /// Overwrites per-node voltage telemetry. Values must be positive.
    pub fn with_voltages(&self, voltages: &[f64]) -> Network {
        assert_eq!(voltages.len(), self.nodes.len());
        let mut next = self.clone();
        for (n, &v) in next.nodes.iter_mut().zip(voltages) {
            debug_assert!(v > 0.0);
            n.voltage_pu = v;
        }
        next
    }
}

/// Union-find over `0..n`.
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}
