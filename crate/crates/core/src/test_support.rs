//! Builders shared by unit tests.

use crate::grid::{Edge, EdgeState, Node, NodeKind};

pub(crate) fn node(id: &str, kind: NodeKind, load: f64, critical: bool, cap: f64) -> Node {
    Node {
        id: id.into(),
        kind,
        lat: 46.6,
        lon: -120.5,
        load_kw: load,
        critical,
        voltage_pu: 1.0,
        capacity_kw: cap,
    }
}

pub(crate) fn edge(id: &str, from: &str, to: &str, switchable: bool, state: EdgeState) -> Edge {
    Edge {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        length_km: 1.0,
        switchable,
        state,
        capacity_kw: 1000.0,
    }
}

pub(crate) fn fixture(name: &str) -> std::path::PathBuf {
    crate::fixtures::path(name)
}
