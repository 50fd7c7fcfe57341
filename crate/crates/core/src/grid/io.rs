use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, EdgeState, GridError, Network, Node, NodeKind};
use crate::ids::{EdgeId, NodeId};

/// On-disk network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub depot: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub lat: f64,
    pub lon: f64,
    pub load_kw: f64,
    pub critical: bool,
    pub capacity_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_km: f64,
    pub switchable: bool,
    pub state: EdgeState,
    pub capacity_kw: f64,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<Network, GridError> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                kind: n.kind,
                lat: n.lat,
                lon: n.lon,
                load_kw: n.load_kw,
                critical: n.critical,
                voltage_pu: 1.0,
                capacity_kw: n.capacity_kw,
            })
            .collect();
        let edges = self
            .edges
            .into_iter()
            .map(|e| Edge {
                id: e.id,
                from: e.from,
                to: e.to,
                length_km: e.length_km,
                switchable: e.switchable,
                state: e.state,
                capacity_kw: e.capacity_kw,
            })
            .collect();
        Network::new(nodes, edges, self.depot)
    }
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        NetworkFile {
            nodes: net
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    kind: n.kind,
                    lat: n.lat,
                    lon: n.lon,
                    load_kw: n.load_kw,
                    critical: n.critical,
                    capacity_kw: n.capacity_kw,
                })
                .collect(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.clone(),
                    from: e.from.clone(),
                    to: e.to.clone(),
                    length_km: e.length_km,
                    switchable: e.switchable,
                    state: e.state,
                    capacity_kw: e.capacity_kw,
                })
                .collect(),
            depot: net.depot().clone(),
        }
    }
}

pub fn parse_network(text: &str) -> Result<Network, GridError> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| GridError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_network()
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, GridError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GridError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_network(&text)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<(), GridError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&NetworkFile::from(net)).expect("network serializes");
    fs::write(path, text + "\n").map_err(|e| GridError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
