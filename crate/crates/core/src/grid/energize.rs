//! Energization and served-load accounting.
//!
//! No power flow is solved. A node is connected when it shares an island of
//! conducting edges with at least one source or DER of positive capacity.
//! Within each island the served load may not exceed the island's supply
//! capacity; when it would, loads are shed non-critical first, then
//! critical, each group in ascending node id order, until the remainder
//! fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DisjointSet, Network};
use crate::ids::NodeId;
use crate::spectral;

/// One electrically connected group of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    /// Node indices, ascending by node id.
    pub nodes: Vec<usize>,
    pub capacity_kw: f64,
    pub connected_load_kw: f64,
    pub served_load_kw: f64,
}

impl Island {
    pub fn has_supply(&self) -> bool {
        self.capacity_kw > 0.0
    }

    pub fn spare_kw(&self) -> f64 {
        (self.capacity_kw - self.served_load_kw).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Energization {
    /// Node shares an island with positive supply capacity.
    pub connected: Vec<bool>,
    /// Connected and not shed.
    pub served: Vec<bool>,
    /// Every island, supplied or not.
    pub islands: Vec<Island>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoadSummary {
    pub served_critical: u32,
    pub total_critical: u32,
    pub served_kw: f64,
    pub total_kw: f64,
}

impl Energization {
    pub fn served_load_kw(&self, net: &Network) -> f64 {
        net.nodes()
            .iter()
            .zip(&self.served)
            .filter(|(_, &s)| s)
            .map(|(n, _)| n.load_kw)
            .sum()
    }

    pub fn spare_capacity_kw(&self) -> f64 {
        self.islands.iter().filter(|i| i.has_supply()).map(Island::spare_kw).sum()
    }

    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|&&s| s).count()
    }
}

impl Network {
    pub fn energize(&self) -> Energization {
        let n = self.nodes().len();
        let mut dsu = DisjointSet::new(n);
        for e in self.edges().iter().filter(|e| e.conducts()) {
            let (a, b) = self.endpoints(e);
            dsu.union(a, b);
        }

        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(dsu.find(i)).or_default().push(i);
        }

        let mut connected = vec![false; n];
        let mut served = vec![false; n];
        let mut islands = Vec::with_capacity(groups.len());

        for (_, mut members) in groups {
            members.sort_by(|&a, &b| self.nodes()[a].id.cmp(&self.nodes()[b].id));
            let capacity_kw: f64 = members
                .iter()
                .map(|&i| &self.nodes()[i])
                .filter(|n| n.kind.is_supply() && n.capacity_kw > 0.0)
                .map(|n| n.capacity_kw)
                .sum();
            let connected_load_kw: f64 = members.iter().map(|&i| self.nodes()[i].load_kw).sum();

            let mut served_load_kw = 0.0;
            if capacity_kw > 0.0 {
                let mut shed = vec![false; members.len()];
                let mut remaining = connected_load_kw;
                if remaining > capacity_kw {
                    let order = members
                        .iter()
                        .enumerate()
                        .filter(|(_, &i)| !self.nodes()[i].critical)
                        .chain(members.iter().enumerate().filter(|(_, &i)| self.nodes()[i].critical));
                    for (slot, &i) in order {
                        if remaining <= capacity_kw {
                            break;
                        }
                        let load = self.nodes()[i].load_kw;
                        if load > 0.0 {
                            shed[slot] = true;
                            remaining -= load;
                        }
                    }
                }
                for (slot, &i) in members.iter().enumerate() {
                    connected[i] = true;
                    if !shed[slot] {
                        served[i] = true;
                        served_load_kw += self.nodes()[i].load_kw;
                    }
                }
            }

            islands.push(Island {
                nodes: members,
                capacity_kw,
                connected_load_kw,
                served_load_kw,
            });
        }

        Energization {
            connected,
            served,
            islands,
        }
    }

    /// Served flag per node id.
    pub fn energization_state(&self) -> BTreeMap<NodeId, bool> {
        let en = self.energize();
        self.nodes()
            .iter()
            .zip(en.served)
            .map(|(n, s)| (n.id.clone(), s))
            .collect()
    }

    pub fn critical_load_summary(&self) -> CriticalLoadSummary {
        self.critical_summary_of(&self.energize())
    }

    pub fn critical_summary_of(&self, en: &Energization) -> CriticalLoadSummary {
        let mut s = CriticalLoadSummary {
            served_critical: 0,
            total_critical: 0,
            served_kw: 0.0,
            total_kw: 0.0,
        };
        for (node, &served) in self.nodes().iter().zip(&en.served) {
            if !node.critical {
                continue;
            }
            s.total_critical += 1;
            s.total_kw += node.load_kw;
            if served {
                s.served_critical += 1;
                s.served_kw += node.load_kw;
            }
        }
        s
    }

    /// Conducting edges whose endpoints are both connected to supply.
    pub fn energized_edge_pairs(&self, en: &Energization) -> Vec<(usize, usize)> {
        self.edge_pairs(|e| {
            let (a, b) = self.endpoints(e);
            e.conducts() && en.connected[a] && en.connected[b]
        })
    }

    /// No cycle among conducting edges over connected nodes.
    pub fn is_radial(&self, en: &Energization) -> bool {
        let mut dsu = DisjointSet::new(self.nodes().len());
        self.energized_edge_pairs(en).into_iter().all(|(a, b)| dsu.union(a, b))
    }

    /// Algebraic connectivity of the energized topology over all nodes.
    /// Zero whenever any node is disconnected from supply.
    pub fn energized_tau(&self, en: &Energization) -> f64 {
        spectral::algebraic_connectivity(self.nodes().len(), &self.energized_edge_pairs(en))
    }
}
