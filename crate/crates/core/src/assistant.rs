//! Rule-based operator query assistant.
//!
//! Queries are matched case-insensitively against a small fixed grammar;
//! anything unrecognised becomes a help request. Answers carry both a
//! sentence for the operator and a structured payload naming every id the
//! sentence mentions.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::grid::{EdgeState, Network};
use crate::hotspot::RiskField;
use crate::metrics::ScoreRecord;

pub const GRAMMAR_VERSION: u32 = 1;

const FORMS: [&str; 6] = [
    "what node has the lowest|highest voltage|load|risk",
    "which zone has the highest|lowest risk|intensity",
    "status of <node|edge|zone id>",
    "how many nodes|edges|faults|critical loads|energized nodes|de-energized nodes|zones|no-go zones|open switches",
    "what is the resilience score",
    "help",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssistantError {
    #[error("unknown asset {0}")]
    UnknownAsset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Voltage,
    Load,
    /// Point risk at a node's location.
    Risk,
    /// Zone intensity.
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Lowest,
    Highest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Node,
    Zone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountTarget {
    Nodes,
    Edges,
    Faults,
    CriticalLoads,
    EnergizedNodes,
    DeenergizedNodes,
    Zones,
    NoGoZones,
    OpenSwitches,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intent {
    Extremum {
        metric: Metric,
        direction: Direction,
        subject: Subject,
    },
    Status {
        asset: String,
    },
    Count {
        what: CountTarget,
    },
    Score,
    Help,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub data: serde_json::Value,
}

/// Read-only view of engine state a query is answered against.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub network: &'a Network,
    pub field: &'a RiskField,
    pub score: Option<&'a ScoreRecord>,
    pub theta: f64,
}

static DIRECTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:(lowest|minimum|min|smallest|least)|(highest|maximum|max|largest|greatest|most))\b").unwrap()
});
static METRIC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(voltages?|loads?|demand|risk|intensity|cases)\b").unwrap());
static ZONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(zones?|regions?|hotspots?|areas?)\b").unwrap());
static STATUS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:what\s+is\s+the\s+|show\s+(?:me\s+)?(?:the\s+)?)?(?:status|state|details?)\s+(?:of|for)\s+([\w.\-]+)\s*\??$|^(?:tell\s+me\s+about|show|describe)\s+([\w.\-]+)\s*\??$|^is\s+([\w.\-]+)\s+(?:energized|live|faulted|up|down)\s*\??$").unwrap()
});
static COUNT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:how\s+many|count(?:\s+the)?|number\s+of)\s+(.+?)(?:\s+(?:are\s+)?there)?\s*\??$").unwrap()
});
static SCORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(score|resilience|resiliency)\b").unwrap());

fn count_target(phrase: &str) -> Option<CountTarget> {
    let p = phrase.trim();
    let target = if p.contains("no-go") || p.contains("no go") || p.contains("nogo") {
        CountTarget::NoGoZones
    } else if p.contains("de-energized") || p.contains("deenergized") || p.contains("dead") || p.contains("out") {
        CountTarget::DeenergizedNodes
    } else if p.contains("energized") || p.contains("live") {
        CountTarget::EnergizedNodes
    } else if p.contains("critical") {
        CountTarget::CriticalLoads
    } else if p.contains("fault") {
        CountTarget::Faults
    } else if p.contains("open") && p.contains("switch") {
        CountTarget::OpenSwitches
    } else if ZONE.is_match(p) {
        CountTarget::Zones
    } else if p.contains("edge") || p.contains("line") {
        CountTarget::Edges
    } else if p.contains("node") || p.contains("bus") {
        CountTarget::Nodes
    } else {
        return None;
    };
    Some(target)
}

/// Maps free text to an intent. Never fails: unrecognised text is help.
pub fn parse_query(text: &str) -> Intent {
    let q = text.trim().to_lowercase();
    let q = q.trim_end_matches(['?', '.', '!']).trim();
    if q.is_empty() || q == "help" {
        return Intent::Help;
    }

    if let (Some(dir), Some(metric)) = (DIRECTION.captures(q), METRIC.captures(q)) {
        let direction = if dir.get(1).is_some() {
            Direction::Lowest
        } else {
            Direction::Highest
        };
        let word = metric.get(1).map_or("", |m| m.as_str());
        let zone = ZONE.is_match(q);
        let (metric, subject) = match word {
            w if w.starts_with("voltage") => (Metric::Voltage, Subject::Node),
            w if w.starts_with("load") || w == "demand" => (Metric::Load, Subject::Node),
            "risk" if !zone => (Metric::Risk, Subject::Node),
            _ => (Metric::Intensity, Subject::Zone),
        };
        return Intent::Extremum {
            metric,
            direction,
            subject,
        };
    }

    if let Some(c) = STATUS.captures(q) {
        let asset = (1..=3).find_map(|i| c.get(i)).map(|m| m.as_str().to_owned());
        if let Some(asset) = asset {
            return Intent::Status { asset };
        }
    }

    if let Some(what) = COUNT.captures(q).and_then(|c| count_target(&c[1])) {
        return Intent::Count { what };
    }

    if SCORE.is_match(q) {
        return Intent::Score;
    }
    Intent::Help
}

fn unit(metric: Metric) -> &'static str {
    match metric {
        Metric::Voltage => "p.u.",
        Metric::Load => "kW",
        Metric::Risk | Metric::Intensity => "",
    }
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Voltage => "voltage",
        Metric::Load => "load",
        Metric::Risk => "risk",
        Metric::Intensity => "intensity",
    }
}

/// Arg-extremum over `(id, value)` pairs; ties go to the smaller id.
fn pick<'a>(items: impl Iterator<Item = (&'a str, f64)>, direction: Direction) -> Option<(&'a str, f64)> {
    items.fold(None, |best: Option<(&str, f64)>, (id, v)| match best {
        None => Some((id, v)),
        Some((bid, bv)) => {
            let better = match direction {
                Direction::Lowest => v < bv,
                Direction::Highest => v > bv,
            };
            if better || (v == bv && id < bid) {
                Some((id, v))
            } else {
                Some((bid, bv))
            }
        }
    })
}

fn extremum(metric: Metric, direction: Direction, subject: Subject, s: &Snapshot) -> Answer {
    let found = match subject {
        Subject::Node => pick(
            s.network.nodes().iter().map(|n| {
                let v = match metric {
                    Metric::Voltage => n.voltage_pu,
                    Metric::Load => n.load_kw,
                    _ => s.field.point_risk(n.lat, n.lon),
                };
                (n.id.as_str(), v)
            }),
            direction,
        ),
        Subject::Zone => pick(s.field.zones.iter().map(|z| (z.zone_id.as_str(), z.intensity)), direction),
    };
    let dir = match direction {
        Direction::Lowest => "lowest",
        Direction::Highest => "highest",
    };
    let kind = match subject {
        Subject::Node => "node",
        Subject::Zone => "zone",
    };
    let name = metric_name(metric);
    match found {
        None => Answer {
            text: format!("There are no {kind}s to compare."),
            data: json!({ "metric": name, "direction": dir, "subject": kind, "id": null }),
        },
        Some((id, value)) => {
            let u = unit(metric);
            let shown = if u.is_empty() {
                format!("{value:.3}")
            } else {
                format!("{value:.3} {u}")
            };
            let capital = if subject == Subject::Node { "Node" } else { "Zone" };
            Answer {
                text: format!("{capital} {id} has the {dir} {name} at {shown}."),
                data: json!({ "metric": name, "direction": dir, "subject": kind, "id": id, "value": value, "unit": u }),
            }
        }
    }
}

fn status(asset: &str, s: &Snapshot) -> Result<Answer, AssistantError> {
    let net = s.network;
    if let Some(pos) = net.nodes().iter().position(|n| n.id.as_str().eq_ignore_ascii_case(asset)) {
        let n = &net.nodes()[pos];
        let en = net.energize();
        let live = if en.served[pos] {
            "energized"
        } else if en.connected[pos] {
            "shed"
        } else {
            "de-energized"
        };
        return Ok(Answer {
            text: format!(
                "Node {} is {live}: {:.0} kW{} at {:.3} p.u.",
                n.id,
                n.load_kw,
                if n.critical { " critical load" } else { " load" },
                n.voltage_pu
            ),
            data: json!({
                "id": n.id, "type": "node", "kind": n.kind, "energized": en.served[pos],
                "connected": en.connected[pos], "load_kw": n.load_kw, "critical": n.critical,
                "voltage_pu": n.voltage_pu, "capacity_kw": n.capacity_kw,
            }),
        });
    }
    if let Some(e) = net.edges().iter().find(|e| e.id.as_str().eq_ignore_ascii_case(asset)) {
        let state = match e.state {
            EdgeState::Closed => "closed",
            EdgeState::Open => "open",
            EdgeState::Faulted => "faulted",
        };
        return Ok(Answer {
            text: format!("Edge {} ({} to {}) is {state}.", e.id, e.from, e.to),
            data: json!({
                "id": e.id, "type": "edge", "from": e.from, "to": e.to, "state": e.state,
                "switchable": e.switchable, "length_km": e.length_km, "capacity_kw": e.capacity_kw,
            }),
        });
    }
    if let Some(z) = s.field.zones.iter().find(|z| z.zone_id.eq_ignore_ascii_case(asset)) {
        return Ok(Answer {
            text: format!(
                "Zone {} ({}) has intensity {:.3} with {} active cases.",
                z.zone_id, z.name, z.intensity, z.active_cases
            ),
            data: json!({
                "id": z.zone_id, "type": "zone", "name": z.name, "intensity": z.intensity,
                "active_cases": z.active_cases, "band": z.band, "no_go": z.intensity >= s.theta,
            }),
        });
    }
    Err(AssistantError::UnknownAsset(asset.to_owned()))
}

fn count(what: CountTarget, s: &Snapshot) -> Answer {
    let net = s.network;
    let en = net.energize();
    let (n, label, extra) = match what {
        CountTarget::Nodes => (net.nodes().len(), "nodes", json!(null)),
        CountTarget::Edges => (net.edges().len(), "edges", json!(null)),
        CountTarget::Faults => {
            let ids: Vec<&str> = net
                .edges()
                .iter()
                .filter(|e| e.state == EdgeState::Faulted)
                .map(|e| e.id.as_str())
                .collect();
            (ids.len(), "faulted edges", json!(ids))
        }
        CountTarget::CriticalLoads => {
            let c = net.critical_summary_of(&en);
            (c.total_critical as usize, "critical loads", json!({ "served": c.served_critical }))
        }
        CountTarget::EnergizedNodes => (en.served_count(), "energized nodes", json!(null)),
        CountTarget::DeenergizedNodes => (net.nodes().len() - en.served_count(), "de-energized nodes", json!(null)),
        CountTarget::Zones => (s.field.zones.len(), "zones", json!(null)),
        CountTarget::NoGoZones => {
            let ids: Vec<&str> = s
                .field
                .zones
                .iter()
                .filter(|z| z.intensity >= s.theta)
                .map(|z| z.zone_id.as_str())
                .collect();
            (ids.len(), "no-go zones", json!(ids))
        }
        CountTarget::OpenSwitches => {
            let ids: Vec<&str> = net
                .edges()
                .iter()
                .filter(|e| e.switchable && e.state == EdgeState::Open)
                .map(|e| e.id.as_str())
                .collect();
            (ids.len(), "open switches", json!(ids))
        }
    };
    let text = match &extra {
        serde_json::Value::Array(ids) if !ids.is_empty() => {
            let names: Vec<&str> = ids.iter().filter_map(|v| v.as_str()).collect();
            format!("There are {n} {label}: {}.", names.join(", "))
        }
        serde_json::Value::Object(m) if m.contains_key("served") => {
            format!("There are {n} {label}, {} of them served.", m["served"])
        }
        _ => format!("There are {n} {label}."),
    };
    Answer {
        text,
        data: json!({ "what": what, "count": n, "detail": extra }),
    }
}

fn help() -> Answer {
    Answer {
        text: format!("I can answer: {}.", FORMS.join("; ")),
        data: json!({ "version": GRAMMAR_VERSION, "forms": FORMS }),
    }
}

pub fn answer(intent: &Intent, snapshot: &Snapshot) -> Result<Answer, AssistantError> {
    Ok(match intent {
        Intent::Extremum {
            metric,
            direction,
            subject,
        } => extremum(*metric, *direction, *subject, snapshot),
        Intent::Status { asset } => status(asset, snapshot)?,
        Intent::Count { what } => count(*what, snapshot),
        Intent::Score => match snapshot.score {
            Some(r) => Answer {
                text: format!(
                    "The resilience score at {} is {:.3} ({}).",
                    r.timestamp.format("%Y-%m-%d %H:%M"),
                    r.score,
                    r.stage.as_str()
                ),
                data: serde_json::to_value(r).expect("score records serialize"),
            },
            None => Answer {
                text: "No resilience score has been computed yet.".into(),
                data: json!(null),
            },
        },
        Intent::Help => help(),
    })
}

/// Parses and answers in one step.
pub fn ask(text: &str, snapshot: &Snapshot) -> Result<Answer, AssistantError> {
    answer(&parse_query(text), snapshot)
}
