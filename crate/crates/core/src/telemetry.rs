//! Simulated clock, scripted events and deterministic replay.
//!
//! Time advances in fixed 15-minute ticks starting at the scenario start.
//! On each tick, due script events and queued injections are applied, node
//! voltages are refreshed with seeded noise, and the real-time score is
//! recorded. Voltage noise is telemetry only and never feeds the score.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{load_network, EdgeState, EventStage, GridError, Network};
use crate::hotspot::{build_risk_field, ingest_cases, parse_cases, CaseSeries, RiskConfig, RiskError, RiskField};
use crate::ids::{EdgeId, NodeId};
use crate::metrics::{realtime_score, RealtimeWeights, ScoreRecord};

pub const TICK_MINUTES: i64 = 15;
/// Reported voltage of a de-energized node.
pub const DEAD_BUS_PU: f64 = 0.01;
const NOISE_BAND: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelemetryError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("stage cannot move from {from} to {to}")]
    InvalidStageTransition { from: &'static str, to: &'static str },
    #[error("invalid scenario: {0}")]
    Script(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario has run to completion")]
    Finished,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> TelemetryError {
    TelemetryError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    FaultEdge {
        edge: EdgeId,
    },
    ClearFault {
        edge: EdgeId,
    },
    /// Moves the risk field to `date` and/or merges an inline case CSV.
    HotspotUpdate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        date: Option<NaiveDate>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<String>,
    },
    StageChange {
        stage: EventStage,
    },
    LoadScale {
        factor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<Vec<NodeId>>,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::FaultEdge { .. } => "fault_edge",
            Event::ClearFault { .. } => "clear_fault",
            Event::HotspotUpdate { .. } => "hotspot_update",
            Event::StageChange { .. } => "stage_change",
            Event::LoadScale { .. } => "load_scale",
        }
    }

    /// The event body without its kind tag.
    pub fn payload(&self) -> serde_json::Value {
        match serde_json::to_value(self).expect("events serialize") {
            serde_json::Value::Object(mut m) => m.remove("payload").unwrap_or_default(),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub at_minutes: u32,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    pub start: NaiveDateTime,
    pub duration_hours: f64,
    /// Network file, relative to the script.
    pub network: PathBuf,
    /// Canonical case CSV, relative to the script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<PathBuf>,
    /// Date of the initial risk field; the start date when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotspot_date: Option<NaiveDate>,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, TelemetryError> {
        let s: Self = serde_json::from_str(text).map_err(|e| TelemetryError::Script(e.to_string()))?;
        if !(s.duration_hours > 0.0 && s.duration_hours.is_finite()) {
            return Err(TelemetryError::Script("duration_hours must be positive".into()));
        }
        if s.events.windows(2).any(|w| w[1].at_minutes < w[0].at_minutes) {
            return Err(TelemetryError::Script("event offsets must be non-decreasing".into()));
        }
        Ok(s)
    }

    /// Reads a script and resolves its data paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TelemetryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut s = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        s.network = base.join(&s.network);
        s.cases = s.cases.map(|c| base.join(c));
        Ok(s)
    }

    pub fn tick_count(&self) -> u32 {
        (self.duration_hours * 60.0 / TICK_MINUTES as f64).floor() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub seed: u64,
    /// When false every energized node reads exactly 1.0 p.u.
    pub noise: bool,
    pub weights: RealtimeWeights,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            noise: true,
            weights: RealtimeWeights::default(),
        }
    }
}

/// One line of the append-only event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub ts: NaiveDateTime,
    pub kind: String,
    pub payload: serde_json::Value,
}

impl LogRecord {
    pub fn new(ts: NaiveDateTime, kind: impl Into<String>, payload: impl Serialize) -> Self {
        Self {
            ts,
            kind: kind.into(),
            payload: serde_json::to_value(payload).expect("log payloads serialize"),
        }
    }
}

pub fn to_ndjson(records: &[LogRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("log records serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub timestamp: NaiveDateTime,
    pub voltage_pu: BTreeMap<NodeId, f64>,
    pub served_kw: BTreeMap<NodeId, f64>,
    pub edge_state: BTreeMap<EdgeId, EdgeState>,
}

/// The mutable part of a running scenario that events act on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub network: Network,
    pub cases: CaseSeries,
    pub risk_config: RiskConfig,
    pub field: RiskField,
    pub stage: EventStage,
}

impl SimState {
    pub fn new(
        network: Network,
        cases: CaseSeries,
        risk_config: RiskConfig,
        hotspot_date: NaiveDate,
    ) -> Result<Self, TelemetryError> {
        let field = if cases.is_empty() {
            RiskField::empty(hotspot_date)
        } else {
            build_risk_field(&cases, hotspot_date, &risk_config)?
        };
        Ok(Self {
            network,
            cases,
            risk_config,
            field,
            stage: EventStage::default(),
        })
    }

    /// Applies one event, leaving `self` untouched on error.
    pub fn apply(&mut self, event: &Event) -> Result<(), TelemetryError> {
        match event {
            Event::FaultEdge { edge } => self.network = self.network.fault_edge(edge)?,
            Event::ClearFault { edge } => self.network = self.network.repair_edge(edge)?,
            Event::HotspotUpdate { date, csv } => {
                let cases = match csv {
                    Some(text) => self.cases.merged(&parse_cases(text.as_bytes())?)?,
                    None => self.cases.clone(),
                };
                let date = date.unwrap_or(self.field.date);
                let field = build_risk_field(&cases, date, &self.risk_config)?;
                self.cases = cases;
                self.field = field;
            }
            Event::StageChange { stage } => {
                if !self.stage.can_transition_to(*stage) {
                    return Err(TelemetryError::InvalidStageTransition {
                        from: self.stage.as_str(),
                        to: stage.as_str(),
                    });
                }
                self.stage = *stage;
            }
            Event::LoadScale { factor, nodes } => {
                self.network = self.network.scale_loads(*factor, nodes.as_deref())?;
            }
        }
        Ok(())
    }
}

/// Deterministic tick-driven scenario runner.
#[derive(Debug, Clone)]
pub struct Simulator {
    state: SimState,
    start: NaiveDateTime,
    ticks_total: u32,
    ticks_done: u32,
    script: VecDeque<ScriptEvent>,
    queued: Vec<Event>,
    options: SimOptions,
    rng: ChaCha8Rng,
    history: Vec<ScoreRecord>,
    log: Vec<LogRecord>,
}

impl Simulator {
    pub fn new(
        state: SimState,
        start: NaiveDateTime,
        ticks_total: u32,
        script: Vec<ScriptEvent>,
        options: SimOptions,
    ) -> Result<Self, TelemetryError> {
        // dry run so a bad script fails at load time, not mid-run
        let mut probe = state.clone();
        for ev in &script {
            probe.apply(&ev.event).map_err(|e| {
                TelemetryError::Script(format!("event {} at +{} min: {e}", ev.event.kind(), ev.at_minutes))
            })?;
        }
        Ok(Self {
            state,
            start,
            ticks_total,
            ticks_done: 0,
            script: script.into(),
            queued: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            options,
            history: Vec::new(),
            log: Vec::new(),
        })
    }

    /// Loads the script's network and case data.
    pub fn from_script(script: &ScenarioScript, options: SimOptions) -> Result<Self, TelemetryError> {
        let network = load_network(&script.network)?;
        let cases = match &script.cases {
            Some(p) => ingest_cases(p)?,
            None => CaseSeries::default(),
        };
        let date = script.hotspot_date.unwrap_or(script.start.date());
        let state = SimState::new(network, cases, script.risk, date)?;
        Self::new(state, script.start, script.tick_count(), script.events.clone(), options)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn history(&self) -> &[ScoreRecord] {
        &self.history
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Timestamp of the latest tick, or the start before the first one.
    pub fn now(&self) -> NaiveDateTime {
        self.history.last().map_or(self.start, |r| r.timestamp)
    }

    pub fn ticks_done(&self) -> u32 {
        self.ticks_done
    }

    pub fn ticks_total(&self) -> u32 {
        self.ticks_total
    }

    pub fn is_finished(&self) -> bool {
        self.ticks_done >= self.ticks_total
    }

    pub fn queued(&self) -> &[Event] {
        &self.queued
    }

    pub fn push_log(&mut self, record: LogRecord) {
        self.log.push(record);
    }

    /// Replaces the network outside of the event path (operator switching).
    pub fn set_network(&mut self, network: Network) {
        self.state.network = network;
    }

    /// Validates `event` against the state it will meet and queues it for
    /// the next tick.
    pub fn inject_event(&mut self, event: Event) -> Result<(), TelemetryError> {
        let mut probe = self.state.clone();
        let offset = self.next_offset_minutes();
        for ev in self.script.iter().take_while(|e| i64::from(e.at_minutes) <= offset) {
            probe.apply(&ev.event)?;
        }
        for ev in &self.queued {
            probe.apply(ev)?;
        }
        probe.apply(&event)?;
        self.queued.push(event);
        Ok(())
    }

    fn next_offset_minutes(&self) -> i64 {
        TICK_MINUTES * i64::from(self.ticks_done)
    }

    fn apply_logged(&mut self, event: &Event, ts: NaiveDateTime) -> Result<(), TelemetryError> {
        self.state.apply(event)?;
        self.log.push(LogRecord::new(ts, event.kind(), event.payload()));
        Ok(())
    }

    pub fn tick(&mut self) -> Result<(TelemetryFrame, ScoreRecord), TelemetryError> {
        if self.is_finished() {
            return Err(TelemetryError::Finished);
        }
        let offset = self.next_offset_minutes();
        let ts = self.start + Duration::minutes(offset);
        while self.script.front().is_some_and(|e| i64::from(e.at_minutes) <= offset) {
            let ev = self.script.pop_front().expect("front exists");
            self.apply_logged(&ev.event, ts)?;
        }
        for ev in std::mem::take(&mut self.queued) {
            self.apply_logged(&ev, ts)?;
        }

        let net = &self.state.network;
        let en = net.energize();
        let voltages: Vec<f64> = en
            .served
            .iter()
            .map(|&live| {
                let jitter = self.rng.random_range(-NOISE_BAND..=NOISE_BAND);
                match (live, self.options.noise) {
                    (false, _) => DEAD_BUS_PU,
                    (true, true) => 1.0 + jitter,
                    (true, false) => 1.0,
                }
            })
            .collect();
        self.state.network = net.with_voltages(&voltages);

        let net = &self.state.network;
        let record = realtime_score(net, self.state.stage, &self.options.weights, ts);
        let frame = TelemetryFrame {
            timestamp: ts,
            voltage_pu: net.nodes().iter().map(|n| (n.id.clone(), n.voltage_pu)).collect(),
            served_kw: net
                .nodes()
                .iter()
                .zip(&en.served)
                .map(|(n, &s)| (n.id.clone(), if s { n.load_kw } else { 0.0 }))
                .collect(),
            edge_state: net.edges().iter().map(|e| (e.id.clone(), e.state)).collect(),
        };
        self.log.push(LogRecord::new(ts, "score", &record));
        self.history.push(record.clone());
        self.ticks_done += 1;
        Ok((frame, record))
    }

    pub fn run_to_end(&mut self) -> Result<(), TelemetryError> {
        while !self.is_finished() {
            self.tick()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub scores: Vec<ScoreRecord>,
    pub log: Vec<LogRecord>,
}

impl ReplayOutput {
    pub fn events_ndjson(&self) -> String {
        to_ndjson(&self.log)
    }

    /// `timestamp,stage,score,critical_served,load_served,reserve,topology`
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("timestamp,stage,score,critical_served,load_served,reserve,topology\n");
        for r in &self.scores {
            let c = &r.components;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.timestamp.format("%Y-%m-%dT%H:%M:%S"),
                r.stage.as_str(),
                r.score,
                c.critical_served,
                c.load_served,
                c.reserve,
                c.topology
            ));
        }
        out
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<(), TelemetryError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, body) in [("scores.csv", self.scores_csv()), ("events.ndjson", self.events_ndjson())] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| io_err(&p, e))?;
        }
        Ok(())
    }
}

pub fn replay(script: &ScenarioScript, options: SimOptions) -> Result<ReplayOutput, TelemetryError> {
    let mut sim = Simulator::from_script(script, options)?;
    sim.run_to_end()?;
    Ok(ReplayOutput {
        scores: sim.history,
        log: sim.log,
    })
}
