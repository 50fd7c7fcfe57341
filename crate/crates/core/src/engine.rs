//! Authoritative engine state and command execution.
//!
//! All mutations go through [`Engine::execute`]. Every successful command
//! is appended to the event log, so a scenario file holding the initial
//! state plus the log can rebuild the engine exactly: replay re-executes the
//! logged commands, treating each `score` record as one tick.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assistant::{self, Answer, AssistantError, Snapshot};
use crate::grid::{CriticalLoadSummary, EventStage, GridError, Network, NetworkFile, SwitchState};
use crate::hotspot::{build_risk_field, ingest_cases, CaseRecord, CaseSeries, RiskConfig, RiskError, RiskField};
use crate::ids::{EdgeId, NodeId, RouteId};
use crate::metrics::{realtime_score, AhpConfig, AhpModel, MetricsError, ScoreRecord};
use crate::restoration::{self, RestorationError, RestorationPlan};
use crate::routing::{self, CrewRoute, RepairTask, RouteParams, RouteReport, RoutingError};
use crate::telemetry::{
    Event, LogRecord, ScenarioScript, ScriptEvent, SimOptions, SimState, Simulator, TelemetryError,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_ACTIONS: usize = 2;

/// Log kinds that carry no state and are kept verbatim on replay.
const INFO_KINDS: [&str; 1] = ["shutdown"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Restoration(#[from] RestorationError),
    #[error(transparent)]
    Assistant(#[from] AssistantError),
    #[error("scenario schema version {found} is not supported (expected {supported})")]
    SchemaVersionMismatch { found: u64, supported: u32 },
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("log replay failed at record {index}: {message}")]
    Replay { index: usize, message: String },
}

/// Coarse error classes shared by the HTTP API and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    NotFound,
    Conflict,
    Infeasible,
    Io,
}

impl EngineError {
    pub fn class(&self) -> ErrorClass {
        use ErrorClass::*;
        match self {
            EngineError::Grid(GridError::UnknownEdge(_) | GridError::UnknownNode(_)) => NotFound,
            EngineError::Grid(GridError::Io { .. }) => Io,
            EngineError::Grid(GridError::EdgeFaulted(_)) => Conflict,
            EngineError::Risk(RiskError::Io { .. }) => Io,
            EngineError::Telemetry(TelemetryError::Io { .. }) => Io,
            EngineError::Telemetry(TelemetryError::Finished | TelemetryError::InvalidStageTransition { .. }) => {
                Conflict
            }
            EngineError::Telemetry(TelemetryError::Grid(GridError::UnknownEdge(_))) => NotFound,
            EngineError::Routing(e) => match e {
                RoutingError::UnknownRoute(_) => NotFound,
                RoutingError::InvalidTransition { .. } | RoutingError::BlockedLeg { .. } => Conflict,
                RoutingError::AllTasksDeferred(_) | RoutingError::Unreachable { .. } => Infeasible,
                RoutingError::Io { .. } => Io,
                _ => Validation,
            },
            EngineError::Restoration(RestorationError::NoFeasiblePlan) => Infeasible,
            EngineError::Assistant(AssistantError::UnknownAsset(_)) => NotFound,
            EngineError::Io { .. } => Io,
            _ => Validation,
        }
    }

    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Grid(GridError::UnknownEdge(_)) => "unknown_edge",
            EngineError::Grid(GridError::UnknownNode(_)) => "unknown_node",
            EngineError::Grid(GridError::NotSwitchable(_)) => "not_switchable",
            EngineError::Grid(GridError::EdgeFaulted(_)) => "edge_faulted",
            EngineError::Telemetry(TelemetryError::InvalidStageTransition { .. }) => "invalid_stage_transition",
            EngineError::Telemetry(TelemetryError::Finished) => "scenario_finished",
            EngineError::Routing(RoutingError::UnknownRoute(_)) => "unknown_route",
            EngineError::Routing(RoutingError::InvalidTransition { .. }) => "invalid_transition",
            EngineError::Routing(RoutingError::BlockedLeg { .. }) => "blocked_leg",
            EngineError::Routing(RoutingError::AllTasksDeferred(_)) => "all_tasks_deferred",
            EngineError::Routing(RoutingError::Unreachable { .. }) => "unreachable",
            EngineError::Restoration(RestorationError::NoFeasiblePlan) => "no_feasible_plan",
            EngineError::Metrics(MetricsError::Inconsistent { .. }) => "inconsistent_ahp",
            EngineError::Assistant(_) => "unknown_asset",
            EngineError::SchemaVersionMismatch { .. } => "schema_version_mismatch",
            e => match e.class() {
                ErrorClass::Io => "io_error",
                ErrorClass::NotFound => "not_found",
                ErrorClass::Conflict => "conflict",
                ErrorClass::Infeasible => "infeasible",
                ErrorClass::Validation => "validation_error",
            },
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> EngineError {
    EngineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn default_max_actions() -> usize {
    DEFAULT_MAX_ACTIONS
}

/// Self-contained scenario: initial state, configuration and the command
/// log accumulated so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub start: NaiveDateTime,
    pub ticks: u32,
    pub network: NetworkFile,
    #[serde(default)]
    pub cases: Vec<CaseRecord>,
    pub hotspot_date: NaiveDate,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
    pub options: SimOptions,
    pub ahp: AhpConfig,
    #[serde(default)]
    pub route_defaults: RouteParams,
    #[serde(default = "default_max_actions")]
    pub max_actions: usize,
    #[serde(default)]
    pub log: Vec<LogRecord>,
}

impl ScenarioFile {
    pub fn from_script(script: &ScenarioScript, options: SimOptions, ahp: AhpConfig) -> Result<Self, EngineError> {
        let network = crate::grid::load_network(&script.network)?;
        let cases = match &script.cases {
            Some(p) => ingest_cases(p)?.records().to_vec(),
            None => Vec::new(),
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            name: script.name.clone(),
            start: script.start,
            ticks: script.tick_count(),
            network: NetworkFile::from(&network),
            cases,
            hotspot_date: script.hotspot_date.unwrap_or(script.start.date()),
            risk: script.risk,
            events: script.events.clone(),
            options,
            ahp,
            route_defaults: RouteParams::default(),
            max_actions: DEFAULT_MAX_ACTIONS,
            log: Vec::new(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| EngineError::Parse(e.to_string()))?;
        let found = raw.get("schema_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
        if found != u64::from(SCHEMA_VERSION) {
            return Err(EngineError::SchemaVersionMismatch {
                found,
                supported: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(raw).map_err(|e| EngineError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EngineError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
    }
}

/// Body of a route search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteRequest {
    pub tasks: Vec<RepairTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Command {
    Tick,
    InjectEvent(Event),
    Switch { edge: EdgeId, state: SwitchState },
    RouteSearch(RouteRequest),
    RoutePropose { route: RouteId },
    RouteSignoff { route: RouteId, operator: String },
    RouteReject { route: RouteId, operator: String },
    RestorationSearch { max_actions: usize },
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::Tick => "tick",
            Command::InjectEvent(_) => "inject_event",
            Command::Switch { .. } => "switch",
            Command::RouteSearch(_) => "route_search",
            Command::RoutePropose { .. } => "route_propose",
            Command::RouteSignoff { .. } => "route_signoff",
            Command::RouteReject { .. } => "route_reject",
            Command::RestorationSearch { .. } => "restoration_search",
        }
    }

    /// Rebuilds a command from a log record; `None` for records that are
    /// consequences of commands rather than commands.
    pub fn from_log(record: &LogRecord) -> Option<Result<Command, String>> {
        if record.kind == "score" {
            return Some(Ok(Command::Tick));
        }
        const KINDS: [&str; 7] = [
            "inject_event",
            "switch",
            "route_search",
            "route_propose",
            "route_signoff",
            "route_reject",
            "restoration_search",
        ];
        if !KINDS.contains(&record.kind.as_str()) {
            return None;
        }
        let tagged = serde_json::json!({ "kind": record.kind, "payload": record.payload });
        Some(serde_json::from_value(tagged).map_err(|e| e.to_string()))
    }

    fn payload(&self) -> serde_json::Value {
        match serde_json::to_value(self).expect("commands serialize") {
            serde_json::Value::Object(mut m) => m.remove("payload").unwrap_or_default(),
            other => other,
        }
    }
}

/// Restoration plan chosen ahead of a route search, and the routes found
/// on the reconfigured network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchPlan {
    pub search: u32,
    pub restoration: Option<RestorationPlan>,
    #[serde(flatten)]
    pub report: RouteReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Ticked { record: ScoreRecord },
    Queued { event: Event },
    Switched { edge: EdgeId, state: SwitchState, switch_ops: u32 },
    Routes(DispatchPlan),
    Route { route: CrewRoute },
    Plans { plans: Vec<RestorationPlan> },
}

/// Reconfigure first, then route the remaining repairs on the reconfigured
/// network; the plan's switching count becomes every route's SO.
pub fn plan_dispatch(
    net: &Network,
    field: &RiskField,
    tasks: &[RepairTask],
    params: &RouteParams,
    max_actions: usize,
    ahp: &AhpModel,
) -> Result<(Option<RestorationPlan>, RouteReport), EngineError> {
    let plan = match restoration::best_restoration(net, max_actions, ahp) {
        Ok(p) => Some(p),
        Err(RestorationError::NoFeasiblePlan) => None,
        Err(e) => return Err(e.into()),
    };
    let (routed, so) = match &plan {
        Some(p) => (p.apply(net)?, p.so_count),
        None => (net.clone(), 0),
    };
    let report = routing::search_routes(&routed, field, tasks, params, so, ahp)?;
    Ok((plan, report))
}

/// Network, energization and stage, as served to operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub scenario: String,
    pub clock: NaiveDateTime,
    pub ticks_done: u32,
    pub ticks_total: u32,
    pub stage: EventStage,
    pub network: NetworkFile,
    pub voltage_pu: BTreeMap<NodeId, f64>,
    pub energized: BTreeMap<NodeId, bool>,
    pub critical: CriticalLoadSummary,
    pub switch_ops: u32,
    pub nominal_tau: f64,
    pub queued_events: Vec<Event>,
}

/// Everything persistence must preserve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub network: NetworkFile,
    pub voltage_pu: BTreeMap<NodeId, f64>,
    pub switch_ops: u32,
    pub stage: EventStage,
    pub field: RiskField,
    pub history: Vec<ScoreRecord>,
    pub routes: Vec<CrewRoute>,
    pub plans: Vec<RestorationPlan>,
    pub queued: Vec<Event>,
    pub ticks_done: u32,
}

#[derive(Debug, Clone)]
pub struct Engine {
    initial: ScenarioFile,
    sim: Simulator,
    ahp: AhpModel,
    routes: BTreeMap<RouteId, (CrewRoute, RouteParams)>,
    plans: Vec<RestorationPlan>,
    searches: u32,
}

impl Engine {
    /// Builds the initial state of `scenario`, ignoring its log.
    pub fn new(scenario: ScenarioFile) -> Result<Self, EngineError> {
        let ahp = AhpModel::from_config(&scenario.ahp)?;
        scenario.options.weights.validate()?;
        scenario.route_defaults.validate()?;
        if !(1..=restoration::MAX_ACTIONS).contains(&scenario.max_actions) {
            return Err(RestorationError::ActionLimit(scenario.max_actions).into());
        }
        let network = scenario.network.clone().into_network()?;
        let cases = CaseSeries::new(scenario.cases.clone())?;
        let state = SimState::new(network, cases, scenario.risk, scenario.hotspot_date)?;
        let sim = Simulator::new(state, scenario.start, scenario.ticks, scenario.events.clone(), scenario.options)?;
        let mut initial = scenario;
        initial.log.clear();
        Ok(Self {
            initial,
            sim,
            ahp,
            routes: BTreeMap::new(),
            plans: Vec::new(),
            searches: 0,
        })
    }

    /// Builds the initial state and re-executes the logged commands.
    pub fn restore(scenario: ScenarioFile) -> Result<Self, EngineError> {
        let log = scenario.log.clone();
        let mut engine = Self::new(scenario)?;
        for (index, record) in log.into_iter().enumerate() {
            match Command::from_log(&record) {
                Some(cmd) => {
                    let cmd = cmd.map_err(|message| EngineError::Replay { index, message })?;
                    engine.execute(cmd).map_err(|e| EngineError::Replay {
                        index,
                        message: e.to_string(),
                    })?;
                }
                None if INFO_KINDS.contains(&record.kind.as_str()) => engine.sim.push_log(record),
                None => {}
            }
        }
        Ok(engine)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        Self::restore(ScenarioFile::load(path)?)
    }

    /// Scenario file holding the initial state and the full log.
    pub fn scenario_file(&self) -> ScenarioFile {
        ScenarioFile {
            log: self.sim.log().to_vec(),
            ..self.initial.clone()
        }
    }

    pub fn persist(&self, path: impl AsRef<Path>) -> Result<(), EngineError> {
        self.scenario_file().save(path)
    }

    pub fn ahp(&self) -> &AhpModel {
        &self.ahp
    }

    pub fn network(&self) -> &Network {
        &self.sim.state().network
    }

    pub fn field(&self) -> &RiskField {
        &self.sim.state().field
    }

    pub fn stage(&self) -> EventStage {
        self.sim.state().stage
    }

    pub fn history(&self) -> &[ScoreRecord] {
        self.sim.history()
    }

    pub fn log(&self) -> &[LogRecord] {
        self.sim.log()
    }

    /// Latest tick's record, or the score of the current state before the
    /// first tick.
    pub fn current_score(&self) -> ScoreRecord {
        self.history().last().cloned().unwrap_or_else(|| {
            realtime_score(self.network(), self.stage(), &self.sim.options().weights, self.now())
        })
    }

    pub fn now(&self) -> NaiveDateTime {
        self.sim.now()
    }

    pub fn is_finished(&self) -> bool {
        self.sim.is_finished()
    }

    pub fn route(&self, id: &RouteId) -> Option<&CrewRoute> {
        self.routes.get(id).map(|(r, _)| r)
    }

    pub fn routes(&self) -> impl Iterator<Item = &CrewRoute> {
        self.routes.values().map(|(r, _)| r)
    }

    pub fn plans(&self) -> &[RestorationPlan] {
        &self.plans
    }

    /// Risk field for an arbitrary date of the loaded case data.
    pub fn field_on(&self, date: NaiveDate) -> Result<RiskField, EngineError> {
        let s = self.sim.state();
        if s.cases.is_empty() {
            return Ok(RiskField::empty(date));
        }
        Ok(build_risk_field(&s.cases, date, &s.risk_config)?)
    }

    pub fn state_view(&self) -> StateView {
        let net = self.network();
        let en = net.energize();
        StateView {
            scenario: self.initial.name.clone(),
            clock: self.now(),
            ticks_done: self.sim.ticks_done(),
            ticks_total: self.sim.ticks_total(),
            stage: self.stage(),
            network: NetworkFile::from(net),
            voltage_pu: net.nodes().iter().map(|n| (n.id.clone(), n.voltage_pu)).collect(),
            energized: net.nodes().iter().zip(&en.served).map(|(n, &s)| (n.id.clone(), s)).collect(),
            critical: net.critical_summary_of(&en),
            switch_ops: net.switch_ops(),
            nominal_tau: net.nominal_tau(),
            queued_events: self.sim.queued().to_vec(),
        }
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        let net = self.network();
        EngineSnapshot {
            network: NetworkFile::from(net),
            voltage_pu: net.nodes().iter().map(|n| (n.id.clone(), n.voltage_pu)).collect(),
            switch_ops: net.switch_ops(),
            stage: self.stage(),
            field: self.field().clone(),
            history: self.history().to_vec(),
            routes: self.routes().cloned().collect(),
            plans: self.plans.clone(),
            queued: self.sim.queued().to_vec(),
            ticks_done: self.sim.ticks_done(),
        }
    }

    pub fn ask(&self, text: &str) -> Result<Answer, EngineError> {
        let snap = Snapshot {
            network: self.network(),
            field: self.field(),
            score: self.history().last(),
            theta: self.initial.route_defaults.theta,
        };
        Ok(assistant::ask(text, &snap)?)
    }

    /// Appends a clean-shutdown marker to the log.
    pub fn shutdown(&mut self, reason: &str) {
        let ts = self.now();
        self.sim
            .push_log(LogRecord::new(ts, "shutdown", serde_json::json!({ "reason": reason })));
    }

    fn logged(&mut self, cmd: &Command) {
        let ts = self.now();
        self.sim.push_log(LogRecord::new(ts, cmd.kind(), cmd.payload()));
    }

    fn route_mut(&mut self, id: &RouteId) -> Result<&mut (CrewRoute, RouteParams), EngineError> {
        self.routes
            .get_mut(id)
            .ok_or_else(|| RoutingError::UnknownRoute(id.clone()).into())
    }

    pub fn execute(&mut self, cmd: Command) -> Result<Outcome, EngineError> {
        let outcome = match &cmd {
            Command::Tick => {
                let (_, record) = self.sim.tick()?;
                return Ok(Outcome::Ticked { record });
            }
            Command::InjectEvent(event) => {
                self.sim.inject_event(event.clone())?;
                Outcome::Queued { event: event.clone() }
            }
            Command::Switch { edge, state } => {
                let next = self.network().apply_switch_action(edge, *state)?;
                let switch_ops = next.switch_ops();
                self.sim.set_network(next);
                Outcome::Switched {
                    edge: edge.clone(),
                    state: *state,
                    switch_ops,
                }
            }
            Command::RouteSearch(req) => {
                let defaults = self.initial.route_defaults;
                let params = RouteParams {
                    k: req.k.unwrap_or(defaults.k),
                    theta: req.theta.unwrap_or(defaults.theta),
                    beta: req.beta.unwrap_or(defaults.beta),
                    speed_kmh: defaults.speed_kmh,
                };
                let (restoration, mut report) = plan_dispatch(
                    self.network(),
                    self.field(),
                    &req.tasks,
                    &params,
                    self.initial.max_actions,
                    &self.ahp,
                )?;
                self.searches += 1;
                for r in &mut report.routes {
                    r.id = RouteId::new(format!("S{}-{}", self.searches, r.id));
                    self.routes.insert(r.id.clone(), (r.clone(), params));
                }
                Outcome::Routes(DispatchPlan {
                    search: self.searches,
                    restoration,
                    report,
                })
            }
            Command::RoutePropose { route } => {
                let at = self.now();
                let (r, _) = self.route_mut(route)?;
                r.propose(at)?;
                Outcome::Route { route: r.clone() }
            }
            Command::RouteSignoff { route, operator } => {
                let at = self.now();
                let (net, field) = (self.network().clone(), self.field().clone());
                let (r, params) = self.route_mut(route)?;
                if r.status == routing::RouteStatus::Proposed {
                    let g = routing::build_travel_graph(&net, &field, params)?;
                    r.ensure_unblocked(&g)?;
                }
                r.sign_off(operator, at)?;
                Outcome::Route { route: r.clone() }
            }
            Command::RouteReject { route, operator } => {
                let at = self.now();
                let (r, _) = self.route_mut(route)?;
                r.reject(operator, at)?;
                Outcome::Route { route: r.clone() }
            }
            Command::RestorationSearch { max_actions } => {
                self.plans = restoration::rank_plans(self.network(), *max_actions, &self.ahp)?;
                Outcome::Plans {
                    plans: self.plans.clone(),
                }
            }
        };
        self.logged(&cmd);
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::routing::load_tasks;

    fn covid() -> ScenarioFile {
        let script = ScenarioScript::load(fixtures::path("scenarios/covid-outage.json")).unwrap();
        ScenarioFile::from_script(&script, SimOptions::default(), AhpConfig::shipped_default()).unwrap()
    }

    fn damaged() -> ScenarioFile {
        let mut s = covid();
        let net = crate::grid::load_network(fixtures::path("net45_damaged.json")).unwrap();
        s.network = NetworkFile::from(&net);
        s.events.clear();
        s.hotspot_date = "2020-04-15".parse().unwrap();
        s
    }

    #[test]
    fn persist_round_trip_after_ticks() {
        let mut e = Engine::new(covid()).unwrap();
        for _ in 0..4 {
            e.execute(Command::Tick).unwrap();
        }
        e.execute(Command::Switch {
            edge: "e05".into(),
            state: SwitchState::Closed,
        })
        .unwrap_err();
        e.execute(Command::Switch {
            edge: "s02".into(),
            state: SwitchState::Open,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        e.persist(&path).unwrap();
        let back = Engine::load(&path).unwrap();
        assert_eq!(back.snapshot(), e.snapshot());
        assert_eq!(back.history().len(), 4);
        assert_eq!(back.log(), e.log());
    }

    #[test]
    fn future_schema_rejected() {
        let mut v = serde_json::to_value(covid()).unwrap();
        v["schema_version"] = serde_json::json!(2);
        let err = ScenarioFile::parse(&v.to_string()).unwrap_err();
        assert!(matches!(err, EngineError::SchemaVersionMismatch { found: 2, .. }));
    }

    #[test]
    fn inconsistent_ahp_is_config_error() {
        let mut s = covid();
        s.ahp.pairwise = vec![
            vec![1.0, 9.0, 9.0, 9.0, 9.0],
            vec![1.0 / 9.0, 1.0, 9.0, 9.0, 9.0],
            vec![1.0 / 9.0, 1.0 / 9.0, 1.0, 9.0, 9.0],
            vec![1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0, 9.0],
            vec![1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0],
        ];
        s.ahp.pairwise[4][0] = 9.0;
        s.ahp.pairwise[0][4] = 1.0 / 9.0;
        let err = Engine::new(s).unwrap_err();
        assert_eq!(err.code(), "inconsistent_ahp");
    }

    #[test]
    fn route_workflow_and_replay() {
        let mut e = Engine::new(damaged()).unwrap();
        e.execute(Command::Tick).unwrap();
        let tasks = load_tasks(fixtures::path("tasks8.json")).unwrap();
        let out = e
            .execute(Command::RouteSearch(RouteRequest {
                tasks,
                k: None,
                theta: None,
                beta: None,
            }))
            .unwrap();
        let Outcome::Routes(plan) = out else { panic!("expected routes") };
        assert_eq!(plan.report.routes.len(), 3);
        let top = plan.report.routes[0].id.clone();
        assert!(top.as_str().starts_with("S1-R"));

        let err = e
            .execute(Command::RouteSignoff {
                route: top.clone(),
                operator: "ops".into(),
            })
            .unwrap_err();
        assert_eq!(err.class(), ErrorClass::Conflict);
        e.execute(Command::RoutePropose { route: top.clone() }).unwrap();
        e.execute(Command::RouteSignoff {
            route: top.clone(),
            operator: "ops".into(),
        })
        .unwrap();
        assert_eq!(e.route(&top).unwrap().status, routing::RouteStatus::SignedOff);
        assert_eq!(
            e.execute(Command::RoutePropose { route: "nope".into() }).unwrap_err().class(),
            ErrorClass::NotFound
        );

        e.execute(Command::InjectEvent(Event::StageChange {
            stage: EventStage::DuringEvent,
        }))
        .unwrap();
        e.execute(Command::Tick).unwrap();
        e.shutdown("test");

        let again = Engine::restore(e.scenario_file()).unwrap();
        assert_eq!(again.snapshot(), e.snapshot());
        assert_eq!(again.log(), e.log());
        assert_eq!(e.log().last().unwrap().kind, "shutdown");
    }

    #[test]
    fn restoration_search_and_assistant() {
        let mut e = Engine::new(damaged()).unwrap();
        let Outcome::Plans { plans } = e.execute(Command::RestorationSearch { max_actions: 2 }).unwrap() else {
            panic!("expected plans")
        };
        assert!(!plans.is_empty());
        e.execute(Command::Tick).unwrap();
        let a = e.ask("what node has the lowest voltage").unwrap();
        assert!(a.data["id"].is_string());
        assert_eq!(e.ask("status of n999").unwrap_err().class(), ErrorClass::NotFound);
    }

    #[test]
    fn current_score_before_first_tick() {
        let mut s = covid();
        s.options.noise = false;
        let e = Engine::new(s).unwrap();
        assert!((e.current_score().score - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ticking_past_the_end_conflicts() {
        let mut s = covid();
        s.ticks = 1;
        let mut e = Engine::new(s).unwrap();
        e.execute(Command::Tick).unwrap();
        assert_eq!(e.execute(Command::Tick).unwrap_err().class(), ErrorClass::Conflict);
    }
}
