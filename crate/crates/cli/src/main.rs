use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{NaiveDate, NaiveDateTime};
use clap::{Parser, Subcommand};
use rmt_core::engine::{plan_dispatch, EngineError, ErrorClass};
use rmt_core::grid::{load_network, EventStage};
use rmt_core::hotspot::{build_risk_field, convert_jhu, ingest_cases, write_cases, RiskConfig, RiskError, RiskField};
use rmt_core::metrics::{realtime_score, AhpConfig, AhpModel, RealtimeWeights};
use rmt_core::report::{load_run, render_html};
use rmt_core::restoration::{rank_plans, RestorationPlan};
use rmt_core::routing::{load_tasks, CrewRoute, DeferredTask, RouteParams};
use rmt_core::telemetry::{replay, ScenarioScript, SimOptions};
use serde::Serialize;
use serde_json::json;

/// Headless driver for the resilience management engine.
#[derive(Debug, Parser)]
#[command(name = "rmt", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Replay a scenario script and write scores.csv and events.ndjson.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Read every energized bus at exactly 1.0 p.u.
        #[arg(long)]
        no_noise: bool,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Print the real-time score breakdown of a network.
    Score {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = StageArg::PreEvent)]
        stage: StageArg,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Timestamp stamped on the record.
        #[arg(long, default_value = "1970-01-01T00:00:00")]
        at: NaiveDateTime,
    },
    /// Search ranked crew routes, reconfiguring first when switching helps.
    Route {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Hotspot date; the last date of the case data when omitted.
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.75)]
        theta: f64,
        #[arg(long, default_value_t = 4.0)]
        beta: f64,
        #[arg(long, default_value_t = 40.0)]
        speed_kmh: f64,
        /// Switching actions considered before routing; 0 routes on the network as given.
        #[arg(long, default_value_t = 2)]
        max_actions: usize,
        #[arg(long)]
        ahp: Option<PathBuf>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank feasible switching plans.
    Restore {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_actions: usize,
        #[arg(long)]
        ahp: Option<PathBuf>,
    },
    /// Convert a JHU daily report to canonical case CSV.
    ConvertJhu {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the report's update timestamp.
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Render a static HTML report for a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to report.html inside the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum StageArg {
    PreEvent,
    DuringEvent,
    PostEvent,
}

impl From<StageArg> for EventStage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::PreEvent => EventStage::PreEvent,
            StageArg::DuringEvent => EventStage::DuringEvent,
            StageArg::PostEvent => EventStage::PostEvent,
        }
    }
}

#[derive(Serialize)]
struct RouteOutput {
    restoration: Option<RestorationPlan>,
    routes: Vec<CrewRoute>,
    deferred: Vec<DeferredTask>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> EngineError {
    EngineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, EngineError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn ahp_model(path: Option<&Path>) -> Result<AhpModel, EngineError> {
    let config = match path {
        Some(p) => AhpConfig::from_json(&read(p)?)?,
        None => AhpConfig::shipped_default(),
    };
    Ok(AhpModel::from_config(&config)?)
}

fn weights(path: Option<&Path>) -> Result<RealtimeWeights, EngineError> {
    match path {
        Some(p) => Ok(RealtimeWeights::from_json(&read(p)?)?),
        None => Ok(RealtimeWeights::shipped_default()),
    }
}

fn risk_field(cases: Option<&Path>, date: Option<NaiveDate>) -> Result<RiskField, EngineError> {
    let Some(path) = cases else {
        return Ok(RiskField::empty(date.unwrap_or_default()));
    };
    let series = ingest_cases(path)?;
    let date = match date.or_else(|| series.date_range().map(|(_, last)| last)) {
        Some(d) => d,
        None => return Err(RiskError::Config(format!("{} holds no case records", path.display())).into()),
    };
    Ok(build_risk_field(&series, date, &RiskConfig::default())?)
}

fn print_json(value: &impl Serialize) -> Result<String, EngineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| EngineError::Parse(e.to_string()))?;
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(text)
}

fn execute(cmd: Cmd) -> Result<(), EngineError> {
    match cmd {
        Cmd::Run {
            scenario,
            seed,
            out,
            no_noise,
            weights: w,
        } => {
            let script = ScenarioScript::load(&scenario)?;
            let options = SimOptions {
                seed,
                noise: !no_noise,
                weights: weights(w.as_deref())?,
            };
            let output = replay(&script, options)?;
            output.write_to(&out)?;
            print_json(&json!({
                "records": output.scores.len(),
                "scores": out.join("scores.csv"),
                "events": out.join("events.ndjson"),
            }))?;
        }
        Cmd::Score {
            network,
            stage,
            weights: w,
            at,
        } => {
            let net = load_network(&network)?;
            print_json(&realtime_score(&net, stage.into(), &weights(w.as_deref())?, at))?;
        }
        Cmd::Route {
            network,
            tasks,
            cases,
            date,
            k,
            theta,
            beta,
            speed_kmh,
            max_actions,
            ahp,
            out,
        } => {
            let net = load_network(&network)?;
            let tasks = load_tasks(&tasks)?;
            let field = risk_field(cases.as_deref(), date)?;
            let params = RouteParams {
                k,
                theta,
                beta,
                speed_kmh,
            };
            let ahp = ahp_model(ahp.as_deref())?;
            let (restoration, report) = if max_actions == 0 {
                (None, rmt_core::routing::search_routes(&net, &field, &tasks, &params, 0, &ahp)?)
            } else {
                plan_dispatch(&net, &field, &tasks, &params, max_actions, &ahp)?
            };
            let text = print_json(&RouteOutput {
                restoration,
                routes: report.routes,
                deferred: report.deferred,
            })?;
            if let Some(p) = out {
                std::fs::write(&p, text + "\n").map_err(|e| io_err(&p, e))?;
            }
        }
        Cmd::Restore {
            network,
            max_actions,
            ahp,
        } => {
            let net = load_network(&network)?;
            print_json(&rank_plans(&net, max_actions, &ahp_model(ahp.as_deref())?)?)?;
        }
        Cmd::ConvertJhu { input, out, date } => {
            let reader = BufReader::new(File::open(&input).map_err(|e| io_err(&input, e))?);
            let records = convert_jhu(reader, date)?;
            let mut writer = BufWriter::new(File::create(&out).map_err(|e| io_err(&out, e))?);
            write_cases(&records, &mut writer)?;
            writer.flush().map_err(|e| io_err(&out, e))?;
            print_json(&json!({ "records": records.len(), "out": out }))?;
        }
        Cmd::Report { run, out } => {
            let data = load_run(&run)?;
            let title = format!("Run report: {}", run.display());
            let out = out.unwrap_or_else(|| run.join("report.html"));
            std::fs::write(&out, render_html(&title, &data)).map_err(|e| io_err(&out, e))?;
            print_json(&json!({ "report": out, "records": data.scores.len() }))?;
        }
    }
    Ok(())
}

fn exit_code(e: &EngineError) -> u8 {
    match e.class() {
        ErrorClass::Infeasible => 3,
        ErrorClass::Io => 4,
        ErrorClass::Validation | ErrorClass::NotFound | ErrorClass::Conflict => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(exit_code(&e))
        }
    }
}

