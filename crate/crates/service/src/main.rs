use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use rmt_core::metrics::AhpConfig;
use rmt_core::telemetry::SimOptions;
use rmt_service::{load_scenario, serve, ServiceConfig, ServiceError};

/// Serve the resilience engine over HTTP.
#[derive(Debug, Parser)]
#[command(name = "rmt-service", version)]
struct Args {
    /// Scenario file or scenario script.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// AHP configuration; the shipped default when omitted.
    #[arg(long)]
    ahp: Option<PathBuf>,
    /// Scenario file persisted on shutdown and resumed on start.
    #[arg(long)]
    state: Option<PathBuf>,
    /// NDJSON event log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Static console bundle served at `/`.
    #[arg(long)]
    console_dir: Option<PathBuf>,
    /// Milliseconds of wall time per simulated tick; 0 ticks only on POST /v1/tick.
    #[arg(long, default_value_t = 0)]
    tick_ms: u64,
}

fn config(args: &Args) -> Result<ServiceConfig, ServiceError> {
    let ahp = match &args.ahp {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ServiceError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            AhpConfig::from_json(&text).map_err(|e| ServiceError::Config(e.into()))?
        }
        None => AhpConfig::shipped_default(),
    };
    let options = SimOptions {
        seed: args.seed,
        ..SimOptions::default()
    };
    let mut config = ServiceConfig::new(load_scenario(&args.scenario, options, ahp)?);
    config.state_path = args.state.clone();
    config.log_path = args.log.clone();
    config.console_dir = args.console_dir.clone();
    config.tick_interval = (args.tick_ms > 0).then(|| Duration::from_millis(args.tick_ms));
    Ok(config)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let result = match config(&args) {
        Ok(c) => serve(c, &args.bind).await,
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
