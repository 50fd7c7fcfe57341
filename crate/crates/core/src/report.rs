//! Static HTML run report: score timeline as inline SVG, event markers and
//! a route summary table.

use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::ScoreRecord;
use crate::routing::CrewRoute;
use crate::telemetry::{LogRecord, TelemetryError};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 240.0;
const PAD: f64 = 36.0;

/// Parsed contents of a run directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunData {
    pub scores: Vec<ScoreRecord>,
    pub events: Vec<LogRecord>,
    pub routes: Vec<CrewRoute>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> TelemetryError {
    TelemetryError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Splits an NDJSON event log into score records and everything else.
pub fn parse_log(text: &str) -> Result<(Vec<ScoreRecord>, Vec<LogRecord>), TelemetryError> {
    let mut scores = Vec::new();
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: LogRecord =
            serde_json::from_str(line).map_err(|e| TelemetryError::Script(format!("log line {}: {e}", i + 1)))?;
        if rec.kind == "score" {
            let s = serde_json::from_value(rec.payload)
                .map_err(|e| TelemetryError::Script(format!("log line {}: {e}", i + 1)))?;
            scores.push(s);
        } else {
            events.push(rec);
        }
    }
    Ok((scores, events))
}

/// Reads `events.ndjson` and, when present, `routes.json` from `dir`.
/// `routes.json` is either a route list or a report with a `routes` field.
pub fn load_run(dir: impl AsRef<Path>) -> Result<RunData, TelemetryError> {
    let dir = dir.as_ref();
    let log_path = dir.join("events.ndjson");
    let text = std::fs::read_to_string(&log_path).map_err(|e| io_err(&log_path, e))?;
    let (scores, events) = parse_log(&text)?;
    let routes_path = dir.join("routes.json");
    let routes = if routes_path.exists() {
        let text = std::fs::read_to_string(&routes_path).map_err(|e| io_err(&routes_path, e))?;
        let mut v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| TelemetryError::Script(format!("routes.json: {e}")))?;
        // a bare route list, or a route report holding one
        if let Some(routes) = v.get_mut("routes") {
            v = routes.take();
        }
        serde_json::from_value(v).map_err(|e| TelemetryError::Script(format!("routes.json: {e}")))?
    } else {
        Vec::new()
    };
    Ok(RunData { scores, events, routes })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn timeline_svg(scores: &[ScoreRecord]) -> String {
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let plot_w = WIDTH - 2.0 * PAD;
    let plot_h = HEIGHT - 2.0 * PAD;
    let _ = write!(
        svg,
        r##"<rect x="{PAD}" y="{PAD}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999"/>"##
    );
    for tick in [0.0, 0.5, 1.0] {
        let y = PAD + plot_h * (1.0 - tick);
        let _ = write!(
            svg,
            r##"<text x="{}" y="{}" font-size="10" text-anchor="end">{tick:.1}</text>"##,
            PAD - 4.0,
            y + 3.0
        );
    }
    let n = scores.len();
    let x_of = |i: usize| if n > 1 { PAD + plot_w * i as f64 / (n - 1) as f64 } else { PAD + plot_w / 2.0 };
    let points: Vec<String> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{:.2},{:.2}", x_of(i), PAD + plot_h * (1.0 - s.score.clamp(0.0, 1.0))))
        .collect();
    if !points.is_empty() {
        let _ = write!(
            svg,
            r##"<polyline fill="none" stroke="#1f6feb" stroke-width="2" points="{}"/>"##,
            points.join(" ")
        );
    }
    for (i, s) in scores.iter().enumerate() {
        let y = PAD + plot_h * (1.0 - s.score.clamp(0.0, 1.0));
        let _ = write!(
            svg,
            r##"<circle cx="{:.2}" cy="{y:.2}" r="3" fill="#1f6feb"><title>{} {:.3}</title></circle>"##,
            x_of(i),
            s.timestamp,
            s.score
        );
    }
    svg.push_str("</svg>");
    svg
}

/// Renders a self-contained HTML report.
pub fn render_html(title: &str, run: &RunData) -> String {
    let mut html = String::new();
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{0}</title>\
         <style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}\
         td,th{{border:1px solid #ccc;padding:4px 8px;text-align:left}}</style></head><body>\n<h1>{0}</h1>\n",
        escape(title)
    );

    html.push_str("<h2>Resilience score</h2>\n");
    if run.scores.is_empty() {
        html.push_str("<p>No score records.</p>\n");
    } else {
        let min = run.scores.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
        let last = run.scores.last().expect("non-empty");
        let _ = writeln!(
            html,
            "<p>{} records, minimum {min:.3}, final {:.3} ({})</p>",
            run.scores.len(),
            last.score,
            last.stage.as_str()
        );
        html.push_str(&timeline_svg(&run.scores));
        html.push('\n');
    }

    html.push_str("<h2>Events</h2>\n<table><tr><th>time</th><th>kind</th><th>detail</th></tr>\n");
    for e in &run.events {
        let _ = writeln!(
            html,
            "<tr><td>{}</td><td>{}</td><td><code>{}</code></td></tr>",
            e.ts,
            escape(&e.kind),
            escape(&e.payload.to_string())
        );
    }
    html.push_str("</table>\n");

    if !run.routes.is_empty() {
        html.push_str(
            "<h2>Crew routes</h2>\n<table><tr><th>id</th><th>status</th><th>tasks</th>\
             <th>travel h</th><th>max risk</th><th>composite</th></tr>\n",
        );
        for r in &run.routes {
            let tasks: Vec<&str> = r.task_order.iter().map(|t| t.as_str()).collect();
            let composite = r.composite.map_or_else(|| "-".to_string(), |c| format!("{c:.4}"));
            let _ = writeln!(
                html,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.2}</td><td>{:.3}</td><td>{composite}</td></tr>",
                escape(r.id.as_str()),
                r.status,
                escape(&tasks.join(" → ")),
                r.total_travel_hours,
                r.max_leg_risk
            );
        }
        html.push_str("</table>\n");
    }
    html.push_str("</body></html>\n");
    html
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{replay, ScenarioScript, SimOptions};
    use crate::test_support::fixture;

    #[test]
    fn report_from_replay() {
        let script = ScenarioScript::load(fixture("scenarios/covid-outage.json")).unwrap();
        let out = replay(&script, SimOptions::default()).unwrap();
        let (scores, events) = parse_log(&out.events_ndjson()).unwrap();
        assert_eq!(scores, out.scores);
        assert!(!events.is_empty());
        let html = render_html("covid <outage>", &RunData { scores, events, routes: vec![] });
        assert!(html.contains("<svg"));
        assert!(html.contains("covid &lt;outage&gt;"));
        assert_eq!(html.matches("<circle").count(), out.scores.len());
    }

    #[test]
    fn load_run_reads_directory() {
        let script = ScenarioScript::load(fixture("scenarios/covid-outage.json")).unwrap();
        let out = replay(&script, SimOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.write_to(dir.path()).unwrap();
        let run = load_run(dir.path()).unwrap();
        assert_eq!(run.scores.len(), out.scores.len());
        assert!(run.routes.is_empty());
        assert!(load_run(dir.path().join("missing")).is_err());
    }
}
