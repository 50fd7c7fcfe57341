//! Real-time resilience management for distribution networks operating
//! under a pandemic hotspot overlay.
//!
//! The crate is organised by subsystem:
//!
//! - [`grid`]: network model, energization, switching
//! - [`hotspot`]: case ingestion, risk field, color bands, no-go zones
//! - [`metrics`]: spectral τ, AHP weighting, indicator scoring, real-time score
//! - [`routing`]: risk-weighted travel graph and safe crew dispatch
//! - [`restoration`]: switch reconfiguration search
//! - [`telemetry`]: simulated clock, scripted events, replay
//! - [`assistant`]: rule-based operator query answering
//! - [`engine`]: authoritative state, command execution, persistence
//! - [`report`]: static HTML run reports

pub mod assistant;
pub mod engine;
pub mod fixtures;
pub mod grid;
pub mod hotspot;
pub mod ids;
pub mod metrics;
pub mod report;
pub mod restoration;
pub mod routing;
pub mod spectral;
pub mod telemetry;

#[cfg(test)]
mod test_support;

pub use ids::{EdgeId, NodeId, RouteId, TaskId};
