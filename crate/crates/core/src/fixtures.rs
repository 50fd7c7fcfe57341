//! Shipped data files: the synthesized 45-node network, its damaged
//! variant, the eight-task repair list, hotspot case data, default
//! configuration and scenario scripts.

use std::path::PathBuf;

/// Absolute path of a file under the crate's `fixtures/` directory.
pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub const DEFAULT_AHP: &str = include_str!("../fixtures/ahp_default.json");
pub const DEFAULT_REALTIME_WEIGHTS: &str = include_str!("../fixtures/realtime_weights.json");
