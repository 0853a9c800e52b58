//! JSON run configuration. Keys mirror [`PitchConfig`], [`ExplicitParams`]
//! (with its viscosity block) and [`RunOptions`]; unknown keys are errors.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::driver::{PitchConfig, RunOptions};
use crate::error::Result;
use crate::stepping::ExplicitParams;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub pitch: PitchConfig,
    pub explicit: ExplicitParams,
    pub run: RunOptions,
    /// Radau stages for the wave solver; `None` selects `p`.
    pub stages: Option<usize>,
}

/// Parses any config type from JSON text.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_config<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    parse_config(&std::fs::read_to_string(path)?)
}
