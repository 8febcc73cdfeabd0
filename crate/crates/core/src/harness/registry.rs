//! Scenarios shipped with the tool.

use super::config::{parse_config, ScenarioConfig};
use crate::error::Result;

/// Name and config text of every shipped scenario.
pub const SHIPPED: &[(&str, &str)] = &[
    ("free-gaussian-1d", include_str!("../../scenarios/free-gaussian-1d.toml")),
    ("harmonic-ground-1d", include_str!("../../scenarios/harmonic-ground-1d.toml")),
    ("harmonic-coherent-1d", include_str!("../../scenarios/harmonic-coherent-1d.toml")),
    ("barrier-tunneling-1d", include_str!("../../scenarios/barrier-tunneling-1d.toml")),
    ("double-slit-2d", include_str!("../../scenarios/double-slit-2d.toml")),
    ("entangled-pair", include_str!("../../scenarios/entangled-pair.toml")),
    ("pointer-measurement-2d", include_str!("../../scenarios/pointer-measurement-2d.toml")),
    ("classical-limit-ladder", include_str!("../../scenarios/classical-limit-ladder.toml")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: String,
    pub analyses: Vec<&'static str>,
}

/// One entry per shipped scenario, in registry order.
pub fn list_scenarios() -> Result<Vec<ScenarioInfo>> {
    SHIPPED
        .iter()
        .map(|(name, text)| {
            let c = parse_config(text)?;
            Ok(ScenarioInfo { name, description: c.description, analyses: c.analysis.iter().map(|a| a.name()).collect() })
        })
        .collect()
}

/// Parsed config of a shipped scenario.
pub fn shipped(name: &str) -> Option<Result<ScenarioConfig>> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, text)| parse_config(text))
}
