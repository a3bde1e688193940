//! Scenario configurations shipped with the library.

use crate::scenario::{ConfigError, RunConfig};

const SOURCES: &[(&str, &str)] = &[
    ("heat-only", include_str!("../presets/heat-only.toml")),
    ("two-species-soret", include_str!("../presets/two-species-soret.toml")),
    ("two-species-noself", include_str!("../presets/two-species-noself.toml")),
    ("equilibrium", include_str!("../presets/equilibrium.toml")),
    ("fast-reaction", include_str!("../presets/fast-reaction.toml")),
    ("isomerization", include_str!("../presets/isomerization.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

/// TOML text of a shipped preset.
pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Option<Result<RunConfig, ConfigError>> {
    source(name).map(RunConfig::from_toml)
}

/// Every shipped preset, parsed. Panics only if a shipped file is broken.
pub fn all() -> Vec<RunConfig> {
    SOURCES.iter().map(|(n, s)| RunConfig::from_toml(s).unwrap_or_else(|e| panic!("preset {n}: {e}"))).collect()
}
