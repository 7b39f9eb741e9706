//! Named configurations shipped with the tool.

use crate::error::{CliError, Result};

const PRESETS: [(&str, &str); 6] = [
    ("fig1a", include_str!("../presets/fig1a.toml")),
    ("fig1b", include_str!("../presets/fig1b.toml")),
    ("fig1-text", include_str!("../presets/fig1-text.toml")),
    ("fig2-A0.001", include_str!("../presets/fig2-A0.001.toml")),
    ("fig2-A0.01", include_str!("../presets/fig2-A0.01.toml")),
    ("fig2-A0.02", include_str!("../presets/fig2-A0.02.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Source text of preset `name`.
pub fn preset(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        CliError::invalid("--preset", format!("unknown preset {name:?}; available: {}", names().collect::<Vec<_>>().join(", ")))
    })
}
