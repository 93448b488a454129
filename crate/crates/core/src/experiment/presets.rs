//! Configs shipped with the crate.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

macro_rules! preset_table {
    ($($name:literal),* $(,)?) => {
        /// `(name, JSON text)` for every shipped preset.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../presets/", $name, ".json")))),*
        ];
    };
}

preset_table!(
    "counterexample-additive",
    "counterexample-cubic",
    "exact-decomposition",
    "axioms-p2-n2-d3",
    "axioms-p5-n2-d2",
    "axioms-p3-n3-d3",
    "corollary-hypotheses",
    "constant-control-hypotheses",
    "perturbed-additive",
);

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?;
    ExperimentConfig::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in preset_names() {
            let c = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_err());
    }
}
