//! Batch experiment configuration.

use std::path::PathBuf;

use outspace::rational::q_string;
use outspace::{Error, Result, Q};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Marked graphs; distances and folding paths run between neighbours.
    #[serde(default)]
    pub graphs: Vec<PathBuf>,
    #[serde(default)]
    pub group: Option<PathBuf>,
    /// Conjugacy classes tracked along folding paths.
    #[serde(default)]
    pub track: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub word_radius: usize,
    pub alpha_len: usize,
    pub event_cap: usize,
    pub bundle_n: usize,
    pub samples: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { word_radius: 4, alpha_len: 5, event_cap: 10_000, bundle_n: 2, samples: 50 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    /// Largest single fold amount.
    #[serde(with = "opt_q", skip_serializing_if = "Option::is_none")]
    pub max_step: Option<Q>,
    #[serde(with = "opt_q", skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Q>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

mod opt_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(q) => q_string::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        q_string::deserialize(d).map(Some)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if [b.word_radius, b.alpha_len, b.event_cap, b.bundle_n, b.samples].contains(&0) {
            return Err(Error::Parse("budgets must be positive".into()));
        }
        if let Some(s) = &self.overrides.max_step {
            if *s <= Q::from_integer(0.into()) {
                return Err(Error::Parse("max_step must be positive".into()));
            }
        }
        if let Some(l) = &self.overrides.lambda {
            if *l <= Q::from_integer(1.into()) {
                return Err(Error::Parse("lambda must exceed 1".into()));
            }
        }
        if self.overrides.m == Some(0) {
            return Err(Error::Parse("M must be positive".into()));
        }
        Ok(())
    }
}
