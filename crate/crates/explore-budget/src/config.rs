//! Run configuration: typed sections, TOML parsing, and dotted-path
//! command-line overrides.
//!
//! Resolution is total: every field except `env.kind` has a default, the file
//! overlays the defaults, and `--set path=value` overrides overlay the file.
//! Unknown keys are rejected at every level, and the fully resolved
//! configuration is persisted next to the artifacts of every run so results
//! are reproducible from the run directory alone.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{CorridorConfig, CorridorGrid, DecPomdp, TagConfig, TagGrid};
use crate::error::{Error, Result};
use crate::rcb::RcbParams;
use crate::rsq::RsqParams;
use crate::trainer::{SdConfig, TrainerConfig};

/// Environment selector plus per-kind geometry tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Which environment to run. The only key without a default.
    pub kind: EnvKind,
    #[serde(default)]
    pub corridor: CorridorConfig,
    #[serde(default)]
    pub tag: TagConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Corridor,
    Tag,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EnvKind::Corridor => self.corridor.validate(),
            EnvKind::Tag => self.tag.validate(),
        }
    }

    /// Instantiates the selected environment.
    pub fn build(&self) -> Result<Box<dyn DecPomdp>> {
        Ok(match self.kind {
            EnvKind::Corridor => Box::new(CorridorGrid::new(&self.corridor)?),
            EnvKind::Tag => Box::new(TagGrid::new(&self.tag)?),
        })
    }

    pub fn n_agents(&self) -> usize {
        match self.kind {
            EnvKind::Corridor => self.corridor.n_agents,
            EnvKind::Tag => self.tag.n_predators,
        }
    }
}

fn default_label() -> String {
    "run".to_string()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

/// Complete configuration of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Run directory name under the output root.
    #[serde(default = "default_label")]
    pub label: String,
    /// Seeds to run; each produces an independent record stream.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output root override; the CLI flag and environment variable take
    /// precedence.
    #[serde(default)]
    pub output_dir: Option<String>,
    pub env: EnvConfig,
    #[serde(default)]
    pub rcb: RcbParams,
    #[serde(default)]
    pub rsq: RsqParams,
    #[serde(default)]
    pub sd: SdConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
}

impl RunConfig {
    /// A corridor run with every field at its default.
    pub fn corridor_default() -> Self {
        toml::from_str("[env]\nkind = \"corridor\"").expect("default config parses")
    }

    /// A tag run with every field at its default.
    pub fn tag_default() -> Self {
        toml::from_str("[env]\nkind = \"tag\"").expect("default config parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(message) => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })
    }

    /// Serializes the resolved configuration; parameters round-trip exactly
    /// because float formatting is shortest-round-trip.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies one `path=value` override, e.g. `rcb.kappa=0.5`. The value is
    /// parsed as a TOML literal, falling back to a bare string. Unknown paths
    /// are rejected by re-deserializing the patched document.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw_value) = assignment.split_once('=').ok_or_else(|| {
            Error::Config(format!("override '{assignment}' is not of the form path=value"))
        })?;
        let path = path.trim();
        if path.is_empty() {
            return Err(Error::Config(format!("override '{assignment}' has an empty path")));
        }
        let value = parse_toml_literal(raw_value.trim());

        let mut doc = toml::Value::try_from(&*self)
            .map_err(|e| Error::Config(format!("cannot reserialize config: {e}")))?;
        let mut node = &mut doc;
        let segments: Vec<&str> = path.split('.').collect();
        for segment in &segments[..segments.len() - 1] {
            node = node
                .as_table_mut()
                .and_then(|t| t.get_mut(*segment))
                .ok_or_else(|| {
                    Error::Config(format!("unknown config table '{segment}' in '{path}'"))
                })?;
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{path}' does not address a table entry")))?;
        let leaf = segments[segments.len() - 1];
        // `output_dir` may be absent from the serialized document (None).
        if !table.contains_key(leaf) && !(segments.len() == 1 && leaf == "output_dir") {
            return Err(Error::Config(format!("unknown config key '{path}'")));
        }
        table.insert(leaf.to_string(), value);

        let patched: RunConfig = doc
            .try_into()
            .map_err(|e| Error::Config(format!("override '{assignment}' rejected: {e}")))?;
        patched.validate()?;
        *self = patched;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "label must be a non-empty directory name, got '{}'",
                self.label
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must contain at least one entry".into()));
        }
        self.env.validate()?;
        self.rcb.validate()?;
        self.rsq.validate()?;
        self.sd.validate()?;
        self.trainer.validate()?;
        Ok(())
    }
}

fn parse_toml_literal(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    if let Ok(table) = probe.parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}
