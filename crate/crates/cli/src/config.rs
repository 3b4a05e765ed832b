//! Study configuration files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chorusnet::behavior::{AgentConfig, TableEntry};
use chorusnet::engine::{Condition, ExperimentConfig, Mode};
use chorusnet::graphnet::{TopologyKind, TopologySpec};
use chorusnet::melody::DeviationModel;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CliError, CliResult};

fn default_conditions() -> Vec<Condition> {
    Condition::ALL.to_vec()
}

fn default_topologies() -> Vec<TopologyEntry> {
    TopologySpec::standard_topologies()
        .into_iter()
        .map(TopologyEntry::Spec)
        .collect()
}

fn default_iterations() -> usize {
    10
}

fn default_batches() -> usize {
    3
}

fn default_pool_size() -> usize {
    8
}

fn default_trials_per_participant() -> usize {
    3
}

/// A topology given either by kind alone (49-node defaults) or in full.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologyEntry {
    Kind(TopologyKind),
    Spec(TopologySpec),
}

impl TopologyEntry {
    pub fn spec(self) -> TopologySpec {
        match self {
            TopologyEntry::Spec(s) => s,
            TopologyEntry::Kind(TopologyKind::Lattice) => {
                TopologySpec::Lattice { rows: 7, cols: 7 }
            }
            TopologyEntry::Kind(TopologyKind::RandomRegular) => TopologySpec::RandomRegular {
                n: 49,
                d: 4,
                seed: None,
            },
            TopologyEntry::Kind(TopologyKind::Modular) => TopologySpec::Modular {
                cliques: 7,
                size: 7,
                seed: None,
            },
            TopologyEntry::Kind(TopologyKind::Disconnected) => TopologySpec::Disconnected { n: 49 },
        }
    }
}

/// Options for the analysis stage stored alongside the study.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudyConfig {
    study_id: String,
    #[serde(default = "default_conditions")]
    conditions: Vec<Condition>,
    #[serde(default = "default_topologies")]
    topologies: Vec<TopologyEntry>,
    #[serde(default = "default_iterations")]
    iterations: usize,
    #[serde(default = "default_batches")]
    batches: usize,
    seed: Option<u64>,
    #[serde(default)]
    agent: Option<Value>,
    #[serde(default)]
    mode: Mode,
    #[serde(default = "default_pool_size")]
    pool_size: usize,
    #[serde(default = "default_trials_per_participant")]
    trials_per_participant: usize,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    deviation_model: Option<PathBuf>,
    #[serde(default)]
    cluster: ClusterSettings,
}

/// A validated study: which conditions to run on which topologies, how
/// long, how many batches, and with what agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study_id: String,
    pub conditions: Vec<Condition>,
    pub topologies: Vec<TopologySpec>,
    pub iterations: usize,
    pub batches: usize,
    pub seed: u64,
    pub agent: AgentConfig,
    pub mode: Mode,
    pub pool_size: usize,
    pub trials_per_participant: usize,
    /// Resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Fixed deviation model for no_reproduction runs; estimated from the
    /// full-condition logs when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_model: Option<DeviationModel>,
    #[serde(default)]
    pub cluster: ClusterSettings,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("config field `{field}`: {msg}"))
}

impl StudyConfig {
    /// Every condition on the three 49-node networks, 3 batches of 10
    /// iterations with default agents.
    pub fn default_study(seed: u64) -> Self {
        StudyConfig {
            study_id: "default".into(),
            conditions: default_conditions(),
            topologies: TopologySpec::standard_topologies().to_vec(),
            iterations: default_iterations(),
            batches: default_batches(),
            seed,
            agent: AgentConfig::default(),
            mode: Mode::Synchronous,
            pool_size: default_pool_size(),
            trials_per_participant: default_trials_per_participant(),
            output_dir: None,
            deviation_model: None,
            cluster: ClusterSettings::default(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse a config whose relative paths are anchored at `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let raw: RawStudyConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        let seed = raw
            .seed
            .ok_or_else(|| invalid("seed", "missing; seeds must be given explicitly"))?;
        let agent = match raw.agent {
            Some(v) => parse_agent(v, base)?,
            None => AgentConfig::default(),
        };
        let deviation_model = match raw.deviation_model {
            Some(p) => {
                let path = base.join(p);
                let text = fs::read_to_string(&path)
                    .map_err(|e| invalid("deviation_model", format!("{}: {e}", path.display())))?;
                Some(
                    serde_json::from_str(&text).map_err(|e| {
                        invalid("deviation_model", format!("{}: {e}", path.display()))
                    })?,
                )
            }
            None => None,
        };
        let config = StudyConfig {
            study_id: raw.study_id,
            conditions: raw.conditions,
            topologies: raw
                .topologies
                .into_iter()
                .map(TopologyEntry::spec)
                .collect(),
            iterations: raw.iterations,
            batches: raw.batches,
            seed,
            agent,
            mode: raw.mode,
            pool_size: raw.pool_size,
            trials_per_participant: raw.trials_per_participant,
            output_dir: raw.output_dir.map(|p| base.join(p)),
            deviation_model,
            cluster: raw.cluster,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.study_id.is_empty() {
            return Err(invalid("study_id", "must not be empty"));
        }
        if self.conditions.is_empty() {
            return Err(invalid("conditions", "must not be empty"));
        }
        if self.conditions.iter().collect::<BTreeSet<_>>().len() != self.conditions.len() {
            return Err(invalid("conditions", "duplicate condition"));
        }
        if self.topologies.is_empty() {
            return Err(invalid("topologies", "must not be empty"));
        }
        let kinds: BTreeSet<TopologyKind> = self.topologies.iter().map(|t| t.kind()).collect();
        if kinds.len() != self.topologies.len() {
            return Err(invalid("topologies", "each kind may appear once"));
        }
        if kinds.contains(&TopologyKind::Disconnected) {
            return Err(invalid(
                "topologies",
                "disconnected is implied by the linear condition",
            ));
        }
        let n = self.topologies[0].node_count();
        if self.topologies.iter().any(|t| t.node_count() != n) {
            return Err(invalid(
                "topologies",
                "all topologies must have the same number of nodes",
            ));
        }
        for t in &self.topologies {
            t.build(0).map_err(|e| invalid("topologies", e))?;
        }
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.batches == 0 {
            return Err(invalid("batches", "must be at least 1"));
        }
        if self.pool_size == 0 {
            return Err(invalid("pool_size", "must be at least 1"));
        }
        if self.trials_per_participant == 0 {
            return Err(invalid("trials_per_participant", "must be at least 1"));
        }
        if self.conditions.contains(&Condition::NoReproduction)
            && self.deviation_model.is_none()
            && !self.conditions.contains(&Condition::Full)
        {
            return Err(invalid(
                "deviation_model",
                "no_reproduction needs either a deviation model file or the full condition to estimate one from",
            ));
        }
        if self.cluster.force_k.is_some_and(|k| k < 2) {
            return Err(invalid("cluster.force_k", "must be at least 2"));
        }
        self.agent.validate().map_err(|e| invalid("agent", e))
    }

    /// Engine configuration for one condition on one topology.
    pub fn experiment(&self, condition: Condition, topology: TopologySpec) -> ExperimentConfig {
        ExperimentConfig {
            condition,
            topology,
            iterations: self.iterations,
            batch_count: self.batches,
            base_seed: self.seed,
            agent: self.agent.clone(),
            mode: self.mode,
            pool_size: self.pool_size,
            trials_per_participant: self.trials_per_participant,
            deviation_model: None,
        }
    }
}

/// Agent block, with a table scorer's `file` replaced by its entries.
fn parse_agent(mut v: Value, base: &Path) -> CliResult<AgentConfig> {
    if let Some(scorer) = v.get_mut("scorer").and_then(Value::as_object_mut) {
        if let Some(file) = scorer.remove("file") {
            let rel = file
                .as_str()
                .ok_or_else(|| invalid("agent.scorer.file", "must be a path string"))?;
            let path = base.join(rel);
            let text = fs::read_to_string(&path)
                .map_err(|e| invalid("agent.scorer.file", format!("{}: {e}", path.display())))?;
            let entries: Vec<TableEntry> = serde_json::from_str(&text)
                .map_err(|e| invalid("agent.scorer.file", format!("{}: {e}", path.display())))?;
            scorer.insert(
                "entries".into(),
                serde_json::to_value(entries).expect("entries serialize"),
            );
        }
    }
    serde_json::from_value(v).map_err(|e| invalid("agent", e))
}
