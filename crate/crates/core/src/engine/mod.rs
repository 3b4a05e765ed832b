//! Iterated select-and-reproduce dynamics on a topology.
//!
//! A run covers one `(condition, topology, batch)` cell. Every node starts
//! from the batch's shared initial melody and performs `iterations` trials;
//! each trial chooses among the node's own latest melody and its neighbours'
//! latest melodies and writes back a reproduction.

mod asynchronous;
mod synchronous;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::{AgentConfig, ReproductionModel, SelectionPolicy};
use crate::graphnet::{Graph, TopologyKind, TopologySpec};
use crate::melody::{random_melody, DeviationModel, Melody, INIT_PITCH_HI, INIT_PITCH_LO};
use crate::seed;
use crate::{Error, Result};

pub use asynchronous::run_asynchronous;
pub use synchronous::run_synchronous;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Full,
    NoSelection,
    NoReproduction,
    Linear,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Full,
        Condition::NoSelection,
        Condition::NoReproduction,
        Condition::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Full => "full",
            Condition::NoSelection => "no_selection",
            Condition::NoReproduction => "no_reproduction",
            Condition::Linear => "linear",
        }
    }

    pub fn is_networked(self) -> bool {
        self != Condition::Linear
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown condition `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Generation by generation against the previous iteration's snapshot.
    #[default]
    Synchronous,
    /// Event-driven participant scheduling with node locking in virtual time.
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub condition: Condition,
    pub topology: TopologySpec,
    pub iterations: usize,
    pub batch_count: usize,
    pub base_seed: u64,
    pub agent: AgentConfig,
    pub mode: Mode,
    /// Concurrent virtual participants (asynchronous mode).
    pub pool_size: usize,
    /// Trials a participant completes before being replaced.
    pub trials_per_participant: usize,
    /// Noise model for the no-reproduction condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_model: Option<DeviationModel>,
}

impl ExperimentConfig {
    pub fn new(condition: Condition, topology: TopologySpec, base_seed: u64) -> Self {
        ExperimentConfig {
            condition,
            topology,
            iterations: 10,
            batch_count: 3,
            base_seed,
            agent: AgentConfig::default(),
            mode: Mode::Synchronous,
            pool_size: 8,
            trials_per_participant: 3,
            deviation_model: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter("iterations must be at least 1".into()));
        }
        if self.pool_size == 0 || self.trials_per_participant == 0 {
            return Err(Error::Parameter(
                "participant pool and trials per participant must be positive".into(),
            ));
        }
        if self.topology.node_count() == 0 {
            return Err(Error::Parameter("topology has no nodes".into()));
        }
        if self.condition == Condition::NoReproduction && self.deviation_model.is_none() {
            return Err(Error::Parameter(
                "no_reproduction condition requires a deviation model".into(),
            ));
        }
        self.agent.validate()
    }

    pub fn batch_seed(&self, batch: usize) -> u64 {
        batch_seed(self.base_seed, batch)
    }

    /// The topology actually simulated: the linear condition has no edges.
    pub fn effective_topology(&self) -> TopologySpec {
        match self.condition {
            Condition::Linear => TopologySpec::Disconnected {
                n: self.topology.node_count(),
            },
            _ => self.topology,
        }
    }

    pub fn selection_policy(&self) -> SelectionPolicy {
        match self.condition {
            Condition::NoSelection => SelectionPolicy::Uniform,
            _ => self.agent.selection,
        }
    }

    pub fn build_graph(&self, batch_seed: u64) -> Result<Graph> {
        self.effective_topology().build(topology_seed(batch_seed))
    }
}

pub fn batch_seed(base_seed: u64, batch: usize) -> u64 {
    seed::derive_indexed(base_seed, "batch", batch as u64)
}

/// Seed for random topology generation within a batch.
pub fn topology_seed(batch_seed: u64) -> u64 {
    seed::derive(batch_seed, "topology")
}

fn dynamics_seed(batch_seed: u64, condition: Condition, topology: TopologyKind) -> u64 {
    seed::derive(batch_seed, &format!("dynamics/{condition}/{topology}"))
}

/// One initial melody per node, drawn on the initialization range. Depends
/// only on `(n, batch_seed)`, so every topology and condition sharing a batch
/// starts from the same set.
pub fn init_batch(n: usize, batch_seed: u64) -> Result<Vec<Melody>> {
    let mut rng = seed::rng(seed::derive(batch_seed, "init"));
    (0..n)
        .map(|_| random_melody(&mut rng, INIT_PITCH_LO, INIT_PITCH_HI))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: usize,
    pub melody: Melody,
}

/// One select-and-reproduce event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub batch: usize,
    pub condition: Condition,
    pub topology: TopologyKind,
    pub iteration: usize,
    pub node: usize,
    pub participant: usize,
    pub candidates: Vec<Candidate>,
    pub selected: usize,
    pub produced: Melody,
    /// Virtual start and end times (asynchronous mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
}

impl TrialRecord {
    pub fn selected_melody(&self) -> &Melody {
        &self.candidates[self.selected].melody
    }
}

/// Node's own melody first, then each neighbour's in ascending id order.
/// In the linear condition only the node's own melody is offered.
pub fn candidate_set(
    state: &[Melody],
    g: &Graph,
    v: usize,
    condition: Condition,
) -> Vec<Candidate> {
    let own = std::iter::once(v);
    let sources: Vec<usize> = if condition.is_networked() {
        own.chain(g.neighbors(v).iter().copied()).collect()
    } else {
        own.collect()
    };
    sources
        .into_iter()
        .map(|source| Candidate {
            source,
            melody: state[source],
        })
        .collect()
}

/// Run one batch in the configured mode.
pub fn run(config: &ExperimentConfig, batch: usize) -> Result<Vec<TrialRecord>> {
    match config.mode {
        Mode::Synchronous => run_synchronous(config, batch),
        Mode::Asynchronous => run_asynchronous(config, batch),
    }
}

/// Run every batch of `config` sequentially, concatenating the logs.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for batch in 0..config.batch_count {
        out.extend(run(config, batch)?);
    }
    Ok(out)
}

/// Everything a runner needs for one batch, resolved from the config.
struct RunSetup {
    batch: usize,
    batch_seed: u64,
    condition: Condition,
    topology: TopologyKind,
    graph: Graph,
    initial: Vec<Melody>,
    selection: SelectionPolicy,
    participants: Participants,
}

impl RunSetup {
    fn new(config: &ExperimentConfig, batch: usize) -> Result<Self> {
        config.validate()?;
        let batch_seed = config.batch_seed(batch);
        let spec = config.effective_topology();
        let graph = config.build_graph(batch_seed)?;
        let initial = init_batch(graph.node_count(), batch_seed)?;
        Ok(RunSetup {
            batch,
            batch_seed,
            condition: config.condition,
            topology: spec.kind(),
            graph,
            initial,
            selection: config.selection_policy(),
            participants: Participants::new(config, batch_seed),
        })
    }

    fn rng(&self) -> seed::SimRng {
        seed::rng(dynamics_seed(
            self.batch_seed,
            self.condition,
            self.topology,
        ))
    }
}

/// Per-participant reproduction models. A participant id maps to the same
/// parameters in every topology of a batch.
struct Participants {
    agent: AgentConfig,
    forced: Option<ReproductionModel>,
    batch_seed: u64,
    cache: HashMap<usize, ReproductionModel>,
}

impl Participants {
    fn new(config: &ExperimentConfig, batch_seed: u64) -> Self {
        let forced = match config.condition {
            Condition::NoReproduction => config
                .deviation_model
                .clone()
                .map(ReproductionModel::MatchedNoise),
            _ => None,
        };
        Participants {
            agent: config.agent.clone(),
            forced,
            batch_seed,
            cache: HashMap::new(),
        }
    }

    fn reproduction(&mut self, participant: usize) -> &ReproductionModel {
        if let Some(forced) = &self.forced {
            return forced;
        }
        if self.agent.jitter == 0.0 {
            return &self.agent.reproduction;
        }
        let (agent, batch_seed) = (&self.agent, self.batch_seed);
        self.cache.entry(participant).or_insert_with(|| {
            let mut rng = seed::rng(seed::derive_indexed(
                batch_seed,
                "participant",
                participant as u64,
            ));
            agent.participant_reproduction(&mut rng)
        })
    }
}
