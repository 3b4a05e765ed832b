//! Reassembling per-iteration population states from trial logs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_mean_ci, MeanCi, DEFAULT_RESAMPLES};
use super::cluster::ClusterModel;
use super::population::{
    cluster_entropy, neighbor_similarity, prevalence, relative_deviation, Observation,
};
use crate::behavior::Scorer;
use crate::engine::{Condition, TrialRecord};
use crate::graphnet::{Graph, TopologyKind};
use crate::melody::Melody;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub condition: Condition,
    pub topology: TopologyKind,
    pub batch: usize,
}

/// One run's population at every iteration, `states[t][node]`, with
/// `states[0]` the initial melodies.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub key: RunKey,
    /// Graph implied by the candidate sources (no edges for linear runs).
    pub graph: Graph,
    pub states: Vec<Vec<Melody>>,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.states.len() - 1
    }
}

/// Group a log into runs. Every node of a run must have exactly one record
/// for each iteration `1..=T`.
pub fn trajectories(records: &[TrialRecord]) -> Result<Vec<Trajectory>> {
    let mut runs: BTreeMap<RunKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        runs.entry(RunKey {
            condition: r.condition,
            topology: r.topology,
            batch: r.batch,
        })
        .or_default()
        .push(r);
    }
    runs.into_iter()
        .map(|(key, recs)| build(key, &recs))
        .collect()
}

fn build(key: RunKey, recs: &[&TrialRecord]) -> Result<Trajectory> {
    let label = || format!("{} / {} / batch {}", key.condition, key.topology, key.batch);
    let n = recs.iter().map(|r| r.node).max().expect("nonempty run") + 1;
    let t_max = recs
        .iter()
        .map(|r| r.iteration)
        .max()
        .expect("nonempty run");
    if t_max == 0 || recs.len() != n * t_max {
        return Err(Error::Data(format!(
            "{}: {} records do not cover {n} nodes x {t_max} iterations",
            label(),
            recs.len()
        )));
    }
    let mut slots: Vec<Vec<Option<&TrialRecord>>> = vec![vec![None; n]; t_max + 1];
    for r in recs {
        if r.iteration == 0 || r.candidates.is_empty() || r.selected >= r.candidates.len() {
            return Err(Error::Data(format!(
                "{}: malformed record for node {} iteration {}",
                label(),
                r.node,
                r.iteration
            )));
        }
        if slots[r.iteration][r.node].replace(r).is_some() {
            return Err(Error::Data(format!(
                "{}: duplicate record for node {} iteration {}",
                label(),
                r.node,
                r.iteration
            )));
        }
    }

    let mut edges = BTreeSet::new();
    let mut states = Vec::with_capacity(t_max + 1);
    let first = &slots[1];
    let mut initial = Vec::with_capacity(n);
    for (v, slot) in first.iter().enumerate() {
        let r = slot.ok_or_else(|| {
            Error::Data(format!("{}: node {v} has no iteration-1 record", label()))
        })?;
        if r.candidates[0].source != v {
            return Err(Error::Data(format!(
                "{}: node {v} is not its own first candidate",
                label()
            )));
        }
        initial.push(r.candidates[0].melody);
        for c in &r.candidates[1..] {
            if c.source >= n || c.source == v {
                return Err(Error::Data(format!(
                    "{}: node {v} lists invalid source {}",
                    label(),
                    c.source
                )));
            }
            edges.insert((v.min(c.source), v.max(c.source)));
        }
    }
    states.push(initial);
    for (t, row) in slots.iter().enumerate().skip(1) {
        let state = row
            .iter()
            .enumerate()
            .map(|(v, slot)| {
                slot.map(|r| r.produced).ok_or_else(|| {
                    Error::Data(format!(
                        "{}: node {v} has no record for iteration {t}",
                        label()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        states.push(state);
    }
    Ok(Trajectory {
        key,
        graph: Graph::from_edges(n, edges)?,
        states,
    })
}

/// Population metrics of one run at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub batch: usize,
    pub condition: Condition,
    pub topology: TopologyKind,
    pub iteration: usize,
    pub entropy: f64,
    /// Absent when the graph has no edges.
    pub neighbor_similarity: Option<f64>,
    pub pleasantness: f64,
    pub prevalence: Vec<f64>,
}

/// Metrics for every iteration (including 0) of every run, ordered by run
/// key then iteration.
pub fn metrics_table(
    runs: &[Trajectory],
    model: &ClusterModel,
    scorer: &Scorer,
) -> Result<Vec<MetricsRecord>> {
    let per_run: Vec<Vec<MetricsRecord>> = runs
        .par_iter()
        .map(|run| {
            run.states
                .iter()
                .enumerate()
                .map(|(t, state)| {
                    let labels: Vec<usize> = state.iter().map(|m| model.assign(m)).collect();
                    let p = prevalence(&labels, model.k);
                    let s = match neighbor_similarity(&run.graph, &labels) {
                        Ok(s) => Some(s),
                        Err(Error::UndefinedMetric(_)) => None,
                        Err(e) => return Err(e),
                    };
                    let scores = state
                        .iter()
                        .map(|m| scorer.score(m))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(MetricsRecord {
                        batch: run.key.batch,
                        condition: run.key.condition,
                        topology: run.key.topology,
                        iteration: t,
                        entropy: cluster_entropy(&p)?,
                        neighbor_similarity: s,
                        pleasantness: scores.iter().sum::<f64>() / scores.len() as f64,
                        prevalence: p,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<MetricsRecord> = per_run.into_iter().flatten().collect();
    out.sort_by(|a, b| {
        (a.condition, a.topology, a.batch, a.iteration).cmp(&(
            b.condition,
            b.topology,
            b.batch,
            b.iteration,
        ))
    });
    Ok(out)
}

/// Mean prevalence vector per iteration for each condition, averaged over
/// every run (batch and topology) of that condition.
pub fn prevalence_trajectory(
    runs: &[Trajectory],
    model: &ClusterModel,
) -> Result<BTreeMap<Condition, Vec<Vec<f64>>>> {
    if runs.is_empty() {
        return Err(Error::InsufficientData("no runs".into()));
    }
    let mut sums: BTreeMap<Condition, (Vec<Vec<f64>>, usize)> = BTreeMap::new();
    for run in runs {
        let t_len = run.states.len();
        let (acc, count) = sums
            .entry(run.key.condition)
            .or_insert_with(|| (vec![vec![0.0; model.k]; t_len], 0));
        if acc.len() != t_len {
            return Err(Error::Data(format!(
                "{} runs disagree on the number of iterations",
                run.key.condition
            )));
        }
        for (t, state) in run.states.iter().enumerate() {
            let labels: Vec<usize> = state.iter().map(|m| model.assign(m)).collect();
            for (a, p) in acc[t].iter_mut().zip(prevalence(&labels, model.k)) {
                *a += p;
            }
        }
        *count += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(c, (acc, count))| {
            (
                c,
                acc.into_iter()
                    .map(|row| row.into_iter().map(|x| x / count as f64).collect())
                    .collect(),
            )
        })
        .collect())
}

/// Mean proxy score of every produced melody after the burn-in, per
/// condition, with a bootstrap 95% interval.
pub fn population_pleasantness(
    records: &[TrialRecord],
    scorer: &Scorer,
    burn_in: usize,
    seed: u64,
) -> Result<BTreeMap<Condition, MeanCi>> {
    let mut values: BTreeMap<Condition, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.iteration > burn_in) {
        values
            .entry(r.condition)
            .or_default()
            .push(scorer.score(&r.produced)?);
    }
    if values.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trials after burn-in {burn_in}"
        )));
    }
    values
        .into_par_iter()
        .map(|(c, v)| {
            let ci =
                bootstrap_mean_ci(&v, DEFAULT_RESAMPLES, 0.95, seed::derive(seed, c.as_str()))?;
            Ok((c, ci))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Entropy,
    NeighborSimilarity,
    Pleasantness,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::Entropy,
        Metric::NeighborSimilarity,
        Metric::Pleasantness,
    ];

    pub fn of(self, r: &MetricsRecord) -> Option<f64> {
        match self {
            Metric::Entropy => Some(r.entropy),
            Metric::NeighborSimilarity => r.neighbor_similarity,
            Metric::Pleasantness => Some(r.pleasantness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEntry {
    pub topology: TopologyKind,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub condition: Condition,
    pub metric: Metric,
    pub entries: Vec<DeviationEntry>,
}

impl DeviationSummary {
    /// Largest minus smallest topology mean.
    pub fn spread(&self) -> f64 {
        let means = self.entries.iter().map(|e| e.mean);
        means.clone().fold(f64::NEG_INFINITY, f64::max) - means.fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, topology: TopologyKind) -> Option<&DeviationEntry> {
        self.entries.iter().find(|e| e.topology == topology)
    }
}

/// Relative deviations of each metric per condition, with bootstrap
/// intervals over the per-cell deviations. Metrics absent for a whole
/// condition are skipped.
pub fn deviation_summary(
    metrics: &[MetricsRecord],
    burn_in: usize,
    seed: u64,
) -> Result<Vec<DeviationSummary>> {
    let conditions: BTreeSet<Condition> = metrics.iter().map(|r| r.condition).collect();
    let mut out = Vec::new();
    for condition in conditions {
        for metric in Metric::ALL {
            let obs: Vec<Observation> = metrics
                .iter()
                .filter(|r| r.condition == condition)
                .filter_map(|r| {
                    metric.of(r).map(|value| Observation {
                        batch: r.batch,
                        iteration: r.iteration,
                        topology: r.topology,
                        value,
                    })
                })
                .collect();
            if obs.is_empty() {
                continue;
            }
            let devs = relative_deviation(&obs, burn_in)?;
            let entries = devs
                .iter()
                .map(|d| {
                    let label = format!("deviation/{condition}/{metric:?}/{}", d.topology);
                    let ci = bootstrap_mean_ci(
                        &d.deviations,
                        DEFAULT_RESAMPLES,
                        0.95,
                        seed::derive(seed, &label),
                    )?;
                    Ok(DeviationEntry {
                        topology: d.topology,
                        mean: d.mean,
                        ci_low: ci.low,
                        ci_high: ci.high,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(DeviationSummary {
                condition,
                metric,
                entries,
            });
        }
    }
    Ok(out)
}
