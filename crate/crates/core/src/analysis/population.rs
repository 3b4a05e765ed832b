//! Population-level statistics over cluster labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graphnet::{Graph, TopologyKind};
use crate::{Error, Result};

/// Shannon entropy in nats, with `0 * ln 0 = 0`.
pub fn cluster_entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Data(
            "prevalence must be a nonempty vector of nonnegative numbers".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Data(format!("prevalence sums to {total}, not 1")));
    }
    Ok(-p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>())
}

/// Fraction of nodes carrying each label `0..k`.
pub fn prevalence(labels: &[usize], k: usize) -> Vec<f64> {
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    counts
        .iter()
        .map(|&c| c as f64 / labels.len() as f64)
        .collect()
}

/// Fraction of edges whose endpoints carry the same label. Each undirected
/// edge counts once.
pub fn neighbor_similarity(g: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.node_count() {
        return Err(Error::Data(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.node_count()
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::UndefinedMetric(
            "neighbour similarity of a graph without edges".into(),
        ));
    }
    let same = g
        .edges()
        .iter()
        .filter(|&&(u, v)| labels[u] == labels[v])
        .count();
    Ok(same as f64 / g.edge_count() as f64)
}

/// One metric value for one topology at one `(batch, iteration)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub batch: usize,
    pub iteration: usize,
    pub topology: TopologyKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDeviation {
    pub topology: TopologyKind,
    /// Mean deviation from the cross-topology cell mean.
    pub mean: f64,
    /// Per-cell deviations, ordered by `(batch, iteration)`.
    pub deviations: Vec<f64>,
}

/// Within each `(batch, iteration)` cell past the burn-in, subtract the
/// cross-topology mean; then average each topology's deviations over cells.
///
/// Every cell must contain every topology exactly once.
pub fn relative_deviation(
    observations: &[Observation],
    burn_in: usize,
) -> Result<Vec<TopologyDeviation>> {
    let topologies: BTreeSet<TopologyKind> = observations.iter().map(|o| o.topology).collect();
    let mut cells: BTreeMap<(usize, usize), BTreeMap<TopologyKind, f64>> = BTreeMap::new();
    for o in observations.iter().filter(|o| o.iteration > burn_in) {
        if !o.value.is_finite() {
            return Err(Error::Data(format!(
                "non-finite value at batch {} iteration {}",
                o.batch, o.iteration
            )));
        }
        if cells
            .entry((o.batch, o.iteration))
            .or_default()
            .insert(o.topology, o.value)
            .is_some()
        {
            return Err(Error::Data(format!(
                "duplicate {} value at batch {} iteration {}",
                o.topology, o.batch, o.iteration
            )));
        }
    }
    if cells.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no observations after burn-in {burn_in}"
        )));
    }

    let mut per_topology: BTreeMap<TopologyKind, Vec<f64>> =
        topologies.iter().map(|&t| (t, Vec::new())).collect();
    for ((batch, iteration), values) in &cells {
        if values.len() != topologies.len() {
            let missing: Vec<String> = topologies
                .iter()
                .filter(|t| !values.contains_key(t))
                .map(|t| t.to_string())
                .collect();
            return Err(Error::Data(format!(
                "batch {batch} iteration {iteration} is missing {}",
                missing.join(", ")
            )));
        }
        let mean = values.values().sum::<f64>() / values.len() as f64;
        for (t, v) in values {
            per_topology
                .get_mut(t)
                .expect("known topology")
                .push(v - mean);
        }
    }
    Ok(per_topology
        .into_iter()
        .map(|(topology, deviations)| TopologyDeviation {
            topology,
            mean: deviations.iter().sum::<f64>() / deviations.len() as f64,
            deviations,
        })
        .collect())
}
