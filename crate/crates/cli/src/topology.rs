//! One-off topology generation.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use chorusnet::graphnet::{
    topology_metrics, TopologyFile, TopologyKind, TopologyMetrics, TopologySpec,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyArgs {
    pub kind: TopologyKind,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub degree: usize,
    pub cliques: usize,
    pub size: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for TopologyArgs {
    fn default() -> Self {
        TopologyArgs {
            kind: TopologyKind::Lattice,
            rows: 7,
            cols: 7,
            n: 49,
            degree: 4,
            cliques: 7,
            size: 7,
            seed: None,
            out: None,
        }
    }
}

/// What `topology` prints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub kind: TopologyKind,
    pub nodes: usize,
    pub edges: usize,
    pub seed: u64,
    /// Absent for disconnected graphs.
    pub metrics: Option<TopologyMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn spec_from_args(a: &TopologyArgs) -> TopologySpec {
    match a.kind {
        TopologyKind::Lattice => TopologySpec::Lattice {
            rows: a.rows,
            cols: a.cols,
        },
        TopologyKind::RandomRegular => TopologySpec::RandomRegular {
            n: a.n,
            d: a.degree,
            seed: Some(a.seed.unwrap_or(0)),
        },
        TopologyKind::Modular => TopologySpec::Modular {
            cliques: a.cliques,
            size: a.size,
            seed: a.seed,
        },
        TopologyKind::Disconnected => TopologySpec::Disconnected { n: a.n },
    }
}

pub fn cmd_topology(a: &TopologyArgs) -> CliResult<TopologyReport> {
    let spec = spec_from_args(a);
    let seed = spec.effective_seed(0);
    let graph = spec.build(0).map_err(|e| match e {
        chorusnet::Error::Parameter(m) => CliError::Usage(m),
        e @ chorusnet::Error::DegenerateLattice { .. } => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    let metrics = if graph.is_connected() && graph.node_count() > 2 {
        Some(topology_metrics(&graph)?)
    } else {
        None
    };
    if let Some(path) = &a.out {
        let file = TopologyFile::new(&graph, a.kind, seed);
        fs::write(
            path,
            serde_json::to_string_pretty(&file).expect("topology serializes"),
        )
        .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(TopologyReport {
        kind: a.kind,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        seed,
        metrics,
        out: a.out.clone(),
    })
}
