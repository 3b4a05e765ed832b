//! Pooled clustering and population metrics over trial logs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chorusnet::analysis::{
    deviation_summary, fit_cluster_model, metrics_table, population_pleasantness,
    prevalence_trajectory, trajectories, write_metrics_csv, ClusterModel, ClusterOptions,
    DeviationSummary, MeanCi, MetricsRecord,
};
use chorusnet::behavior::Scorer;
use chorusnet::engine::{Condition, TrialRecord};
use chorusnet::melody::Melody;
use serde::{Deserialize, Serialize};

use crate::CliResult;

pub const DEFAULT_BURN_IN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub force_k: Option<usize>,
    pub burn_in: usize,
    pub seed: u64,
    pub scorer: Scorer,
    /// Use this model instead of fitting one.
    pub model: Option<ClusterModel>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            force_k: None,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            scorer: Scorer::default(),
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub k: usize,
    pub silhouette: f64,
    pub explained_variance_ratio: [f64; 2],
    pub burn_in: usize,
    pub pleasantness: BTreeMap<Condition, MeanCi>,
    pub deviations: Vec<DeviationSummary>,
    /// Mean prevalence per iteration, per condition.
    pub prevalence: BTreeMap<Condition, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub model: ClusterModel,
    pub metrics: Vec<MetricsRecord>,
    pub summary: Summary,
}

/// Expand directories into their `*.jsonl` files, sorted by name.
pub fn log_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(anyhow!("no log files found").into());
    }
    Ok(out)
}

/// Parse JSON-lines trial logs. Errors name the file and line.
pub fn read_logs(paths: &[PathBuf]) -> CliResult<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for path in log_files(paths)? {
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: TrialRecord = serde_json::from_str(line).with_context(|| {
                format!("{}: line {}: corrupt trial record", path.display(), i + 1)
            })?;
            records.push(r);
        }
    }
    records.sort_by_key(|r| (r.condition, r.topology, r.batch, r.iteration, r.node));
    Ok(records)
}

/// Every produced melody, plus each batch's initial set once.
fn pooled_melodies(runs: &[chorusnet::analysis::Trajectory]) -> Vec<Melody> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for run in runs {
        let skip = if seen.insert(run.key.batch) { 0 } else { 1 };
        out.extend(run.states.iter().skip(skip).flatten().copied());
    }
    out
}

/// Cluster, compute metrics and summaries, all in memory.
pub fn analyze_records(
    records: &[TrialRecord],
    opts: &AnalyzeOptions,
) -> CliResult<AnalysisOutput> {
    let runs = trajectories(records)?;
    let model = match &opts.model {
        Some(m) => m.clone(),
        None => {
            let pool = pooled_melodies(&runs);
            fit_cluster_model(
                &pool,
                &ClusterOptions {
                    force_k: opts.force_k,
                    seed: opts.seed,
                    ..Default::default()
                },
            )?
        }
    };
    let metrics = metrics_table(&runs, &model, &opts.scorer)?;
    let summary = Summary {
        k: model.k,
        silhouette: model.silhouette,
        explained_variance_ratio: model.explained_variance_ratio,
        burn_in: opts.burn_in,
        pleasantness: population_pleasantness(records, &opts.scorer, opts.burn_in, opts.seed)?,
        deviations: deviation_summary(&metrics, opts.burn_in, opts.seed)?,
        prevalence: prevalence_trajectory(&runs, &model)?,
    };
    Ok(AnalysisOutput {
        model,
        metrics,
        summary,
    })
}

/// Analyze logs and write `cluster_model.json`, `metrics.csv` and
/// `summary.json` into `out_dir`.
pub fn analyze(
    log_paths: &[PathBuf],
    out_dir: &Path,
    opts: &AnalyzeOptions,
) -> CliResult<AnalysisOutput> {
    let records = read_logs(log_paths)?;
    let out = analyze_records(&records, opts)?;
    let mut csv = Vec::new();
    write_metrics_csv(&out.metrics, &mut csv)?;
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("cluster_model.json"),
        serde_json::to_string_pretty(&out.model).expect("model serializes"),
    )?;
    fs::write(out_dir.join("metrics.csv"), csv)?;
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&out.summary).expect("summary serializes"),
    )?;
    Ok(out)
}
