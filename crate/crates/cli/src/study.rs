//! Running a study: every (condition, topology, batch) cell, then the trial
//! logs, topology files and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chorusnet::engine::{self, Condition, TrialRecord};
use chorusnet::graphnet::{TopologyFile, TopologyKind, TopologySpec};
use chorusnet::melody::{estimate_deviation_covariance, DeviationModel, Melody};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;
use crate::hash::blob_hash;
use crate::CliResult;

pub const THREADS_ENV: &str = "CHORUSNET_THREADS";

/// Trial log of one (condition, topology, batch) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub condition: Condition,
    pub topology: TopologyKind,
    pub batch: usize,
    pub batch_seed: u64,
    pub records: Vec<TrialRecord>,
}

impl RunLog {
    pub fn file_name(&self) -> String {
        format!(
            "{}__{}__b{}.jsonl",
            self.condition, self.topology, self.batch
        )
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Everything a study produces, held in memory.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub config: StudyConfig,
    /// Sorted by condition, topology, batch.
    pub runs: Vec<RunLog>,
    pub deviation_model: Option<DeviationModel>,
    /// Generated network for every (topology, batch).
    pub topologies: Vec<(TopologySpec, usize, TopologyFile)>,
}

impl StudyOutput {
    pub fn records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub condition: Condition,
    pub topology: TopologyKind,
    pub batch: usize,
    pub batch_seed: u64,
    pub records: usize,
    pub log: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTopology {
    pub kind: TopologyKind,
    pub batch: usize,
    pub seed: u64,
    pub file: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub study_id: String,
    pub config: StudyConfig,
    pub runs: Vec<ManifestRun>,
    pub topologies: Vec<ManifestTopology>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_model: Option<FileEntry>,
}

/// Rayon pool honouring `CHORUSNET_THREADS` (all cores when unset).
pub fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

fn cells(config: &StudyConfig, conditions: &[Condition]) -> Vec<(Condition, TopologySpec, usize)> {
    let mut out = Vec::new();
    for &c in conditions.iter().filter(|c| config.conditions.contains(c)) {
        // the linear condition ignores the network, so it runs once per batch
        let topologies: &[TopologySpec] = if c == Condition::Linear {
            &config.topologies[..1]
        } else {
            &config.topologies
        };
        for &t in topologies {
            for b in 0..config.batches {
                out.push((c, t, b));
            }
        }
    }
    out
}

fn run_cells(
    config: &StudyConfig,
    cells: &[(Condition, TopologySpec, usize)],
    model: Option<&DeviationModel>,
) -> CliResult<Vec<RunLog>> {
    let logs = cells
        .par_iter()
        .map(|&(condition, topology, batch)| {
            let mut exp = config.experiment(condition, topology);
            exp.deviation_model = model.cloned();
            let records = engine::run(&exp, batch)?;
            Ok(RunLog {
                condition,
                topology: exp.effective_topology().kind(),
                batch,
                batch_seed: exp.batch_seed(batch),
                records,
            })
        })
        .collect::<Result<Vec<_>, chorusnet::Error>>()?;
    Ok(logs)
}

/// Simulate the whole study in memory. No_reproduction runs use the
/// configured deviation model, or one estimated from every full-condition
/// (selected, produced) pair.
pub fn run_study(config: &StudyConfig) -> CliResult<StudyOutput> {
    config.validate()?;
    let pool = thread_pool()?;
    pool.install(|| {
        let first = cells(
            config,
            &[Condition::Full, Condition::NoSelection, Condition::Linear],
        );
        let mut runs = run_cells(config, &first, None)?;

        let mut deviation_model = None;
        if config.conditions.contains(&Condition::NoReproduction) {
            let model = match &config.deviation_model {
                Some(m) => m.clone(),
                None => {
                    let pairs: Vec<(Melody, Melody)> = runs
                        .iter()
                        .filter(|r| r.condition == Condition::Full)
                        .flat_map(|r| r.records.iter().map(|t| (*t.selected_melody(), t.produced)))
                        .collect();
                    estimate_deviation_covariance(&pairs)?
                }
            };
            runs.extend(run_cells(
                config,
                &cells(config, &[Condition::NoReproduction]),
                Some(&model),
            )?);
            deviation_model = Some(model);
        }
        runs.sort_by_key(|r| (r.condition, r.topology, r.batch));

        let mut topologies = Vec::new();
        for &spec in &config.topologies {
            for b in 0..config.batches {
                let exp = config.experiment(Condition::Full, spec);
                let bs = exp.batch_seed(b);
                let graph = exp.build_graph(bs)?;
                let seed = spec.effective_seed(engine::topology_seed(bs));
                topologies.push((spec, b, TopologyFile::new(&graph, spec.kind(), seed)));
            }
        }
        Ok(StudyOutput {
            config: config.clone(),
            runs,
            deviation_model,
            topologies,
        })
    })
}

fn write_file(out_dir: &Path, rel: &str, content: &[u8]) -> CliResult<FileEntry> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(FileEntry {
        path: rel.to_string(),
        hash: blob_hash(content),
    })
}

/// Run the study and write it to `out_dir`: `logs/*.jsonl`,
/// `topologies/*.json`, `deviation_model.json` and, last, `manifest.json`.
pub fn write_study(config: &StudyConfig, out_dir: &Path) -> CliResult<Manifest> {
    let output = run_study(config)?;
    let mut manifest = Manifest {
        study_id: config.study_id.clone(),
        config: config.clone(),
        runs: Vec::new(),
        topologies: Vec::new(),
        deviation_model: None,
    };
    for run in &output.runs {
        let log = write_file(
            out_dir,
            &format!("logs/{}", run.file_name()),
            run.to_jsonl().as_bytes(),
        )?;
        manifest.runs.push(ManifestRun {
            condition: run.condition,
            topology: run.topology,
            batch: run.batch,
            batch_seed: run.batch_seed,
            records: run.records.len(),
            log,
        });
    }
    for (spec, batch, file) in &output.topologies {
        let json = serde_json::to_string_pretty(file).expect("topology serializes");
        let entry = write_file(
            out_dir,
            &format!("topologies/{}__b{batch}.json", spec.kind()),
            json.as_bytes(),
        )?;
        manifest.topologies.push(ManifestTopology {
            kind: spec.kind(),
            batch: *batch,
            seed: file.seed,
            file: entry,
        });
    }
    if let Some(model) = &output.deviation_model {
        let json = serde_json::to_string_pretty(model).expect("model serializes");
        manifest.deviation_model = Some(write_file(
            out_dir,
            "deviation_model.json",
            json.as_bytes(),
        )?);
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(out_dir, "manifest.json", json.as_bytes())?;
    Ok(manifest)
}

/// Default output directory of a config: its `output_dir`, else `out/<study_id>`.
pub fn default_out_dir(config: &StudyConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&config.study_id))
}
