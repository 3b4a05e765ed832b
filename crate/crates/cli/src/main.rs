use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use chorusnet::analysis::ClusterModel;
use chorusnet::graphnet::TopologyKind;
use chorusnet_cli::analyze::{analyze, AnalyzeOptions, DEFAULT_BURN_IN};
use chorusnet_cli::config::StudyConfig;
use chorusnet_cli::report::{report, ReportOptions};
use chorusnet_cli::study::{default_out_dir, write_study};
use chorusnet_cli::topology::{cmd_topology, TopologyArgs};
use chorusnet_cli::{CliError, CliResult};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chorusnet",
    version,
    about = "Simulate and analyse melody transmission on networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and print its path-length and betweenness metrics.
    Topology {
        #[arg(long)]
        kind: TopologyKind,
        #[arg(long, default_value_t = 7)]
        rows: usize,
        #[arg(long, default_value_t = 7)]
        cols: usize,
        #[arg(long, default_value_t = 49)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 7)]
        cliques: usize,
        #[arg(long, default_value_t = 7)]
        size: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the topology JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a study from a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster melodies and compute population metrics from trial logs.
    Analyze {
        /// Log files or directories of `*.jsonl` logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force_k: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reuse a fitted cluster model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Take the scorer from this study config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render SVG figures from a metrics CSV.
    Report {
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Topology {
            kind,
            rows,
            cols,
            n,
            degree,
            cliques,
            size,
            seed,
            out,
        } => {
            let report = cmd_topology(&TopologyArgs {
                kind,
                rows,
                cols,
                n,
                degree,
                cliques,
                size,
                seed,
                out,
            })?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Run { config, out } => {
            let cfg = StudyConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| default_out_dir(&cfg));
            let manifest = write_study(&cfg, &dir)?;
            let records: usize = manifest.runs.iter().map(|r| r.records).sum();
            println!(
                "{} runs, {records} trials written to {}",
                manifest.runs.len(),
                dir.display()
            );
        }
        Command::Analyze {
            logs,
            out,
            force_k,
            burn_in,
            seed,
            model,
            config,
        } => {
            if force_k.is_some_and(|k| k < 2) {
                return Err(CliError::Usage("--force-k must be at least 2".into()));
            }
            let mut opts = AnalyzeOptions {
                force_k,
                burn_in,
                seed,
                ..Default::default()
            };
            if let Some(p) = config {
                opts.scorer = StudyConfig::load(&p)?.agent.scorer;
            }
            if let Some(p) = model {
                let text = fs::read_to_string(&p)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                let m: ClusterModel = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                opts.model = Some(m);
            }
            let result = analyze(&logs, &out, &opts)?;
            println!(
                "k = {} (silhouette {:.3}); {} metric rows written to {}",
                result.model.k,
                result.model.silhouette,
                result.metrics.len(),
                out.display()
            );
        }
        Command::Report {
            metrics,
            out,
            burn_in,
            seed,
        } => {
            let files = report(&metrics, &out, &ReportOptions { burn_in, seed })?;
            println!("{} figures written to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(err) => eprintln!("error: {err:#}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
