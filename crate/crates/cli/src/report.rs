//! SVG figures from a metrics table.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::Context;
use chorusnet::analysis::{deviation_summary, read_metrics_csv, Metric, MetricsRecord};
use chorusnet::engine::Condition;
use chorusnet::graphnet::TopologyKind;

use crate::analyze::DEFAULT_BURN_IN;
use crate::svg::{extent, Plot, PALETTE};
use crate::CliResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }
}

fn topology_color(t: TopologyKind) -> &'static str {
    match t {
        TopologyKind::Lattice => PALETTE[0],
        TopologyKind::RandomRegular => PALETTE[1],
        TopologyKind::Modular => PALETTE[2],
        TopologyKind::Disconnected => PALETTE[7],
    }
}

fn prevalence_plot(condition: Condition, rows: &[&MetricsRecord]) -> String {
    let k = rows[0].prevalence.len();
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let (acc, n) = sums.entry(r.iteration).or_insert_with(|| (vec![0.0; k], 0));
        acc.iter_mut().zip(&r.prevalence).for_each(|(a, p)| *a += p);
        *n += 1;
    }
    let means: Vec<(usize, Vec<f64>)> = sums
        .into_iter()
        .map(|(t, (acc, n))| (t, acc.into_iter().map(|a| a / n as f64).collect()))
        .collect();
    let (t0, t1) = extent(means.iter().map(|(t, _)| *t as f64));
    let (_, top) = extent(means.iter().flat_map(|(_, p)| p.iter().copied()));
    let mut plot = Plot::new(
        &format!("Cluster prevalence: {condition}"),
        "iteration",
        "mean proportion",
        (t0, t1),
        (0.0, top.max(0.1)),
    );
    for c in 0..k {
        let color = PALETTE[c % PALETTE.len()];
        plot.polyline(
            &means
                .iter()
                .map(|(t, p)| (*t as f64, p[c]))
                .collect::<Vec<_>>(),
            color,
        );
        plot.legend(&format!("cluster {c}"), color);
    }
    plot.finish()
}

fn similarity_entropy_plot(condition: Condition, rows: &[&MetricsRecord]) -> String {
    let points: Vec<&&MetricsRecord> = rows
        .iter()
        .filter(|r| r.neighbor_similarity.is_some())
        .collect();
    let (x0, x1) = extent(rows.iter().map(|r| r.entropy));
    let (y0, y1) = extent(points.iter().filter_map(|r| r.neighbor_similarity));
    let mut plot = Plot::new(
        &format!("Similarity vs entropy: {condition}"),
        "cluster entropy (nats)",
        "neighbour similarity",
        (x0, x1),
        (y0, y1),
    );
    if points.is_empty() {
        plot.note("no edges: neighbour similarity undefined");
    }
    let t_max = rows.iter().map(|r| r.iteration).max().unwrap_or(0).max(1) as f64;
    for r in &points {
        let opacity = 0.15 + 0.85 * r.iteration as f64 / t_max;
        plot.circle(
            r.entropy,
            r.neighbor_similarity.expect("filtered"),
            topology_color(r.topology),
            opacity,
        );
    }
    let topologies: BTreeSet<TopologyKind> = rows.iter().map(|r| r.topology).collect();
    for t in topologies {
        plot.legend(t.as_str(), topology_color(t));
    }
    plot.finish()
}

fn deviation_plot(
    condition: Condition,
    rows: &[MetricsRecord],
    opts: &ReportOptions,
) -> CliResult<String> {
    let summaries = deviation_summary(rows, opts.burn_in, opts.seed)?;
    let groups: Vec<_> = [Metric::NeighborSimilarity, Metric::Entropy]
        .iter()
        .filter_map(|m| summaries.iter().find(|s| s.metric == *m))
        .collect();
    let (lo, hi) = extent(
        groups
            .iter()
            .flat_map(|g| g.entries.iter().flat_map(|e| [e.ci_low, e.ci_high, 0.0])),
    );
    let span = (hi - lo).max(1e-3);
    let mut plot = Plot::categorical(
        &format!("Deviation from iteration mean: {condition}"),
        "metric",
        "relative deviation",
        (-0.5, groups.len().max(1) as f64 - 0.5),
        (lo - 0.05 * span, hi + 0.05 * span),
    );
    plot.hline(0.0);
    let mut seen = BTreeSet::new();
    for (gi, g) in groups.iter().enumerate() {
        let w = 0.8 / g.entries.len() as f64;
        for (i, e) in g.entries.iter().enumerate() {
            let x = gi as f64 - 0.4 + w * (i as f64 + 0.5);
            plot.bar(x, w * 0.9, e.mean, topology_color(e.topology));
            plot.whisker(x, e.ci_low, e.ci_high);
            seen.insert(e.topology);
        }
        let name = match g.metric {
            Metric::NeighborSimilarity => "neighbour similarity",
            Metric::Entropy => "entropy",
            Metric::Pleasantness => "pleasantness",
        };
        plot.label(gi as f64, lo - 0.05 * span, name);
    }
    for t in seen {
        plot.legend(t.as_str(), topology_color(t));
    }
    Ok(plot.finish())
}

/// Render `(file name, svg)` for every condition: prevalence trajectories,
/// similarity/entropy scatter and relative deviations with bootstrap CIs.
pub fn render_report(
    metrics: &[MetricsRecord],
    opts: &ReportOptions,
) -> CliResult<Vec<(String, String)>> {
    let conditions: BTreeSet<Condition> = metrics.iter().map(|r| r.condition).collect();
    let mut out = Vec::new();
    for c in conditions {
        let owned: Vec<MetricsRecord> = metrics
            .iter()
            .filter(|r| r.condition == c)
            .cloned()
            .collect();
        let rows: Vec<&MetricsRecord> = owned.iter().collect();
        out.push((format!("{c}_prevalence.svg"), prevalence_plot(c, &rows)));
        out.push((
            format!("{c}_similarity_entropy.svg"),
            similarity_entropy_plot(c, &rows),
        ));
        out.push((
            format!("{c}_deviation.svg"),
            deviation_plot(c, &owned, opts)?,
        ));
    }
    Ok(out)
}

/// Read a metrics CSV and write the SVGs into `out_dir`. Nothing is written
/// unless every figure renders.
pub fn report(metrics_csv: &Path, out_dir: &Path, opts: &ReportOptions) -> CliResult<Vec<String>> {
    let file = fs::File::open(metrics_csv)
        .with_context(|| format!("opening {}", metrics_csv.display()))?;
    let metrics =
        read_metrics_csv(file).with_context(|| format!("reading {}", metrics_csv.display()))?;
    let files = render_report(&metrics, opts)?;
    fs::create_dir_all(out_dir)?;
    for (name, svg) in &files {
        fs::write(out_dir.join(name), svg)?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}
