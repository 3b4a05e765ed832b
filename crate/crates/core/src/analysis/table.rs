//! Metrics table CSV format.

use std::io::{Read, Write};

use super::trajectory::MetricsRecord;
use crate::{Error, Result};

const FIXED: [&str; 7] = [
    "batch",
    "condition",
    "topology",
    "iteration",
    "entropy",
    "neighbor_similarity",
    "pleasantness",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("metrics csv: {e}"))
}

/// Write the table. Every record must carry the same number of clusters.
pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let k = records.first().map_or(0, |r| r.prevalence.len());
    if records.iter().any(|r| r.prevalence.len() != k) {
        return Err(Error::Data(
            "metrics records disagree on the number of clusters".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = FIXED
        .iter()
        .map(|s| s.to_string())
        .chain((0..k).map(|i| format!("prevalence_{i}")))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.batch.to_string(),
            r.condition.to_string(),
            r.topology.to_string(),
            r.iteration.to_string(),
            r.entropy.to_string(),
            r.neighbor_similarity
                .map_or_else(String::new, |s| s.to_string()),
            r.pleasantness.to_string(),
        ];
        row.extend(r.prevalence.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Data(format!("metrics csv: {e}")))
}

/// Parse a table written by [`write_metrics_csv`]. Errors name the
/// offending line.
pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    let k = header.len().saturating_sub(FIXED.len());
    let expected = FIXED
        .iter()
        .map(|s| s.to_string())
        .chain((0..k).map(|i| format!("prevalence_{i}")));
    if header.len() < FIXED.len() + 1 || !header.iter().map(str::to_string).eq(expected) {
        return Err(Error::Data("metrics csv: unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Data(format!("metrics csv line {line}: {e}")))?;
        let bad = |field: &str| Error::Data(format!("metrics csv line {line}: bad {field}"));
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(FIXED.get(j).unwrap_or(&"prevalence")))
        };
        out.push(MetricsRecord {
            batch: row[0].parse().map_err(|_| bad("batch"))?,
            condition: row[1].parse().map_err(|_| bad("condition"))?,
            topology: row[2].parse().map_err(|_| bad("topology"))?,
            iteration: row[3].parse().map_err(|_| bad("iteration"))?,
            entropy: num(4)?,
            neighbor_similarity: if row[5].is_empty() {
                None
            } else {
                Some(num(5)?)
            },
            pleasantness: num(6)?,
            prevalence: (FIXED.len()..row.len()).map(num).collect::<Result<_>>()?,
        });
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("metrics csv has no rows".into()));
    }
    Ok(out)
}
