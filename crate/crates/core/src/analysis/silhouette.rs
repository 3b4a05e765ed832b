use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::kmeans::{kmeans_with, KMeansFit, KMeansOptions};
use crate::seed;
use crate::{Error, Result};

fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    super::kmeans::dist2(a, b).sqrt()
}

/// Mean silhouette coefficient with Euclidean distance.
///
/// Points in singleton clusters contribute 0. Needs at least two nonempty
/// clusters.
pub fn silhouette<const D: usize>(points: &[[f64; D]], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::UndefinedMetric(
            "silhouette needs at least two nonempty clusters".into(),
        ));
    }

    let per_point: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += dist(&points[i], p);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / points.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectKOptions {
    pub kmeans: KMeansOptions,
    /// Silhouette is evaluated on a seeded subsample of at most this many
    /// points; the clustering itself always uses every point.
    pub max_silhouette_points: usize,
}

impl Default for SelectKOptions {
    fn default() -> Self {
        SelectKOptions {
            kmeans: KMeansOptions::default(),
            max_silhouette_points: 5_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectK<const D: usize> {
    pub best_k: usize,
    /// `(k, silhouette)` for every candidate k, ascending k.
    pub scores: Vec<(usize, f64)>,
    pub fit: KMeansFit<D>,
}

/// Silhouette on a seeded subsample of at most `max_points` points (exact
/// when the input is small enough).
pub fn sampled_silhouette<const D: usize>(
    points: &[[f64; D]],
    labels: &[usize],
    max_points: usize,
    seed: u64,
) -> Result<f64> {
    if points.len() <= max_points {
        return silhouette(points, labels);
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(&mut seed::rng(seed::derive(seed, "silhouette-sample")));
    idx.truncate(max_points);
    idx.sort_unstable();
    let pts: Vec<[f64; D]> = idx.iter().map(|&i| points[i]).collect();
    let lab: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    silhouette(&pts, &lab)
}

/// Seed used for the k-means fit at a given k.
pub fn k_seed(seed: u64, k: usize) -> u64 {
    seed::derive_indexed(seed, "kmeans", k as u64)
}

/// Fit k-means for every k in `k_range` and keep the silhouette maximiser
/// (smaller k on ties).
pub fn select_k<const D: usize>(
    points: &[[f64; D]],
    k_range: RangeInclusive<usize>,
    seed: u64,
    opts: &SelectKOptions,
) -> Result<SelectK<D>> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo || hi + 1 > points.len() {
        return Err(Error::Parameter(format!(
            "k range {lo}..={hi} must lie within [2, {}]",
            points.len().saturating_sub(1)
        )));
    }

    let fits: Vec<(usize, KMeansFit<D>, f64)> = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let fit = kmeans_with(points, k, k_seed(seed, k), &opts.kmeans)?;
            let score = sampled_silhouette(points, &fit.labels, opts.max_silhouette_points, seed)?;
            Ok((k, fit, score))
        })
        .collect::<Result<_>>()?;

    let scores = fits.iter().map(|(k, _, s)| (*k, *s)).collect();
    let mut best = 0;
    for i in 1..fits.len() {
        if fits[i].2 > fits[best].2 {
            best = i;
        }
    }
    let (best_k, fit, _) = fits.into_iter().nth(best).expect("nonempty range");
    Ok(SelectK {
        best_k,
        scores,
        fit,
    })
}
