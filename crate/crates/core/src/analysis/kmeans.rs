//! k-means with k-means++ seeding and Lloyd refinement.

use rand::Rng;

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    /// Independent k-means++ restarts; the lowest-inertia run wins.
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            n_init: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<const D: usize> {
    pub centroids: Vec<[f64; D]>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the final partition.
    pub inertia: f64,
    /// Objective after each Lloyd iteration.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    (0..D).map(|j| (a[j] - b[j]) * (a[j] - b[j])).sum()
}

/// Index of the nearest centroid, lowest index on ties.
pub fn nearest<const D: usize>(point: &[f64; D], centroids: &[[f64; D]]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(point, &centroids[0]);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(point, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, later centres with probability
/// proportional to squared distance from the nearest chosen centre.
pub fn kmeans_plus_plus<const D: usize, R: Rng + ?Sized>(
    points: &[[f64; D]],
    k: usize,
    rng: &mut R,
) -> Vec<[f64; D]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = Some(i);
                    break;
                }
                u -= w;
            }
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign<const D: usize>(points: &[[f64; D]], centroids: &[[f64; D]]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

/// Give every empty cluster the point farthest from its own centroid, taken
/// from a cluster that can spare it.
fn repair_empty<const D: usize>(
    points: &[[f64; D]],
    labels: &mut [usize],
    centroids: &mut [[f64; D]],
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = dist2(p, &centroids[labels[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("n >= k guarantees a cluster with two members");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] = 1;
        centroids[empty] = points[i];
    }
}

fn update<const D: usize>(points: &[[f64; D]], labels: &[usize], centroids: &mut [[f64; D]]) {
    let k = centroids.len();
    let mut sums = vec![[0.0; D]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for j in 0..D {
            sums[l][j] += p[j];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            centroids[c] = sums[c].map(|s| s / counts[c] as f64);
        }
    }
}

fn objective<const D: usize>(points: &[[f64; D]], labels: &[usize], centroids: &[[f64; D]]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| dist2(p, &centroids[l]))
        .sum()
}

/// Lloyd iterations from the given centroids until the labels stop changing
/// or `max_iter` iterations have run.
pub fn lloyd<const D: usize>(
    points: &[[f64; D]],
    initial: Vec<[f64; D]>,
    max_iter: usize,
) -> KMeansFit<D> {
    let mut centroids = initial;
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        let mut next = assign(points, &centroids);
        repair_empty(points, &mut next, &mut centroids);
        if next == labels {
            break;
        }
        labels = next;
        update(points, &labels, &mut centroids);
        history.push(objective(points, &labels, &centroids));
        iterations += 1;
    }
    let inertia = *history.last().expect("at least one iteration");
    KMeansFit {
        centroids,
        labels,
        inertia,
        objective_history: history,
        iterations,
    }
}

pub fn kmeans<const D: usize>(points: &[[f64; D]], k: usize, seed: u64) -> Result<KMeansFit<D>> {
    kmeans_with(points, k, seed, &KMeansOptions::default())
}

pub fn kmeans_with<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<KMeansFit<D>> {
    if k == 0 || points.len() < k {
        return Err(Error::Parameter(format!(
            "k-means needs 1 <= k <= rows, got k = {k} with {} rows",
            points.len()
        )));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite value in k-means input".into()));
    }
    let mut rng = seed::rng(seed);
    let mut best: Option<KMeansFit<D>> = None;
    for _ in 0..opts.n_init.max(1) {
        let init = kmeans_plus_plus(points, k, &mut rng);
        let fit = lloyd(points, init, opts.max_iter);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
        let mut rng = crate::seed::rng(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push([
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        (pts, truth)
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let (pts, _) = blobs(&[[1.0, 2.0]], 50, 1.0, 3);
        let fit = kmeans(&pts, 1, 0).unwrap();
        let mean = [
            pts.iter().map(|p| p[0]).sum::<f64>() / 50.0,
            pts.iter().map(|p| p[1]).sum::<f64>() / 50.0,
        ];
        assert!(dist2(&fit.centroids[0], &mean) < 1e-20);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            kmeans(&[[0.0, 0.0]; 3], 4, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            kmeans(&[[0.0, 0.0]; 3], 0, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn objective_never_increases() {
        let (pts, _) = blobs(
            &[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [2.0, 2.0]],
            60,
            1.2,
            8,
        );
        let mut rng = crate::seed::rng(1);
        for _ in 0..20 {
            let fit = lloyd(&pts, kmeans_plus_plus(&pts, 5, &mut rng), 300);
            for w in fit.objective_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", fit.objective_history);
            }
        }
    }

    #[test]
    fn duplicated_data_gives_same_centroids() {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let (pts, _) = blobs(&centers, 40, 0.5, 2);
        let doubled: Vec<_> = pts.iter().chain(pts.iter()).copied().collect();
        let sorted = |mut c: Vec<[f64; 2]>| {
            c.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            c
        };
        let a = sorted(kmeans(&pts, 3, 5).unwrap().centroids);
        let b = sorted(kmeans(&doubled, 3, 5).unwrap().centroids);
        for (x, y) in a.iter().zip(&b) {
            assert!(dist2(x, y) < 1e-18);
        }
    }

    #[test]
    fn empty_clusters_are_repaired() {
        // three far-apart points, two initial centroids placed on the same spot
        let pts = [[0.0, 0.0], [1.0, 0.0], [50.0, 0.0]];
        let fit = lloyd(&pts, vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], 300);
        let mut seen = fit.labels.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let (pts, _) = blobs(&[[0.0, 0.0], [2.0, 1.0], [1.0, 4.0]], 30, 1.0, 6);
        assert_eq!(kmeans(&pts, 3, 11).unwrap(), kmeans(&pts, 3, 11).unwrap());
    }
}
