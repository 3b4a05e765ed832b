//! Melodic contour clustering: centre each melody, project onto two
//! principal components, and cluster the projections with k-means.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_with, nearest};
use super::pca::fit_pca;
use super::silhouette::{k_seed, sampled_silhouette, select_k, SelectKOptions};
use crate::melody::{Melody, MELODY_LEN};
use crate::{Error, Result};

pub const EMBED_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOptions {
    /// Skip silhouette selection and use this k.
    pub force_k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub select: SelectKOptions,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            force_k: None,
            k_min: 2,
            k_max: 12,
            seed: 0,
            select: SelectKOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// Column mean of the centred melodies.
    pub mean: [f64; MELODY_LEN],
    pub components: [[f64; MELODY_LEN]; EMBED_DIM],
    pub explained_variance_ratio: [f64; EMBED_DIM],
    pub centroids: Vec<[f64; EMBED_DIM]>,
    pub k: usize,
    pub seed: u64,
    /// Silhouette of the fitted partition (subsampled for large inputs).
    pub silhouette: f64,
    /// Silhouette per candidate k when k was selected automatically.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_scores: Vec<(usize, f64)>,
}

impl ClusterModel {
    /// Two-dimensional contour coordinates of a melody.
    pub fn embed(&self, m: &Melody) -> [f64; EMBED_DIM] {
        let c = m.center().0;
        std::array::from_fn(|d| {
            (0..MELODY_LEN)
                .map(|j| (c[j] - self.mean[j]) * self.components[d][j])
                .sum()
        })
    }

    /// Nearest centroid of the embedding, lowest label on ties.
    pub fn assign(&self, m: &Melody) -> usize {
        nearest(&self.embed(m), &self.centroids)
    }

    /// Melody whose embedding is (approximately) the given point.
    pub fn preimage(&self, point: &[f64; EMBED_DIM]) -> [f64; MELODY_LEN] {
        std::array::from_fn(|j| {
            self.mean[j]
                + (0..EMBED_DIM)
                    .map(|d| point[d] * self.components[d][j])
                    .sum::<f64>()
        })
    }
}

/// Fit the contour clustering on a pooled melody set.
pub fn fit_cluster_model(melodies: &[Melody], opts: &ClusterOptions) -> Result<ClusterModel> {
    let centred: Vec<[f64; MELODY_LEN]> = melodies.iter().map(|m| m.center().0).collect();
    let pca = fit_pca(&centred)?;
    let ratios = pca.explained_variance_ratio();
    let components = [pca.components[0], pca.components[1]];
    let points: Vec<[f64; EMBED_DIM]> = centred
        .iter()
        .map(|r| {
            let p = pca.project(r, EMBED_DIM);
            [p[0], p[1]]
        })
        .collect();

    let (k, fit, score, k_scores) = match opts.force_k {
        Some(k) => {
            if k < 2 {
                return Err(Error::Parameter(format!(
                    "forced k must be at least 2, got {k}"
                )));
            }
            let fit = kmeans_with(&points, k, k_seed(opts.seed, k), &opts.select.kmeans)?;
            let score = sampled_silhouette(
                &points,
                &fit.labels,
                opts.select.max_silhouette_points,
                opts.seed,
            )?;
            (k, fit, score, Vec::new())
        }
        None => {
            let hi = opts.k_max.min(points.len().saturating_sub(1));
            let sel = select_k(&points, opts.k_min..=hi, opts.seed, &opts.select)?;
            let score = sel
                .scores
                .iter()
                .find(|(k, _)| *k == sel.best_k)
                .map(|s| s.1)
                .expect("scored");
            (sel.best_k, sel.fit, score, sel.scores)
        }
    };

    Ok(ClusterModel {
        mean: pca.mean,
        components,
        explained_variance_ratio: [ratios[0], ratios[1]],
        centroids: fit.centroids,
        k,
        seed: opts.seed,
        silhouette: score,
        k_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melody::random_melody;
    use crate::seed;

    fn pool(n: usize) -> Vec<Melody> {
        let mut rng = seed::rng(31);
        (0..n)
            .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
            .collect()
    }

    #[test]
    fn forced_k_model() {
        let mels = pool(400);
        let opts = ClusterOptions {
            force_k: Some(8),
            ..Default::default()
        };
        let model = fit_cluster_model(&mels, &opts).unwrap();
        assert_eq!(model.k, 8);
        assert_eq!(model.centroids.len(), 8);
        let r = model.explained_variance_ratio;
        assert!(r[0] >= r[1] && r[0] <= 1.0 && r[1] >= 0.0);
        let gram = |a: usize, b: usize| {
            (0..5)
                .map(|j| model.components[a][j] * model.components[b][j])
                .sum::<f64>()
        };
        assert!(
            (gram(0, 0) - 1.0).abs() < 1e-9
                && (gram(1, 1) - 1.0).abs() < 1e-9
                && gram(0, 1).abs() < 1e-9
        );
    }

    #[test]
    fn assignment_ignores_transposition() {
        let mels = pool(300);
        let model = fit_cluster_model(
            &mels,
            &ClusterOptions {
                force_k: Some(6),
                ..Default::default()
            },
        )
        .unwrap();
        for m in &mels[..100] {
            let shifted = Melody::new(m.pitches().map(|p| (p + 5.0).min(30.0))).unwrap();
            if m.pitches().iter().all(|p| p + 5.0 <= 30.0) {
                assert_eq!(model.assign(m), model.assign(&shifted));
            }
        }
    }

    #[test]
    fn centroid_preimage_maps_back_to_its_label() {
        let model = fit_cluster_model(
            &pool(300),
            &ClusterOptions {
                force_k: Some(5),
                ..Default::default()
            },
        )
        .unwrap();
        for (label, c) in model.centroids.iter().enumerate() {
            let m = Melody::new(model.preimage(c)).unwrap();
            assert_eq!(model.assign(&m), label);
        }
    }

    #[test]
    fn refit_is_deterministic() {
        let mels = pool(300);
        let opts = ClusterOptions {
            k_max: 6,
            seed: 4,
            ..Default::default()
        };
        let a = fit_cluster_model(&mels, &opts).unwrap();
        let b = fit_cluster_model(&mels, &opts).unwrap();
        assert_eq!(a, b);
        assert!((2..=6).contains(&a.k));
        assert_eq!(a.k_scores.len(), 5);
    }
}
