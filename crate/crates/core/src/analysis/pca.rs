use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Principal axes of a point cloud, all `D` of them in descending variance
/// order. Each axis is signed so that its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca<const D: usize> {
    pub mean: [f64; D],
    pub components: Vec<[f64; D]>,
    /// Sample-covariance eigenvalues matching `components`.
    pub eigenvalues: Vec<f64>,
}

impl<const D: usize> Pca<D> {
    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total = self.total_variance();
        self.eigenvalues.iter().map(|l| l / total).collect()
    }

    /// Coordinates of `row` on the first `k` components.
    pub fn project(&self, row: &[f64; D], k: usize) -> Vec<f64> {
        self.components[..k]
            .iter()
            .map(|c| (0..D).map(|j| (row[j] - self.mean[j]) * c[j]).sum())
            .collect()
    }

    /// Inverse of [`Pca::project`] for the first `coords.len()` components.
    pub fn reconstruct(&self, coords: &[f64]) -> [f64; D] {
        let mut out = self.mean;
        for (c, &y) in self.components.iter().zip(coords) {
            for j in 0..D {
                out[j] += y * c[j];
            }
        }
        out
    }
}

/// Eigendecomposition of the sample covariance (denominator `n - 1`) after
/// removing the column mean.
pub fn fit_pca<const D: usize>(rows: &[[f64; D]]) -> Result<Pca<D>> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite value in PCA input".into()));
    }
    let n = rows.len() as f64;
    let mut mean = [0.0; D];
    for r in rows {
        for j in 0..D {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = DMatrix::<f64>::zeros(D, D);
    for r in rows {
        for a in 0..D {
            let da = r[a] - mean[a];
            for b in a..D {
                cov[(a, b)] += da * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..D {
        for b in a..D {
            cov[(a, b)] /= n - 1.0;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    let trace = cov.trace();
    if trace.is_nan() || trace <= 1e-24 {
        return Err(Error::DegenerateData("all rows are identical".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..D).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });

    let mut components = Vec::with_capacity(D);
    let mut eigenvalues = Vec::with_capacity(D);
    for &i in &order {
        let col = eig.eigenvectors.column(i);
        let mut v: [f64; D] = std::array::from_fn(|j| col[j]);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut pivot = 0;
        for j in 1..D {
            if v[j].abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(Pca {
        mean,
        components,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_rows(n: usize, seed: u64) -> Vec<[f64; 5]> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|_| std::array::from_fn(|j| rng.random_range(-1.0..1.0) * (j + 1) as f64))
            .collect()
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let pca = fit_pca(&random_rows(200, 1)).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = (0..5)
                    .map(|j| pca.components[a][j] * pca.components[b][j])
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let r = pca.explained_variance_ratio();
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for c in &pca.components {
            let max = c
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(max > 0.0);
        }
    }

    #[test]
    fn rank_two_data_is_fully_explained() {
        let u = [1.0, -1.0, 0.5, 0.0, 2.0];
        let v = [0.0, 1.0, 1.0, -1.0, 0.0];
        let mut rng = crate::seed::rng(4);
        let rows: Vec<[f64; 5]> = (0..100)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                std::array::from_fn(|j| a * u[j] + b * v[j] + 7.0)
            })
            .collect();
        let pca = fit_pca(&rows).unwrap();
        let r = pca.explained_variance_ratio();
        assert!((r[0] + r[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_reconstruction_and_truncation_error() {
        let rows = random_rows(150, 9);
        let pca = fit_pca(&rows).unwrap();
        let mut err2 = 0.0;
        for r in &rows {
            let full = pca.reconstruct(&pca.project(r, 5));
            for j in 0..5 {
                assert!((full[j] - r[j]).abs() < 1e-9);
            }
            let top = pca.reconstruct(&pca.project(r, 2));
            err2 += (0..5).map(|j| (top[j] - r[j]).powi(2)).sum::<f64>();
        }
        let discarded: f64 = pca.eigenvalues[2..].iter().sum();
        assert!((err2 / (rows.len() as f64 - 1.0) - discarded).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_pca(&[[1.0; 5]; 10]),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            fit_pca(&[[1.0; 5]; 2]),
            Err(Error::InsufficientData(_))
        ));
    }
}
