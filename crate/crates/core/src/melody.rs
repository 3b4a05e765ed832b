//! Five-note melodies, intervals, and the matched Gaussian deviation model.
//!
//! Pitches are continuous semitone values relative to a reference (MIDI-like
//! scale with the reference at 0). No quantization is applied anywhere in
//! this module.

use std::ops::{Add, Sub};

use nalgebra::{Cholesky, Matrix4, SymmetricEigen, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MELODY_LEN: usize = 5;
pub const NUM_INTERVALS: usize = MELODY_LEN - 1;

/// Every produced pitch is clamped into `[-PITCH_CLAMP, PITCH_CLAMP]`.
pub const PITCH_CLAMP: f64 = 30.0;

/// Range used to draw the initial melodies.
pub const INIT_PITCH_LO: f64 = -15.0;
pub const INIT_PITCH_HI: f64 = 15.0;

/// Minimum number of (target, produced) pairs needed to estimate a deviation model.
pub const MIN_DEVIATION_PAIRS: usize = 5;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

/// Five finite pitches within the singable clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; MELODY_LEN]", into = "[f64; MELODY_LEN]")]
pub struct Melody([f64; MELODY_LEN]);

impl Melody {
    pub fn new(pitches: [f64; MELODY_LEN]) -> Result<Self> {
        if let Some(p) = pitches
            .iter()
            .find(|p| !p.is_finite() || p.abs() > PITCH_CLAMP)
        {
            return Err(Error::Data(format!(
                "pitch {p} is not finite or outside ±{PITCH_CLAMP}"
            )));
        }
        Ok(Melody(pitches))
    }

    /// Clamp each pitch into the singable range. Non-finite input is an error.
    pub fn clamped(pitches: [f64; MELODY_LEN]) -> Result<Self> {
        if pitches.iter().any(|p| !p.is_finite()) {
            return Err(Error::Data("non-finite pitch".into()));
        }
        Ok(Melody(pitches.map(|p| p.clamp(-PITCH_CLAMP, PITCH_CLAMP))))
    }

    pub fn pitches(&self) -> &[f64; MELODY_LEN] {
        &self.0
    }

    pub fn first_pitch(&self) -> f64 {
        self.0[0]
    }

    pub fn mean_pitch(&self) -> f64 {
        self.0.iter().sum::<f64>() / MELODY_LEN as f64
    }

    pub fn intervals(&self) -> IntervalVector {
        intervals_of(&self.0)
    }

    /// Mean-centred pitch pattern (the melodic contour).
    pub fn center(&self) -> Contour {
        let mean = self.mean_pitch();
        Contour(self.0.map(|p| p - mean))
    }

    /// Shift every pitch by the running sum of `deltas`, then by `first_shift`.
    ///
    /// Equivalent to rebuilding from `(first + first_shift, intervals + deltas)`
    /// but exact when all shifts are zero.
    pub(crate) fn perturbed(&self, first_shift: f64, deltas: &IntervalVector) -> Result<Melody> {
        let mut out = self.0;
        let mut acc = first_shift;
        out[0] += acc;
        for k in 0..NUM_INTERVALS {
            acc += deltas.0[k];
            out[k + 1] += acc;
        }
        Melody::clamped(out)
    }
}

impl TryFrom<[f64; MELODY_LEN]> for Melody {
    type Error = Error;

    fn try_from(p: [f64; MELODY_LEN]) -> Result<Self> {
        Melody::new(p)
    }
}

impl From<Melody> for [f64; MELODY_LEN] {
    fn from(m: Melody) -> Self {
        m.0
    }
}

fn intervals_of(p: &[f64; MELODY_LEN]) -> IntervalVector {
    IntervalVector(std::array::from_fn(|k| p[k + 1] - p[k]))
}

/// A mean-zero pitch pattern; not subject to the singable clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour(pub [f64; MELODY_LEN]);

impl Contour {
    pub fn intervals(&self) -> IntervalVector {
        intervals_of(&self.0)
    }
}

/// Consecutive pitch differences `p[k+1] - p[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector(pub [f64; NUM_INTERVALS]);

impl IntervalVector {
    pub const ZERO: IntervalVector = IntervalVector([0.0; NUM_INTERVALS]);

    /// Pitches from a first pitch and intervals, without clamping.
    pub fn rebuild(&self, first: f64) -> [f64; MELODY_LEN] {
        let mut out = [first; MELODY_LEN];
        for k in 0..NUM_INTERVALS {
            out[k + 1] = out[k] + self.0[k];
        }
        out
    }
}

impl Add for IntervalVector {
    type Output = IntervalVector;
    fn add(self, rhs: Self) -> Self {
        IntervalVector(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl Sub for IntervalVector {
    type Output = IntervalVector;
    fn sub(self, rhs: Self) -> Self {
        IntervalVector(std::array::from_fn(|k| self.0[k] - rhs.0[k]))
    }
}

/// Clamped melody from a first pitch and intervals.
pub fn rebuild(first: f64, intervals: &IntervalVector) -> Result<Melody> {
    Melody::clamped(intervals.rebuild(first))
}

/// Five pitches drawn i.i.d. uniformly on `[lo, hi]`.
pub fn random_melody<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Result<Melody> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Parameter(format!(
            "pitch range [{lo}, {hi}] is empty"
        )));
    }
    let dist = Uniform::new_inclusive(lo, hi).map_err(|e| Error::Parameter(e.to_string()))?;
    Melody::clamped(std::array::from_fn(|_| dist.sample(rng)))
}

/// Covariance of interval deviations (produced minus target), in semitones².
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DeviationModelFile", into = "DeviationModelFile")]
pub struct DeviationModel {
    sigma: [[f64; NUM_INTERVALS]; NUM_INTERVALS],
    mean: [f64; NUM_INTERVALS],
    sample_count: usize,
    /// Square-root factor with `factor * factor^T = sigma` (after PSD repair).
    factor: Matrix4<f64>,
}

impl PartialEq for DeviationModel {
    fn eq(&self, other: &Self) -> bool {
        self.sigma == other.sigma
            && self.mean == other.mean
            && self.sample_count == other.sample_count
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DeviationModelFile {
    sigma: [[f64; NUM_INTERVALS]; NUM_INTERVALS],
    mean: [f64; NUM_INTERVALS],
    sample_count: usize,
}

impl TryFrom<DeviationModelFile> for DeviationModel {
    type Error = Error;
    fn try_from(f: DeviationModelFile) -> Result<Self> {
        DeviationModel::new(f.sigma, f.mean, f.sample_count)
    }
}

impl From<DeviationModel> for DeviationModelFile {
    fn from(m: DeviationModel) -> Self {
        DeviationModelFile {
            sigma: m.sigma,
            mean: m.mean,
            sample_count: m.sample_count,
        }
    }
}

impl DeviationModel {
    /// Validate symmetry and positive semidefiniteness and precompute the
    /// sampling factor. Eigenvalues in `[-1e-9, 0)` are floored to zero.
    pub fn new(
        sigma: [[f64; NUM_INTERVALS]; NUM_INTERVALS],
        mean: [f64; NUM_INTERVALS],
        sample_count: usize,
    ) -> Result<Self> {
        if sigma
            .iter()
            .flatten()
            .chain(mean.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Model("non-finite entry".into()));
        }
        for a in 0..NUM_INTERVALS {
            for b in 0..a {
                if (sigma[a][b] - sigma[b][a]).abs() >= SYMMETRY_TOL {
                    return Err(Error::Model(format!(
                        "sigma is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        let m = Matrix4::from_fn(|r, c| sigma[r][c]);
        let factor = match Cholesky::new(m) {
            Some(ch) => ch.l(),
            None => {
                let eig = SymmetricEigen::new(m);
                if let Some(&min) = eig.eigenvalues.iter().find(|&&l| l < -PSD_TOL) {
                    return Err(Error::Model(format!("sigma has negative eigenvalue {min}")));
                }
                let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                eig.eigenvectors * Matrix4::from_diagonal(&root)
            }
        };
        Ok(DeviationModel {
            sigma,
            mean,
            sample_count,
            factor,
        })
    }

    pub fn sigma(&self) -> &[[f64; NUM_INTERVALS]; NUM_INTERVALS] {
        &self.sigma
    }

    /// Sample mean deviation; metadata only, never applied as a bias.
    pub fn mean(&self) -> &[f64; NUM_INTERVALS] {
        &self.mean
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// One zero-mean draw from `N(0, sigma)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> IntervalVector {
        let z = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let d = self.factor * z;
        IntervalVector([d[0], d[1], d[2], d[3]])
    }
}

/// Sample covariance (denominator `n - 1`) of produced-minus-target intervals.
pub fn estimate_deviation_covariance(pairs: &[(Melody, Melody)]) -> Result<DeviationModel> {
    if pairs.len() < MIN_DEVIATION_PAIRS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_DEVIATION_PAIRS} (target, produced) pairs, got {}",
            pairs.len()
        )));
    }
    let deltas: Vec<[f64; NUM_INTERVALS]> = pairs
        .iter()
        .map(|(target, produced)| (produced.intervals() - target.intervals()).0)
        .collect();
    if deltas.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite interval deviation".into()));
    }
    let n = deltas.len() as f64;
    let mut mean = [0.0; NUM_INTERVALS];
    for d in &deltas {
        for k in 0..NUM_INTERVALS {
            mean[k] += d[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut sigma = [[0.0; NUM_INTERVALS]; NUM_INTERVALS];
    for d in &deltas {
        for a in 0..NUM_INTERVALS {
            for b in a..NUM_INTERVALS {
                sigma[a][b] += (d[a] - mean[a]) * (d[b] - mean[b]);
            }
        }
    }
    for a in 0..NUM_INTERVALS {
        for b in a..NUM_INTERVALS {
            sigma[a][b] /= n - 1.0;
            sigma[b][a] = sigma[a][b];
        }
    }
    DeviationModel::new(sigma, mean, deltas.len())
}

/// Keep the first pitch, add `N(0, sigma)` noise to the intervals, rebuild
/// and clamp.
pub fn apply_matched_noise<R: Rng + ?Sized>(
    m: &Melody,
    model: &DeviationModel,
    rng: &mut R,
) -> Result<Melody> {
    let noise = model.sample(rng);
    m.perturbed(0.0, &noise)
}
