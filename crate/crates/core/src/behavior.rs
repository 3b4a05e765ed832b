//! Agent models standing in for human participants.
//!
//! An agent scores candidate melodies with a [`Scorer`] (a proxy for
//! pleasantness ratings), picks one with a [`SelectionPolicy`], and copies it
//! with a [`ReproductionModel`].

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::melody::{apply_matched_noise, DeviationModel, IntervalVector, Melody, NUM_INTERVALS};
use crate::{Error, Result};

/// Intervals larger than this (in semitones) are compressed by the biased singer.
pub const COMPRESSION_KNEE: f64 = 7.0;

fn default_w1() -> f64 {
    0.25
}
fn default_w2() -> f64 {
    1.0
}
fn default_temperature() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scorer {
    /// Penalises large intervals (`w1`) and off-integer intervals (`w2`).
    Smoothness {
        #[serde(default = "default_w1")]
        w1: f64,
        #[serde(default = "default_w2")]
        w2: f64,
    },
    /// Lookup of externally supplied ratings keyed by integer-rounded intervals.
    Table(TableScorer),
    Uniform,
}

impl Default for Scorer {
    fn default() -> Self {
        Scorer::Smoothness {
            w1: default_w1(),
            w2: default_w2(),
        }
    }
}

impl Scorer {
    pub fn score(&self, m: &Melody) -> Result<f64> {
        match self {
            Scorer::Smoothness { w1, w2 } => {
                let iv = m.intervals().0;
                let size: f64 = iv.iter().map(|i| i.abs()).sum();
                let off_grid: f64 = iv.iter().map(|i| (i - i.round()).abs()).sum();
                let k = NUM_INTERVALS as f64;
                Ok(-(w1 / k) * size - (w2 / k) * off_grid)
            }
            Scorer::Table(table) => table.lookup(&m.intervals()),
            Scorer::Uniform => Ok(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scorer::Smoothness { w1, w2 } if !w1.is_finite() || !w2.is_finite() => {
                Err(Error::Parameter("smoothness weights must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub intervals: [i64; NUM_INTERVALS],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableScorerRaw", into = "TableScorerRaw")]
pub struct TableScorer {
    entries: Vec<TableEntry>,
    default: Option<f64>,
    index: HashMap<[i64; NUM_INTERVALS], f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableScorerRaw {
    entries: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<f64>,
}

impl TryFrom<TableScorerRaw> for TableScorer {
    type Error = Error;
    fn try_from(raw: TableScorerRaw) -> Result<Self> {
        TableScorer::new(raw.entries, raw.default)
    }
}

impl From<TableScorer> for TableScorerRaw {
    fn from(t: TableScorer) -> Self {
        TableScorerRaw {
            entries: t.entries,
            default: t.default,
        }
    }
}

impl TableScorer {
    pub fn new(entries: Vec<TableEntry>, default: Option<f64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() {
                return Err(Error::Scorer(format!(
                    "non-finite score for {:?}",
                    e.intervals
                )));
            }
            if index.insert(e.intervals, e.score).is_some() {
                return Err(Error::Scorer(format!(
                    "duplicate table entry {:?}",
                    e.intervals
                )));
            }
        }
        if default.is_some_and(|d| !d.is_finite()) {
            return Err(Error::Scorer("non-finite default score".into()));
        }
        Ok(TableScorer {
            entries,
            default,
            index,
        })
    }

    fn lookup(&self, iv: &IntervalVector) -> Result<f64> {
        let key = iv.0.map(|i| i.round() as i64);
        match (self.index.get(&key), self.default) {
            (Some(&s), _) => Ok(s),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::Scorer(format!(
                "no table entry for intervals {key:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionPolicy {
    /// Sample proportionally to `exp(score / temperature)`.
    Softmax {
        #[serde(default = "default_temperature")]
        temperature: f64,
    },
    /// Ignore scores entirely.
    Uniform,
    /// Highest score, lowest index on ties.
    Argmax,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy::Softmax {
            temperature: default_temperature(),
        }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionPolicy::Softmax { temperature }
                if !(temperature.is_finite() && temperature > 0.0) =>
            {
                Err(Error::Parameter(format!(
                    "softmax temperature must be positive, got {temperature}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Choice probabilities implied by `scores`.
    pub fn probabilities(&self, scores: &[f64]) -> Vec<f64> {
        let n = scores.len();
        match *self {
            SelectionPolicy::Uniform => vec![1.0 / n as f64; n],
            SelectionPolicy::Argmax => {
                let best = argmax(scores);
                (0..n).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
            }
            SelectionPolicy::Softmax { temperature } => {
                let w = softmax_weights(scores, temperature);
                let total: f64 = w.iter().sum();
                w.iter().map(|x| x / total).collect()
            }
        }
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn softmax_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect()
}

/// Pick one candidate index.
///
/// A single candidate is returned without consuming randomness. The uniform
/// policy never evaluates the scorer.
pub fn select<R: Rng + ?Sized>(
    policy: &SelectionPolicy,
    scorer: &Scorer,
    candidates: &[Melody],
    rng: &mut R,
) -> Result<usize> {
    match candidates.len() {
        0 => return Err(Error::Scheduling("empty candidate list".into())),
        1 => return Ok(0),
        _ => {}
    }
    if let SelectionPolicy::Uniform = policy {
        return Ok(rng.random_range(0..candidates.len()));
    }
    let scores = candidates
        .iter()
        .map(|m| scorer.score(m))
        .collect::<Result<Vec<_>>>()?;
    match *policy {
        SelectionPolicy::Argmax => Ok(argmax(&scores)),
        SelectionPolicy::Softmax { temperature } => {
            let w = softmax_weights(&scores, temperature);
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, &wi) in w.iter().enumerate() {
                if u < wi {
                    return Ok(i);
                }
                u -= wi;
            }
            // rounding slack: fall back to the last candidate with positive weight
            Ok(w.iter().rposition(|&x| x > 0.0).unwrap_or(0))
        }
        SelectionPolicy::Uniform => unreachable!(),
    }
}

/// Proxy for a human singer's systematic biases plus motor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasedSinger {
    /// Pull towards the nearest integer interval, 0..=1.
    #[serde(default = "BiasedSinger::default_lambda")]
    pub lambda: f64,
    /// Compression of interval size beyond the knee, 0..=1.
    #[serde(default = "BiasedSinger::default_kappa")]
    pub kappa: f64,
    /// Per-interval Gaussian noise (semitones).
    #[serde(default = "BiasedSinger::default_sigma")]
    pub sigma: f64,
    /// First-note Gaussian noise (semitones).
    #[serde(default = "BiasedSinger::default_sigma0")]
    pub sigma0: f64,
}

impl BiasedSinger {
    fn default_lambda() -> f64 {
        0.5
    }
    fn default_kappa() -> f64 {
        0.5
    }
    fn default_sigma() -> f64 {
        0.75
    }
    fn default_sigma0() -> f64 {
        1.0
    }

    pub fn noiseless(lambda: f64, kappa: f64) -> Self {
        BiasedSinger {
            lambda,
            kappa,
            sigma: 0.0,
            sigma0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !unit(self.lambda) || !unit(self.kappa) || !nonneg(self.sigma) || !nonneg(self.sigma0) {
            return Err(Error::Parameter(format!(
                "biased singer needs lambda, kappa in [0, 1] and sigma, sigma0 >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// The deterministic part of the interval transform (before noise).
    pub fn attract(&self, interval: f64) -> f64 {
        let size = interval.abs();
        let compressed =
            size.min(COMPRESSION_KNEE) + (size - COMPRESSION_KNEE).max(0.0) * (1.0 - self.kappa);
        let shaped = compressed.copysign(interval);
        shaped + self.lambda * (shaped.round() - shaped)
    }

    pub fn reproduce<R: Rng + ?Sized>(&self, m: &Melody, rng: &mut R) -> Result<Melody> {
        let first_noise: f64 = rng.sample(StandardNormal);
        let old = m.intervals();
        let mut delta = IntervalVector::ZERO;
        for k in 0..NUM_INTERVALS {
            let z: f64 = rng.sample(StandardNormal);
            delta.0[k] = self.attract(old.0[k]) + self.sigma * z - old.0[k];
        }
        m.perturbed(self.sigma0 * first_noise, &delta)
    }
}

impl Default for BiasedSinger {
    fn default() -> Self {
        BiasedSinger {
            lambda: Self::default_lambda(),
            kappa: Self::default_kappa(),
            sigma: Self::default_sigma(),
            sigma0: Self::default_sigma0(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReproductionModel {
    BiasedSinger(BiasedSinger),
    MatchedNoise(DeviationModel),
    Identity,
}

impl Default for ReproductionModel {
    fn default() -> Self {
        ReproductionModel::BiasedSinger(BiasedSinger::default())
    }
}

impl ReproductionModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ReproductionModel::BiasedSinger(b) => b.validate(),
            _ => Ok(()),
        }
    }

    pub fn reproduce<R: Rng + ?Sized>(&self, m: &Melody, rng: &mut R) -> Result<Melody> {
        match self {
            ReproductionModel::BiasedSinger(b) => b.reproduce(m, rng),
            ReproductionModel::MatchedNoise(model) => apply_matched_noise(m, model, rng),
            ReproductionModel::Identity => Ok(*m),
        }
    }
}

/// Complete agent description: how it rates, chooses and copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    #[serde(default)]
    pub scorer: Scorer,
    #[serde(default)]
    pub selection: SelectionPolicy,
    #[serde(default)]
    pub reproduction: ReproductionModel,
    /// Standard deviation of per-participant Gaussian jitter on the biased
    /// singer parameters; 0 makes all participants identical.
    #[serde(default)]
    pub jitter: f64,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scorer.validate()?;
        self.selection.validate()?;
        self.reproduction.validate()?;
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::Parameter(format!(
                "jitter must be >= 0, got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    /// Reproduction model of one participant, with jitter applied.
    pub fn participant_reproduction<R: Rng + ?Sized>(&self, rng: &mut R) -> ReproductionModel {
        match &self.reproduction {
            ReproductionModel::BiasedSinger(b) if self.jitter > 0.0 => {
                let noise = Normal::new(0.0, self.jitter).expect("validated jitter");
                let mut j = |x: f64| x + noise.sample(rng);
                ReproductionModel::BiasedSinger(BiasedSinger {
                    lambda: j(b.lambda).clamp(0.0, 1.0),
                    kappa: j(b.kappa).clamp(0.0, 1.0),
                    sigma: j(b.sigma).max(0.0),
                    sigma0: j(b.sigma0).max(0.0),
                })
            }
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melody::{random_melody, PITCH_CLAMP};
    use crate::seed;

    fn from_intervals(iv: [f64; 4]) -> Melody {
        crate::melody::rebuild(0.0, &IntervalVector(iv)).unwrap()
    }

    #[test]
    fn smoothness_scores() {
        let s = Scorer::default();
        // 0.25 * 7/4 = 0.4375
        assert!((s.score(&from_intervals([2.0, 2.0, 1.0, 2.0])).unwrap() + 0.4375).abs() < 1e-12);
        // -(0.25 * 0.5) - (1.0 * 0.5)
        assert!((s.score(&from_intervals([0.5; 4])).unwrap() + 0.625).abs() < 1e-12);
        assert_eq!(
            Scorer::Uniform
                .score(&from_intervals([3.3, -9.0, 1.0, 0.2]))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn table_scorer_lookup_and_miss() {
        let table = TableScorer::new(
            vec![TableEntry {
                intervals: [2, 2, 1, 2],
                score: 0.7,
            }],
            None,
        )
        .unwrap();
        let s = Scorer::Table(table.clone());
        assert_eq!(s.score(&from_intervals([2.2, 1.9, 0.6, 2.4])).unwrap(), 0.7);
        assert!(matches!(
            s.score(&from_intervals([0.0; 4])),
            Err(Error::Scorer(_))
        ));
        let with_default =
            Scorer::Table(TableScorer::new(table.entries.clone(), Some(-1.0)).unwrap());
        assert_eq!(with_default.score(&from_intervals([0.0; 4])).unwrap(), -1.0);
        let dup = vec![
            TableEntry {
                intervals: [0; 4],
                score: 0.0,
            },
            TableEntry {
                intervals: [0; 4],
                score: 1.0,
            },
        ];
        assert!(TableScorer::new(dup, None).is_err());
    }

    #[test]
    fn agent_config_json() {
        let cfg: AgentConfig = serde_json::from_str(
            r#"{"scorer":{"kind":"table","entries":[{"intervals":[1,1,1,1],"score":2.0}]},
                "selection":{"kind":"softmax","temperature":0.5},
                "reproduction":{"kind":"biased_singer","lambda":0.2,"kappa":0.1,"sigma":0.3,"sigma0":0.4}}"#,
        )
        .unwrap();
        assert_eq!(cfg.selection, SelectionPolicy::Softmax { temperature: 0.5 });
        assert_eq!(
            cfg.reproduction,
            ReproductionModel::BiasedSinger(BiasedSinger {
                lambda: 0.2,
                kappa: 0.1,
                sigma: 0.3,
                sigma0: 0.4
            })
        );
        let defaults: AgentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(defaults, AgentConfig::default());
        let round = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<AgentConfig>(&round).unwrap(), cfg);
    }

    #[test]
    fn selection_basics() {
        let mut rng = seed::rng(1);
        let scorer = Scorer::default();
        assert!(matches!(
            select(&SelectionPolicy::Argmax, &scorer, &[], &mut rng),
            Err(Error::Scheduling(_))
        ));
        let ms: Vec<_> = (0..5)
            .map(|i| from_intervals([i as f64 + 0.5, 0.0, 0.0, 0.0]))
            .collect();
        assert_eq!(
            select(&SelectionPolicy::Argmax, &scorer, &ms, &mut rng).unwrap(),
            0
        );
        let tie = vec![ms[1]; 5];
        assert_eq!(
            select(&SelectionPolicy::Argmax, &scorer, &tie, &mut rng).unwrap(),
            0
        );
    }

    #[test]
    fn softmax_probabilities_sum_to_one() {
        let p = SelectionPolicy::Softmax { temperature: 0.3 }
            .probabilities(&[-3.0, 0.1, 2.0, -40.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let eq = SelectionPolicy::Softmax { temperature: 1.0 }.probabilities(&[0.4; 5]);
        assert!(eq.iter().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn uniform_selection_frequencies() {
        let mut rng = seed::rng(77);
        let ms = vec![from_intervals([0.0; 4]); 5];
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts
                [select(&SelectionPolicy::Uniform, &Scorer::default(), &ms, &mut rng).unwrap()] +=
                1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.2).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn uniform_selection_never_scores() {
        // A table with no entries and no default errors on every lookup.
        let failing = Scorer::Table(TableScorer::new(vec![], None).unwrap());
        let ms = vec![from_intervals([0.3; 4]); 5];
        let mut rng = seed::rng(4);
        assert!(select(&SelectionPolicy::Uniform, &failing, &ms, &mut rng).is_ok());
        assert!(select(&SelectionPolicy::Argmax, &failing, &ms, &mut rng).is_err());
    }

    #[test]
    fn cold_softmax_matches_argmax() {
        let scorer = Scorer::default();
        let ms = vec![
            from_intervals([1.0, 1.0, 1.0, 1.0]),
            from_intervals([1.0, 1.0, 1.0, 2.6]), // 0.1+ lower
            from_intervals([5.0, 5.0, 5.0, 5.0]),
            from_intervals([1.0, 1.0, 1.0, 1.4]),
            from_intervals([9.0, 9.0, 9.0, 9.0]),
        ];
        let mut rng = seed::rng(12);
        let policy = SelectionPolicy::Softmax { temperature: 1e-6 };
        let hits = (0..10_000)
            .filter(|_| select(&policy, &scorer, &ms, &mut rng).unwrap() == 0)
            .count();
        assert!(hits >= 9_990, "{hits}");
    }

    #[test]
    fn identity_reproduction() {
        let m = random_melody(&mut seed::rng(0), -15.0, 15.0).unwrap();
        assert_eq!(
            ReproductionModel::Identity
                .reproduce(&m, &mut seed::rng(1))
                .unwrap(),
            m
        );
    }

    #[test]
    fn zero_parameter_singer_is_identity() {
        let singer = ReproductionModel::BiasedSinger(BiasedSinger::noiseless(0.0, 0.0));
        let mut rng = seed::rng(10);
        for _ in 0..200 {
            let m = random_melody(&mut rng, -15.0, 15.0).unwrap();
            assert_eq!(singer.reproduce(&m, &mut rng).unwrap(), m);
        }
    }

    #[test]
    fn quantization_only_singer() {
        let m = from_intervals([2.4, -1.6, 0.2, 3.0]);
        let out = BiasedSinger::noiseless(1.0, 0.0)
            .reproduce(&m, &mut seed::rng(0))
            .unwrap();
        for (got, want) in out.intervals().0.iter().zip([2.0, -2.0, 0.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn compression_only_singer() {
        let m = from_intervals([12.0, -12.0, 7.0, 0.0]);
        let out = BiasedSinger::noiseless(0.0, 1.0)
            .reproduce(&m, &mut seed::rng(0))
            .unwrap();
        for (got, want) in out.intervals().0.iter().zip([7.0, -7.0, 7.0, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // half compression of 12 -> 7 + 5 * 0.5
        assert_eq!(BiasedSinger::noiseless(0.0, 0.5).attract(12.0), 9.5);
    }

    #[test]
    fn reproduction_stays_in_clamp() {
        let loud = BiasedSinger {
            lambda: 0.0,
            kappa: 0.0,
            sigma: 20.0,
            sigma0: 20.0,
        };
        let mut rng = seed::rng(3);
        let mut m = random_melody(&mut rng, -15.0, 15.0).unwrap();
        for _ in 0..500 {
            m = loud.reproduce(&m, &mut rng).unwrap();
            assert!(m.pitches().iter().all(|p| p.abs() <= PITCH_CLAMP));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(BiasedSinger {
            lambda: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BiasedSinger {
            sigma: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SelectionPolicy::Softmax { temperature: 0.0 }
            .validate()
            .is_err());
        assert!(AgentConfig {
            jitter: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn jitter_changes_parameters_within_range() {
        let cfg = AgentConfig {
            jitter: 0.3,
            ..Default::default()
        };
        let mut rng = seed::rng(5);
        let mut distinct = 0;
        for _ in 0..50 {
            if let ReproductionModel::BiasedSinger(b) = cfg.participant_reproduction(&mut rng) {
                assert!(b.validate().is_ok());
                if b != BiasedSinger::default() {
                    distinct += 1;
                }
            }
        }
        assert_eq!(distinct, 50);
        let plain = AgentConfig::default();
        assert_eq!(plain.participant_reproduction(&mut rng), plain.reproduction);
    }
}
