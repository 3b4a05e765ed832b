use chorusnet::behavior::*;
use chorusnet::melody::*;
use chorusnet::seed;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SIGMA0: [[f64; 4]; 4] = [
    [1.0, 0.3, 0.0, -0.2],
    [0.3, 0.8, 0.2, 0.0],
    [0.0, 0.2, 0.6, 0.1],
    [-0.2, 0.0, 0.1, 0.9],
];

/// Lower Cholesky factor computed by hand, independent of the library.
fn cholesky(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j {
                (a[i][i] - s).sqrt()
            } else {
                (a[i][j] - s) / l[j][j]
            };
        }
    }
    l
}

fn frobenius_rel(est: &[[f64; 4]; 4], truth: &[[f64; 4]; 4]) -> f64 {
    let num: f64 = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (est[i][j] - truth[i][j]).powi(2))
        .sum();
    let den: f64 = truth.iter().flatten().map(|x| x * x).sum();
    (num / den).sqrt()
}

fn sample_cov(devs: &[[f64; 4]]) -> [[f64; 4]; 4] {
    let n = devs.len() as f64;
    let mean: [f64; 4] = std::array::from_fn(|a| devs.iter().map(|d| d[a]).sum::<f64>() / n);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            devs.iter()
                .map(|d| (d[a] - mean[a]) * (d[b] - mean[b]))
                .sum::<f64>()
                / (n - 1.0)
        })
    })
}

fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64)
        .unwrap()
        .cdf(stat)
}

#[test]
fn covariance_recovery_and_matched_noise_fidelity() {
    let l = cholesky(&SIGMA0);
    let mut rng = seed::rng(77);
    let pairs: Vec<(Melody, Melody)> = (0..10_000)
        .map(|_| {
            let target = random_melody(&mut rng, -10.0, 10.0).unwrap();
            let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let delta = IntervalVector(std::array::from_fn(|a| {
                (0..=a).map(|k| l[a][k] * z[k]).sum()
            }));
            let produced = rebuild(target.first_pitch(), &(target.intervals() + delta)).unwrap();
            (target, produced)
        })
        .collect();
    let model = estimate_deviation_covariance(&pairs).unwrap();
    assert!(frobenius_rel(model.sigma(), &SIGMA0) < 0.05);

    let base = Melody::new([0.0, 1.0, 3.0, 1.0, 0.0]).unwrap();
    let devs: Vec<[f64; 4]> = (0..10_000)
        .map(|_| {
            let out = apply_matched_noise(&base, &model, &mut rng).unwrap();
            assert_eq!(out.first_pitch(), base.first_pitch());
            (out.intervals() - base.intervals()).0
        })
        .collect();
    assert!(frobenius_rel(&sample_cov(&devs), &SIGMA0) < 0.10);
}

#[test]
fn uniform_policy_is_scorer_blind() {
    let mut rng = seed::rng(5);
    let cands: Vec<Melody> = (0..5)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
        .collect();
    let wild = Scorer::Table(TableScorer::new(vec![], None).unwrap());
    for scorer in [Scorer::default(), Scorer::Uniform, wild] {
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts[select(&SelectionPolicy::Uniform, &scorer, &cands, &mut rng).unwrap()] += 1;
        }
        assert!(chi_square_uniform(&counts) > 0.001, "{counts:?}");
        assert!(counts
            .iter()
            .all(|&c| (c as f64 / 10_000.0 - 0.2).abs() <= 0.02));
    }
}

#[test]
fn softmax_with_equal_scores_is_uniform() {
    let mut rng = seed::rng(6);
    let cands: Vec<Melody> = (0..5)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
        .collect();
    let mut counts = [0usize; 5];
    for _ in 0..10_000 {
        counts[select(
            &SelectionPolicy::Softmax { temperature: 1.0 },
            &Scorer::Uniform,
            &cands,
            &mut rng,
        )
        .unwrap()] += 1;
    }
    assert!(chi_square_uniform(&counts) > 0.001, "{counts:?}");
}

#[test]
fn reproduction_noise_moments() {
    let singer = BiasedSinger {
        lambda: 0.0,
        kappa: 0.0,
        sigma: 0.75,
        sigma0: 1.0,
    };
    let m = Melody::new([0.0, 2.0, 4.0, 5.0, 7.0]).unwrap();
    let mut rng = seed::rng(9);
    let n = 10_000;
    let outs: Vec<Melody> = (0..n)
        .map(|_| singer.reproduce(&m, &mut rng).unwrap())
        .collect();
    let first: Vec<f64> = outs
        .iter()
        .map(|o| o.first_pitch() - m.first_pitch())
        .collect();
    let var0 = first.iter().map(|x| x * x).sum::<f64>() / n as f64;
    assert!((var0 - 1.0).abs() < 0.05);
    let devs: Vec<[f64; 4]> = outs
        .iter()
        .map(|o| (o.intervals() - m.intervals()).0)
        .collect();
    let cov = sample_cov(&devs);
    for a in 0..4 {
        assert!((cov[a][a] - 0.5625).abs() < 0.05 * 0.5625);
        assert!(devs.iter().map(|d| d[a]).sum::<f64>().abs() / (n as f64) < 0.05);
    }
}

fn melody() -> impl Strategy<Value = Melody> {
    prop::array::uniform5(-30.0f64..30.0).prop_map(|p| Melody::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn intervals_are_shift_invariant(m in melody(), c in -20.0f64..20.0) {
        let shifted = m.pitches().map(|p| p + c);
        let iv = m.intervals().0;
        let s_iv: [f64; 4] = std::array::from_fn(|k| shifted[k + 1] - shifted[k]);
        for k in 0..4 {
            prop_assert!((iv[k] - s_iv[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn rebuild_round_trips(m in melody()) {
        let back = m.intervals().rebuild(m.first_pitch());
        for (a, b) in back.iter().zip(m.pitches()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_estimate_ignores_pair_shifts(seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut rng = chorusnet::seed::rng(seed);
        let pairs: Vec<(Melody, Melody)> = (0..20)
            .map(|_| (random_melody(&mut rng, -10.0, 10.0).unwrap(), random_melody(&mut rng, -10.0, 10.0).unwrap()))
            .collect();
        let shift = |m: &Melody| Melody::new(m.pitches().map(|p| p + c)).unwrap();
        let moved: Vec<(Melody, Melody)> = pairs.iter().map(|(a, b)| (shift(a), shift(b))).collect();
        let s1 = estimate_deviation_covariance(&pairs).unwrap();
        let s2 = estimate_deviation_covariance(&moved).unwrap();
        for (x, y) in s1.sigma().iter().flatten().zip(s2.sigma().iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn reproduce_stays_in_range(m in melody(), seed in any::<u64>(), lambda in 0.0f64..=1.0, kappa in 0.0f64..=1.0, sigma in 0.0f64..5.0) {
        let model = ReproductionModel::BiasedSinger(BiasedSinger { lambda, kappa, sigma, sigma0: sigma });
        let out = model.reproduce(&m, &mut chorusnet::seed::rng(seed)).unwrap();
        prop_assert!(out.pitches().iter().all(|p| p.abs() <= PITCH_CLAMP));
    }

    #[test]
    fn zero_parameter_singer_is_identity(m in melody(), seed in any::<u64>()) {
        let out = BiasedSinger::noiseless(0.0, 0.0).reproduce(&m, &mut chorusnet::seed::rng(seed)).unwrap();
        prop_assert_eq!(out, m);
    }

    #[test]
    fn softmax_is_shift_invariant(scores in prop::collection::vec(-5.0f64..5.0, 1..8), c in -50.0f64..50.0, t in 0.05f64..5.0) {
        let policy = SelectionPolicy::Softmax { temperature: t };
        let p = policy.probabilities(&scores);
        let q = policy.probabilities(&scores.iter().map(|s| s + c).collect::<Vec<_>>());
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn argmax_ignores_constant_offsets(seed in any::<u64>()) {
        let mut rng = chorusnet::seed::rng(seed);
        let cands: Vec<Melody> = (0..5).map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap()).collect();
        let a = select(&SelectionPolicy::Argmax, &Scorer::default(), &cands, &mut rng).unwrap();
        let shifted: Vec<Melody> = cands.iter().map(|m| Melody::new(m.pitches().map(|p| p + 3.0)).unwrap()).collect();
        let b = select(&SelectionPolicy::Argmax, &Scorer::default(), &shifted, &mut rng).unwrap();
        prop_assert_eq!(a, b);
    }
}
