use std::collections::HashMap;

use chorusnet::analysis::*;
use chorusnet::graphnet::{make_lattice, make_modular, Graph, TopologyKind};
use chorusnet::melody::{random_melody, Melody};
use chorusnet::seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Eight blob centres on a ring of radius 10, each blob with sd 0.5. The
/// closest centres are about 7.7 apart, more than ten blob sds.
fn eight_blobs(per: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for c in 0..8 {
        let a = c as f64 * std::f64::consts::TAU / 8.0;
        for _ in 0..per {
            pts.push([
                10.0 * a.cos() + noise.sample(&mut rng),
                10.0 * a.sin() + noise.sample(&mut rng),
            ]);
            truth.push(c);
        }
    }
    (pts, truth)
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Direct O(n^2) silhouette.
fn silhouette_oracle(pts: &[[f64; 2]], labels: &[usize]) -> f64 {
    let d = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..pts.len() {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..pts.len() {
            if i != j {
                sum[labels[j]] += d(&pts[i], &pts[j]);
                cnt[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if cnt[own] == 0 {
            continue;
        }
        let a = sum[own] / cnt[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && cnt[c] > 0)
            .map(|c| sum[c] / cnt[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / pts.len() as f64
}

#[test]
fn eight_blobs_are_recovered() {
    let (pts, truth) = eight_blobs(60, 1);
    let sel = select_k(&pts, 2..=12, 3, &SelectKOptions::default()).unwrap();
    assert_eq!(sel.best_k, 8, "{:?}", sel.scores);
    assert!(same_partition(&sel.fit.labels, &truth));
    let fit = kmeans(&pts, 8, 99).unwrap();
    assert!(same_partition(&fit.labels, &truth));
}

#[test]
fn silhouette_matches_oracle() {
    let mut rng = seed::rng(4);
    for k in [2, 3, 5] {
        let pts: Vec<[f64; 2]> = (0..300)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let labels = kmeans(&pts, k, 1).unwrap().labels;
        assert!(
            (silhouette(&pts, &labels).unwrap() - silhouette_oracle(&pts, &labels)).abs() < 1e-9
        );
        let random: Vec<usize> = (0..300).map(|_| rng.random_range(0..k)).collect();
        assert!(
            (silhouette(&pts, &random).unwrap() - silhouette_oracle(&pts, &random)).abs() < 1e-9
        );
    }
}

#[test]
fn lloyd_objective_is_monotone() {
    let (pts, _) = eight_blobs(40, 2);
    let mut rng = seed::rng(10);
    for k in 2..=12 {
        for _ in 0..5 {
            let fit = lloyd(&pts, kmeans_plus_plus(&pts, k, &mut rng), 300);
            assert!(fit
                .objective_history
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }
}

#[test]
fn pca_reconstruction_properties() {
    let mut rng = seed::rng(12);
    let rows: Vec<[f64; 5]> = (0..200)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap().center().0)
        .collect();
    let pca = fit_pca(&rows).unwrap();
    let mut resid2 = 0.0;
    for r in &rows {
        let full = pca.reconstruct(&pca.project(r, 5));
        assert!(full.iter().zip(r).all(|(a, b)| (a - b).abs() < 1e-9));
        let top2 = pca.reconstruct(&pca.project(r, 2));
        resid2 += top2
            .iter()
            .zip(r)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    }
    let discarded: f64 = pca.eigenvalues[2..].iter().sum();
    assert!((resid2 / (rows.len() - 1) as f64 - discarded).abs() < 1e-9);
    for c in &pca.components {
        let top = c
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        assert!(top > 0.0);
    }
}

#[test]
fn iteration_zero_prevalence_matches_base_rates() {
    let mut rng = seed::rng(14);
    let pool: Vec<Melody> = (0..10_000)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
        .collect();
    let model = fit_cluster_model(
        &pool,
        &ClusterOptions {
            force_k: Some(8),
            ..Default::default()
        },
    )
    .unwrap();
    let base = prevalence(&pool.iter().map(|m| model.assign(m)).collect::<Vec<_>>(), 8);
    let fresh: Vec<Melody> = (0..10_000)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
        .collect();
    let p = prevalence(
        &fresh.iter().map(|m| model.assign(m)).collect::<Vec<_>>(),
        8,
    );
    for (a, b) in p.iter().zip(&base) {
        assert!((a - b).abs() < 0.02, "{p:?} vs {base:?}");
    }
}

#[test]
fn forced_k_model_file_round_trip() {
    let mut rng = seed::rng(15);
    let pool: Vec<Melody> = (0..500)
        .map(|_| random_melody(&mut rng, -15.0, 15.0).unwrap())
        .collect();
    let model = fit_cluster_model(
        &pool,
        &ClusterOptions {
            force_k: Some(8),
            seed: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let back: ClusterModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.k, 8);
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    prop_oneof![
        Just(make_lattice(7, 7).unwrap()),
        Just(make_modular(7, 7, 0).unwrap()),
        Just(make_lattice(4, 6).unwrap())
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_bounded(weights in prop::collection::vec(0.0f64..1.0, 2..12)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let h = cluster_entropy(&p).unwrap();
        prop_assert!(h >= 0.0 && h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn similarity_is_relabeling_invariant(g in graph_strategy(), seed in any::<u64>(), k in 2usize..9) {
        let mut rng = chorusnet::seed::rng(seed);
        let labels: Vec<usize> = (0..g.node_count()).map(|_| rng.random_range(0..k)).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.reverse();
        perm.rotate_left(seed as usize % k);
        let relabeled: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
        let s = neighbor_similarity(&g, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, neighbor_similarity(&g, &relabeled).unwrap());
    }

    #[test]
    fn deviations_sum_to_zero(values in prop::collection::vec(-5.0f64..5.0, 24), burn_in in 0usize..3) {
        let kinds = [TopologyKind::Lattice, TopologyKind::RandomRegular, TopologyKind::Modular];
        let obs: Vec<Observation> = values
            .iter()
            .enumerate()
            .map(|(i, &value)| Observation { batch: i / 12, iteration: (i / 3) % 4, topology: kinds[i % 3], value })
            .collect();
        let devs = relative_deviation(&obs, burn_in).unwrap();
        prop_assert!(devs.iter().map(|d| d.mean).sum::<f64>().abs() < 1e-12);
        let cells = devs[0].deviations.len();
        for c in 0..cells {
            prop_assert!(devs.iter().map(|d| d.deviations[c]).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn prevalence_sums_to_one(labels in prop::collection::vec(0usize..8, 1..100)) {
        let p = prevalence(&labels, 8);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
