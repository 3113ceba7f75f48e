mod common;

use common::*;
use coreq::clustering::{weighted_cost, ClusterModel};
use coreq::coreset::{
    best_bicriterion, build_coreset, coreset_probabilities, d2_sample, uniform_sample, Variant, WeightedPointSet,
};
use coreq::dataio::{generate_synthetic, DataSet, Points, SyntheticSpec};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const VARIANTS: [Variant; 2] = [Variant::Blk17, Variant::Bfl16];

#[test]
fn coreset_weights_are_unbiased_on_200_points() {
    let data = fixture("two_groups_200.csv");
    assert_eq!(data.n(), 200);
    let model = ClusterModel { mu_minus: vec![1.0, 0.0, -1.0], mu_plus: vec![5.0, 5.0, 5.0] };
    let full = weighted_cost(&data, &model).unwrap();
    for variant in VARIANTS {
        let (mut total_w, mut total_cost) = (0.0, 0.0);
        let seeds = 1000;
        for seed in 0..seeds {
            let c = build_coreset(&data, 10, variant, seed).unwrap();
            assert!(c.weights().iter().all(|&w| w > 0.0 && w.is_finite()));
            total_w += c.weights().iter().sum::<f64>();
            total_cost += weighted_cost(&c, &model).unwrap();
        }
        let mean_w = total_w / seeds as f64;
        let mean_cost = total_cost / seeds as f64;
        assert!((mean_w - 200.0).abs() / 200.0 < 0.05, "{variant:?}: mean weight {mean_w}");
        assert!((mean_cost - full).abs() / full < 0.05, "{variant:?}: mean cost {mean_cost} vs {full}");
    }
}

fn rare_mask(spec: &SyntheticSpec) -> Vec<bool> {
    spec.labels().into_iter().map(|l| l != 0).collect()
}

fn contains_rare(data: &DataSet, coreset: &WeightedPointSet, rare: &[bool]) -> bool {
    coreset.rows().any(|x| (0..data.n()).any(|i| rare[i] && data.point(i) == x))
}

#[test]
fn coresets_catch_rare_clusters() {
    let spec = SyntheticSpec::desk_scale(0);
    let data = generate_synthetic(&spec).unwrap();
    let rare = rare_mask(&spec);
    let m = 10;
    for variant in VARIANTS {
        let hits = (0..10).filter(|&s| contains_rare(&data, &build_coreset(&data, m, variant, s).unwrap(), &rare)).count();
        assert!(hits >= 9, "{variant:?}: {hits}/10");

        // closed-form inclusion probability 1 - (1 - p_i)^m against m/n
        let p = coreset_probabilities(&data, variant, 0).unwrap();
        let uniform = m as f64 / data.n() as f64;
        for i in (0..data.n()).filter(|&i| rare[i]) {
            let inclusion = 1.0 - (1.0 - p[i]).powi(m as i32);
            assert!(inclusion > uniform, "{variant:?}: point {i} has {inclusion} <= {uniform}");
        }
    }
}

#[test]
fn uniform_samples_usually_miss_rare_clusters() {
    let spec = SyntheticSpec::desk_scale(0);
    let data = generate_synthetic(&spec).unwrap();
    let rare = rare_mask(&spec);
    let hits = (0..50).filter(|&s| contains_rare(&data, &uniform_sample(&data, 10, s).unwrap(), &rare)).count();
    // P(hit) = 1 - C(3950,10)/C(4000,10) ≈ 0.118
    assert!(hits < 20, "{hits}/50");
}

fn four_clusters(seed: u64) -> DataSet {
    let mut rng = rng(seed);
    let centers = [[0.0, 0.0], [50.0, 0.0], [0.0, 50.0], [50.0, 50.0]];
    let rows = (0..50)
        .map(|i| {
            let c = centers[i % 4];
            (0..2).map(|k| { let z: f64 = StandardNormal.sample(&mut rng); c[k] + 2.0 * z }).collect()
        })
        .collect();
    DataSet::from_rows("four", rows).unwrap()
}

fn cost_to(data: &DataSet, centers: &[&[f64]]) -> f64 {
    (0..data.n())
        .map(|i| centers.iter().map(|c| dist2(data.point(i), c)).fold(f64::INFINITY, f64::min))
        .sum()
}

#[test]
fn best_of_ten_d2_is_within_twice_the_exhaustive_optimum() {
    for seed in 0..3 {
        let data = four_clusters(seed);
        let n = data.n();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        let cost = cost_to(&data, &[data.point(a), data.point(b), data.point(c), data.point(d)]);
                        best = best.min(cost);
                    }
                }
            }
        }
        let bic = best_bicriterion(&data, 10, seed).unwrap();
        assert_eq!(bic.centers.len(), 4);
        let centers: Vec<&[f64]> = bic.centers.iter().map(Vec::as_slice).collect();
        assert!((bic.cost - cost_to(&data, &centers)).abs() < 1e-9 * bic.cost.max(1.0));
        assert!(bic.cost <= 2.0 * best, "seed {seed}: {} vs optimum {best}", bic.cost);
    }
}

#[test]
fn d2_centers_are_data_points() {
    let data = fixture("blobs3_4d.csv");
    let bic = d2_sample(&data, 4, 9).unwrap();
    for c in &bic.centers {
        assert!((0..data.n()).any(|i| data.point(i) == c.as_slice()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coreset_invariants(seed in 0u64..10_000, n in 5usize..60, d in 1usize..5, frac in 0.0f64..1.0) {
        let mut rng = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let data = DataSet::from_rows("p", rows).unwrap();
        let m = 2 + ((n - 2) as f64 * frac) as usize;
        for variant in VARIANTS {
            let p = coreset_probabilities(&data, variant, seed).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v > 0.0));
            let c = build_coreset(&data, m, variant, seed).unwrap();
            prop_assert_eq!(c.m(), m);
            prop_assert_eq!(c.source_n, n);
            prop_assert_eq!(c.dim(), d);
            prop_assert!(c.weights().iter().all(|&w| w > 0.0 && w.is_finite()));
            prop_assert_eq!(&c, &build_coreset(&data, m, variant, seed).unwrap());
        }
        let u = uniform_sample(&data, m, seed).unwrap();
        prop_assert!(u.weights().iter().all(|&w| (w - n as f64 / m as f64).abs() < 1e-12));
        let back = WeightedPointSet::from_json(&u.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, u);
    }
}
