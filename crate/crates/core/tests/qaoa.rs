mod common;

use std::f64::consts::PI;

use common::*;
use coreq::coreset::{Method, WeightedPointSet};
use coreq::hamiltonian::{build_order0, TaylorOrder};
use coreq::qaoa::{
    expectation, modal, optimize, optimize_with, prepare, sample, OptimizeConfig, QaoaParams, StateVector,
};
use coreq::solver::{brute_force_table, polynomial_table, taylor_table};
use num_complex::Complex64 as C;
use rand::Rng;

fn antipodal_table() -> Vec<f64> {
    let pts = WeightedPointSet::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0], 2, Method::Uniform, 0).unwrap();
    polynomial_table(&build_order0(&pts).unwrap()).unwrap()
}

/// Two-qubit p=1 QAOA written as explicit 4×4 algebra.
fn two_qubit_f(table: &[f64], gamma: f64, beta: f64) -> f64 {
    let (c, s) = (beta.cos(), beta.sin());
    let rx = [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]];
    let psi: Vec<C> = (0..4).map(|z| C::from_polar(0.5, -gamma * table[z])).collect();
    let mut out = [C::new(0.0, 0.0); 4];
    for (row, o) in out.iter_mut().enumerate() {
        for (col, a) in psi.iter().enumerate() {
            // kron(rx, rx) with qubit 0 as the low bit
            *o += rx[row & 1][col & 1] * rx[row >> 1][col >> 1] * a;
        }
    }
    out.iter().zip(table).map(|(a, e)| a.norm_sqr() * e).sum()
}

#[test]
fn antipodal_optimum_matches_dense_grid_scan() {
    let table = antipodal_table();
    assert_eq!(table, vec![-1.0, 1.0, 1.0, -1.0]);
    let mut grid_best = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    for i in 0..200 {
        for j in 0..200 {
            let (g, b) = (2.0 * PI * i as f64 / 200.0, PI * j as f64 / 200.0);
            let f = two_qubit_f(&table, g, b);
            if f > grid_best {
                grid_best = f;
                at = (g, b);
            }
        }
    }
    let opt = optimize(&table, 1, 20, 7).unwrap();
    assert!((opt.value - grid_best).abs() < 1e-3, "{} vs grid {grid_best}", opt.value);
    let direct = two_qubit_f(&table, opt.params.gammas[0], opt.params.betas[0]);
    assert!((direct - opt.value).abs() < 1e-12);

    // concentration on the argmax set, both at the grid point and at the optimizer's answer
    let argmax = brute_force_table(&table, true).unwrap().maximizers;
    for params in [QaoaParams::new(vec![at.0], vec![at.1]).unwrap(), opt.params.clone()] {
        let probs = prepare(&table, &params).unwrap().probabilities();
        let mass: f64 = argmax.iter().map(|p| probs[p.bits() as usize]).sum();
        assert!(mass > 0.5, "mass {mass} at {params:?}");
    }
}

#[test]
fn zero_parameters_give_the_mean_energy() {
    let mut rng = rng(21);
    for m in 2..=8 {
        let pts = random_set(&mut rng, m, 3, 2.0, 0.5, 2.0);
        for order in [TaylorOrder::Finite(0), TaylorOrder::Finite(2), TaylorOrder::Infinite] {
            let table = taylor_table(&pts, order).unwrap();
            let f = expectation(&prepare(&table, &QaoaParams::zeros(2)).unwrap(), &table).unwrap();
            let mean = table.iter().sum::<f64>() / table.len() as f64;
            let scale = table.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            assert!((f - mean).abs() < 1e-10 * scale);
        }
        let table = polynomial_table(&build_order0(&pts).unwrap()).unwrap();
        let scale = table.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let f = expectation(&prepare(&table, &QaoaParams::zeros(1)).unwrap(), &table).unwrap();
        assert!(f.abs() < 1e-10 * scale, "{f}");
    }
}

#[test]
fn optimized_value_respects_the_variational_bound_and_restarts() {
    let mut rng = rng(22);
    for m in [3usize, 4, 6] {
        let pts = random_set(&mut rng, m, 2, 3.0, 0.5, 2.0);
        for order in [TaylorOrder::Finite(0), TaylorOrder::Infinite] {
            let table = taylor_table(&pts, order).unwrap();
            let max = table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let scale = table.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let one = optimize(&table, 1, 1, 3).unwrap();
            let many = optimize(&table, 1, 20, 3).unwrap();
            assert!(many.value <= max + 1e-12 * scale);
            assert!(one.value <= max + 1e-12 * scale);
            assert!(many.value >= one.value - 1e-12 * scale, "{} < {}", many.value, one.value);
            let again = expectation(&prepare(&table, &many.params).unwrap(), &table).unwrap();
            assert!((again - many.value).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn deeper_circuits_do_not_lose_to_shallow_ones_on_small_instances() {
    let mut rng = rng(23);
    let pts = random_set(&mut rng, 4, 2, 3.0, 0.5, 2.0);
    let table = taylor_table(&pts, TaylorOrder::Infinite).unwrap();
    let p1 = optimize(&table, 1, 10, 1).unwrap();
    let p2 = optimize_with(&table, &OptimizeConfig { p: 2, restarts: 10, seed: 1, ..OptimizeConfig::default() }).unwrap();
    let scale = table.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    // p=2 contains every p=1 state (zero second layer)
    assert!(p2.value >= p1.value - 0.05 * scale, "{} vs {}", p2.value, p1.value);
}

#[test]
fn every_layer_preserves_the_norm() {
    let mut rng = rng(24);
    for m in 1..=10 {
        let table: Vec<f64> = (0..1usize << m).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mut state = StateVector::uniform(m).unwrap();
        for _ in 0..4 {
            state.apply_phase(&table, rng.random_range(-3.0..3.0));
            assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
            state.apply_mixer(rng.random_range(-3.0..3.0));
            assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn expectation_of_random_states_matches_reference_sum() {
    let mut rng = rng(25);
    for m in 1..=8 {
        let n = 1usize << m;
        let raw: Vec<C> = (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C> = raw.iter().map(|a| a / norm).collect();
        let table: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut want = 0.0;
        for z in 0..n {
            want += (amps[z].re * amps[z].re + amps[z].im * amps[z].im) * table[z];
        }
        let state = StateVector::from_amplitudes(amps).unwrap();
        assert!((expectation(&state, &table).unwrap() - want).abs() < 1e-12);
        assert!(expectation(&state, &table[..n / 2]).is_err());
    }
}

#[test]
fn sampling_is_deterministic_and_counts_sum_to_shots() {
    let table = antipodal_table();
    let state = prepare(&table, &QaoaParams::new(vec![0.4], vec![0.3]).unwrap()).unwrap();
    let a = sample(&state, 5000, 9).unwrap();
    assert_eq!(a, sample(&state, 5000, 9).unwrap());
    assert_eq!(a.values().sum::<u64>(), 5000);
    assert_ne!(a, sample(&state, 5000, 10).unwrap());
}

#[test]
fn modal_outcome_on_separated_pairs_is_an_exact_optimum() {
    // two tight groups on either side of the origin
    let pts = WeightedPointSet::new(
        vec![vec![-6.0, -5.0], vec![-5.0, -6.0], vec![-5.5, -5.5], vec![6.0, 5.0], vec![5.0, 6.0]],
        vec![3.0, 2.0, 1.0, 2.0, 4.0],
        5,
        Method::Uniform,
        0,
    )
    .unwrap();
    for order in [TaylorOrder::Finite(0), TaylorOrder::Finite(1), TaylorOrder::Infinite] {
        let table = taylor_table(&pts, order).unwrap();
        let argmax = brute_force_table(&table, true).unwrap().maximizers;
        let opt = optimize(&table, 1, 20, 5).unwrap();
        let hist = sample(&prepare(&table, &opt.params).unwrap(), 8192, 6).unwrap();
        let top = modal(&hist).unwrap();
        assert!(argmax.contains(&top), "order {order}: modal {top} not in {argmax:?}");
    }
}
