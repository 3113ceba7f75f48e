//! Reference evaluators written straight from the clustering definitions,
//! independent of the library's own evaluation code.

#![allow(dead_code)]

use std::path::PathBuf;

use coreq::coreset::{Method, WeightedPointSet};
use coreq::dataio::{load_csv, DataSet};
use coreq::Partition;
use rand::Rng;

pub fn fixture(name: &str) -> DataSet {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    load_csv(path, false).expect("bundled fixture")
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha20Rng {
    coreq::seed::rng(seed)
}

/// `m` points in `[-scale, scale]^d` with weights in `[w_lo, w_hi]`.
pub fn random_set(rng: &mut impl Rng, m: usize, d: usize, scale: f64, w_lo: f64, w_hi: f64) -> WeightedPointSet {
    let points: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(w_lo..=w_hi)).collect();
    WeightedPointSet::new(points, weights, m, Method::Uniform, 0).unwrap()
}

pub fn partitions(m: usize) -> impl Iterator<Item = Partition> {
    (0..1u64 << m).map(move |z| Partition::new(z, m).unwrap())
}

pub fn plus(part: &Partition, i: usize) -> bool {
    (part.bits() >> i) & 1 == 1
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows(pts: &WeightedPointSet) -> Vec<Vec<f64>> {
    pts.rows().map(<[f64]>::to_vec).collect()
}

/// `(W_-, W_+, μ_-, μ_+)`; an empty side gets a zero vector.
pub fn sides(pts: &WeightedPointSet, part: &Partition) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let x = rows(pts);
    let w = pts.weights();
    let d = x[0].len();
    let (mut wm, mut wp) = (0.0, 0.0);
    let (mut sm, mut sp) = (vec![0.0; d], vec![0.0; d]);
    for i in 0..x.len() {
        let (ws, s) = if plus(part, i) { (&mut wp, &mut sp) } else { (&mut wm, &mut sm) };
        *ws += w[i];
        for k in 0..d {
            s[k] += w[i] * x[i][k];
        }
    }
    let mean = |s: Vec<f64>, ws: f64| if ws > 0.0 { s.iter().map(|v| v / ws).collect() } else { s };
    (wm, wp, mean(sm, wm), mean(sp, wp))
}

/// Weighted 2-means objective of a partition with its own centroids.
pub fn partition_cost(pts: &WeightedPointSet, part: &Partition) -> f64 {
    let (_, _, mm, mp) = sides(pts, part);
    rows(pts)
        .iter()
        .zip(pts.weights())
        .enumerate()
        .map(|(i, (x, w))| w * dist2(x, if plus(part, i) { &mp } else { &mm }))
        .sum()
}

/// `W_- W_+ |μ_- - μ_+|²`, zero when a side is empty.
pub fn intercluster(pts: &WeightedPointSet, part: &Partition) -> f64 {
    let (wm, wp, mm, mp) = sides(pts, part);
    if wm == 0.0 || wp == 0.0 {
        return 0.0;
    }
    wm * wp * dist2(&mm, &mp)
}

/// `Σ_{i ∈ S_-, j ∈ S_+} -w_i w_j x_i·x_j`
pub fn cut_weight(pts: &WeightedPointSet, part: &Partition) -> f64 {
    let x = rows(pts);
    let w = pts.weights();
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if !plus(part, i) && plus(part, j) {
                total -= w[i] * w[j] * dot(&x[i], &x[j]);
            }
        }
    }
    total
}

/// Order-`j` Taylor polynomial of `1/x` at `1/2` from the derivatives
/// `(1/x)^{(t)} = (-1)^t t! / x^{t+1}`.
pub fn inverse_series(j: u32, x: f64) -> f64 {
    let mut total = 0.0;
    let mut fact = 1.0;
    for t in 0..=j {
        if t > 0 {
            fact *= t as f64;
        }
        let deriv = (-1f64).powi(t as i32) * fact / 0.5f64.powi(t as i32 + 1);
        total += deriv / fact * (x - 0.5).powi(t as i32);
    }
    total
}

/// Ratio-factor expansion of `W_- W_+ |μ_- - μ_+|²` with each `W_∓/W_±`
/// replaced by `approx(W_±/W) - 1`.
pub fn ratio_expansion(pts: &WeightedPointSet, part: &Partition, approx: impl Fn(f64) -> f64) -> f64 {
    let x = rows(pts);
    let w = pts.weights();
    let (wm, wp, _, _) = sides(pts, part);
    let total = wm + wp;
    let r_minus = approx(wm / total) - 1.0;
    let r_plus = approx(wp / total) - 1.0;
    let m = x.len();
    let mut e = 0.0;
    for i in 0..m {
        let r = if plus(part, i) { r_plus } else { r_minus };
        e += r * w[i] * w[i] * dot(&x[i], &x[i]);
        for j in i + 1..m {
            let r = match (plus(part, i), plus(part, j)) {
                (false, false) => r_minus,
                (true, true) => r_plus,
                _ => -1.0,
            };
            e += 2.0 * r * w[i] * w[j] * dot(&x[i], &x[j]);
        }
    }
    e
}

/// First-order Hamiltonian written term by term in spin variables.
pub fn first_order_spin_form(pts: &WeightedPointSet, part: &Partition) -> f64 {
    let x = rows(pts);
    let w = pts.weights();
    let m = x.len();
    let z: Vec<f64> = (0..m).map(|i| if plus(part, i) { -1.0 } else { 1.0 }).collect();
    let total: f64 = w.iter().sum();
    let field: f64 = (0..m).map(|l| w[l] * z[l]).sum();
    let mut e = 0.0;
    for i in 0..m {
        e += (1.0 - 2.0 * z[i] / total * field) * w[i] * w[i] * dot(&x[i], &x[i]);
        for j in i + 1..m {
            e += 2.0 * (z[i] * z[j] - (z[i] + z[j]) / total * field) * w[i] * w[j] * dot(&x[i], &x[j]);
        }
    }
    e
}

/// Indices attaining the minimum / maximum of `values` within `rtol`.
pub fn arg_extreme(values: &[f64], maximize: bool, rtol: f64) -> Vec<usize> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let best = if maximize {
        values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    (0..values.len())
        .filter(|&i| (values[i] - best).abs() <= rtol * scale.max(1e-300))
        .collect()
}
