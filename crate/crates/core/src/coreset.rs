//! Weighted summaries of a [`DataSet`].
//!
//! Both coreset variants use the same plumbing. First, a bicriterion
//! approximation `B` with `βk = 4` centers is built by D² sampling, taking the
//! best of ten trials. Each point `x_i` then gets a sensitivity bound `s_i`
//! from its squared distance to `B`, the cost of its cell `B_i` (the points
//! sharing its nearest center) and the cell size. The `m` coreset members are
//! drawn i.i.d. with replacement from `p_i = s_i / Σ_j s_j`, and each draw
//! carries weight `1 / (m p_i)`. This makes `Σ w` and the weighted cost of any
//! fixed centers unbiased estimates of their full-data values.
//!
//! The two variants differ only in the sensitivity expression. Here
//! `c̄ = cost(X, B) / n` and `d_i² = min_{b ∈ B} |x_i - b|²`.
//!
//! * [`Variant::Blk17`] follows Bachem, Lucic & Krause, *Practical coreset
//!   constructions for machine learning* (2017), Algorithm 2:
//!   `s_i = α d_i²/c̄ + 2α (Σ_{x ∈ B_i} d²(x, B)) / (|B_i| c̄) + 4n / |B_i|`
//!   with `α = 16 (ln k + 2)`.
//! * [`Variant::Bfl16`] follows the bicriterion bound of Braverman, Feldman &
//!   Lang, *New frameworks for offline and streaming coreset constructions*
//!   (2016), Algorithm 2, with unit coefficients:
//!   `s_i = d_i²/c̄ + (Σ_{x ∈ B_i} d²(x, B)) / (|B_i| c̄) + n / |B_i|`.
//!
//! If the bicriterion cost is zero (every point sits on a center) the
//! probabilities fall back to uniform.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{DataSet, Points};
use crate::linalg::sq_dist;
use crate::{seed, Error, Result};

/// Number of clusters the summaries target.
pub const K: usize = 2;
/// Bicriterion oversampling factor.
pub const BETA: usize = 2;
/// Centers in the bicriterion approximation.
pub const BICRITERION_CENTERS: usize = BETA * K;
/// D² trials in [`best_bicriterion`] when building coresets.
pub const BICRITERION_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uniform,
    CoresetBlk17,
    CoresetBfl16,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Uniform => "uniform",
            Method::CoresetBlk17 => "coreset_blk17",
            Method::CoresetBfl16 => "coreset_bfl16",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Blk17,
    #[default]
    Bfl16,
}

impl Variant {
    pub fn method(self) -> Method {
        match self {
            Variant::Blk17 => Method::CoresetBlk17,
            Variant::Bfl16 => Method::CoresetBfl16,
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blk17" => Ok(Variant::Blk17),
            "bfl16" => Ok(Variant::Bfl16),
            other => Err(Error::Config(format!("unknown coreset variant {other:?}"))),
        }
    }
}

/// `m` weighted points in `R^d` summarizing a data set of `source_n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    dim: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
    pub source_n: usize,
    pub method: Method,
    pub seed: u64,
}

impl WeightedPointSet {
    pub fn new(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        source_n: usize,
        method: Method,
        seed: u64,
    ) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::from_flat(dim, points.concat(), weights, source_n, method, seed)
    }

    pub fn from_flat(
        dim: usize,
        values: Vec<f64>,
        weights: Vec<f64>,
        source_n: usize,
        method: Method,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSize("dimension must be at least 1".into()));
        }
        let m = weights.len();
        if m < 2 {
            return Err(Error::InvalidSize(format!("need at least 2 weighted points, got {m}")));
        }
        if values.len() != m * dim {
            return Err(Error::LengthMismatch {
                expected: m * dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSize("non-finite coordinate".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive and finite")));
        }
        Ok(Self {
            dim,
            values,
            weights,
            source_n,
            method,
            seed,
        })
    }

    /// Unit-weight copy of a whole data set (`m = n`).
    pub fn from_dataset(data: &DataSet) -> Result<Self> {
        Self::from_flat(
            data.dim(),
            data.values().to_vec(),
            vec![1.0; data.n()],
            data.n(),
            Method::Uniform,
            0,
        )
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Reads the JSON form `{points, weights, source_n, method, seed}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CoresetJson = serde_json::from_str(text)?;
        Self::new(raw.points, raw.weights, raw.source_n, raw.method, raw.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = CoresetJson {
            points: self.rows().map(<[f64]>::to_vec).collect(),
            weights: self.weights.clone(),
            source_n: self.source_n,
            method: self.method,
            seed: self.seed,
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

impl Points for WeightedPointSet {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

#[derive(Serialize, Deserialize)]
struct CoresetJson {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    source_n: usize,
    method: Method,
    seed: u64,
}

/// Rough clustering with more centers than the target `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bicriterion {
    pub centers: Vec<Vec<f64>>,
    /// `Σ_i min_c |x_i - c|²` over the source data.
    pub cost: f64,
}

impl Bicriterion {
    /// Index of the nearest center for each point (ties go to the lower index)
    /// and the squared distance to it.
    pub fn assign(&self, data: &DataSet) -> (Vec<usize>, Vec<f64>) {
        data.rows()
            .map(|x| nearest(x, &self.centers))
            .unzip()
    }
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(c, center)| (c, sq_dist(x, center)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// D² sampling: the first center is uniform over the points, each later one is
/// drawn with probability proportional to the squared distance to the nearest
/// chosen center.
pub fn d2_sample(data: &DataSet, n_centers: usize, seed: u64) -> Result<Bicriterion> {
    let n = data.n();
    if n_centers == 0 || n_centers > n {
        return Err(Error::InvalidSize(format!(
            "cannot pick {n_centers} centers from {n} points"
        )));
    }
    let mut rng = seed::rng(seed);
    let first = rng.random_range(0..n);
    let mut centers = vec![data.point(first).to_vec()];
    let mut d2: Vec<f64> = data.rows().map(|x| sq_dist(x, &centers[0])).collect();

    while centers.len() < n_centers {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            // every point coincides with a chosen center
            Err(_) => rng.random_range(0..n),
        };
        let c = data.point(next).to_vec();
        for (d, x) in d2.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    Ok(Bicriterion {
        cost: d2.iter().sum(),
        centers,
    })
}

/// Lowest-cost result of `trials` D² runs with `BICRITERION_CENTERS` centers.
/// Trial `t` uses sub-seed `seed::derive(seed, &[t])`; ties keep the earliest
/// trial.
pub fn best_bicriterion(data: &DataSet, trials: usize, seed: u64) -> Result<Bicriterion> {
    best_bicriterion_with(data, BICRITERION_CENTERS, trials, seed)
}

pub fn best_bicriterion_with(
    data: &DataSet,
    n_centers: usize,
    trials: usize,
    seed: u64,
) -> Result<Bicriterion> {
    if trials == 0 {
        return Err(Error::InvalidSize("trials must be at least 1".into()));
    }
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|t| d2_sample(data, n_centers, seed::derive(seed, &[t])))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, cur| if cur.cost < best.cost { cur } else { best })
        .expect("trials >= 1"))
}

/// Importance-sampling probabilities `p_i` for `variant`, normalized so they
/// sum to one.
pub fn sampling_probabilities(data: &DataSet, bicriterion: &Bicriterion, variant: Variant) -> Vec<f64> {
    let n = data.n();
    if bicriterion.cost <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    let (cell, d2) = bicriterion.assign(data);
    let mut cell_size = vec![0usize; bicriterion.centers.len()];
    let mut cell_cost = vec![0.0; bicriterion.centers.len()];
    for (&c, &d) in cell.iter().zip(&d2) {
        cell_size[c] += 1;
        cell_cost[c] += d;
    }
    let n_f = n as f64;
    let mean_cost = bicriterion.cost / n_f;

    let s: Vec<f64> = cell
        .iter()
        .zip(&d2)
        .map(|(&c, &d)| {
            let size = cell_size[c] as f64;
            match variant {
                Variant::Blk17 => {
                    let alpha = 16.0 * ((K as f64).ln() + 2.0);
                    alpha * d / mean_cost
                        + 2.0 * alpha * cell_cost[c] / (size * mean_cost)
                        + 4.0 * n_f / size
                }
                Variant::Bfl16 => d / mean_cost + cell_cost[c] / (size * mean_cost) + n_f / size,
            }
        })
        .collect();
    normalize(s)
}

fn normalize(mut s: Vec<f64>) -> Vec<f64> {
    let total: f64 = s.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        let n = s.len() as f64;
        s.iter_mut().for_each(|v| *v = 1.0 / n);
        return s;
    }
    s.iter_mut().for_each(|v| *v /= total);
    s
}

/// Builds an `m`-point coreset. The bicriterion uses sub-seed
/// `derive(seed, [0])` and the member draws use `derive(seed, [1])`.
pub fn build_coreset(data: &DataSet, m: usize, variant: Variant, seed: u64) -> Result<WeightedPointSet> {
    let n = data.n();
    if m < 2 || m > n {
        return Err(Error::InvalidSize(format!("coreset size {m} must lie in [2, {n}]")));
    }
    let probs = coreset_probabilities(data, variant, seed)?;
    sample_with_probabilities(data, &probs, m, variant.method(), seed)
}

/// The `p_i` that [`build_coreset`] samples from for this seed.
pub fn coreset_probabilities(data: &DataSet, variant: Variant, seed: u64) -> Result<Vec<f64>> {
    let centers = BICRITERION_CENTERS.min(data.n());
    let bicriterion =
        best_bicriterion_with(data, centers, BICRITERION_TRIALS, seed::derive(seed, &[0]))?;
    Ok(sampling_probabilities(data, &bicriterion, variant))
}

fn sample_with_probabilities(
    data: &DataSet,
    probs: &[f64],
    m: usize,
    method: Method,
    seed: u64,
) -> Result<WeightedPointSet> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::InvalidWeights(format!("sampling probabilities: {e}")))?;
    let mut rng = seed::rng(seed::derive(seed, &[1]));
    let mut values = Vec::with_capacity(m * data.dim());
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let i = dist.sample(&mut rng);
        values.extend_from_slice(data.point(i));
        weights.push(1.0 / (m as f64 * probs[i]));
    }
    WeightedPointSet::from_flat(data.dim(), values, weights, data.n(), method, seed)
}

/// `m` distinct points drawn uniformly without replacement, each of weight
/// `n / m`.
pub fn uniform_sample(data: &DataSet, m: usize, seed: u64) -> Result<WeightedPointSet> {
    let n = data.n();
    if m < 2 || m > n {
        return Err(Error::InvalidSize(format!("sample size {m} must lie in [2, {n}]")));
    }
    let mut rng = seed::rng(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    let values = idx.iter().flat_map(|&i| data.point(i).iter().copied()).collect();
    let w = n as f64 / m as f64;
    WeightedPointSet::from_flat(data.dim(), values, vec![w; m], n, Method::Uniform, seed)
}
