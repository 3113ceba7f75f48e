//! Weighted 2-means: cost evaluation, centroid recovery from a [`Partition`]
//! and Lloyd iteration with k-means++ seeding.
//!
//! Weighted k-means++ draws the first center with probability proportional to
//! `w_i` and the second proportional to `w_i · d²(x_i, c_1)`, greedily keeping
//! the best of a few such draws.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreset::WeightedPointSet;
use crate::dataio::{DataSet, Points};
use crate::linalg::{axpy, sq_dist};
use crate::{seed, Error, Partition, Result};

/// Candidates drawn for the second center; the one with the lowest resulting
/// potential is kept (`2 + ⌊ln k⌋` for `k = 2`).
const GREEDY_CANDIDATES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub mu_minus: Vec<f64>,
    pub mu_plus: Vec<f64>,
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.mu_minus.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            mu_minus: self.mu_plus.clone(),
            mu_plus: self.mu_minus.clone(),
        }
    }

    /// Nearest center for `x`: `false` for `mu_minus` (also on ties), `true`
    /// for `mu_plus`, with the squared distance.
    pub fn assign(&self, x: &[f64]) -> (bool, f64) {
        let dm = sq_dist(x, &self.mu_minus);
        let dp = sq_dist(x, &self.mu_plus);
        if dp < dm {
            (true, dp)
        } else {
            (false, dm)
        }
    }
}

fn check_dim<P: Points + ?Sized>(pts: &P, model: &ClusterModel) -> Result<()> {
    if model.mu_plus.len() != model.mu_minus.len() {
        return Err(Error::DimensionMismatch {
            expected: model.mu_minus.len(),
            found: model.mu_plus.len(),
        });
    }
    if pts.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: pts.dim(),
            found: model.dim(),
        });
    }
    Ok(())
}

/// `Σ_i w_i · min(|x_i - μ_-|², |x_i - μ_+|²)`.
pub fn weighted_cost<P: Points + Sync + ?Sized>(pts: &P, model: &ClusterModel) -> Result<f64> {
    check_dim(pts, model)?;
    let cost = if pts.len() >= 4096 {
        (0..pts.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| pts.weight(i) * model.assign(pts.point(i)).1)
            .sum()
    } else {
        (0..pts.len())
            .map(|i| pts.weight(i) * model.assign(pts.point(i)).1)
            .sum()
    };
    Ok(cost)
}

fn check_partition<P: Points + ?Sized>(pts: &P, part: &Partition) -> Result<()> {
    if part.len() != pts.len() {
        return Err(Error::LengthMismatch {
            expected: pts.len(),
            found: part.len(),
        });
    }
    Ok(())
}

/// Weighted centroid of each side of `part`. When one side is empty both
/// centers are the weighted mean of the other side.
pub fn centroids_of<P: Points + ?Sized>(pts: &P, part: &Partition) -> Result<ClusterModel> {
    check_partition(pts, part)?;
    let d = pts.dim();
    let (mut sum_m, mut sum_p) = (vec![0.0; d], vec![0.0; d]);
    let (mut w_m, mut w_p) = (0.0, 0.0);
    for i in 0..pts.len() {
        let w = pts.weight(i);
        if part.in_plus(i) {
            axpy(&mut sum_p, w, pts.point(i));
            w_p += w;
        } else {
            axpy(&mut sum_m, w, pts.point(i));
            w_m += w;
        }
    }
    let mean = |sum: Vec<f64>, w: f64| sum.into_iter().map(|s| s / w).collect::<Vec<_>>();
    Ok(match (w_m > 0.0, w_p > 0.0) {
        (true, true) => ClusterModel {
            mu_minus: mean(sum_m, w_m),
            mu_plus: mean(sum_p, w_p),
        },
        (true, false) => {
            let mu = mean(sum_m, w_m);
            ClusterModel {
                mu_minus: mu.clone(),
                mu_plus: mu,
            }
        }
        (false, true) => {
            let mu = mean(sum_p, w_p);
            ClusterModel {
                mu_minus: mu.clone(),
                mu_plus: mu,
            }
        }
        (false, false) => {
            return Err(Error::InvalidWeights("partitioned points carry no weight".into()))
        }
    })
}

/// The weighted 2-means objective of `part` itself: every point is charged
/// to the centroid of its own side, not to the nearer center.
pub fn partition_cost<P: Points + ?Sized>(pts: &P, part: &Partition) -> Result<f64> {
    let model = centroids_of(pts, part)?;
    Ok((0..pts.len())
        .map(|i| {
            let mu = if part.in_plus(i) {
                &model.mu_plus
            } else {
                &model.mu_minus
            };
            pts.weight(i) * sq_dist(pts.point(i), mu)
        })
        .sum())
}

/// Scores the centers recovered from a coreset partition on the full data.
pub fn evaluate_on_full(data: &DataSet, pts: &WeightedPointSet, part: &Partition) -> Result<f64> {
    let model = centroids_of(pts, part)?;
    weighted_cost(data, &model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LloydConfig {
    pub trials: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            max_iters: 300,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydResult {
    pub model: ClusterModel,
    /// `weighted_cost(pts, model)`.
    pub cost: f64,
    pub iterations: usize,
    /// Index of the winning trial.
    pub trial: usize,
    /// Cost after each center update of the winning trial.
    pub trace: Vec<f64>,
}

/// Best of `cfg.trials` weighted Lloyd runs. Trial `t` seeds its k-means++
/// draw with `seed::derive(seed, &[t])`.
pub fn lloyd_2means<P: Points + Sync + ?Sized>(
    pts: &P,
    cfg: &LloydConfig,
    seed: u64,
) -> Result<LloydResult> {
    if pts.is_empty() {
        return Err(Error::EmptyData);
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidSize("trials must be at least 1".into()));
    }
    let runs: Vec<LloydResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut run = lloyd_run(pts, cfg, seed::derive(seed, &[t as u64]));
            run.trial = t;
            run
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, cur| if cur.cost < best.cost { cur } else { best })
        .expect("trials >= 1"))
}

fn kmeanspp<P: Points + ?Sized>(pts: &P, seed: u64) -> ClusterModel {
    let mut rng = seed::rng(seed);
    let n = pts.len();
    let weights: Vec<f64> = (0..n).map(|i| pts.weight(i)).collect();
    let first = WeightedIndex::new(&weights)
        .map(|d| d.sample(&mut rng))
        .unwrap_or(0);
    let c1 = pts.point(first).to_vec();
    let scores: Vec<f64> = (0..n)
        .map(|i| pts.weight(i) * sq_dist(pts.point(i), &c1))
        .collect();
    let second = match WeightedIndex::new(&scores) {
        Ok(dist) => (0..GREEDY_CANDIDATES)
            .map(|_| dist.sample(&mut rng))
            .map(|c| {
                let potential: f64 = (0..n)
                    .map(|i| scores[i].min(pts.weight(i) * sq_dist(pts.point(i), pts.point(c))))
                    .sum();
                (c, potential)
            })
            .fold((first, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
            .0,
        Err(_) => first,
    };
    ClusterModel {
        mu_minus: c1,
        mu_plus: pts.point(second).to_vec(),
    }
}

fn lloyd_run<P: Points + ?Sized>(pts: &P, cfg: &LloydConfig, seed: u64) -> LloydResult {
    let n = pts.len();
    let d = pts.dim();
    let mut model = kmeanspp(pts, seed);
    let mut labels = vec![false; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut n_plus = 0usize;
        for (i, label) in labels.iter_mut().enumerate() {
            *label = model.assign(pts.point(i)).0;
            n_plus += usize::from(*label);
        }
        if n >= 2 && (n_plus == 0 || n_plus == n) {
            repair_empty(pts, &mut model, &mut labels, n_plus == 0);
        }

        let (mut sum_m, mut sum_p) = (vec![0.0; d], vec![0.0; d]);
        let (mut w_m, mut w_p) = (0.0, 0.0);
        for (i, &plus) in labels.iter().enumerate() {
            let w = pts.weight(i);
            if plus {
                axpy(&mut sum_p, w, pts.point(i));
                w_p += w;
            } else {
                axpy(&mut sum_m, w, pts.point(i));
                w_m += w;
            }
        }
        if w_m > 0.0 {
            model.mu_minus = sum_m.iter().map(|s| s / w_m).collect();
        }
        if w_p > 0.0 {
            model.mu_plus = sum_p.iter().map(|s| s / w_p).collect();
        }
        let cost: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &plus)| {
                let mu = if plus { &model.mu_plus } else { &model.mu_minus };
                pts.weight(i) * sq_dist(pts.point(i), mu)
            })
            .sum();

        let prev = trace.last().copied();
        if let Some(prev) = prev {
            debug_assert!(
                cost <= prev * (1.0 + 1e-12) + 1e-300,
                "Lloyd cost increased from {prev} to {cost}"
            );
        }
        trace.push(cost);
        if prev.is_some_and(|prev| (prev - cost).abs() <= cfg.rel_tol * prev) {
            break;
        }
    }
    if n == 1 {
        model.mu_plus = model.mu_minus.clone();
    }

    let cost = (0..n)
        .map(|i| pts.weight(i) * model.assign(pts.point(i)).1)
        .sum();
    LloydResult {
        model,
        cost,
        iterations,
        trial: 0,
        trace,
    }
}

// Moves the empty side's center onto the point with the largest weighted
// squared distance from the surviving center, then reassigns.
fn repair_empty<P: Points + ?Sized>(
    pts: &P,
    model: &mut ClusterModel,
    labels: &mut [bool],
    plus_is_empty: bool,
) {
    let survivor = if plus_is_empty {
        &model.mu_minus
    } else {
        &model.mu_plus
    };
    let far = (0..pts.len())
        .map(|i| (i, pts.weight(i) * sq_dist(pts.point(i), survivor)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let c = pts.point(far).to_vec();
    if plus_is_empty {
        model.mu_plus = c;
    } else {
        model.mu_minus = c;
    }
    for (i, label) in labels.iter_mut().enumerate() {
        *label = model.assign(pts.point(i)).0;
    }
    if labels.iter().all(|&l| !l) || labels.iter().all(|&l| l) {
        // coincident points: pin the far point to the repaired side
        labels[far] = plus_is_empty;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::Method;

    fn wps(points: &[&[f64]], weights: &[f64]) -> WeightedPointSet {
        WeightedPointSet::new(
            points.iter().map(|p| p.to_vec()).collect(),
            weights.to_vec(),
            points.len(),
            Method::Uniform,
            0,
        )
        .unwrap()
    }

    fn model(a: &[f64], b: &[f64]) -> ClusterModel {
        ClusterModel {
            mu_minus: a.to_vec(),
            mu_plus: b.to_vec(),
        }
    }

    #[test]
    fn cost_with_centers_on_points_is_zero() {
        let pts = wps(&[&[0.0], &[2.0]], &[1.0, 1.0]);
        assert_eq!(weighted_cost(&pts, &model(&[0.0], &[2.0])).unwrap(), 0.0);
    }

    #[test]
    fn cost_uses_weights() {
        let pts = wps(&[&[0.0], &[2.0]], &[3.0, 1.0]);
        assert_eq!(weighted_cost(&pts, &model(&[0.0], &[0.0])).unwrap(), 4.0);
    }

    #[test]
    fn cost_rejects_dimension_mismatch() {
        let pts = wps(&[&[0.0], &[2.0]], &[1.0, 1.0]);
        assert!(matches!(
            weighted_cost(&pts, &model(&[0.0, 1.0], &[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centroids_of_singletons() {
        let part: Partition = "01".parse().unwrap();
        let m = centroids_of(&wps(&[&[0.0], &[2.0]], &[1.0, 1.0]), &part).unwrap();
        assert_eq!(m, model(&[0.0], &[2.0]));
        let m = centroids_of(&wps(&[&[0.0], &[2.0]], &[1.0, 3.0]), &part).unwrap();
        assert_eq!(m, model(&[0.0], &[2.0]));
    }

    #[test]
    fn empty_side_uses_global_centroid() {
        let pts = wps(&[&[0.0], &[2.0]], &[1.0, 3.0]);
        let m = centroids_of(&pts, &"00".parse().unwrap()).unwrap();
        assert_eq!(m, model(&[1.5], &[1.5]));
        let m = centroids_of(&pts, &"11".parse().unwrap()).unwrap();
        assert_eq!(m, model(&[1.5], &[1.5]));
        assert!(centroids_of(&pts, &"011".parse().unwrap()).is_err());
    }

    #[test]
    fn lloyd_on_two_points() {
        let pts = wps(&[&[0.0], &[10.0]], &[1.0, 1.0]);
        let r = lloyd_2means(&pts, &LloydConfig::default(), 3).unwrap();
        assert_eq!(r.cost, 0.0);
        let mut c = [r.model.mu_minus[0], r.model.mu_plus[0]];
        c.sort_by(f64::total_cmp);
        assert_eq!(c, [0.0, 10.0]);
    }

    #[test]
    fn lloyd_on_identical_points() {
        let pts = wps(&[&[4.0, 4.0][..]; 6], &[1.0, 2.0, 3.0, 1.0, 1.0, 1.0]);
        let r = lloyd_2means(&pts, &LloydConfig::default(), 8).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.model, model(&[4.0, 4.0], &[4.0, 4.0]));
    }

    #[test]
    fn lloyd_trace_is_non_increasing() {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() * 5.0 + (i % 3) as f64 * 4.0, t.cos() * 2.0]
            })
            .collect();
        let data = DataSet::from_rows("w", rows).unwrap();
        for seed in 0..10 {
            let r = lloyd_2means(&data, &LloydConfig { trials: 1, ..Default::default() }, seed).unwrap();
            for w in r.trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            assert!(r.iterations <= 300);
        }
    }

    #[test]
    fn lloyd_rejects_zero_trials() {
        let pts = wps(&[&[0.0], &[1.0]], &[1.0, 1.0]);
        let cfg = LloydConfig { trials: 0, ..Default::default() };
        assert!(lloyd_2means(&pts, &cfg, 0).is_err());
    }

    #[test]
    fn repair_splits_a_collapsed_start() {
        // both k-means++ centers can only land on the heavy point when the
        // light point has negligible weight; repair must still separate them
        let pts = wps(&[&[0.0], &[0.0], &[9.0]], &[1.0, 1.0, 1e-9]);
        let r = lloyd_2means(&pts, &LloydConfig::default(), 1).unwrap();
        assert!(r.cost < 1e-12);
    }

    #[test]
    fn full_evaluation_is_label_symmetric() {
        let data = DataSet::from_rows(
            "d",
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![8.0, 8.0], vec![9.0, 9.0]],
        )
        .unwrap();
        let pts = WeightedPointSet::from_dataset(&data).unwrap();
        let part: Partition = "0011".parse().unwrap();
        let a = evaluate_on_full(&data, &pts, &part).unwrap();
        let b = evaluate_on_full(&data, &pts, &part.complement()).unwrap();
        assert_eq!(a, b);
        assert!((a - 1.5).abs() < 1e-12);
    }
}
