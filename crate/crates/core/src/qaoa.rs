//! Noiseless depth-`p` QAOA on a diagonal Hamiltonian given as an energy
//! table.
//!
//! Layer `j` multiplies amplitude `a_z` by `exp(-i γ_j E(z))` and then applies
//! `exp(-i β_j X)` to every qubit. The objective `F = <ψ|H|ψ>` is maximized
//! with Nelder–Mead from several starting points.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::solver::table_qubits;
use crate::{seed, Error, Partition, Result};

pub mod nelder_mead;

pub use nelder_mead::{NelderMead, NelderMeadResult};

/// Largest register simulated.
pub const MAX_QUBITS: usize = 24;
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let params = Self { gammas, betas };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidParams("depth p must be at least 1".into()));
        }
        if self.gammas.len() != self.betas.len() {
            return Err(Error::InvalidParams(format!(
                "{} gammas but {} betas",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if self.gammas.iter().chain(&self.betas).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite angle".into()));
        }
        Ok(())
    }

    /// Inverse of the `[γ_1, β_1, γ_2, β_2, ...]` layout used by the optimizer.
    fn from_flat(x: &[f64]) -> Self {
        Self {
            gammas: x.iter().step_by(2).copied().collect(),
            betas: x.iter().skip(1).step_by(2).copied().collect(),
        }
    }
}

/// `2^m` amplitudes; index `z` is the basis state whose qubit `i` is bit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    m: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(m: usize) -> Result<Self> {
        if m > MAX_QUBITS {
            return Err(Error::TooManyQubits { m, max: MAX_QUBITS });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { m, amps })
    }

    /// `|+>^{⊗m}`
    pub fn uniform(m: usize) -> Result<Self> {
        if m > MAX_QUBITS {
            return Err(Error::TooManyQubits { m, max: MAX_QUBITS });
        }
        let a = Complex64::new((1u64 << m) as f64, 0.0).sqrt().inv();
        Ok(Self {
            m,
            amps: vec![a; 1 << m],
        })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let m = table_qubits(amps.len())?;
        let state = Self { m, amps };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "state norm² {} is not 1",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Multiplies each amplitude by `exp(-i γ E(z))`.
    pub fn apply_phase(&mut self, table: &[f64], gamma: f64) {
        self.amps
            .par_iter_mut()
            .with_min_len(1 << 12)
            .zip(table.par_iter())
            .for_each(|(a, &e)| *a *= Complex64::from_polar(1.0, -gamma * e));
    }

    /// Applies the 2x2 unitary `[[u00, u01], [u10, u11]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, u: [[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        let kernel = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = u[0][0] * x + u[0][1] * y;
                *a1 = u[1][0] * x + u[1][1] * y;
            }
        };
        if self.amps.len() >= 1 << 14 {
            self.amps.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amps.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    /// `exp(-i β X)` on every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let u = rx(2.0 * beta);
        for q in 0..self.m {
            self.apply_single(q, u);
        }
    }

    /// CNOT with `control` and `target`.
    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let (c, t) = (1usize << control, 1usize << target);
        for z in 0..self.amps.len() {
            if z & c != 0 && z & t == 0 {
                self.amps.swap(z, z | t);
            }
        }
    }

    /// `|<self|other>|`-aligned maximum amplitude difference: `other` is
    /// rotated by the global phase of `<self|other>` before comparing.
    pub fn max_diff_up_to_phase(&self, other: &StateVector) -> f64 {
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap.conj() / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// `RX(θ) = exp(-i θ X / 2)`
pub fn rx(theta: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    [[c, s], [s, c]]
}

/// `RZ(θ) = exp(-i θ Z / 2)`
pub fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

pub fn hadamard() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Runs the QAOA layers from `|+>^{⊗m}`.
pub fn prepare(table: &[f64], params: &QaoaParams) -> Result<StateVector> {
    params.validate()?;
    let m = table_qubits(table.len())?;
    let mut state = StateVector::uniform(m)?;
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        state.apply_phase(table, gamma);
        state.apply_mixer(beta);
        debug_assert!((state.norm_sqr() - 1.0).abs() < NORM_TOL);
    }
    Ok(state)
}

/// `Σ_z |a_z|² E(z)`
pub fn expectation(state: &StateVector, table: &[f64]) -> Result<f64> {
    if table.len() != state.amps.len() {
        return Err(Error::LengthMismatch {
            expected: state.amps.len(),
            found: table.len(),
        });
    }
    Ok(state
        .amps
        .iter()
        .zip(table)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum())
}

/// Settings for [`optimize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub p: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub initial_step: f64,
    pub diameter_tol: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            p: 1,
            restarts: 20,
            seed: 0,
            max_evals: 10_000,
            initial_step: 0.1,
            diameter_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    /// Angles for the raw table, `β` reduced into `[0, π)`.
    pub params: QaoaParams,
    /// `F` at `params`.
    pub value: f64,
    /// Whether the winning Nelder–Mead run met its simplex tolerance.
    pub converged: bool,
    pub evaluations: usize,
    /// Spread `max E - min E` used to normalize the search.
    pub energy_spread: f64,
    /// Start index of the winning run.
    pub start: usize,
}

/// [`optimize_with`] using default Nelder–Mead settings.
pub fn optimize(table: &[f64], p: usize, restarts: usize, seed: u64) -> Result<OptimizeResult> {
    optimize_with(
        table,
        &OptimizeConfig {
            p,
            restarts,
            seed,
            ..OptimizeConfig::default()
        },
    )
}

/// Maximizes `F` with multi-start Nelder–Mead.
///
/// The search runs on the table divided by its spread, so the start box
/// `γ ∈ [0, π)`, `β ∈ [0, π/2)` is meaningful at any energy scale. Start `k`
/// is Halton point `k/2 + 1` of that box for even `k`, and a uniform draw from
/// `seed::derive(seed, &[k])` for odd `k`. Each start depends only on its own
/// index, so a run with more restarts tries a superset of the starts.
pub fn optimize_with(table: &[f64], cfg: &OptimizeConfig) -> Result<OptimizeResult> {
    if cfg.p == 0 {
        return Err(Error::InvalidParams("depth p must be at least 1".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidParams("restarts must be at least 1".into()));
    }
    let m = table_qubits(table.len())?;
    if m > MAX_QUBITS {
        return Err(Error::TooManyQubits { m, max: MAX_QUBITS });
    }
    let (lo, hi) = table
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let spread = if hi > lo { hi - lo } else { 1.0 };
    let scaled: Vec<f64> = table.iter().map(|e| e / spread).collect();

    let objective = |x: &[f64]| -> f64 {
        let params = QaoaParams::from_flat(x);
        match prepare(&scaled, &params) {
            Ok(state) => -expectation(&state, &scaled).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    let nm = NelderMead {
        max_evals: cfg.max_evals,
        initial_step: cfg.initial_step,
        diameter_tol: cfg.diameter_tol,
        ..NelderMead::default()
    };

    let runs: Vec<(usize, NelderMeadResult)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| (k, nm.minimize(objective, &start_point(k, cfg.p, cfg.seed))))
        .collect();
    let (start, best) = runs
        .into_iter()
        .reduce(|a, b| if b.1.value < a.1.value { b } else { a })
        .expect("restarts >= 1");

    let mut params = QaoaParams::from_flat(&best.x);
    params.gammas.iter_mut().for_each(|g| *g /= spread);
    params.betas.iter_mut().for_each(|b| *b = b.rem_euclid(PI));
    let value = expectation(&prepare(table, &params)?, table)?;
    Ok(OptimizeResult {
        params,
        value,
        converged: best.converged,
        evaluations: best.evaluations,
        energy_spread: spread,
        start,
    })
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut out, mut f) = (0.0, inv);
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

fn start_point(k: usize, p: usize, seed: u64) -> Vec<f64> {
    let span = |dim: usize| if dim.is_multiple_of(2) { PI } else { FRAC_PI_2 };
    if k.is_multiple_of(2) {
        let index = (k / 2 + 1) as u64;
        (0..2 * p)
            .map(|dim| span(dim) * radical_inverse(index, PRIMES[dim % PRIMES.len()]))
            .collect()
    } else {
        let mut rng = seed::rng(seed::derive(seed, &[k as u64]));
        (0..2 * p).map(|dim| rng.random::<f64>() * span(dim)).collect()
    }
}

/// Draws `shots` measurement outcomes from `|a_z|²`.
pub fn sample(state: &StateVector, shots: usize, seed: u64) -> Result<BTreeMap<Partition, u64>> {
    if shots == 0 {
        return Err(Error::InvalidParams("shots must be at least 1".into()));
    }
    let dist = WeightedIndex::new(state.probabilities())
        .map_err(|e| Error::InvalidParams(format!("state probabilities: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
    for _ in 0..shots {
        let z = dist.sample(&mut rng) as u64;
        *counts.entry(Partition::from_index(z, state.m)).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Most frequent outcome; ties go to the smallest index.
pub fn modal(histogram: &BTreeMap<Partition, u64>) -> Option<Partition> {
    histogram
        .iter()
        .fold(None, |best: Option<(&Partition, &u64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .map(|(p, _)| *p)
}
