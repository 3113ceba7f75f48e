//! Diagonal objectives over the `2^m` partitions of a weighted point set.
//!
//! For a partition with side weights `W_-`, `W_+` (total `W`) the exact
//! objective is the weighted intercluster distance
//! `W_- W_+ |μ_+ - μ_-|²`, which is maximal exactly where the weighted
//! 2-means cost is minimal. Writing it in terms of `G_ij = w_i w_j x_i·x_j`
//! gives
//!
//! ```text
//! Σ_i r_i G_ii + 2 Σ_{i<j} r_ij G_ij
//! ```
//!
//! where `r = W_+/W_-` for terms inside `S_-`, `r = W_-/W_+` inside `S_+`,
//! and `r = -1` for pairs split across the cut. Each ratio equals `1/x - 1`
//! with `x` the side's weight fraction. A [`TaylorOrder`] of `j` replaces
//! `1/x` by its degree-`j` Taylor polynomial around `x = 1/2`:
//! `T_j(x) = Σ_{t≤j} (-1)^t 2^{t+1} (x - 1/2)^t`. Order 0 is the equal-weight
//! objective (`r = 1`), order 1 is the linear `T_1(x) = 4 - 4x`, and
//! [`TaylorOrder::Infinite`] evaluates the exact objective.
//!
//! Orders 0 and 1 are quadratic in the spins and can be extracted as
//! [`IsingPolynomial`]s; higher orders are only evaluated per partition.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clustering::{centroids_of, partition_cost};
use crate::coreset::WeightedPointSet;
use crate::dataio::Points;
use crate::linalg::{axpy, dot, sq_dist};
use crate::{Error, Partition, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingTerm {
    pub coeff: f64,
    pub support: Vec<usize>,
}

/// `offset + Σ coeff · Π_{i ∈ support} Z_i` over `m` spins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsingPolynomial {
    m: usize,
    offset: f64,
    terms: Vec<IsingTerm>,
}

impl IsingPolynomial {
    /// Canonicalizes `terms`: supports are sorted, repeated indices cancel
    /// (`Z_i² = 1`), equal supports merge and zero coefficients are dropped.
    pub fn new(m: usize, offset: f64, terms: impl IntoIterator<Item = IsingTerm>) -> Result<Self> {
        let mut acc = SpinAccumulator::new(m);
        acc.offset = offset;
        for term in terms {
            if let Some(&index) = term.support.iter().find(|&&i| i >= m) {
                return Err(Error::IndexOutOfRange { index, m });
            }
            acc.add(term.coeff, &term.support);
        }
        Ok(acc.finish())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn terms(&self) -> &[IsingTerm] {
        &self.terms
    }

    /// Largest support size, 0 for a constant polynomial.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.support.len()).max().unwrap_or(0)
    }

    /// Coefficient of the monomial on exactly `support` (sorted).
    pub fn coeff(&self, support: &[usize]) -> f64 {
        self.terms
            .iter()
            .find(|t| t.support == support)
            .map_or(0.0, |t| t.coeff)
    }

    /// Energy of the basis state whose bits are `z`.
    pub(crate) fn energy_of_index(&self, z: u64) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|t| {
                    let odd = t.support.iter().filter(|&&i| (z >> i) & 1 == 1).count() % 2;
                    if odd == 1 {
                        -t.coeff
                    } else {
                        t.coeff
                    }
                })
                .sum::<f64>()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PolynomialJson = serde_json::from_str(text)?;
        Self::new(raw.m, raw.offset, raw.terms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Deserialize)]
struct PolynomialJson {
    m: usize,
    #[serde(default)]
    offset: f64,
    terms: Vec<IsingTerm>,
}

impl<'de> Deserialize<'de> for IsingPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(deserializer)?;
        Self::new(raw.m, raw.offset, raw.terms).map_err(serde::de::Error::custom)
    }
}

struct SpinAccumulator {
    m: usize,
    offset: f64,
    terms: BTreeMap<Vec<usize>, f64>,
}

impl SpinAccumulator {
    fn new(m: usize) -> Self {
        Self {
            m,
            offset: 0.0,
            terms: BTreeMap::new(),
        }
    }

    fn add(&mut self, coeff: f64, support: &[usize]) {
        let mut s = support.to_vec();
        s.sort_unstable();
        let mut reduced: Vec<usize> = Vec::with_capacity(s.len());
        for i in s {
            if reduced.last() == Some(&i) {
                reduced.pop();
            } else {
                reduced.push(i);
            }
        }
        if reduced.is_empty() {
            self.offset += coeff;
        } else {
            *self.terms.entry(reduced).or_insert(0.0) += coeff;
        }
    }

    fn add_pair(&mut self, coeff: f64, i: usize, j: usize) {
        if i == j {
            self.offset += coeff;
        } else {
            *self.terms.entry(vec![i.min(j), i.max(j)]).or_insert(0.0) += coeff;
        }
    }

    fn finish(self) -> IsingPolynomial {
        IsingPolynomial {
            m: self.m,
            offset: self.offset,
            terms: self
                .terms
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(support, coeff)| IsingTerm { coeff, support })
                .collect(),
        }
    }
}

/// Truncation order of the `1/x` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaylorOrder {
    Finite(u32),
    Infinite,
}

impl fmt::Display for TaylorOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaylorOrder::Finite(j) => write!(f, "{j}"),
            TaylorOrder::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for TaylorOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(TaylorOrder::Infinite),
            other => other
                .parse()
                .map(TaylorOrder::Finite)
                .map_err(|_| Error::Config(format!("invalid Taylor order {other:?}"))),
        }
    }
}

impl Serialize for TaylorOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaylorOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(j) => Ok(TaylorOrder::Finite(j)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Degree-`order` Taylor polynomial of `1/x` around `x = 1/2`.
pub fn taylor_inverse(order: u32, x: f64) -> f64 {
    let u = x - 0.5;
    let mut term = 2.0;
    let mut sum = 2.0;
    for _ in 0..order {
        term *= -2.0 * u;
        sum += term;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterWeights {
    pub minus: f64,
    pub plus: f64,
    pub total: f64,
}

impl ClusterWeights {
    pub fn of<P: Points + ?Sized>(pts: &P, part: &Partition) -> Self {
        let (mut minus, mut plus) = (0.0, 0.0);
        for i in 0..pts.len() {
            if part.in_plus(i) {
                plus += pts.weight(i);
            } else {
                minus += pts.weight(i);
            }
        }
        Self {
            minus,
            plus,
            total: minus + plus,
        }
    }
}

fn check_m(pts: &WeightedPointSet) -> Result<()> {
    if pts.m() < 2 {
        return Err(Error::InvalidSize(format!("need m >= 2, got {}", pts.m())));
    }
    Ok(())
}

fn gram(pts: &WeightedPointSet) -> Vec<f64> {
    let m = pts.m();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = pts.weight(i) * pts.weight(j) * dot(pts.point(i), pts.point(j));
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
    }
    g
}

/// Equal-weight objective `Σ_{i<j} w_i w_j (x_i·x_j) Z_i Z_j`.
///
/// Its energy is `(E_0 - Σ_i w_i² |x_i|²) / 2` where `E_0` is the order-0
/// [`taylor_energy`]. The weighted MAX-CUT edge weights are the negated
/// coefficients.
pub fn build_order0(pts: &WeightedPointSet) -> Result<IsingPolynomial> {
    check_m(pts)?;
    let m = pts.m();
    let g = gram(pts);
    let mut acc = SpinAccumulator::new(m);
    for i in 0..m {
        for j in i + 1..m {
            acc.add_pair(g[i * m + j], i, j);
        }
    }
    Ok(acc.finish())
}

/// First-order objective, expanded from
///
/// ```text
/// Σ_i (1 - (2 Z_i / W) Σ_l w_l Z_l) G_ii
///   + 2 Σ_{i<j} (Z_i Z_j - ((Z_i + Z_j) / W) Σ_l w_l Z_l) G_ij
/// ```
///
/// with `Z_l² = 1` folded into the offset. Every product has two spins, so the
/// result has only pairwise terms plus an offset. Its energy equals
/// [`taylor_energy`] at order 1 for every partition.
pub fn build_order1(pts: &WeightedPointSet) -> Result<IsingPolynomial> {
    check_m(pts)?;
    let m = pts.m();
    let g = gram(pts);
    let w = pts.weights();
    let total: f64 = w.iter().sum();
    let mut acc = SpinAccumulator::new(m);
    for i in 0..m {
        let a = g[i * m + i];
        acc.offset += a;
        for (l, &wl) in w.iter().enumerate() {
            acc.add_pair(-2.0 * a * wl / total, i, l);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let b = g[i * m + j];
            acc.add_pair(2.0 * b, i, j);
            for (l, &wl) in w.iter().enumerate() {
                let c = -2.0 * b * wl / total;
                acc.add_pair(c, i, l);
                acc.add_pair(c, j, l);
            }
        }
    }
    Ok(acc.finish())
}

/// Polynomial extraction for the orders that have one (0 and 1).
pub fn build(pts: &WeightedPointSet, order: TaylorOrder) -> Result<IsingPolynomial> {
    match order {
        TaylorOrder::Finite(0) => build_order0(pts),
        TaylorOrder::Finite(1) => build_order1(pts),
        other => Err(Error::UnsupportedOrder(other.to_string())),
    }
}

/// Energy of `part` under `h`.
pub fn eval_polynomial(h: &IsingPolynomial, part: &Partition) -> Result<f64> {
    if part.len() != h.m() {
        return Err(Error::LengthMismatch {
            expected: h.m(),
            found: part.len(),
        });
    }
    Ok(h.energy_of_index(part.bits()))
}

/// Precomputed Gram matrix for evaluating many partitions of one point set.
#[derive(Debug, Clone)]
pub struct TaylorEvaluator<'a> {
    pts: &'a WeightedPointSet,
    gram: Vec<f64>,
    total: f64,
}

impl<'a> TaylorEvaluator<'a> {
    pub fn new(pts: &'a WeightedPointSet) -> Self {
        Self {
            pts,
            gram: gram(pts),
            total: pts.weights().iter().sum(),
        }
    }

    pub fn m(&self) -> usize {
        self.pts.m()
    }

    /// Energy of the partition with bits `z`.
    pub fn energy(&self, order: TaylorOrder, z: u64) -> f64 {
        match order {
            TaylorOrder::Finite(j) => self.finite(j, z),
            TaylorOrder::Infinite => self.exact(z),
        }
    }

    fn finite(&self, order: u32, z: u64) -> f64 {
        let m = self.m();
        let w = self.pts.weights();
        let plus = |i: usize| (z >> i) & 1 == 1;
        let w_plus: f64 = (0..m).filter(|&i| plus(i)).map(|i| w[i]).sum();
        let w_minus: f64 = (0..m).filter(|&i| !plus(i)).map(|i| w[i]).sum();
        let r_minus = taylor_inverse(order, w_minus / self.total) - 1.0;
        let r_plus = taylor_inverse(order, w_plus / self.total) - 1.0;

        let mut energy = 0.0;
        for i in 0..m {
            let row = &self.gram[i * m..(i + 1) * m];
            let r_i = if plus(i) { r_plus } else { r_minus };
            energy += r_i * row[i];
            for (j, g) in row.iter().enumerate().skip(i + 1) {
                let r = if plus(i) != plus(j) { -1.0 } else { r_i };
                energy += 2.0 * r * g;
            }
        }
        energy
    }

    fn exact(&self, z: u64) -> f64 {
        let pts = self.pts;
        let d = pts.dim();
        let (mut sum_m, mut sum_p) = (vec![0.0; d], vec![0.0; d]);
        let (mut w_m, mut w_p) = (0.0, 0.0);
        for i in 0..pts.m() {
            let w = pts.weight(i);
            if (z >> i) & 1 == 1 {
                axpy(&mut sum_p, w, pts.point(i));
                w_p += w;
            } else {
                axpy(&mut sum_m, w, pts.point(i));
                w_m += w;
            }
        }
        if w_m == 0.0 || w_p == 0.0 {
            return 0.0;
        }
        sum_m.iter_mut().for_each(|v| *v /= w_m);
        sum_p.iter_mut().for_each(|v| *v /= w_p);
        w_m * w_p * sq_dist(&sum_m, &sum_p)
    }
}

/// Taylor-order energy of `part`.
pub fn taylor_energy(pts: &WeightedPointSet, order: TaylorOrder, part: &Partition) -> Result<f64> {
    if part.len() != pts.m() {
        return Err(Error::LengthMismatch {
            expected: pts.m(),
            found: part.len(),
        });
    }
    Ok(TaylorEvaluator::new(pts).energy(order, part.bits()))
}

/// The law-of-total-variance split of a partitioned point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterDecomposition {
    /// `Σ_i w_i |x_i - μ|²` around the global weighted centroid.
    pub scatter: f64,
    /// Within-cluster cost of the partition.
    pub t1: f64,
    /// `(W_- W_+ / W) |μ_- - μ_+|²`.
    pub t3: f64,
}

/// Computes scatter, the within-cluster term and the between-cluster term.
/// The cross term vanishes, so `scatter = t1 + t3`.
pub fn scatter_decomposition(pts: &WeightedPointSet, part: &Partition) -> Result<ScatterDecomposition> {
    let model = centroids_of(pts, part)?;
    let t1 = partition_cost(pts, part)?;
    let cw = ClusterWeights::of(pts, part);

    let global = centroids_of(pts, &Partition::zeros(pts.m()))?.mu_minus;
    let scatter = pts
        .rows()
        .zip(pts.weights())
        .map(|(x, w)| w * sq_dist(x, &global))
        .sum();
    let t3 = if cw.minus == 0.0 || cw.plus == 0.0 {
        0.0
    } else {
        cw.minus * cw.plus / cw.total * sq_dist(&model.mu_minus, &model.mu_plus)
    };
    Ok(ScatterDecomposition { scatter, t1, t3 })
}
