//! Exhaustive maximization over all `2^m` partitions.
//!
//! Two partitions tie when their energies are within `TIE_RTOL · max|E|` of
//! the maximum. The reported best energy is the energy of the smallest-index
//! maximizer, so the result is the same with or without the complement
//! shortcut and for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{evaluate_on_full, partition_cost};
use crate::coreset::WeightedPointSet;
use crate::dataio::DataSet;
use crate::hamiltonian::{IsingPolynomial, TaylorEvaluator, TaylorOrder};
use crate::{Error, Partition, Result};

/// Resource guard for exhaustive enumeration.
pub const MAX_QUBITS: usize = 28;
/// Largest `m` for which an energy table is materialized (8·2^m bytes).
pub const MAX_TABLE_QUBITS: usize = 24;
pub const TIE_RTOL: f64 = 1e-9;

const GRAY_CHUNK_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub best_energy: f64,
    /// All maximizers in increasing index order.
    pub maximizers: Vec<Partition>,
}

fn check_m(m: usize, max: usize) -> Result<()> {
    if m > max {
        return Err(Error::TooManyQubits { m, max });
    }
    if m == 0 {
        return Err(Error::InvalidSize("need at least one bit".into()));
    }
    Ok(())
}

/// Maximizes `energy` over bit patterns `0..2^m`.
///
/// With `symmetric` the caller promises `energy(z) == energy(!z)`; only
/// patterns with the top bit clear are evaluated and maximizers are mirrored.
pub fn brute_force_max<F>(energy: F, m: usize, symmetric: bool) -> Result<Maximum>
where
    F: Fn(u64) -> f64 + Sync,
{
    check_m(m, MAX_QUBITS)?;
    let span = if symmetric { 1usize << (m - 1) } else { 1usize << m };

    // pass 1: max and scale
    let (max, scale) = (0..span)
        .into_par_iter()
        .with_min_len(1 << 10)
        .map(|z| {
            let e = energy(z as u64);
            (e, e.abs())
        })
        .reduce(
            || (f64::NEG_INFINITY, 0.0),
            |a, b| (a.0.max(b.0), a.1.max(b.1)),
        );
    let cutoff = max - TIE_RTOL * scale;

    // pass 2: collect everything within tolerance of the max
    let mut found: Vec<u64> = (0..span as u64)
        .into_par_iter()
        .filter(|&z| energy(z) >= cutoff)
        .collect();
    let best_energy = energy(found[0]);
    if symmetric {
        let mask = (1u64 << m) - 1;
        let mirrored: Vec<u64> = found.iter().map(|z| !z & mask).collect();
        found.extend(mirrored);
        found.sort_unstable();
        found.dedup();
    }
    Ok(Maximum {
        best_energy,
        maximizers: found.into_iter().map(|z| Partition::from_index(z, m)).collect(),
    })
}

/// Maximizes a materialized table of `2^m` energies.
pub fn brute_force_table(table: &[f64], symmetric: bool) -> Result<Maximum> {
    let m = table_qubits(table.len())?;
    brute_force_max(|z| table[z as usize], m, symmetric)
}

pub(crate) fn table_qubits(len: usize) -> Result<usize> {
    if !len.is_power_of_two() || len < 2 {
        return Err(Error::InvalidSize(format!(
            "energy table length {len} is not 2^m with m >= 1"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Energies of all `2^m` basis states of `h`, index `z` holding the energy of
/// the partition with bits `z`.
///
/// States are visited in Gray-code order inside blocks of `2^12`: each step
/// flips one spin and updates only the terms that touch it. Every block starts
/// from a full evaluation, which bounds rounding drift.
pub fn polynomial_table(h: &IsingPolynomial) -> Result<Vec<f64>> {
    let m = h.m();
    check_m(m, MAX_TABLE_QUBITS)?;
    let block_bits = m.min(GRAY_CHUNK_BITS);
    let block = 1usize << block_bits;

    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); block_bits];
    for (t, term) in h.terms().iter().enumerate() {
        for &q in term.support.iter().filter(|&&q| q < block_bits) {
            touching[q].push(t);
        }
    }

    let mut table = vec![0.0; 1 << m];
    table
        .par_chunks_mut(block)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = (chunk as u64) << block_bits;
            let mut vals: Vec<f64> = h
                .terms()
                .iter()
                .map(|t| {
                    let odd = t.support.iter().filter(|&&q| (base >> q) & 1 == 1).count() % 2;
                    if odd == 1 {
                        -t.coeff
                    } else {
                        t.coeff
                    }
                })
                .collect();
            let mut energy = h.offset() + vals.iter().sum::<f64>();
            out[0] = energy;
            for step in 1..block {
                let flip = step.trailing_zeros() as usize;
                for &t in &touching[flip] {
                    energy -= 2.0 * vals[t];
                    vals[t] = -vals[t];
                }
                let gray = step ^ (step >> 1);
                out[gray] = energy;
            }
        });
    Ok(table)
}

/// Energies of all partitions at a Taylor order.
pub fn taylor_table(pts: &WeightedPointSet, order: TaylorOrder) -> Result<Vec<f64>> {
    let m = pts.m();
    check_m(m, MAX_TABLE_QUBITS)?;
    let eval = TaylorEvaluator::new(pts);
    Ok((0..1usize << m)
        .into_par_iter()
        .with_min_len(256)
        .map(|z| eval.energy(order, z as u64))
        .collect())
}

/// Brute-force optimum of a coreset Hamiltonian, scored on the full data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub order: TaylorOrder,
    pub partition: Partition,
    pub coreset_energy: f64,
    /// Weighted 2-means cost of `partition` on the coreset.
    pub coreset_cost: f64,
    pub full_cost: f64,
    /// Size of the tied maximizer set the partition was picked from.
    pub n_maximizers: usize,
}

/// Highest-energy partition of the order-`order` objective; among tied
/// maximizers the one with the lowest full-data cost wins (then lowest index).
pub fn qaoa_bound(data: &DataSet, pts: &WeightedPointSet, order: TaylorOrder) -> Result<Bound> {
    let eval = TaylorEvaluator::new(pts);
    // every Taylor order is symmetric under S_- <-> S_+
    let max = brute_force_max(|z| eval.energy(order, z), pts.m(), true)?;
    let scored = max
        .maximizers
        .par_iter()
        .map(|p| evaluate_on_full(data, pts, p).map(|c| (*p, c)))
        .collect::<Result<Vec<_>>>()?;
    let (partition, full_cost) = scored
        .into_iter()
        .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
        .expect("at least one maximizer");
    Ok(Bound {
        order,
        partition,
        coreset_energy: eval.energy(order, partition.bits()),
        coreset_cost: partition_cost(pts, &partition)?,
        full_cost,
        n_maximizers: max.maximizers.len(),
    })
}
