// Dense vector kernels. Long vectors use pairwise summation.

const PAIRWISE_MIN_LEN: usize = 1024;
const PAIRWISE_BLOCK: usize = 128;

fn pairwise_sum<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, term: F) -> f64 {
    if hi - lo <= PAIRWISE_BLOCK {
        (lo..hi).map(term).sum()
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() >= PAIRWISE_MIN_LEN {
        pairwise_sum(0, a.len(), |i| a[i] * b[i])
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() >= PAIRWISE_MIN_LEN {
        pairwise_sum(0, a.len(), |i| {
            let d = a[i] - b[i];
            d * d
        })
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum()
    }
}

/// `acc += scale * x`
pub(crate) fn axpy(acc: &mut [f64], scale: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += scale * v;
    }
}
