use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Largest `m` a [`Partition`] can hold.
pub const MAX_PARTITION_LEN: usize = 64;

/// A two-way split of `m` indexed points.
///
/// Bit `i` is 0 when point `i` belongs to `S_{-1}` (spin `+1`) and 1 when it
/// belongs to `S_{+1}` (spin `-1`). The text form lists bit 0 first, so
/// `"01100"` puts points 1 and 2 in `S_{+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    bits: u64,
    m: usize,
}

impl Partition {
    pub fn new(bits: u64, m: usize) -> Result<Self> {
        if m > MAX_PARTITION_LEN {
            return Err(Error::InvalidSize(format!(
                "partition length {m} exceeds {MAX_PARTITION_LEN}"
            )));
        }
        if m < MAX_PARTITION_LEN && bits >> m != 0 {
            return Err(Error::InvalidSize(format!(
                "bits {bits:#b} do not fit in {m} positions"
            )));
        }
        Ok(Self { bits, m })
    }

    /// Builds a partition from an index without range checks.
    pub(crate) fn from_index(bits: u64, m: usize) -> Self {
        debug_assert!(m <= MAX_PARTITION_LEN && (m == 64 || bits >> m == 0));
        Self { bits, m }
    }

    pub fn from_bools(in_plus: &[bool]) -> Result<Self> {
        let bits = in_plus
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Self::new(bits, in_plus.len())
    }

    pub fn zeros(m: usize) -> Self {
        Self { bits: 0, m }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// True when point `i` is in `S_{+1}`.
    pub fn in_plus(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// Spin of point `i`: `+1.0` for `S_{-1}`, `-1.0` for `S_{+1}`.
    pub fn spin(&self, i: usize) -> f64 {
        if self.in_plus(i) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn complement(&self) -> Self {
        let mask = if self.m == 64 {
            u64::MAX
        } else {
            (1u64 << self.m) - 1
        };
        Self {
            bits: !self.bits & mask,
            m: self.m,
        }
    }

    pub fn count_plus(&self) -> usize {
        self.bits.count_ones() as usize
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            f.write_str(if self.in_plus(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidSize(format!(
                    "invalid partition character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bools)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
