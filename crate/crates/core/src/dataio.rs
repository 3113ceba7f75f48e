//! Point sets: CSV ingestion, CSV output and the synthetic rare-cluster
//! generator.
//!
//! Synthetic data is drawn from a ChaCha20 stream seeded with
//! [`SyntheticSpec::seed`]. Cluster centers come first (majority center, then
//! one per rare cluster), each coordinate uniform in
//! `[-center_scale, center_scale]`. Points follow, majority cluster first and
//! then the rare clusters in order, each coordinate `center + spread * N(0, 1)`
//! with the standard normal drawn by the ziggurat sampler of `rand_distr`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

/// Read access to an indexed, possibly weighted, set of points.
pub trait Points {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    fn weight(&self, i: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn total_weight(&self) -> f64 {
        (0..self.len()).map(|i| self.weight(i)).sum()
    }
}

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    name: String,
    dim: usize,
    values: Vec<f64>,
}

impl DataSet {
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptyData)?.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::RaggedRow {
                    row: r as u64 + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(name, dim, values)
    }

    pub fn from_flat(name: impl Into<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSize("dimension must be at least 1".into()));
        }
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                expected: values.len().div_ceil(dim) * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: (pos / dim) as u64 + 1,
                col: pos % dim + 1,
            });
        }
        Ok(Self {
            name: name.into(),
            dim,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Every point multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_flat(
            self.name.clone(),
            self.dim,
            self.values.iter().map(|v| v * s).collect(),
        )
    }
}

impl Points for DataSet {
    fn len(&self) -> usize {
        self.n()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn weight(&self, _i: usize) -> f64 {
        1.0
    }
}

/// Loads one point per row. Row numbers in errors are 1-based file lines.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, has_header, name)
}

pub fn read_csv(reader: impl std::io::Read, has_header: bool, name: String) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut dim = None;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                col: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: c + 1 });
            }
            values.push(v);
        }
    }
    let dim = dim.ok_or(Error::EmptyData)?;
    DataSet::from_flat(name, dim, values)
}

/// Writes one point per row with round-trip exact float formatting.
pub fn write_csv(data: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_rows(data, &mut out).map_err(|e| Error::io(path, e))
}

pub fn write_rows(data: &DataSet, out: &mut impl Write) -> std::io::Result<()> {
    for row in data.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v:?}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Gaussian mixture with one majority cluster and several small rare ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_total: usize,
    pub dim: usize,
    pub n_rare_clusters: usize,
    pub points_per_rare_cluster: usize,
    pub cluster_spread: f64,
    pub center_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Desk-scale version of the rare-cluster benchmark: 4000 points in 16
    /// dimensions, ten rare clusters of five points each.
    fn default() -> Self {
        Self {
            n_total: 4000,
            dim: 16,
            n_rare_clusters: 10,
            points_per_rare_cluster: 5,
            cluster_spread: 1.0,
            center_scale: 100.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn n_rare_points(&self) -> usize {
        self.n_rare_clusters * self.points_per_rare_cluster
    }

    pub fn n_majority(&self) -> usize {
        self.n_total - self.n_rare_points()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.n_total == 0 {
            return bad("n_total must be positive");
        }
        if self.n_rare_clusters > 0 && self.points_per_rare_cluster == 0 {
            return bad("rare clusters need a positive point count");
        }
        let rare = self
            .n_rare_clusters
            .checked_mul(self.points_per_rare_cluster)
            .ok_or_else(|| Error::InvalidSpec("rare point count overflows".into()))?;
        if self.n_total <= rare {
            return bad("n_total must exceed the rare point count (majority cluster must be nonempty)");
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread > 0.0) {
            return bad("cluster_spread must be positive and finite");
        }
        if !(self.center_scale.is_finite() && self.center_scale >= 0.0) {
            return bad("center_scale must be nonnegative and finite");
        }
        Ok(())
    }

    /// Cluster label per generated point: 0 for the majority cluster, `k + 1`
    /// for rare cluster `k`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n_majority()];
        for k in 0..self.n_rare_clusters {
            labels.extend(std::iter::repeat_n(k + 1, self.points_per_rare_cluster));
        }
        labels
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DataSet> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let d = spec.dim;

    let centers: Vec<Vec<f64>> = (0..=spec.n_rare_clusters)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if spec.center_scale > 0.0 {
                        rng.random_range(-spec.center_scale..=spec.center_scale)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(spec.n_total * d);
    let counts = std::iter::once(spec.n_majority())
        .chain(std::iter::repeat_n(spec.points_per_rare_cluster, spec.n_rare_clusters));
    for (center, count) in centers.iter().zip(counts) {
        for _ in 0..count {
            for &c in center {
                let z: f64 = rng.sample(StandardNormal);
                values.push(c + spec.cluster_spread * z);
            }
        }
    }
    DataSet::from_flat(format!("synthetic-{}", spec.seed), d, values)
}
