//! End-to-end evaluation grid: summarize, cluster, score on the full data.
//!
//! For every size `m` and every repeat `r` the pipeline
//!
//! * runs weighted Lloyd on the full data (`full_kmeans`),
//! * draws a uniform sample and a sensitivity coreset of `m` points, runs
//!   Lloyd on each and scores the resulting centers on the full data,
//! * for `m` in `bound_m`, takes the repeat whose coreset clustering scored
//!   best and brute-forces each configured Taylor order on it.
//!
//! Seeds are split from the master seed with [`seed::derive`]:
//!
//! | arm | seed path |
//! |---|---|
//! | full data Lloyd | `[0, r]` |
//! | uniform sample | `[1, m, r]` |
//! | coreset | `[2, m, r]` |
//! | QAOA optimizer / sampler | `[3, m]` / `[4, m]` |
//!
//! Within a sample seed `s`, the summary is drawn with `derive(s, &[0])` and
//! Lloyd runs with `derive(s, &[1])`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{compile_swap_network, GateCounts};
use crate::clustering::{evaluate_on_full, lloyd_2means, partition_cost, weighted_cost, LloydConfig};
use crate::coreset::{build_coreset, uniform_sample, Variant, WeightedPointSet};
use crate::dataio::{generate_synthetic, load_csv, DataSet, SyntheticSpec};
use crate::hamiltonian::{build_order0, TaylorOrder};
use crate::qaoa::{self, QaoaParams};
use crate::solver::{brute_force_table, polynomial_table, qaoa_bound};
use crate::{seed, Error, Partition, Result};

const FULL_TAG: u64 = 0;
const UNIFORM_TAG: u64 = 1;
const CORESET_TAG: u64 = 2;
const QAOA_OPT_TAG: u64 = 3;
const QAOA_SAMPLE_TAG: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        has_header: bool,
    },
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<DataSet> {
        match self {
            DataSource::Csv { path, has_header } => load_csv(path, *has_header),
            DataSource::Synthetic(spec) => generate_synthetic(spec),
        }
    }
}

/// Summary strategies compared by the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    FullKmeans,
    Uniform,
    Coreset,
}

/// What a [`ResultRecord`] measures. Sorts in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    FullKmeans,
    Uniform,
    Coreset,
    Bound,
    Qaoa,
}

impl From<BenchMethod> for RecordKind {
    fn from(m: BenchMethod) -> Self {
        match m {
            BenchMethod::FullKmeans => RecordKind::FullKmeans,
            BenchMethod::Uniform => RecordKind::Uniform,
            BenchMethod::Coreset => RecordKind::Coreset,
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::FullKmeans => "full_kmeans",
            RecordKind::Uniform => "uniform",
            RecordKind::Coreset => "coreset",
            RecordKind::Bound => "bound",
            RecordKind::Qaoa => "qaoa",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    /// Lowest full-data cost over the repeats.
    #[default]
    Best,
    /// Mean over the repeats with min and max.
    MeanMinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<BenchMethod>,
    #[serde(default = "default_orders")]
    pub orders: Vec<TaylorOrder>,
    /// Sizes at which the brute-force bounds run.
    #[serde(default = "default_bound_m")]
    pub bound_m: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub report: Report,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coreset_variant: Variant,
    #[serde(default)]
    pub lloyd: LloydConfig,
}

fn default_m_list() -> Vec<usize> {
    vec![5, 10, 15, 20]
}

fn default_methods() -> Vec<BenchMethod> {
    vec![BenchMethod::FullKmeans, BenchMethod::Uniform, BenchMethod::Coreset]
}

fn default_orders() -> Vec<TaylorOrder> {
    vec![TaylorOrder::Finite(0), TaylorOrder::Finite(1), TaylorOrder::Finite(2), TaylorOrder::Infinite]
}

fn default_bound_m() -> Vec<usize> {
    vec![5, 10]
}

fn default_repeats() -> usize {
    10
}

impl ExperimentConfig {
    pub fn new(data: DataSource) -> Self {
        Self {
            data,
            m_list: default_m_list(),
            methods: default_methods(),
            orders: default_orders(),
            bound_m: default_bound_m(),
            repeats: default_repeats(),
            report: Report::default(),
            seed: 0,
            coreset_variant: Variant::default(),
            lloyd: LloydConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() {
            return Err(Error::Config("m_list must not be empty".into()));
        }
        if let Some(m) = self.m_list.iter().find(|&&m| m < 2) {
            return Err(Error::Config(format!("summary size {m} is below 2")));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() && (self.orders.is_empty() || self.bound_sizes().is_empty()) {
            return Err(Error::Config("nothing to run: no methods and no bounds".into()));
        }
        if let Some(m) = self.bound_sizes().into_iter().find(|&m| m > crate::solver::MAX_QUBITS) {
            return Err(Error::TooManyQubits { m, max: crate::solver::MAX_QUBITS });
        }
        Ok(())
    }

    /// Parses JSON; a relative CSV path is resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        if let (DataSource::Csv { path, .. }, Some(base)) = (&mut cfg.data, base_dir) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    /// `m_list ∩ bound_m` in `m_list` order, without duplicates.
    pub fn bound_sizes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &m in &self.m_list {
            if self.bound_m.contains(&m) && !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    fn unique_m(&self) -> Vec<usize> {
        let mut out = self.m_list.clone();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of aggregated records [`run_pipeline`] produces.
    pub fn expected_records(&self) -> usize {
        let mut methods = self.methods.clone();
        methods.sort_unstable();
        methods.dedup();
        let mut orders = self.orders.clone();
        orders.sort_unstable();
        orders.dedup();
        methods.len() * self.unique_m().len() + orders.len() * self.bound_sizes().len()
    }
}

/// One repeat of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: RecordKind,
    pub m: usize,
    pub order: Option<TaylorOrder>,
    pub repeat: usize,
    pub seed: u64,
    pub full_data_cost: f64,
    pub coreset_cost: Option<f64>,
    pub partition: Option<Partition>,
    pub wall_time: f64,
}

/// A grid cell aggregated over repeats per [`Report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: RecordKind,
    pub m: usize,
    pub order: Option<TaylorOrder>,
    pub repeats: usize,
    /// Best or mean full-data cost.
    pub full_data_cost: f64,
    pub full_data_cost_min: Option<f64>,
    pub full_data_cost_max: Option<f64>,
    pub coreset_cost: Option<f64>,
    pub partition: Option<Partition>,
    /// Seed of the lowest-cost repeat.
    pub seed: u64,
    /// Seconds summed over the repeats.
    pub wall_time: f64,
}

impl ResultRecord {
    /// Equality ignoring timing.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub records: Vec<ResultRecord>,
    pub runs: Vec<RunRecord>,
}

/// Records finished before a failure, together with the failure.
#[derive(Debug)]
pub struct PipelineFailure {
    pub partial: BenchOutput,
    pub error: Error,
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pipeline failed after {} records: {}",
            self.partial.records.len(),
            self.error
        )
    }
}

impl std::error::Error for PipelineFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for PipelineFailure {
    fn from(error: Error) -> Self {
        Self {
            partial: BenchOutput { records: Vec::new(), runs: Vec::new() },
            error,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Summary of size `m`, the Lloyd clustering on it and its full-data score.
#[derive(Debug, Clone)]
pub struct SummaryRun {
    pub summary: WeightedPointSet,
    pub coreset_cost: f64,
    pub full_data_cost: f64,
    pub partition: Option<Partition>,
    pub seed: u64,
}

/// Draws one summary and clusters it.
pub fn summarize_and_cluster(
    data: &DataSet,
    method: BenchMethod,
    m: usize,
    cfg: &ExperimentConfig,
    sample_seed: u64,
) -> Result<SummaryRun> {
    let draw = seed::derive(sample_seed, &[0]);
    let summary = match method {
        BenchMethod::Uniform => uniform_sample(data, m, draw)?,
        BenchMethod::Coreset => build_coreset(data, m, cfg.coreset_variant, draw)?,
        BenchMethod::FullKmeans => {
            return Err(Error::Config("full_kmeans has no summary".into()));
        }
    };
    let fit = lloyd_2means(&summary, &cfg.lloyd, seed::derive(sample_seed, &[1]))?;
    let partition = if m <= crate::partition::MAX_PARTITION_LEN {
        let sides: Vec<bool> = summary.rows().map(|x| fit.model.assign(x).0).collect();
        Some(Partition::from_bools(&sides)?)
    } else {
        None
    };
    Ok(SummaryRun {
        full_data_cost: weighted_cost(data, &fit.model)?,
        coreset_cost: fit.cost,
        summary,
        partition,
        seed: sample_seed,
    })
}

fn arm_seed(cfg: &ExperimentConfig, method: BenchMethod, m: usize, repeat: usize) -> u64 {
    match method {
        BenchMethod::FullKmeans => seed::derive(cfg.seed, &[FULL_TAG, repeat as u64]),
        BenchMethod::Uniform => seed::derive(cfg.seed, &[UNIFORM_TAG, m as u64, repeat as u64]),
        BenchMethod::Coreset => seed::derive(cfg.seed, &[CORESET_TAG, m as u64, repeat as u64]),
    }
}

/// The coreset repeat with the lowest full-data cost at size `m`.
pub fn best_coreset(data: &DataSet, cfg: &ExperimentConfig, m: usize) -> Result<SummaryRun> {
    let runs = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| summarize_and_cluster(data, BenchMethod::Coreset, m, cfg, arm_seed(cfg, BenchMethod::Coreset, m, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|a, b| if b.full_data_cost < a.full_data_cost { b } else { a })
        .expect("repeats >= 1"))
}

fn aggregate(runs: &[RunRecord], report: Report) -> ResultRecord {
    let best = runs
        .iter()
        .reduce(|a, b| if b.full_data_cost < a.full_data_cost { b } else { a })
        .expect("non-empty repeat set");
    let wall_time = runs.iter().map(|r| r.wall_time).sum();
    match report {
        Report::Best => ResultRecord {
            method: best.method,
            m: best.m,
            order: best.order,
            repeats: runs.len(),
            full_data_cost: best.full_data_cost,
            full_data_cost_min: None,
            full_data_cost_max: None,
            coreset_cost: best.coreset_cost,
            partition: best.partition,
            seed: best.seed,
            wall_time,
        },
        Report::MeanMinMax => {
            let n = runs.len() as f64;
            let costs = runs.iter().map(|r| r.full_data_cost);
            let coreset: Option<Vec<f64>> = runs.iter().map(|r| r.coreset_cost).collect();
            ResultRecord {
                method: best.method,
                m: best.m,
                order: best.order,
                repeats: runs.len(),
                full_data_cost: costs.clone().sum::<f64>() / n,
                full_data_cost_min: Some(costs.clone().fold(f64::INFINITY, f64::min)),
                full_data_cost_max: Some(costs.fold(f64::NEG_INFINITY, f64::max)),
                coreset_cost: coreset.map(|c| c.iter().sum::<f64>() / n),
                partition: None,
                seed: best.seed,
                wall_time,
            }
        }
    }
}

fn sort_key(r: &RunRecord) -> (RecordKind, usize, Option<TaylorOrder>, usize) {
    (r.method, r.m, r.order, r.repeat)
}

/// Runs the grid on already-loaded data.
pub fn run_pipeline_on(data: &DataSet, cfg: &ExperimentConfig) -> Result<BenchOutput, PipelineFailure> {
    cfg.validate()?;
    let mut methods = cfg.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    let mut orders = cfg.orders.clone();
    orders.sort_unstable();
    orders.dedup();

    let mut out = BenchOutput { records: Vec::new(), runs: Vec::new() };
    let fail = |out: BenchOutput, error: Error| PipelineFailure { partial: out, error };

    // full-data runs do not depend on m
    let full_runs: Vec<(f64, f64, u64)> = if methods.contains(&BenchMethod::FullKmeans) {
        match (0..cfg.repeats)
            .into_par_iter()
            .map(|r| {
                let s = arm_seed(cfg, BenchMethod::FullKmeans, 0, r);
                timed(|| lloyd_2means(data, &cfg.lloyd, s)).map(|(fit, t)| (fit.cost, t, s))
            })
            .collect::<Result<Vec<_>>>()
        {
            Ok(v) => v,
            Err(e) => return Err(fail(out, e)),
        }
    } else {
        Vec::new()
    };

    let bound_sizes = cfg.bound_sizes();
    for m in cfg.unique_m() {
        let mut cell_runs: Vec<RunRecord> = Vec::new();
        for &method in &methods {
            if method == BenchMethod::FullKmeans {
                cell_runs.extend(full_runs.iter().enumerate().map(|(r, &(cost, t, s))| RunRecord {
                    method: RecordKind::FullKmeans,
                    m,
                    order: None,
                    repeat: r,
                    seed: s,
                    full_data_cost: cost,
                    coreset_cost: None,
                    partition: None,
                    wall_time: t,
                }));
                continue;
            }
            let runs = (0..cfg.repeats)
                .into_par_iter()
                .map(|r| {
                    let s = arm_seed(cfg, method, m, r);
                    timed(|| summarize_and_cluster(data, method, m, cfg, s)).map(|(run, t)| RunRecord {
                        method: method.into(),
                        m,
                        order: None,
                        repeat: r,
                        seed: s,
                        full_data_cost: run.full_data_cost,
                        coreset_cost: Some(run.coreset_cost),
                        partition: run.partition,
                        wall_time: t,
                    })
                })
                .collect::<Result<Vec<_>>>();
            match runs {
                Ok(r) => cell_runs.extend(r),
                Err(e) => return Err(fail(out, e)),
            }
        }

        if bound_sizes.contains(&m) && !orders.is_empty() {
            let bounds = timed(|| {
                let best = best_coreset(data, cfg, m)?;
                orders
                    .par_iter()
                    .map(|&order| {
                        timed(|| qaoa_bound(data, &best.summary, order)).map(|(b, t)| RunRecord {
                            method: RecordKind::Bound,
                            m,
                            order: Some(order),
                            repeat: 0,
                            seed: best.seed,
                            full_data_cost: b.full_cost,
                            coreset_cost: Some(b.coreset_cost),
                            partition: Some(b.partition),
                            wall_time: t,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            });
            match bounds {
                Ok((b, _)) => cell_runs.extend(b),
                Err(e) => return Err(fail(out, e)),
            }
        }

        cell_runs.sort_by_key(sort_key);
        let mut groups: BTreeMap<(RecordKind, Option<TaylorOrder>), Vec<RunRecord>> = BTreeMap::new();
        for r in &cell_runs {
            groups.entry((r.method, r.order)).or_default().push(r.clone());
        }
        out.records.extend(groups.values().map(|g| aggregate(g, cfg.report)));
        out.runs.extend(cell_runs);
    }

    out.records.sort_by_key(|a| (a.method, a.m, a.order));
    out.runs.sort_by_key(sort_key);
    Ok(out)
}

/// Loads the configured data and runs the grid.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<BenchOutput, PipelineFailure> {
    let data = cfg.data.load()?;
    run_pipeline_on(&data, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaoaSettings {
    pub m: usize,
    pub p: usize,
    pub restarts: usize,
    pub shots: usize,
}

impl Default for QaoaSettings {
    fn default() -> Self {
        Self {
            m: 5,
            p: 1,
            restarts: 20,
            shots: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaRecord {
    /// Scores the modal bitstring; `order` is 0.
    pub record: ResultRecord,
    pub params: QaoaParams,
    /// Optimized `<H>` on the order-0 Hamiltonian.
    pub expectation: f64,
    pub optimizer_converged: bool,
    pub shots: usize,
    pub modal: Partition,
    pub modal_count: u64,
    pub modal_full_cost: f64,
    pub modal_in_argmax: bool,
    /// Brute-force maximizers of the same Hamiltonian.
    pub argmax: Vec<Partition>,
    /// Probability mass the optimized state puts on `argmax`.
    pub argmax_probability: f64,
    pub circuit: GateCounts,
    pub histogram: BTreeMap<Partition, u64>,
}

/// Order-0 QAOA on the best coreset of size `settings.m`.
pub fn run_qaoa_experiment_on(
    data: &DataSet,
    cfg: &ExperimentConfig,
    settings: &QaoaSettings,
) -> Result<QaoaRecord> {
    let start = Instant::now();
    let m = settings.m;
    if m > qaoa::MAX_QUBITS {
        return Err(Error::TooManyQubits { m, max: qaoa::MAX_QUBITS });
    }
    let best = best_coreset(data, cfg, m)?;
    let h = build_order0(&best.summary)?;
    let table = polynomial_table(&h)?;
    let opt = qaoa::optimize(
        &table,
        settings.p,
        settings.restarts,
        seed::derive(cfg.seed, &[QAOA_OPT_TAG, m as u64]),
    )?;
    let state = qaoa::prepare(&table, &opt.params)?;
    let histogram = qaoa::sample(
        &state,
        settings.shots,
        seed::derive(cfg.seed, &[QAOA_SAMPLE_TAG, m as u64]),
    )?;
    let modal = qaoa::modal(&histogram).expect("shots >= 1");
    let argmax = brute_force_table(&table, true)?.maximizers;
    let probs = state.probabilities();
    let modal_full_cost = evaluate_on_full(data, &best.summary, &modal)?;
    let circuit = compile_swap_network(&h, &opt.params)?.counts();
    Ok(QaoaRecord {
        record: ResultRecord {
            method: RecordKind::Qaoa,
            m,
            order: Some(TaylorOrder::Finite(0)),
            repeats: cfg.repeats,
            full_data_cost: modal_full_cost,
            full_data_cost_min: None,
            full_data_cost_max: None,
            coreset_cost: Some(partition_cost(&best.summary, &modal)?),
            partition: Some(modal),
            seed: best.seed,
            wall_time: start.elapsed().as_secs_f64(),
        },
        params: opt.params,
        expectation: opt.value,
        optimizer_converged: opt.converged,
        shots: settings.shots,
        modal,
        modal_count: histogram[&modal],
        modal_full_cost,
        modal_in_argmax: argmax.contains(&modal),
        argmax_probability: argmax.iter().map(|p| probs[p.bits() as usize]).sum(),
        argmax,
        circuit,
        histogram,
    })
}

pub fn run_qaoa_experiment(cfg: &ExperimentConfig, settings: &QaoaSettings) -> Result<QaoaRecord> {
    let data = cfg.data.load()?;
    run_qaoa_experiment_on(&data, cfg, settings)
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    data_name: &'a str,
    n: usize,
    dim: usize,
    records: usize,
    runs: usize,
    complete: bool,
    error: Option<String>,
    files: [&'a str; 2],
}

pub const RESULTS_FILE: &str = "results.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `results.csv`, `runs.csv` and `manifest.json` into `dir`.
pub fn write_outputs(
    dir: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    data: &DataSet,
    output: &BenchOutput,
    error: Option<&Error>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv_rows(&dir.join(RESULTS_FILE), &output.records)?;
    write_csv_rows(&dir.join(RUNS_FILE), &output.runs)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        data_name: data.name(),
        n: data.n(),
        dim: crate::dataio::Points::dim(data),
        records: output.records.len(),
        runs: output.runs.len(),
        complete: error.is_none(),
        error: error.map(ToString::to_string),
        files: [RESULTS_FILE, RUNS_FILE],
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}
