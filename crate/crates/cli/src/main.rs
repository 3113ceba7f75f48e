use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use coreq::bench::{self, ExperimentConfig, QaoaSettings};
use coreq::circuit::{compile_swap_network, export_qasm};
use coreq::clustering::{evaluate_on_full, lloyd_2means, weighted_cost, ClusterModel, LloydConfig};
use coreq::coreset::{build_coreset, uniform_sample, Variant, WeightedPointSet};
use coreq::dataio::{generate_synthetic, load_csv, write_csv, DataSet, Points, SyntheticSpec};
use coreq::hamiltonian::{self, IsingPolynomial, TaylorEvaluator, TaylorOrder};
use coreq::qaoa::{self, QaoaParams};
use coreq::solver::{brute_force_max, brute_force_table, polynomial_table, qaoa_bound};
use coreq::Partition;

/// Coreset-based 2-means clustering with Ising Hamiltonians and simulated QAOA.
#[derive(Parser)]
#[command(name = "coreq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or check CSV data sets.
    #[command(subcommand)]
    Data(DataCmd),
    /// Summarize a data set into weighted points.
    #[command(subcommand)]
    Coreset(CoresetCmd),
    /// Weighted 2-means with Lloyd's algorithm.
    #[command(subcommand)]
    Cluster(ClusterCmd),
    /// Build Ising Hamiltonians from a coreset.
    #[command(subcommand)]
    Ham(HamCmd),
    /// Exhaustive maximization over all partitions.
    Solve(SolveArgs),
    /// QAOA statevector simulation.
    #[command(subcommand)]
    Qaoa(QaoaCmd),
    /// SWAP-network circuit compilation.
    #[command(subcommand)]
    Circuit(CircuitCmd),
    /// Evaluation grid.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Args)]
struct DataIn {
    /// CSV file with one point per row.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Skip the first row.
    #[arg(long)]
    header: bool,
}

impl DataIn {
    fn load(&self) -> Result<DataSet> {
        load_csv(&self.input, self.header).with_context(|| format!("loading {}", self.input.display()))
    }
}

#[derive(Subcommand)]
enum DataCmd {
    /// Write a synthetic rare-cluster data set.
    Gen {
        /// Spec JSON; omitted fields take the desk-scale defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the spec seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a CSV file and report its shape.
    Validate {
        input: PathBuf,
        #[arg(long)]
        header: bool,
    },
}

#[derive(Subcommand)]
enum CoresetCmd {
    Build {
        #[command(flatten)]
        data: DataIn,
        #[arg(long)]
        m: usize,
        /// blk17, bfl16 or uniform.
        #[arg(long, default_value = "bfl16")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ClusterCmd {
    Run {
        #[command(flatten)]
        data: DataIn,
        /// Cluster this coreset and score the centers on the data.
        #[arg(long)]
        coreset: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum HamCmd {
    Build {
        #[arg(long)]
        coreset: PathBuf,
        /// 0 or 1.
        #[arg(long, default_value = "0")]
        order: TaylorOrder,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Maximize a polynomial Hamiltonian.
    #[arg(long, conflicts_with = "coreset")]
    ham: Option<PathBuf>,
    /// Maximize the Taylor objective of a coreset.
    #[arg(long)]
    coreset: Option<PathBuf>,
    #[arg(long, default_value = "inf")]
    order: TaylorOrder,
    /// Full data for scoring maximizers (with --coreset).
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QaoaCmd {
    Run {
        #[arg(long)]
        ham: PathBuf,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 8192)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Full data for scoring the modal bitstring (needs --coreset).
        #[arg(long, value_name = "CSV", requires = "coreset")]
        data: Option<PathBuf>,
        #[arg(long)]
        header: bool,
        #[arg(long, requires = "data")]
        coreset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CircuitCmd {
    Compile {
        #[arg(long)]
        ham: PathBuf,
        /// QAOA parameters, or a `qaoa run` output.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        counts: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Run the evaluation grid from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// QAOA on the best coreset of the configured data.
    Qaoa {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 8192)]
        shots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => write_text(path, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_coreset(path: &Path) -> Result<WeightedPointSet> {
    WeightedPointSet::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_ham(path: &Path) -> Result<IsingPolynomial> {
    IsingPolynomial::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Bare(QaoaParams),
    Wrapped { params: QaoaParams },
}

#[derive(Serialize)]
struct ClusterOutput {
    centers: ClusterModel,
    cost: f64,
    full_data_cost: f64,
    iterations: usize,
    trial: usize,
    seed: u64,
}

#[derive(Serialize)]
struct SolveOutput {
    m: usize,
    order: Option<TaylorOrder>,
    best_energy: f64,
    maximizers: Vec<Partition>,
}

#[derive(Serialize)]
struct QaoaOutput {
    params: QaoaParams,
    #[serde(rename = "F")]
    f: f64,
    converged: bool,
    evaluations: usize,
    shots: usize,
    seed: u64,
    histogram: BTreeMap<Partition, u64>,
    modal: Partition,
    modal_full_cost: Option<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Data(DataCmd::Gen { spec, seed, out }) => {
            let mut spec: SyntheticSpec = match spec {
                Some(path) => serde_json::from_str(&read(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => SyntheticSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let data = generate_synthetic(&spec)?;
            write_csv(&data, &out)?;
            eprintln!("wrote {} points in {} dimensions to {}", data.n(), data.dim(), out.display());
        }
        Command::Data(DataCmd::Validate { input, header }) => {
            let data = load_csv(&input, header).with_context(|| format!("validating {}", input.display()))?;
            println!("{}: {} points, {} dimensions", input.display(), data.n(), data.dim());
        }
        Command::Coreset(CoresetCmd::Build { data, m, variant, seed, out }) => {
            let ds = data.load()?;
            let set = if variant == "uniform" {
                uniform_sample(&ds, m, seed)?
            } else {
                let v: Variant = variant.parse()?;
                build_coreset(&ds, m, v, seed)?
            };
            let text = set.to_json()?;
            match out {
                Some(path) => write_text(&path, &(text + "\n"))?,
                None => println!("{text}"),
            }
        }
        Command::Cluster(ClusterCmd::Run { data, coreset, trials, max_iters, rel_tol, seed, out }) => {
            let ds = data.load()?;
            let cfg = LloydConfig { trials, max_iters, rel_tol };
            let fit = match &coreset {
                Some(path) => lloyd_2means(&load_coreset(path)?, &cfg, seed)?,
                None => lloyd_2means(&ds, &cfg, seed)?,
            };
            let full_data_cost = weighted_cost(&ds, &fit.model)?;
            emit(
                out.as_deref(),
                &ClusterOutput {
                    centers: fit.model,
                    cost: fit.cost,
                    full_data_cost,
                    iterations: fit.iterations,
                    trial: fit.trial,
                    seed,
                },
            )?;
        }
        Command::Ham(HamCmd::Build { coreset, order, out }) => {
            let h = hamiltonian::build(&load_coreset(&coreset)?, order)?;
            let text = h.to_json()?;
            match out {
                Some(path) => write_text(&path, &(text + "\n"))?,
                None => println!("{text}"),
            }
        }
        Command::Solve(args) => solve(args)?,
        Command::Qaoa(QaoaCmd::Run { ham, p, restarts, shots, seed, data, header, coreset, out }) => {
            let h = load_ham(&ham)?;
            let table = polynomial_table(&h)?;
            let opt = qaoa::optimize(&table, p, restarts, seed)?;
            let state = qaoa::prepare(&table, &opt.params)?;
            let histogram = qaoa::sample(&state, shots, coreq::seed::derive(seed, &[1]))?;
            let modal = qaoa::modal(&histogram).context("empty histogram")?;
            let modal_full_cost = match (data, coreset) {
                (Some(d), Some(c)) => {
                    let ds = load_csv(&d, header).with_context(|| format!("loading {}", d.display()))?;
                    Some(evaluate_on_full(&ds, &load_coreset(&c)?, &modal)?)
                }
                _ => None,
            };
            emit(
                out.as_deref(),
                &QaoaOutput {
                    params: opt.params,
                    f: opt.value,
                    converged: opt.converged,
                    evaluations: opt.evaluations,
                    shots,
                    seed,
                    histogram,
                    modal,
                    modal_full_cost,
                },
            )?;
        }
        Command::Circuit(CircuitCmd::Compile { ham, params, out, counts }) => {
            let h = load_ham(&ham)?;
            let params = match serde_json::from_str::<ParamsFile>(&read(&params)?)
                .with_context(|| format!("parsing {}", params.display()))?
            {
                ParamsFile::Bare(p) | ParamsFile::Wrapped { params: p } => p,
            };
            let circ = compile_swap_network(&h, &params)?;
            write_text(&out, &export_qasm(&circ))?;
            let c = circ.counts();
            match counts {
                Some(path) => emit(Some(&path), &c)?,
                None => eprintln!("cnot={} single_qubit={} depth={}", c.cnot, c.single_qubit, c.depth),
            }
        }
        Command::Bench(BenchCmd::Run { config, out }) => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let data = cfg.data.load()?;
            match bench::run_pipeline_on(&data, &cfg) {
                Ok(output) => {
                    bench::write_outputs(&out, &cfg, &data, &output, None)?;
                    eprintln!("{} records written to {}", output.records.len(), out.display());
                }
                Err(failure) => {
                    bench::write_outputs(&out, &cfg, &data, &failure.partial, Some(&failure.error))?;
                    return Err(failure.into());
                }
            }
        }
        Command::Bench(BenchCmd::Qaoa { config, m, p, restarts, shots, out }) => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let record = bench::run_qaoa_experiment(&cfg, &QaoaSettings { m, p, restarts, shots })?;
            emit(out.as_deref(), &record)?;
        }
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let out = args.out.as_deref();
    if let Some(ham) = &args.ham {
        let h = load_ham(ham)?;
        let max = brute_force_table(&polynomial_table(&h)?, false)?;
        return emit(
            out,
            &SolveOutput { m: h.m(), order: None, best_energy: max.best_energy, maximizers: max.maximizers },
        );
    }
    let Some(path) = &args.coreset else {
        bail!("either --ham or --coreset is required");
    };
    let pts = load_coreset(path)?;
    match &args.data {
        Some(d) => {
            let ds = load_csv(d, args.header).with_context(|| format!("loading {}", d.display()))?;
            emit(out, &qaoa_bound(&ds, &pts, args.order)?)
        }
        None => {
            let eval = TaylorEvaluator::new(&pts);
            let max = brute_force_max(|z| eval.energy(args.order, z), pts.m(), true)?;
            emit(
                out,
                &SolveOutput {
                    m: pts.m(),
                    order: Some(args.order),
                    best_energy: max.best_energy,
                    maximizers: max.maximizers,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
