//! `roadfusion`: embed road networks, pick support sets, run simulations and
//! check the decentralization loss bound.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use roadfusion::active::{bound_report, JointWalkModel};
use roadfusion::gp::greedy_select;
use roadfusion::io::{support_to_string, write_embedding};
use roadfusion::road_kernel::{
    geodesic_distances, mds_embed_with, select_dimension, EmbeddedKernel, Embedding,
    KernelHyperparams, MdsOptions, RoadNetwork, DEFAULT_RETAINED_MASS,
};
use roadfusion::sim::{
    final_rows, init_world, run_experiment, summarize, write_metrics, write_summary, Algorithm,
    Config, ExperimentSetup, MetricsRow,
};

#[derive(Parser, Debug)]
#[command(
    name = "roadfusion",
    version,
    about = "Gaussian-process sensing on road networks"
)]
struct Cli {
    /// Base seed mixed into every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed a road network and write the coordinate matrix.
    Embed(EmbedArgs),
    /// Greedily pick a support set of maximally uncertain segments.
    SelectSupport(SupportArgs),
    /// Run the configured experiment grid and write the metrics table.
    Simulate(SimulateArgs),
    /// Run several algorithms on the same grid and print final errors.
    Compare(CompareArgs),
    /// Compare decentralized and centralized walk planning on one instance.
    BoundCheck(BoundArgs),
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Road-network JSON document.
    network: PathBuf,
    /// Embedding dimension [default: smallest keeping 95% of the spectrum].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    dim: Option<u32>,
    /// Stress-majorization sweeps after classical scaling.
    #[arg(long, default_value_t = 0)]
    sweeps: usize,
    /// Output matrix file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SupportArgs {
    /// Road-network JSON document.
    network: PathBuf,
    /// Number of segments to select.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    size: u32,
    /// Kernel signal variance.
    #[arg(long, default_value_t = 1.0)]
    signal_variance: f64,
    /// Kernel length-scale; repeat once per embedding dimension or give one.
    #[arg(long = "length-scale", default_values_t = [1.0])]
    length_scales: Vec<f64>,
    /// Embedding dimension [default: smallest keeping 95% of the spectrum].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    dim: Option<u32>,
    /// Stress-majorization sweeps after classical scaling.
    #[arg(long, default_value_t = 0)]
    sweeps: usize,
    /// Output file, one segment id per line [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgorithmChoice {
    D2fas,
    Sod,
    Fgp,
    All,
}

impl AlgorithmChoice {
    fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmChoice::D2fas => vec![Algorithm::D2fas],
            AlgorithmChoice::Sod => vec![Algorithm::Sod],
            AlgorithmChoice::Fgp => vec![Algorithm::Fgp],
            AlgorithmChoice::All => Algorithm::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Algorithms to run [default: those listed in the config].
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmChoice>,
    /// Metrics table [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round means over seeds.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Algorithms to compare.
    #[arg(long, value_enum, default_value = "all")]
    algorithm: AlgorithmChoice,
    /// Also write the full metrics table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Experiment config (TOML); the first K, L and seed are used.
    config: PathBuf,
    /// JSON report [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_network(path: &Path) -> Result<RoadNetwork> {
    RoadNetwork::load(path).with_context(|| format!("cannot load network {}", path.display()))
}

fn embed(net: &RoadNetwork, dim: Option<u32>, sweeps: usize) -> Result<Embedding> {
    let d = geodesic_distances(net).imputed();
    let dim = match dim {
        Some(d) => d as usize,
        None if net.len() < 2 => 1,
        None => select_dimension(&d, DEFAULT_RETAINED_MASS)?,
    };
    Ok(mds_embed_with(
        &d,
        dim,
        &MdsOptions {
            refine_sweeps: sweeps,
        },
    )?)
}

fn load_config(path: &Path, algorithm: Option<AlgorithmChoice>) -> Result<Config> {
    let mut config =
        Config::load(path).with_context(|| format!("cannot load config {}", path.display()))?;
    if let Some(choice) = algorithm {
        config.algorithms = choice.algorithms();
    }
    Ok(config)
}

fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let embedding = embed(&net, args.dim, args.sweeps)?;
    write_embedding(&args.out, &embedding)?;
    println!(
        "dimension {} stress {:e}",
        embedding.dim(),
        embedding.stress()
    );
    Ok(())
}

fn cmd_select_support(args: &SupportArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let embedding = Arc::new(embed(&net, args.dim, args.sweeps)?);
    let scales = match args.length_scales.len() {
        1 => vec![args.length_scales[0]; embedding.dim()],
        n if n == embedding.dim() => args.length_scales.clone(),
        n => bail!(
            "{n} length-scales given for a {}-dimensional embedding",
            embedding.dim()
        ),
    };
    let hyper = KernelHyperparams::new(args.signal_variance, scales, 0.0)?;
    let kernel = EmbeddedKernel::with_constant_mean(embedding, hyper, 0.0)?;
    let all: Vec<usize> = (0..net.len()).collect();
    let support = greedy_select(&kernel, &all, args.size as usize)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(support_to_string(&net, &support).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn setup(config: Config, seed: u64) -> Result<ExperimentSetup> {
    let network = config.network_path.clone();
    ExperimentSetup::load(config, seed)
        .with_context(|| format!("cannot set up the experiment on {}", network.display()))
}

fn simulate(config: Config, seed: u64) -> Result<Vec<MetricsRow>> {
    Ok(run_experiment(&setup(config, seed)?)?)
}

fn cmd_simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    let rows = simulate(load_config(&args.config, args.algorithm)?, seed)?;
    let mut out = output(args.out.as_deref())?;
    write_metrics(&mut out, &rows)?;
    out.flush()?;
    if let Some(path) = &args.summary {
        write_summary(output(Some(path))?, &summarize(&rows))?;
    }
    eprintln!("{} metrics rows", rows.len());
    Ok(())
}

fn cmd_compare(args: &CompareArgs, seed: u64) -> Result<()> {
    let rows = simulate(load_config(&args.config, Some(args.algorithm))?, seed)?;
    if let Some(path) = &args.out {
        write_metrics(output(Some(path))?, &rows)?;
    }
    let finals = final_rows(&rows);
    println!("algorithm  K  L  runs  mean_|D|  mean_rmse  payload/round");
    let mut keys: Vec<(Algorithm, usize, usize)> = finals
        .iter()
        .map(|r| (r.algorithm, r.sensors, r.walk_length))
        .collect();
    keys.dedup();
    for key in keys {
        let runs: Vec<&&MetricsRow> = finals
            .iter()
            .filter(|r| (r.algorithm, r.sensors, r.walk_length) == key)
            .collect();
        let n = runs.len() as f64;
        let d = runs.iter().map(|r| r.observed_segments as f64).sum::<f64>() / n;
        let e = runs.iter().map(|r| r.rmse).sum::<f64>() / n;
        let cell: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| (r.algorithm, r.sensors, r.walk_length) == key && r.round > 0)
            .collect();
        let payload =
            cell.iter().map(|r| r.payload_scalars as f64).sum::<f64>() / cell.len().max(1) as f64;
        println!(
            "{:<9} {:>2} {:>2} {:>5} {:>9.1} {:>10.5} {:>14.1}",
            key.0,
            key.1,
            key.2,
            runs.len(),
            d,
            e,
            payload
        );
    }
    Ok(())
}

fn cmd_bound_check(args: &BoundArgs, seed: u64) -> Result<()> {
    let config = load_config(&args.config, Some(AlgorithmChoice::D2fas))?;
    let sensors = config.sensor_counts()[0];
    let walk_length = config.walk_lengths()[0];
    let run_seed = config.seeds[0];
    let (epsilon, budget) = (config.epsilon, config.walk_search_budget);
    let setup = setup(config, seed)?;
    let world = init_world(&setup, Algorithm::D2fas, sensors, walk_length, run_seed)?;
    let (model, coordination) = world.fused_planning_state()?;
    debug_assert_eq!(model.walk_sets().len(), sensors);
    let report = bound_report(
        &model,
        &coordination.components,
        epsilon,
        walk_length,
        budget,
    )?;
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    let status = match report.satisfied(1e-9) {
        Some(true) => "bound holds",
        Some(false) => "bound violated",
        None => "condition failed",
    };
    eprintln!(
        "condition {:.6e}, gap {:.6e}: {status}",
        report.condition_value, report.achieved_gap
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Embed(a) => cmd_embed(a),
        Command::SelectSupport(a) => cmd_select_support(a),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Compare(a) => cmd_compare(a, cli.seed),
        Command::BoundCheck(a) => cmd_bound_check(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .context("cannot start worker threads")
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
