use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use hawkes::bench::{format_bench_csv, parse_grid, parse_size, run_bench, BenchConfig};
use hawkes::cache::read_events_cached;
use hawkes::{read_events, read_params, write_events, write_fit_report, write_params, FileError, Pool, WallClock};
use hawkes_core::gradients::{finite_difference_check, Exclusion};
use hawkes_core::simulator::{gen_hub_spoke, gen_scale_free, simulate_thinning, HubSpoke, SimConfig, SimError};
use hawkes_core::trainer::fit;
use hawkes_core::{Backend, EventSequence, HawkesParams, Positivity, RegConfig, TrainConfig};

const EXIT_CHECK: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_GUARD: u8 = 3;

#[derive(Parser)]
#[command(name = "hawkes", version, about = "Simulate and fit multivariate exponential Hawkes processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate events by thinning.
    Simulate(SimulateArgs),
    /// Fit parameters by exact maximum likelihood.
    Fit(FitArgs),
    /// Compare analytic gradients with central differences.
    GradCheck(GradCheckArgs),
    /// Time one epoch per back-end over a grid of sequence lengths.
    Bench(BenchArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["params", "hub", "scale_free"])))]
#[command(group(ArgGroup::new("length").required(true).args(["horizon", "target_events"])))]
struct SimulateArgs {
    /// Parameters JSON file.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Hub-and-spoke network with this many nodes.
    #[arg(long, value_name = "M")]
    hub: Option<usize>,
    /// Scale-free network with this many nodes (radius 0.8).
    #[arg(long, value_name = "M")]
    scale_free: Option<usize>,
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
    /// Stop at this many events; the horizon becomes the last event time.
    #[arg(long, value_name = "N")]
    target_events: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Decay rates for generated networks, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    gamma: Vec<f64>,
    /// Base rate of every node in a scale-free network.
    #[arg(long, default_value_t = 0.001)]
    mu: f64,
    /// Base rate of the non-hub nodes in a hub-and-spoke network.
    #[arg(long, default_value_t = 1e-3)]
    other_mu: f64,
    /// Write the generated parameters here.
    #[arg(long)]
    out_params: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000_000)]
    max_events: usize,
    /// Simulate even when the branching radius is at least 1.
    #[arg(long)]
    allow_unstable: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    events: PathBuf,
    /// Number of exponential kernels.
    #[arg(long = "k", default_value_t = 1)]
    kernels: usize,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.05)]
    hinge: f64,
    /// Events per batch (unbatched when omitted).
    #[arg(long, value_parser = parse_size)]
    batch_size: Option<usize>,
    #[arg(long, default_value = "scan")]
    backend: Backend,
    /// Worker threads (0 = all CPUs).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Starting parameters (default: data-scaled initial guess).
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    freeze_gamma: bool,
    /// Feasibility handling: `projection` (clamp after each step) or `softplus`.
    #[arg(long, default_value = "projection", value_parser = parse_positivity)]
    positivity: Positivity,
    #[arg(long)]
    out_params: PathBuf,
    #[arg(long)]
    out_report: PathBuf,
    /// Write 0 in the report's seconds column, making it reproducible byte for byte.
    #[arg(long)]
    no_timings: bool,
    /// Load events through a binary cache stored next to the CSV.
    #[arg(long)]
    cache: bool,
}

#[derive(Args)]
struct GradCheckArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.05)]
    hinge: f64,
    /// Largest accepted absolute error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value = "scan")]
    backend: Backend,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "N=2^10..2^20")]
    grid: String,
    /// Node counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "125")]
    m: Vec<usize>,
    #[arg(long = "k", default_value_t = 3)]
    kernels: usize,
    #[arg(long, value_delimiter = ',', default_value = "naive,sequential,scan")]
    backends: Vec<Backend>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Seconds per cell before larger sizes are skipped.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    /// Largest N for the naive back-end.
    #[arg(long, value_parser = parse_size, default_value = "2^15")]
    naive_cap: usize,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::new(EXIT_INPUT, e)
    }
}

fn pool(workers: usize) -> Result<Pool, Failure> {
    Pool::new(workers).map_err(|e| Failure::new(EXIT_GUARD, format!("thread pool: {e}")))
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::UnstableParams { .. } => Failure::new(EXIT_INPUT, e),
        SimError::ExplosionGuard { .. } => Failure::new(EXIT_GUARD, e),
        other => Failure::new(EXIT_INPUT, other),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let params = if let Some(path) = &args.params {
        read_params(path)?
    } else if let Some(m) = args.hub {
        let mut hub = HubSpoke::new(m, args.gamma.clone());
        hub.other_mu = args.other_mu;
        gen_hub_spoke(&hub).map_err(sim_failure)?
    } else {
        let m = args.scale_free.expect("argument group guarantees a source");
        if args.gamma.len() != 1 {
            return Err(Failure::new(EXIT_INPUT, "scale-free networks use a single kernel; pass one --gamma"));
        }
        let alpha = gen_scale_free(m, args.seed, 0.8).map_err(sim_failure)?;
        HawkesParams::new(vec![args.mu; m], alpha, args.gamma.clone()).map_err(|e| Failure::new(EXIT_INPUT, e))?
    };
    let radius = params.branching_matrix().spectral_radius;
    let config = SimConfig {
        params: params.clone(),
        horizon: args.horizon,
        target_events: args.target_events,
        max_events: args.max_events,
        seed: args.seed,
        allow_unstable: args.allow_unstable,
    };
    let seq = simulate_thinning(&config).map_err(|e| {
        let mut f = sim_failure(e);
        f.message = format!("{} (branching radius {radius})", f.message);
        f
    })?;
    write_events(&args.out, &seq)?;
    if let Some(path) = &args.out_params {
        write_params(path, &params)?;
    }
    println!("events: {}", seq.len());
    println!("horizon: {}", seq.horizon());
    println!("branching radius: {radius}");
    Ok(())
}

fn load_events(path: &Path, cache: bool) -> Result<EventSequence, Failure> {
    if cache {
        Ok(read_events_cached(path)?.0)
    } else {
        Ok(read_events(path)?)
    }
}

fn parse_positivity(s: &str) -> Result<Positivity, String> {
    match s {
        "projection" => Ok(Positivity::Projection),
        "softplus" => Ok(Positivity::Softplus),
        _ => Err(format!("unknown positivity mode `{s}` (expected projection or softplus)")),
    }
}

fn run_fit(args: FitArgs) -> Result<(), Failure> {
    let seq = load_events(&args.events, args.cache)?;
    let reg = RegConfig::new(args.lambda1, args.hinge).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let init = match &args.init {
        Some(path) => read_params(path)?,
        None => HawkesParams::initial_guess(&seq, args.kernels).map_err(|e| Failure::new(EXIT_INPUT, e))?,
    };
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        reg,
        backend: args.backend,
        freeze_gamma: args.freeze_gamma,
        positivity: args.positivity,
        ..TrainConfig::default()
    };
    let exec = pool(args.workers)?;
    let report = fit(&seq, &init, &config, &exec, &WallClock::new()).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    write_params(&args.out_params, &report.params)?;
    write_fit_report(&args.out_report, &report, !args.no_timings)?;
    if let Some(err) = &report.aborted {
        return Err(Failure::new(EXIT_CHECK, format!("training stopped after {} epochs: {err}", report.epochs_run)));
    }
    if let (Some(first), Some(last)) = (report.nll.first(), report.nll.last()) {
        println!("epochs: {}", report.epochs_run);
        println!("nll: {first} -> {last}");
    }
    Ok(())
}

fn grad_check(args: GradCheckArgs) -> Result<(), Failure> {
    let seq = read_events(&args.events)?;
    let params = read_params(&args.params)?;
    if seq.len() > 10_000 {
        eprintln!("warning: {} events; finite differences re-evaluate the likelihood twice per coordinate", seq.len());
    }
    let reg = RegConfig::new(args.lambda1, args.hinge).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let exec = pool(args.workers)?;
    let report = finite_difference_check(&seq, &params, &reg, args.step, args.backend, &exec).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    println!("max_abs_err: {:e}", report.max_abs_err);
    println!("max_rel_err: {:e}", report.max_rel_err);
    match report.worst_coordinate {
        Some(c) => println!("worst_coordinate: {c}"),
        None => println!("worst_coordinate: none"),
    }
    for (coord, why) in &report.excluded {
        let why = match why {
            Exclusion::Kink => "kink",
            Exclusion::Boundary => "boundary",
        };
        println!("excluded: {coord} ({why})");
    }
    if report.max_abs_err <= args.tol {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, format!("gradient check failed: max abs error {:e} > {:e}", report.max_abs_err, args.tol)))
    }
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let sizes = parse_grid(&args.grid).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let config = BenchConfig {
        sizes,
        nodes: args.m,
        kernels: args.kernels,
        backends: args.backends,
        repeats: args.repeats,
        time_limit: args.time_limit,
        naive_cap: args.naive_cap,
        seed: args.seed,
    };
    let exec = pool(args.workers)?;
    let rows = run_bench(&config, &exec, |r| {
        eprintln!(
            "{:>10} N={:<8} M={:<4} {}",
            r.backend.name(),
            r.n,
            r.m,
            r.epoch_time_seconds.map_or(r.status.clone(), |t| format!("{t:.4}s"))
        );
    })
    .map_err(sim_failure)?;
    fs::write(&args.out, format_bench_csv(&rows)).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", args.out.display())))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::GradCheck(a) => grad_check(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
