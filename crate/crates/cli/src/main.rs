use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cars_infer::config::PipelineConfig;
use cars_infer::io;
use cars_infer::narrowing::{narrow, NarrowedSpectrum};
use cars_infer::pipeline::{self, Bootstrap, PriorStage};
use cars_infer::priors::PriorSpec;
use cars_infer::smc::IterationRecord;
use cars_infer::synthetic::simulate;
use cars_infer::{Error, ErrorFunctionEngine, WavenumberGrid};

const THREADS_ENV: &str = "CARS_INFER_THREADS";

/// Bayesian analysis of CARS spectra.
#[derive(Debug, Parser)]
#[command(name = "cars-infer", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (overrides CARS_INFER_THREADS and the config).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Directory holding the stage artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct Input {
    /// Measured spectrum CSV; defaults to `<out>/spectrum.csv`.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic spectrum with its ground truth.
    Simulate,
    /// Bootstrap the Raman estimate and run the line-narrowing sweep.
    Narrow(Input),
    /// Build the prior and estimate the noise variance.
    Priors(Input),
    /// Sample the posterior.
    Fit(Input),
    /// Posterior predictive bands.
    Predict(Input),
    /// All stages in sequence.
    Pipeline(Input),
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(Error::Numerical(_)) => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FitRecord {
    log_evidence: f64,
    trace: Vec<IterationRecord>,
}

struct Context {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn spectrum(&self, input: &Input) -> Result<(WavenumberGrid, Vec<f64>), Failure> {
        let path = input.input.clone().unwrap_or_else(|| self.path("spectrum.csv"));
        Ok(io::read_spectrum(&path)?)
    }

    fn engine(&self, grid: WavenumberGrid, values: &[f64]) -> Result<ErrorFunctionEngine, Failure> {
        let basis = match &self.cfg.model.error_basis {
            Some(path) => {
                let (g, b) = io::read_spectrum(path)?;
                if g != grid {
                    return Err(Error::format(path, "error basis grid differs from the spectrum grid").into());
                }
                Some(b)
            }
            None => None,
        };
        Ok(pipeline::build_engine(&self.cfg, grid, values, basis.as_deref())?)
    }
}

fn resolve_threads(flag: Option<usize>, env: Option<String>, file: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Some(v) = env.filter(|v| !v.trim().is_empty()) {
        return v
            .trim()
            .parse()
            .ok()
            .filter(|&n: &usize| n > 0)
            .map(Some)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")));
    }
    Ok(file)
}

fn setup(global: &Global) -> Result<Context, Failure> {
    let mut cfg = match &global.config {
        Some(path) => io::read_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if global.threads == Some(0) {
        return Err(Failure::Usage("--threads must be >= 1".into()));
    }
    cfg.threads = resolve_threads(global.threads, std::env::var(THREADS_ENV).ok(), cfg.threads)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numerical(e.to_string()))?;
    }
    Ok(Context {
        cfg,
        out: global.out.clone(),
    })
}

fn run_simulate(ctx: &Context) -> Result<(), Failure> {
    let sim = simulate(&ctx.cfg.synthetic, ctx.cfg.seed)?;
    io::write_spectrum(&ctx.path("spectrum.csv"), &sim.grid, &sim.values)?;
    io::write_spectrum(&ctx.path("reference.csv"), &sim.grid, &sim.reference)?;
    io::write_json(&ctx.path("truth.json"), &sim.truth)?;
    log::info!("wrote {} channels to {}", sim.values.len(), ctx.out.display());
    Ok(())
}

fn run_narrow(ctx: &Context, input: &Input) -> Result<(), Failure> {
    let (grid, values) = ctx.spectrum(input)?;
    let engine = ctx.engine(grid, &values)?;
    let boot = pipeline::bootstrap(&ctx.cfg, &values, &engine)?;
    let narrowed = narrow(&boot.raman, &grid, &ctx.cfg.narrowing)?;
    if let Some(w) = &narrowed.warning {
        log::warn!("{w}");
    }
    io::write_json(&ctx.path("bootstrap.json"), &boot)?;
    io::write_json(&ctx.path("narrowed.json"), &narrowed)?;
    io::write_narrowed(&ctx.path("narrowed.csv"), &narrowed)?;
    log::info!(
        "narrowed with {} of {} candidates",
        narrowed.selection.m,
        ctx.cfg.narrowing.candidate_count()
    );
    Ok(())
}

fn run_priors(ctx: &Context, input: &Input) -> Result<(), Failure> {
    let (grid, values) = ctx.spectrum(input)?;
    let engine = ctx.engine(grid, &values)?;
    let boot: Bootstrap = io::read_json(&ctx.path("bootstrap.json"))?;
    let narrowed: NarrowedSpectrum = io::read_json(&ctx.path("narrowed.json"))?;
    let stage = pipeline::prior_stage(&ctx.cfg, &values, &engine, &boot, &narrowed)?;
    for w in &stage.warnings {
        log::warn!("{w}");
    }
    io::write_versioned_json(&ctx.path("priors.json"), &stage.spec)?;
    io::write_json(&ctx.path("prior_stage.json"), &stage)?;
    log::info!(
        "{} lines, noise variance {:.4e}",
        stage.spec.n_lines(),
        stage.noise_variance
    );
    Ok(())
}

fn load_measurement(
    ctx: &Context,
    input: &Input,
) -> Result<(cars_infer::MeasuredSpectrum, ErrorFunctionEngine), Failure> {
    let (grid, values) = ctx.spectrum(input)?;
    let engine = ctx.engine(grid, &values)?;
    let stage: PriorStage = io::read_json(&ctx.path("prior_stage.json"))?;
    let measured = pipeline::measurement(&ctx.cfg, grid, values, stage.noise_variance, stage.nr_level)?;
    Ok((measured, engine))
}

fn run_fit(ctx: &Context, input: &Input) -> Result<(), Failure> {
    let (measured, engine) = load_measurement(ctx, input)?;
    let spec: PriorSpec = io::read_versioned_json(&ctx.path("priors.json"))?;
    let fit = pipeline::fit(&ctx.cfg, &measured, &engine, &spec)?;
    io::write_posterior(&ctx.path("posterior.csv"), &fit.draws)?;
    io::write_json(
        &ctx.path("fit.json"),
        &FitRecord {
            log_evidence: fit.log_evidence,
            trace: fit.trace,
        },
    )?;
    log::info!("log evidence {:.4}", fit.log_evidence);
    Ok(())
}

fn run_predict(ctx: &Context, input: &Input) -> Result<(), Failure> {
    let (measured, engine) = load_measurement(ctx, input)?;
    let draws = io::read_posterior(&ctx.path("posterior.csv"))?;
    let bands = pipeline::predict(&ctx.cfg, &measured, &engine, &draws)?;
    io::write_bands(&ctx.path("bands.csv"), &measured.grid, &bands)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let ctx = setup(&cli.global)?;
    match &cli.command {
        Command::Simulate => run_simulate(&ctx),
        Command::Narrow(i) => run_narrow(&ctx, i),
        Command::Priors(i) => run_priors(&ctx, i),
        Command::Fit(i) => run_fit(&ctx, i),
        Command::Predict(i) => run_predict(&ctx, i),
        Command::Pipeline(i) => {
            run_narrow(&ctx, i)?;
            run_priors(&ctx, i)?;
            run_fit(&ctx, i)?;
            run_predict(&ctx, i)
        }
    }
}

fn init_logging(quiet: bool) {
    let level = if quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.global.quiet);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
