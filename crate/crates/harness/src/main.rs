//! `dicut-sketch`: generate edge streams, run the streaming estimator,
//! check its lemmas and compare it against exact values.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dicut_core::multigraph::{write_edge_stream, EdgeStream, DEFAULT_BRUTE_FORCE_CEILING};
use dicut_core::oblivious::ObliviousAlg;
use dicut_core::sketcher::stream::RunPath;
use dicut_core::sketcher::{run_stream, ParamOverrides, RunConfig};
use dicut_harness::compare::{compare, write_csv, CompareConfig};
use dicut_harness::generate::{generate, reorder, Family, Ordering};
use dicut_harness::verify::{verify_lemma, VerifyConfig};

/// Exit status when the selected sketch overflowed.
const EXIT_OVERFLOW: u8 = 3;
/// Exit status when a lemma check fails.
const EXIT_CHECK_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "dicut-sketch", version, about = "Streaming Max-DICUT estimation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the Max-DICUT value of an edge stream.
    Run(RunArgs),
    /// Write a random graph as an edge stream.
    Generate(GenerateArgs),
    /// Run a named lemma check and print a JSON verdict.
    VerifyLemma(VerifyArgs),
    /// Compare estimates with exact or lower-bound values over many trials.
    Compare(CompareArgs),
}

/// Estimator settings shared by `run` and `compare`.
#[derive(Args)]
struct EstimatorArgs {
    #[arg(long)]
    epsilon: f64,
    /// Multiplier of the vertex-sampling constant.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// JSON file with `thresholds` and `probabilities`; defaults to a
    /// built-in step rule.
    #[arg(long)]
    oblivious_config: Option<PathBuf>,
    /// Subtracted from the oblivious value; defaults to epsilon / 4.
    #[arg(long)]
    slack: Option<f64>,
    /// Exponent C of the assumed bound m < n^C.
    #[arg(long, default_value_t = 2.0)]
    mbound_exp: f64,
    /// Constant in the sparsification edge budget C * n / epsilon^2.
    #[arg(long, default_value_t = 1.0)]
    c_spar: f64,
    /// Store every vertex and keep every edge in every layer.
    #[arg(long)]
    full_sampling: bool,
    #[arg(long)]
    v_cutoff: Option<u64>,
    #[arg(long)]
    e_cutoff: Option<u64>,
    /// Largest vertex count solved by enumeration.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CEILING)]
    brute_force_ceiling: usize,
}

impl EstimatorArgs {
    fn config(&self, seed: u64) -> RunConfig {
        RunConfig {
            scale: self.scale,
            slack: self.slack,
            mbound_exp: self.mbound_exp,
            c_spar: self.c_spar,
            brute_force_ceiling: self.brute_force_ceiling,
            overrides: ParamOverrides {
                full_sampling: self.full_sampling,
                v_cutoff: self.v_cutoff,
                e_cutoff: self.e_cutoff,
            },
            ..RunConfig::new(self.epsilon, seed)
        }
    }

    fn alg(&self) -> Result<ObliviousAlg> {
        load_alg(self.oblivious_config.as_deref())
    }
}

fn load_alg(path: Option<&Path>) -> Result<ObliviousAlg> {
    match path {
        Some(p) => ObliviousAlg::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ObliviousAlg::stand_in()),
    }
}

#[derive(Args)]
struct RunArgs {
    /// Edge-stream file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    est: EstimatorArgs,
    /// JSON report path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// erdos-renyi-directed, planted-dicut:P_IN,P_OUT, star:out|in,
    /// power-law:ALPHA or k-cycle-union:K.
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Ordering::AsGenerated)]
    ordering: Ordering,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of the registered checks, e.g. smoothing-sum or pointwise.
    name: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    oblivious_config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = Ordering::AsGenerated)]
    ordering: Ordering,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Cuts sampled for lower-bound reference values.
    #[arg(long, default_value_t = 256)]
    sample_cuts: usize,
    /// Add a wall-clock column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let stream = EdgeStream::new(BufReader::new(file))?;
    let n = stream.n();
    let report = run_stream(n, stream, &args.est.alg()?, &args.est.config(args.seed))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&report, args.output.as_deref())?;
    Ok(if report.path == RunPath::Overflow { ExitCode::from(EXIT_OVERFLOW) } else { ExitCode::SUCCESS })
}

fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let g = generate(&args.family, args.n, args.m, args.seed)?;
    let g = reorder(&g, args.ordering, args.seed);
    let mut out = open_output(args.output.as_deref())?;
    write_edge_stream(&g, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let cfg = VerifyConfig {
        seed: args.seed,
        trials: args.trials,
        n: args.n,
        m: args.m,
        epsilon: args.epsilon,
        scale: args.scale,
        alg: args.oblivious_config.as_deref().map(|p| load_alg(Some(p))).transpose()?,
    };
    let report = verify_lemma(&args.name, &cfg)?;
    write_json(&report, args.output.as_deref())?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK_FAILED) })
}

fn cmd_compare(args: &CompareArgs) -> Result<ExitCode> {
    let cfg = CompareConfig {
        family: args.family.clone(),
        n: args.n,
        m: args.m,
        ordering: args.ordering,
        seed: args.seed,
        trials: args.trials,
        run: args.est.config(args.seed),
        alg: args.est.alg()?,
        sample_cuts: args.sample_cuts,
        timing: args.timing,
    };
    let rows = compare(&cfg)?;
    write_csv(&rows, args.timing, open_output(args.output.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

/// Caps the global thread pool when `DICUT_SKETCH_THREADS` is set.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DICUT_SKETCH_THREADS") {
        let threads: usize = v.trim().parse().with_context(|| format!("DICUT_SKETCH_THREADS={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Generate(a) => cmd_generate(a),
        Command::VerifyLemma(a) => cmd_verify(a),
        Command::Compare(a) => cmd_compare(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
