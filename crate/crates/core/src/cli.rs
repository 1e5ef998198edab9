//! Command-line front end.
//!
//! Every subcommand writes machine-readable `key=value` lines to stdout and
//! human-readable progress to stderr (suppressed by `--quiet`). Exit codes:
//! 0 on success, 1 on usage errors, 2 on runtime failures.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::cg::CgConfig;
use crate::error::Result;
use crate::image_core::{load_image, save_image};
use crate::metrics::evaluate;
use crate::oracle::{compare_with_pd, tiny_instance};
use crate::pipeline::{
    degrade, CandidateSource, ExperimentSpec, InputSource, DEFAULT_CANDIDATES,
};
use crate::solver::SolverConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Largest relative energy gap `oracle-check` accepts.
pub const ORACLE_GAP_LIMIT: f64 = 0.005;

#[derive(Parser, Debug)]
#[command(name = "convex-sr", version, about = "Convex example-based super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bicubic down-sample a ground-truth image and write the bicubic baseline.
    Degrade(DegradeArgs),
    /// Reconstruct a high-resolution image from a low-resolution input and candidates.
    Hallucinate(HallucinateArgs),
    /// Compare two images with PSNR and SSIM.
    Evaluate(EvaluateArgs),
    /// Cross-check the primal-dual solver against the smoothed gradient-descent oracle.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct DegradeArgs {
    /// Ground-truth high-resolution image.
    #[arg(long)]
    hr: PathBuf,
    #[arg(long, default_value_t = 4)]
    scale: usize,
    /// Where to write the low-resolution image.
    #[arg(long)]
    lr_out: PathBuf,
    /// Where to write the bicubic up-sampled baseline.
    #[arg(long)]
    up_out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["lr", "hr"])))]
#[command(group(ArgGroup::new("cands").required(true).args(["candidates", "synth"])))]
struct HallucinateArgs {
    /// Low-resolution input image.
    #[arg(long)]
    lr: Option<PathBuf>,
    /// Ground-truth image: degraded first, and used to report quality.
    #[arg(long)]
    hr: Option<PathBuf>,
    /// Comma-separated, ordered list of aligned candidate images.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<PathBuf>,
    /// Generate this many synthetic candidates from the ground truth.
    #[arg(long, requires = "hr", conflicts_with = "lr")]
    synth: Option<usize>,
    #[arg(long, default_value_t = 2, requires = "synth")]
    max_shift: usize,
    #[arg(long, default_value_t = 0.01, requires = "synth")]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 4)]
    scale: usize,
    #[arg(long, default_value_t = 5e4)]
    lambda: f64,
    #[arg(long, default_value_t = 20.0)]
    gamma: f64,
    /// Maximum number of primal-dual iterations.
    #[arg(long, default_value_t = 400)]
    iters: usize,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ratio of dual to primal step size.
    #[arg(long, default_value_t = 1.0)]
    step_ratio: f64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side length of the high-resolution grid (at most 16).
    #[arg(long, default_value_t = 8)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    candidates: usize,
    #[arg(long, default_value_t = 4)]
    scale: usize,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Smoothing parameter of the oracle.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Oracle gradient-descent iterations.
    #[arg(long, default_value_t = 1_000_000)]
    oracle_iters: usize,
    #[arg(long)]
    quiet: bool,
}

/// Entry point for the binary: parses `args` (including the program name)
/// and writes to the process's stdout/stderr.
pub fn main_with_args(args: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Run the CLI against arbitrary output streams; returns the exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };

    let outcome = match cli.command {
        Command::Degrade(a) => run_degrade(a, out, err),
        Command::Hallucinate(a) => run_hallucinate(a, out, err),
        Command::Evaluate(a) => run_evaluate(a, out, err),
        Command::OracleCheck(a) => run_oracle(a, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn kv(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn note(err: &mut dyn Write, quiet: bool, msg: impl std::fmt::Display) {
    if !quiet {
        let _ = writeln!(err, "{msg}");
    }
}

fn run_degrade(a: DegradeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let hr = load_image(&a.hr)?;
    let (lr, up) = degrade(&hr, a.scale)?;
    save_image(&lr, &a.lr_out)?;
    if let Some(p) = &a.up_out {
        save_image(&up, p)?;
    }
    let q = evaluate(&up, &hr)?;
    note(
        err,
        a.quiet,
        format_args!(
            "degraded {}x{} -> {}x{} (scale {})",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height(),
            a.scale
        ),
    );
    kv(out, "lr_width", lr.width());
    kv(out, "lr_height", lr.height());
    kv(out, "baseline_psnr_db", num(q.psnr_db));
    kv(out, "baseline_ssim", num(q.ssim));
    Ok(EXIT_OK)
}

fn run_hallucinate(a: HallucinateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let input = match (a.lr, a.hr) {
        (Some(lr), None) => InputSource::LowRes(lr),
        (None, Some(hr)) => InputSource::GroundTruth(hr),
        _ => unreachable!("clap enforces exactly one input"),
    };
    let candidates = match a.synth {
        Some(count) => CandidateSource::Synthetic {
            count,
            max_shift: a.max_shift,
            noise_sigma: a.noise,
            seed: a.solver.seed,
        },
        None => CandidateSource::Files(a.candidates),
    };
    let s = &a.solver;
    let spec = ExperimentSpec {
        scale: s.scale,
        input,
        candidates,
        output: a.out.clone(),
        solver: SolverConfig {
            lambda: s.lambda,
            gamma: s.gamma,
            max_outer_iters: s.iters,
            rel_change_tol: s.tol,
            seed: s.seed,
            step_ratio: s.step_ratio,
            cg: CgConfig::default(),
            ..Default::default()
        },
    };
    if let CandidateSource::Files(paths) = &spec.candidates {
        if paths.len() != DEFAULT_CANDIDATES {
            note(
                err,
                a.quiet,
                format_args!("note: {} candidate(s) given (typical: {DEFAULT_CANDIDATES})", paths.len()),
            );
        }
    }
    let outcome = spec.run()?;

    kv(out, "channels", outcome.diagnostics.len());
    for (c, d) in outcome.diagnostics.iter().enumerate() {
        note(
            err,
            a.quiet,
            format_args!(
                "channel {c}: {} iterations, energy {} -> {}",
                d.iterations_run,
                d.energy_trace.first().copied().unwrap_or(f64::NAN),
                d.final_energy().unwrap_or(f64::NAN)
            ),
        );
        let key = |k: &str| format!("channel{c}.{k}");
        kv(out, &key("iterations"), d.iterations_run);
        kv(out, &key("converged"), d.converged);
        kv(out, &key("energy_initial"), num(d.energy_trace.first().copied().unwrap_or(f64::NAN)));
        kv(out, &key("energy_final"), num(d.final_energy().unwrap_or(f64::NAN)));
        kv(out, &key("energy_min"), num(d.best_energy().unwrap_or(f64::NAN)));
        kv(out, &key("cg_iterations"), d.cg_total_iters);
        kv(out, &key("op_norm"), num(d.op_norm));
        kv(out, &key("step_product"), num(d.step_product));
    }
    kv(out, "lr_residual", num(outcome.lr_residual));
    if let (Some(q), Some(b)) = (&outcome.quality, &outcome.baseline) {
        kv(out, "psnr_db", num(q.psnr_db));
        kv(out, "ssim", num(q.ssim));
        kv(out, "baseline_psnr_db", num(b.psnr_db));
        kv(out, "baseline_ssim", num(b.ssim));
    }
    kv(out, "output", a.out.display());
    Ok(EXIT_OK)
}

fn run_evaluate(a: EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let x = load_image(&a.a)?;
    let y = load_image(&a.b)?;
    let q = evaluate(&x, &y)?;
    note(err, a.quiet, format_args!("compared {} and {}", a.a.display(), a.b.display()));
    kv(out, "psnr_db", num(q.psnr_db));
    kv(out, "ssim", num(q.ssim));
    Ok(EXIT_OK)
}

fn run_oracle(a: OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let inst = tiny_instance(a.size, a.candidates, a.scale, a.seed)?;
    note(
        err,
        a.quiet,
        format_args!(
            "solving {0}x{0} instance with {1} candidate(s); oracle runs {2} iterations",
            a.size, a.candidates, a.oracle_iters
        ),
    );
    let cmp = compare_with_pd(&inst, a.lambda, a.gamma, a.eps, a.oracle_iters, a.seed)?;
    kv(out, "energy_pd", format!("{:.9}", cmp.energy_pd));
    kv(out, "energy_oracle", format!("{:.9}", cmp.energy_oracle));
    kv(out, "rel_gap", format!("{:.3e}", cmp.rel_gap));
    if cmp.rel_gap > ORACLE_GAP_LIMIT {
        let _ = writeln!(
            err,
            "relative gap {:.3e} exceeds {ORACLE_GAP_LIMIT}",
            cmp.rel_gap
        );
        return Ok(EXIT_RUNTIME);
    }
    Ok(EXIT_OK)
}
