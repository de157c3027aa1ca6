use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use matdecomp::reg::{PenaltyParams, RegularizerKind};
use matdecomp::solver::{solve_composite, two_step, ProblemInstance, SolverConfig};
use matdecomp::synth::RngSeed;
use matdecomp::{decomposition_error, ObservationOperator, Result};
use matdecomp_bench::checks::run_checked;
use matdecomp_bench::config::{expand_config, SolverKnobs, SweepOverrides};
use matdecomp_bench::instance::{self, Manifest};
use matdecomp_bench::output::gnuplot_data;
use matdecomp_bench::{emit_csv, Experiment, SweepSpec};

/// Low-rank plus sparse decomposition: instance generation, solving and experiment sweeps.
///
/// Every command accepts `--config FILE` with `key = value` lines mirroring its flags.
#[derive(Parser)]
#[command(name = "matdecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an identity-operator instance directory.
    Gen(GenArgs),
    /// Solve the convex program on an instance directory.
    Solve(SolveArgs),
    /// Run the two-step estimator on an instance directory.
    Twostep(SolveArgs),
    /// Error against the rank fraction gamma.
    SweepRank(SweepArgs),
    /// Error against the sparsity fraction beta.
    SweepSparsity(SweepArgs),
    /// Inverse error against the dimension, columnwise model.
    SweepDim(SweepArgs),
    /// Convex program against the two-step estimator.
    CompareTwostep(SweepArgs),
    /// Two-step estimator on a design where it breaks down.
    FailTwostep(SweepArgs),
    /// Solver output on non-identifiable instances.
    Badpair(SweepArgs),
    /// Error divided by the predicted rate over a grid of settings.
    RateBand(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `l1` or `col21`.
    #[arg(long, default_value = "l1")]
    kind: RegularizerKind,
    #[arg(long, default_value_t = 100)]
    d1: usize,
    /// Defaults to `d1`.
    #[arg(long)]
    d2: Option<usize>,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    /// Nonzero entries (l1) or columns (col21).
    #[arg(long, default_value_t = 100)]
    sparsity: usize,
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance directory written by `gen`.
    #[arg(long)]
    instance: PathBuf,
    /// Where the estimate goes; defaults to the instance directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the rule-based lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the rule-based mu.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    paper_literal: bool,
    #[command(flatten)]
    solver: SolverKnobs,
}

#[derive(Args)]
struct SweepArgs {
    /// CSV path; a `.dat` file for gnuplot is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the acceptance threshold and exit with 2 when it fails.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    overrides: SweepOverrides,
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    // Config values come first on the command line, so later flags must be
    // allowed to override them.
    let parsed = Cli::command()
        .mut_subcommands(|sub| sub.args_override_self(true))
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Gen(a) => generate(&a),
        Command::Solve(a) => solve(&a, false),
        Command::Twostep(a) => solve(&a, true),
        Command::SweepRank(a) => sweep(Experiment::RankSweep, &a),
        Command::SweepSparsity(a) => sweep(Experiment::SparsitySweep, &a),
        Command::SweepDim(a) => sweep(Experiment::DimensionSweep, &a),
        Command::CompareTwostep(a) => sweep(Experiment::TwostepCompare, &a),
        Command::FailTwostep(a) => sweep(Experiment::TwostepFailure, &a),
        Command::Badpair(a) => sweep(Experiment::BadpairCheck, &a),
        Command::RateBand(a) => sweep(Experiment::RateBand, &a),
    }
}

fn generate(a: &GenArgs) -> Result<Outcome> {
    let manifest = Manifest {
        kind: a.kind,
        d1: a.d1,
        d2: a.d2.unwrap_or(a.d1),
        r: a.rank,
        s: a.sparsity,
        alpha: a.alpha,
        magnitude: a.magnitude,
        nu: a.nu,
        seed: RngSeed(a.seed),
    };
    let (truth, y) = manifest.generate()?;
    instance::write_instance(&a.out, &manifest, &truth, &y)?;
    println!(
        "wrote {} ({}x{}, r={}, s={}, ||theta*||_F={:.6})",
        a.out.display(),
        manifest.d1,
        manifest.d2,
        truth.rank,
        truth.sparsity,
        truth.theta_frobenius
    );
    Ok(Outcome::Ok)
}

fn solve(a: &SolveArgs, two_step_only: bool) -> Result<Outcome> {
    let manifest = instance::read_manifest(&a.instance)?;
    let y = instance::read_observation(&a.instance)?;
    let rule = manifest.default_params(a.paper_literal)?;
    let params = PenaltyParams::new(a.lambda.unwrap_or(rule.lambda), a.mu.unwrap_or(rule.mu), rule.alpha)?;
    let op = ObservationOperator::identity(manifest.d1, manifest.d2);
    let (est, name) = if two_step_only {
        (two_step(&op, &y, params.lambda, params.mu)?, "twostep")
    } else {
        let mut cfg = SolverConfig::default();
        a.solver.apply(&mut cfg);
        let inst = ProblemInstance::new(y, op, manifest.kind, params, None)?;
        (solve_composite(&inst, &cfg)?, "convex")
    };
    let truth = manifest.truth()?;
    let e2 = decomposition_error(&est.theta_hat, &est.gamma_hat, &truth.theta_star, &truth.gamma_star)?;
    let mut record = instance::diagnostics(&est, &params, name);
    record.set("e_squared", e2);
    let out = a.out.as_deref().unwrap_or(&a.instance);
    instance::write_estimate(out, &est, &record)?;
    print!("{record}");
    Ok(Outcome::Ok)
}

fn sweep(experiment: Experiment, a: &SweepArgs) -> Result<Outcome> {
    let mut spec = SweepSpec::defaults(experiment);
    a.overrides.apply(&mut spec);
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));
    spec.output_path = Some(out.clone());
    let (rows, check) = run_checked(&spec)?;
    emit_csv(&rows, &out)?;
    write_dat(&out, &gnuplot_data(&rows))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    println!("{check}");
    Ok(if a.check && !check.passed { Outcome::CheckFailed } else { Outcome::Ok })
}

fn write_dat(csv: &Path, data: &str) -> Result<()> {
    Ok(std::fs::write(csv.with_extension("dat"), data)?)
}
