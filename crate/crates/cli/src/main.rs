use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kirchhoff_core::analysis::Verdict;
use kirchhoff_core::harness::{error_exit_code, run_plan, ArtifactBundle, ExperimentPlan, PlanKind};
use kirchhoff_core::Error;

/// Damped Kirchhoff-type equations on a finite spectrum: simulations,
/// parabolic limits, singular-perturbation sweeps and decay verification.
#[derive(Parser)]
#[command(name = "kirchhoff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hyperbolic run with energies, a priori margins and the Hamiltonian floor.
    Simulate(RunArgs),
    /// Parabolic limit by both solvers, with their agreement.
    Limit(RunArgs),
    /// Boundary-layer corrector on the output grid.
    Corrector(RunArgs),
    /// Error sweep over a decreasing list of eps.
    Sweep(RunArgs),
    /// Regime map over a (gamma, p) lattice.
    Grid(RunArgs),
    /// Decay estimates checked against a run.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving `<kind>-<hash>/`.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads; overrides the `jobs` key.
    #[arg(long)]
    jobs: Option<usize>,
    /// Recorded in the manifest; solvers are deterministic and never read it.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(kind: PlanKind, args: &RunArgs) -> Result<ExperimentPlan, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut plan = ExperimentPlan::expect_kind(&text, kind)?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::Config("`--jobs` must be at least 1".into()));
        }
        plan.jobs = jobs;
    }
    plan.seed = args.seed;
    Ok(plan)
}

fn report(bundle: &ArtifactBundle) {
    for run in &bundle.runs {
        println!("run   {:<28} {}", run.label, run.status);
    }
    for check in &bundle.checks {
        let tag = match check.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIP",
        };
        println!("{tag}  {}", check.name);
    }
    println!("wrote {} files to {}", bundle.files.len() + 1, bundle.dir.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // argument errors share the configuration-error status
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (PlanKind::Simulate, a),
        Command::Limit(a) => (PlanKind::Limit, a),
        Command::Corrector(a) => (PlanKind::Corrector, a),
        Command::Sweep(a) => (PlanKind::SweepEps, a),
        Command::Grid(a) => (PlanKind::RegimeGrid, a),
        Command::Verify(a) => (PlanKind::Verify, a),
    };
    let outcome = load(kind, args).and_then(|plan| run_plan(&plan, &args.out));
    match outcome {
        Ok(bundle) => {
            report(&bundle);
            ExitCode::from(bundle.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
