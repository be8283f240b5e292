//! Experiment runner for the UAV-IRS toolkit.
//!
//! One binary with five subcommands: run either planner on a scenario file
//! (`optimize-wsb`, `optimize-fair`), sweep the benchmark schemes
//! (`benchmarks`), check the closed forms against seeded Monte-Carlo
//! oracles (`verify`), or print a resolved scenario (`show-scenario`).
//! All result bytes depend only on the scenario and seed, never on timing;
//! timings go to stderr. Log verbosity comes from the `LOG_LEVEL`
//! environment variable.

mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uav_irs_core::benchmarks::{self, ComparisonRow, Scheme, Sweep};
use uav_irs_core::error::Error;
use uav_irs_core::scenario::{
    default_scenario, fmt_float, load_scenario, save_results, scenario_to_json,
};
use uav_irs_core::{fairness, weighted_sum, PlannerSolution, Scenario};

#[derive(Parser)]
#[command(
    name = "uav-irs",
    version,
    about = "Trajectory, scheduling and phase optimization for UAV-assisted reflecting surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the weighted-sum planner and write its artifacts.
    OptimizeWsb(RunArgs),
    /// Run the max-min fairness planner and write its artifacts.
    OptimizeFair(RunArgs),
    /// Evaluate the comparison schemes across a sweep axis.
    Benchmarks(BenchArgs),
    /// Check the closed forms against seeded Monte-Carlo oracles.
    Verify(VerifyArgs),
    /// Print the resolved scenario (defaults filled, linear units) as JSON.
    ShowScenario(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file; the built-in default scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Coarsen to 1 s slots before solving.
    #[arg(long)]
    coarse: bool,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory for the CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory for the comparison table.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Sweep axis: mission duration T or element count M.
    #[arg(long, value_enum, default_value_t = SweepArg::T)]
    sweep: SweepArg,
    /// Only run schemes whose label starts with this prefix.
    #[arg(long)]
    scheme: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also write the report to `<out>/verify.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink every Monte-Carlo suite for a fast smoke run.
    #[arg(long)]
    quick: bool,
}

#[derive(Copy, Clone, ValueEnum)]
#[value(rename_all = "UPPER")]
enum SweepArg {
    /// Mission duration sweep (slot count held fixed).
    T,
    /// Reflecting-element count sweep.
    M,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOG_LEVEL", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; only real usage errors fail.
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit 1 for anything the user can fix (bad input, infeasible problem),
/// exit 2 for internal solver failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) | Error::NonConverged(_) | Error::DegenerateChannel { .. } => 2,
        _ => 1,
    }
}

fn run(cmd: Command) -> uav_irs_core::Result<()> {
    match cmd {
        Command::OptimizeWsb(args) => optimize(&args, false),
        Command::OptimizeFair(args) => optimize(&args, true),
        Command::Benchmarks(args) => run_benchmarks(&args),
        Command::Verify(args) => run_verify(&args),
        Command::ShowScenario(args) => {
            let s = resolve_scenario(&args)?;
            println!("{}", scenario_to_json(&s));
            Ok(())
        }
    }
}

fn resolve_scenario(args: &ScenarioArgs) -> uav_irs_core::Result<Scenario> {
    let mut s = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => default_scenario(),
    };
    if args.coarse {
        s = s.coarse()?;
    }
    if let Some(seed) = args.seed {
        s.rng_seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn optimize(args: &RunArgs, fair: bool) -> uav_irs_core::Result<()> {
    let s = resolve_scenario(&args.scenario)?;
    let started = Instant::now();
    let sol: PlannerSolution = if fair {
        fairness::run_fairness(&s)?
    } else {
        weighted_sum::run_weighted_sum(&s)?
    };
    eprintln!("solve took {:.2} s", started.elapsed().as_secs_f64());

    save_results(
        &args.out,
        &sol.report,
        &sol.trajectory,
        &sol.schedule,
        s.slot_s,
    )?;
    println!(
        "planner: {}",
        if fair { "max-min-fair" } else { "weighted-sum" }
    );
    println!("status: {}", sol.report.status.as_str());
    println!("iterations: {}", sol.report.iterations);
    if fair {
        println!("outer-stages: {}", sol.report.outer_iterations);
    }
    println!("objective: {}", fmt_float(sol.report.objective));
    println!("xi: {}", fmt_float(sol.report.xi_final));
    if let Some(&margin) = sol.report.min_rate_margin_trace.last() {
        println!("min-rate-margin: {}", fmt_float(margin));
    }
    println!("artifacts: {}", args.out.display());
    Ok(())
}

fn run_benchmarks(args: &BenchArgs) -> uav_irs_core::Result<()> {
    let s = resolve_scenario(&args.scenario)?;
    let sweep = match args.sweep {
        SweepArg::T => Sweep::MissionDuration,
        SweepArg::M => Sweep::ElementCount,
    };
    let mut schemes = benchmarks::default_schemes(0.0);
    if let Some(prefix) = &args.scheme {
        schemes.retain(|sc| sc.label().starts_with(prefix.as_str()));
        if schemes.is_empty() {
            let known: Vec<String> = benchmarks::default_schemes(0.0)
                .iter()
                .map(Scheme::label)
                .collect();
            return Err(Error::InvalidInput(format!(
                "no scheme label starts with '{prefix}'; known schemes: {}",
                known.join(", ")
            )));
        }
    }

    let started = Instant::now();
    let rows = benchmarks::compare_schemes(&s, &schemes, sweep, &sweep.default_values())?;
    eprintln!("sweep took {:.2} s", started.elapsed().as_secs_f64());

    let table = comparison_csv(&rows);
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("comparison.csv"), &table)?;
    print!("{table}");
    println!("artifacts: {}", args.out.display());
    Ok(())
}

fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut csv = String::from("sweep,value,scheme,weighted_sum,max_min\n");
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sweep,
            fmt_float(r.value),
            r.scheme,
            opt(r.weighted_sum),
            opt(r.max_min)
        ));
    }
    csv
}

fn run_verify(args: &VerifyArgs) -> uav_irs_core::Result<()> {
    let s = resolve_scenario(&args.scenario)?;
    let started = Instant::now();
    let (report, all_passed) = verify::verify_report(&s, args.quick)?;
    eprintln!("verification took {:.2} s", started.elapsed().as_secs_f64());

    print!("{report}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("verify.txt"), &report)?;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Error::Solver(
            "verification failed; see report above".into(),
        ))
    }
}
