//! `trajopt` command line: run planners, closed-loop episodes and benchmark
//! sweeps from a flat key/value config, emitting CSV.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/numerical error.

mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RunConfig;
use trajopt::bench::{
    compare_planners, dump_trajectories, grad_check, read_records_csv, run_dim_sweep,
    run_obstacle_sweep, run_sweep, summarize, write_records_csv, write_summary_csv,
    write_ttest_csv, Scenario,
};
use trajopt::env::{reward, PointMassState};
use trajopt::error::{Error, Result};
use trajopt::mpc::run_episode;
use trajopt::planners::PlannerKind;
use trajopt::rng::RngStream;
use trajopt::sampling::PlannerParams;

#[derive(Parser)]
#[command(
    name = "trajopt",
    version,
    about = "Trajectory optimization planners and benchmarks on a differentiable point-mass environment"
)]
struct Cli {
    /// Config file with one `key = value` per line (# comments).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key (repeatable), e.g. --set planner.t=7
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// RNG seed; takes precedence over the config file and TRAJOPT_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core). Output never depends on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One planning call from the start state; per-iteration trace CSV.
    Plan {
        /// cem, grad or gradcem (default from config).
        #[arg(long)]
        planner: Option<String>,
    },
    /// Closed-loop episode: plan, execute first action, repeat; step CSV.
    Episode {
        #[arg(long)]
        planner: Option<String>,
    },
    /// Dimensionality sweep (single soft obstacle); records CSV.
    SweepDim {
        /// Also write per-group mean/std CSV here.
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
    },
    /// Obstacle-count sweep (2D, hard contact); records CSV.
    SweepObstacles {
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
    },
    /// Paired t-test of planner A against planner B per sweep value.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// dim or obstacles (ignored when --records is given).
        #[arg(long, default_value = "dim")]
        scenario: String,
        /// Reuse records from a previous sweep instead of re-running it.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
    },
    /// Best-plan trajectories of each configured planner; position CSV.
    DumpTraj,
    /// Compare analytic and finite-difference gradients on random
    /// configurations; exits 3 if the max relative error exceeds 1e-5.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        configs: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parameter(_) | Error::InvalidDistribution(_) => 2,
                Error::InvalidReturn(_) | Error::NonFinite(_) | Error::Io(_) => 3,
            }
        }
    };
    std::process::exit(code);
}

fn try_run(cli: Cli) -> Result<i32> {
    let mut overrides = Vec::with_capacity(cli.set.len());
    for pair in &cli.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects KEY=VALUE, got '{pair}'"))
        })?;
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    let mut cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        // Ignore the error if a pool already exists (tests call this twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }

    let mut output = Vec::new();
    let code = dispatch(&cli.command, &cfg, &mut output)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &output)?,
        None => std::io::stdout().write_all(&output)?,
    }
    Ok(code)
}

fn planner_or_default(flag: &Option<String>, cfg: &RunConfig) -> Result<PlannerKind> {
    match flag {
        Some(name) => name.parse(),
        None => Ok(cfg.planner),
    }
}

fn params_with_seed(cfg: &RunConfig) -> PlannerParams {
    PlannerParams { seed: cfg.seed, ..cfg.params.clone() }
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut Vec<u8>) -> Result<i32> {
    match command {
        Command::Plan { planner } => {
            let kind = planner_or_default(planner, cfg)?;
            let env = cfg.template.build()?;
            let s0 = PointMassState::at_rest(env.dim);
            let outcome = kind.plan(&env, &s0, &params_with_seed(cfg), &RngStream::new(cfg.seed))?;
            writeln!(out, "iteration,best_return,mean_return")?;
            for (i, it) in outcome.trace.iter().enumerate() {
                writeln!(out, "{},{},{}", i + 1, it.best_return, it.mean_return)?;
            }
        }
        Command::Episode { planner } => {
            let kind = planner_or_default(planner, cfg)?;
            let env = cfg.template.build()?;
            let s0 = PointMassState::at_rest(env.dim);
            let ep = run_episode(
                &env,
                kind,
                &params_with_seed(cfg),
                &s0,
                &cfg.episode,
                &RngStream::new(cfg.seed),
            )?;
            let coords: Vec<String> = (0..env.dim).map(|i| format!("x{i}")).collect();
            writeln!(out, "step,plan_return,reward,{}", coords.join(","))?;
            for l in 0..cfg.episode.length {
                let state = &ep.visited_states[l + 1];
                let cols: Vec<String> = state.position.iter().map(|x| x.to_string()).collect();
                writeln!(
                    out,
                    "{},{},{},{}",
                    l + 1,
                    ep.per_step_plan_returns[l],
                    reward(state, &env),
                    cols.join(",")
                )?;
            }
        }
        Command::SweepDim { summary } => {
            let records = run_dim_sweep(&cfg.sweep_spec(Scenario::DimSweep))?;
            write_records_csv(&mut *out, &records)?;
            write_summary_if_asked(summary, &records)?;
        }
        Command::SweepObstacles { summary } => {
            let records = run_obstacle_sweep(&cfg.sweep_spec(Scenario::ObstacleSweep))?;
            write_records_csv(&mut *out, &records)?;
            write_summary_if_asked(summary, &records)?;
        }
        Command::Compare { a, b, scenario, records } => {
            let a: PlannerKind = a.parse()?;
            let b: PlannerKind = b.parse()?;
            let records = match records {
                Some(path) => read_records_csv(&std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                })?)?,
                None => run_sweep(&cfg.sweep_spec(scenario.parse()?))?,
            };
            let rows = compare_planners(&records, a, b)?;
            write_ttest_csv(&mut *out, a, b, &rows)?;
        }
        Command::DumpTraj => {
            let env = cfg.template.build()?;
            dump_trajectories(&mut *out, &env, &cfg.sweep_planners, &params_with_seed(cfg), cfg.seed)?;
        }
        Command::GradCheck { configs } => {
            let report = grad_check(*configs, cfg.seed)?;
            writeln!(out, "configs,max_rel_error")?;
            writeln!(out, "{},{}", report.configs, report.max_rel_error)?;
            if report.max_rel_error > 1e-5 {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn write_summary_if_asked(
    summary: &Option<PathBuf>,
    records: &[trajopt::bench::RunRecord],
) -> Result<()> {
    if let Some(path) = summary {
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &summarize(records))?;
        std::fs::write(path, buf)?;
    }
    Ok(())
}
