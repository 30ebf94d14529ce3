//! Command-line driver.
//!
//! Every subcommand consumes the same config document with a section
//! filter: `simulate` only integrates, `couple` adds the Girsanov pair,
//! `ot` adds the transport estimate between the coupled marginals,
//! `verify` runs the full verification campaign, and `ladder` is `verify`
//! restricted to configs with a regularization ladder.
//!
//! Exit codes: 0 when every verdict holds, 2 when any is violated, 3 when
//! any is inconclusive (violations take precedence), 1 on operational
//! errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::Verdict;
use crate::error::{Error, Result};
use crate::experiment::config::{parse_config, ExperimentConfig, OtSolver};
use crate::experiment::report::{emit_reports, OutputFormat};
use crate::experiment::{run_experiment_with_paths, ReportBundle};
use crate::girsanov::{coupling_cost, entropy_estimate, simulate_coupled};
use crate::grid::TimeGrid;
use crate::io::{write_coupled_binary, write_ensemble_binary, write_ensemble_csv};
use crate::sde::simulate_paths;
use crate::transport::{cost_matrix, empirical_w2_exact_with_cap, empirical_w2_sinkhorn};

#[derive(Debug, Parser)]
#[command(name = "pathtci", version, about = "Transport-inequality experiments for diffusion paths")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the base ensemble and write it to containers.
    Simulate(CommonArgs),
    /// Simulate the Girsanov-coupled pair ensemble.
    Couple(CommonArgs),
    /// Estimate the transport distance between the coupled marginals.
    Ot(CommonArgs),
    /// Run the configured verification campaign.
    Verify(CommonArgs),
    /// Run the regularization-ladder campaign (requires a [ladder] section).
    Ladder(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Comma-separated outputs: json, csv, paths.
    #[arg(long, default_value = "json,csv")]
    format: String,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

/// Parse arguments and run; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let args = match &cli.command {
        Command::Simulate(a)
        | Command::Couple(a)
        | Command::Ot(a)
        | Command::Verify(a)
        | Command::Ladder(a) => a,
    };
    let text = fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    let formats = OutputFormat::parse_list(&args.format)?;

    let body = || -> Result<i32> {
        match &cli.command {
            Command::Simulate(_) => cmd_simulate(&config, &out_dir, &formats),
            Command::Couple(_) => cmd_couple(&config, &out_dir, &formats),
            Command::Ot(_) => cmd_ot(&config, &out_dir, &formats),
            Command::Verify(_) => cmd_verify(&config, &out_dir, &formats),
            Command::Ladder(_) => {
                if config.ladder.is_none() {
                    return Err(Error::InvalidArgument(
                        "the ladder subcommand needs a [ladder] section in the config".into(),
                    ));
                }
                cmd_verify(&config, &out_dir, &formats)
            }
        }
    };

    match args.threads {
        None => body(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(body)
        }
    }
}

fn cmd_simulate(
    config: &ExperimentConfig,
    out_dir: &PathBuf,
    formats: &[OutputFormat],
) -> Result<i32> {
    let problem = crate::experiment::catalog::build_problem(&config.problem, None)?;
    let grid = TimeGrid::new(config.grid.horizon, config.grid.n_steps)?;
    let ens = simulate_paths(&problem, &grid, config.n_paths, config.seed)?;
    fs::create_dir_all(out_dir)?;
    let bin = out_dir.join("ensemble.ptce");
    write_ensemble_binary(&bin, &ens)?;
    println!("wrote {}", bin.display());
    if formats.contains(&OutputFormat::Csv) {
        let csv = out_dir.join("ensemble.csv");
        write_ensemble_csv(&csv, &ens)?;
        println!("wrote {}", csv.display());
    }
    println!(
        "simulated {} paths, dim {}, {} steps, seed {}",
        ens.n_paths(),
        ens.dim(),
        grid.n_steps(),
        config.seed
    );
    Ok(0)
}

fn cmd_couple(
    config: &ExperimentConfig,
    out_dir: &PathBuf,
    formats: &[OutputFormat],
) -> Result<i32> {
    let problem = crate::experiment::catalog::build_problem(&config.problem, None)?;
    let pert = crate::experiment::catalog::build_perturbation(&config.perturbation)?;
    let grid = TimeGrid::new(config.grid.horizon, config.grid.n_steps)?;
    let coupled = simulate_coupled(&problem, &pert, &grid, config.n_paths, config.seed)?;
    fs::create_dir_all(out_dir)?;
    let bin = out_dir.join("coupled.ptcc");
    write_coupled_binary(&bin, &coupled)?;
    println!("wrote {}", bin.display());
    let cost = coupling_cost(&coupled)?;
    let entropy = entropy_estimate(&coupled, grid.horizon())?;
    let summary = serde_json::json!({
        "n_pairs": coupled.n_pairs(),
        "coupling_cost": { "value": cost.value, "std_err": cost.std_err },
        "entropy": { "value": entropy.value, "std_err": entropy.std_err },
    });
    if formats.contains(&OutputFormat::Json) {
        let path = out_dir.join("coupling.json");
        fs::write(&path, serde_json::to_string_pretty(&summary).unwrap())?;
        println!("wrote {}", path.display());
    }
    println!(
        "coupling cost {:.6} +- {:.2e}, entropy {:.6} +- {:.2e}",
        cost.value, cost.std_err, entropy.value, entropy.std_err
    );
    Ok(0)
}

fn cmd_ot(config: &ExperimentConfig, out_dir: &PathBuf, formats: &[OutputFormat]) -> Result<i32> {
    let problem = crate::experiment::catalog::build_problem(&config.problem, None)?;
    let pert = crate::experiment::catalog::build_perturbation(&config.perturbation)?;
    let grid = TimeGrid::new(config.grid.horizon, config.grid.n_steps)?;
    let coupled = simulate_coupled(&problem, &pert, &grid, config.n_paths, config.seed)?;
    let mu = coupled.base_marginal();
    let nu = coupled.shifted_marginal();
    let result = match config.ot.solver {
        OtSolver::Sinkhorn => empirical_w2_sinkhorn(
            &mu,
            &nu,
            config.ot.epsilon,
            config.ot.max_iters,
            config.ot.tol,
        )?,
        // `ot` always computes something; `none` falls back to exact.
        OtSolver::Exact | OtSolver::None => {
            empirical_w2_exact_with_cap(&mu, &nu, config.ot.cap)?
        }
    };
    fs::create_dir_all(out_dir)?;
    if formats.contains(&OutputFormat::Json) {
        let path = out_dir.join("ot.json");
        fs::write(&path, serde_json::to_string_pretty(&result).unwrap())?;
        println!("wrote {}", path.display());
    }
    if formats.contains(&OutputFormat::Csv) {
        let cost = cost_matrix(&mu, &nu)?;
        let cost_path = out_dir.join("cost_matrix.csv");
        fs::write(&cost_path, cost.to_csv())?;
        println!("wrote {}", cost_path.display());
        let plan_path = out_dir.join("plan.csv");
        fs::write(&plan_path, result.plan_to_csv())?;
        println!("wrote {}", plan_path.display());
    }
    println!(
        "w2^2 estimate {:.6} ({:?}, converged: {})",
        result.value, result.method, result.converged
    );
    Ok(0)
}

fn cmd_verify(
    config: &ExperimentConfig,
    out_dir: &PathBuf,
    formats: &[OutputFormat],
) -> Result<i32> {
    let keep_paths = formats.contains(&OutputFormat::Paths);
    let output = run_experiment_with_paths(config, keep_paths)?;
    let files = emit_reports(&output, out_dir, formats)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    for record in &output.bundle.records {
        for report in &record.reports {
            println!(
                "[{}] {}: lhs {:.6} vs rhs {:.6} -> {}",
                record.label, report.tag, report.lhs, report.rhs, report.verdict
            );
        }
    }
    Ok(exit_code(&output.bundle))
}

/// 0 all hold, 2 any violated, 3 any inconclusive; violations dominate.
pub fn exit_code(bundle: &ReportBundle) -> i32 {
    let mut code = 0;
    for report in bundle.all_reports() {
        match report.verdict {
            Verdict::Violated => return 2,
            Verdict::Inconclusive => code = 3,
            Verdict::Holds => {}
        }
    }
    code
}
