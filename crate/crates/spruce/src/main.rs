use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use spruce::config::{SimConfig, SEED_ENV};
use spruce::diagnostics::{self, OracleSolution};
use spruce::harness::Simulator;
use spruce::output::{self, Summary};
use spruce::validate::{self, Suite, SuiteParams};
use spruce::{Result, SimError};

/// Exit status when a validation suite has failing checks.
const VALIDATION_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "spruce",
    version,
    about = "Sequential multi-armed testing by betting: simulation and validation"
)]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte-Carlo episodes; writes trajectories.csv, stopping.csv, summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the Kelly portfolios, growth rates and gaps of every arm.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rejection times across test levels; writes alpha_sweep.csv, summary.json.
    SweepAlpha {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated levels in (0, 1).
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every diagnostic; writes validation.csv, summary.json.
    Validate {
        #[arg(long, default_value = "fast")]
        suite: Suite,
        #[arg(long, default_value = "validation")]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<SimConfig> {
    let mut config = SimConfig::load(path)?;
    config.apply_seed_override()?;
    Ok(config)
}

fn simulate(config: &Path, out: &Path) -> Result<u8> {
    let config = load(config)?;
    let mc = Simulator::new(config.clone())?.monte_carlo(None)?;
    for (name, bytes) in output::render_simulation(&config, &mc.reps, &mc.summary)? {
        output::write_file(out, name, &bytes)?;
    }
    let s = &mc.summary;
    println!(
        "{} reps, horizon {}: {} rejections at α = {} (rate {:.4}, 95% CI [{:.4}, {:.4}])",
        s.reps, config.horizon, s.rejections, config.alpha, s.rejection_rate, s.rejection_ci.0, s.rejection_ci.1
    );
    if let Some(tau) = s.mean_tau_rejected {
        println!("mean rejection time {tau:.1}");
    }
    println!("outputs in {}", out.display());
    Ok(0)
}

fn print_oracle(o: &OracleSolution) {
    println!(
        "{:>4}  {:>12}  {:>12}  {:>12}  {:>12}",
        "arm", "λ_Q", "growth", "gap", "grid growth"
    );
    for (a, arm) in o.arms.iter().enumerate() {
        let weights: Vec<String> = arm.portfolio.iter().map(|w| format!("{w:.6}")).collect();
        let grid = arm.grid_growth.map_or("-".into(), |g| format!("{g:.9}"));
        println!(
            "{:>4}  {:>12}  {:>12.9}  {:>12.9}  {:>12}",
            a + 1,
            weights.join("/"),
            arm.growth,
            o.gaps[a],
            grid
        );
    }
    println!("a_Q = {}, ℓ* = {:.9}", o.best_arm + 1, o.optimal_growth);
}

fn oracle(config: &Path) -> Result<u8> {
    let config = load(config)?;
    let solution = diagnostics::solve_oracle(&config)?;
    print_oracle(&solution);
    println!();
    print!("{}", Summary::new("oracle", &config, Some(&solution), ()).to_json()?);
    Ok(0)
}

#[derive(Serialize)]
struct SweepResults<'a> {
    seeds: u64,
    max_horizon: u64,
    rows: &'a [diagnostics::SweepRow],
    checks: &'a [diagnostics::CheckReport],
}

fn sweep_alpha(config: &Path, alphas: &[f64], out: &Path) -> Result<u8> {
    let config = load(config)?;
    if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(SimError::config(format!("alpha {bad} is not in (0, 1)")));
    }
    let solution = diagnostics::solve_oracle(&config)?;
    let sim = Simulator::new(config.clone())?;
    let report = diagnostics::stopping_ratio_sweep(&sim, &solution, alphas, config.reps, None)?;
    output::write_with(out, output::ALPHA_SWEEP, |buf| {
        output::write_alpha_sweep(buf, &report.rows)
    })?;
    let results = SweepResults {
        seeds: config.reps,
        max_horizon: config.max_horizon,
        rows: &report.rows,
        checks: &report.checks,
    };
    let json = Summary::new("sweep-alpha", &config, Some(&solution), results).to_json()?;
    output::write_file(out, output::SUMMARY, json.as_bytes())?;
    println!("{:>10}  {:>12}  {:>9}  {:>9}", "alpha", "mean τ", "ratio", "censored");
    for r in &report.rows {
        println!(
            "{:>10}  {:>12.2}  {:>9.4}  {:>9.4}",
            r.alpha, r.mean_tau, r.ratio, r.censored_frac
        );
    }
    for c in &report.checks {
        println!("{c}");
    }
    Ok(0)
}

#[derive(Serialize)]
struct ValidationResults<'a> {
    suite: &'a str,
    params: &'a SuiteParams,
    passed: bool,
    criteria: &'a [validate::CriterionResult],
}

fn run_validation(suite: Suite, out: &Path) -> Result<u8> {
    let mut params = SuiteParams::for_suite(suite);
    if let Ok(text) = std::env::var(SEED_ENV) {
        params.seed = text
            .trim()
            .parse()
            .map_err(|_| SimError::config(format!("{SEED_ENV}={text} is not a 64-bit unsigned integer")))?;
    }
    let mut results = Vec::new();
    for id in 1..=10 {
        let r = validate::run_criterion(id, &params)?;
        println!("{}", r.headline());
        for c in &r.checks {
            println!("    {c}");
        }
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed());
    output::write_with(out, output::VALIDATION, |buf| {
        output::write_validation(buf, &validate::report_rows(&results))
    })?;
    let suite_name = if suite == Suite::Fast { "fast" } else { "full" };
    let doc = ValidationResults {
        suite: suite_name,
        params: &params,
        passed,
        criteria: &results,
    };
    let mut config = spruce::presets::easy();
    config.master_seed = params.seed;
    output::write_file(
        out,
        output::SUMMARY,
        Summary::new("validate", &config, None, doc).to_json()?.as_bytes(),
    )?;
    println!(
        "{} criteria passed; report in {}",
        results.iter().filter(|r| r.passed()).count(),
        out.display()
    );
    Ok(if passed { 0 } else { VALIDATION_FAILED })
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(SimError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| SimError::runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Oracle { config } => oracle(&config),
        Command::SweepAlpha { config, alphas, out } => sweep_alpha(&config, &alphas, &out),
        Command::Validate { suite, out } => run_validation(suite, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("spruce: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
