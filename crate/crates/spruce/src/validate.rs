//! The validation suites: ten criteria, each a group of [`CheckReport`]s.
//!
//! [`SuiteParams::full`] uses the acceptance sizes; [`SuiteParams::fast`]
//! cuts replications so the whole suite runs in a couple of minutes. The
//! statistical bounds scale with the sample sizes, so both suites test the
//! same properties.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use spruce_core::{StatisticKind, TestingProblem};

use crate::config::{PolicyChoice, SimConfig};
use crate::diagnostics::{self as diag, CheckReport, Moments, OracleSolution};
use crate::distribution::ArmDistribution;
use crate::error::Result;
use crate::harness::Simulator;
use crate::output;
use crate::presets;
use crate::rng::{Stream, Tag};

/// The quoted optimal growth rate of the easy preset and its tolerance.
pub const EASY_GROWTH: f64 = 0.082289;
pub const EASY_GROWTH_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown suite '{other}' (expected fast or full)")),
        }
    }
}

/// Sample sizes of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteParams {
    pub seed: u64,
    pub null_reps: u64,
    pub null_horizon: u64,
    pub traces: u64,
    pub trace_len: u64,
    pub growth_seeds: u64,
    pub growth_horizon: u64,
    pub sweep_alphas: Vec<f64>,
    pub sweep_seeds: u64,
    pub spruce_cap: f64,
    pub oracle_cap: f64,
    pub mgf_thetas: Vec<f64>,
    pub mgf_samples: usize,
    pub pull_seeds: u64,
    pub pull_grid: Vec<u64>,
    pub numeraire_ns: Vec<u64>,
    pub numeraire_reps: u64,
    pub ht_rounds: u64,
    pub rct_seeds: u64,
    pub rct_alpha: f64,
    pub rct_ratio_cap: f64,
    pub determinism_reps: u64,
}

impl SuiteParams {
    pub fn full() -> Self {
        Self {
            seed: 0,
            null_reps: 2000,
            null_horizon: 5000,
            traces: 200,
            trace_len: 300,
            growth_seeds: 50,
            growth_horizon: 20_000,
            sweep_alphas: vec![1e-2, 1e-3, 1e-4, 1e-6],
            sweep_seeds: 500,
            spruce_cap: 1.4,
            oracle_cap: 1.25,
            mgf_thetas: vec![1.0, -1.0, 0.5, -0.5],
            mgf_samples: 1_000_000,
            pull_seeds: 200,
            pull_grid: vec![1000, 10_000],
            numeraire_ns: vec![10, 100],
            numeraire_reps: 100_000,
            ht_rounds: 100_000,
            rct_seeds: 300,
            rct_alpha: 1e-3,
            rct_ratio_cap: 0.6,
            determinism_reps: 20,
        }
    }

    pub fn fast() -> Self {
        Self {
            null_reps: 500,
            traces: 50,
            growth_seeds: 20,
            sweep_seeds: 100,
            pull_seeds: 50,
            numeraire_reps: 10_000,
            ht_rounds: 20_000,
            rct_seeds: 100,
            determinism_reps: 5,
            ..Self::full()
        }
    }

    pub fn for_suite(suite: Suite) -> Self {
        match suite {
            Suite::Fast => Self::fast(),
            Suite::Full => Self::full(),
        }
    }
}

/// The checks of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<CheckReport>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The one-line verdict, e.g. `[PASS] 1 time-uniform type-I error`.
    pub fn headline(&self) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        let status = if failed.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "[{status}] criterion {}: {} ({} checks)",
            self.id,
            self.title,
            self.checks.len()
        );
        if !failed.is_empty() {
            line.push_str(&format!("; failed: {}", failed.join("; ")));
        }
        line
    }
}

pub const TITLES: [&str; 10] = [
    "time-uniform type-I error",
    "CO96 statistic below UP statistic",
    "universal portfolio regret",
    "growth-rate optimality",
    "rejection-time sandwich",
    "sub-exponential MGF bound",
    "suboptimal-pull bound",
    "numeraire mean-one",
    "ATE pipeline",
    "determinism",
];

pub fn run_criterion(id: u8, p: &SuiteParams) -> Result<CriterionResult> {
    let checks = match id {
        1 => type_one_error(p)?,
        2 => ordering(p)?,
        3 => regret(p)?,
        4 => growth(p)?,
        5 => sandwich(p)?,
        6 => mgf(p)?,
        7 => pulls(p)?,
        8 => numeraire(p)?,
        9 => ate(p)?,
        10 => determinism(p)?,
        _ => return Err(crate::SimError::config(format!("no criterion {id}"))),
    };
    Ok(CriterionResult {
        id,
        title: TITLES[id as usize - 1],
        checks,
    })
}

pub fn run_suite(p: &SuiteParams) -> Result<Vec<CriterionResult>> {
    (1..=10).map(|id| run_criterion(id, p)).collect()
}

/// Flattens results into `(criterion, check)` rows for `validation.csv`.
pub fn report_rows(results: &[CriterionResult]) -> Vec<(String, CheckReport)> {
    results
        .iter()
        .flat_map(|r| r.checks.iter().map(move |c| (r.id.to_string(), c.clone())))
        .collect()
}

fn easy(p: &SuiteParams) -> SimConfig {
    let mut c = presets::easy();
    c.master_seed = p.seed;
    c
}

fn type_one_error(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let mut c = presets::null();
    c.master_seed = p.seed;
    c.reps = p.null_reps;
    c.horizon = p.null_horizon;
    Ok(vec![diag::type_one_error_check(&Simulator::new(c)?)?])
}

/// A random single-coordinate configuration for trace-level checks.
pub fn random_trace_config(seed: u64, index: u64, max_len: u64) -> Result<SimConfig> {
    let mut stream = Stream::new(seed, index, Tag::Diagnostic);
    let rng = stream.at_round(0);
    let k = rng.random_range(1..=4usize);
    let law = |rng: &mut rand_chacha::ChaCha8Rng| match rng.random_range(0..3) {
        0 => ArmDistribution::Bernoulli(rng.random_range(0.05..0.95)),
        1 => ArmDistribution::Beta {
            a: rng.random_range(0.5..5.0),
            b: rng.random_range(0.5..5.0),
        },
        _ => {
            let w: f64 = rng.random_range(0.1..0.9);
            ArmDistribution::Discrete {
                points: vec![0.0, rng.random_range(0.0..1.0), 1.0],
                probs: vec![w / 2.0, 1.0 - w, w / 2.0],
            }
        }
    };
    let problem = match rng.random_range(0..3) {
        0 => TestingProblem::OneSidedMean {
            mu0: rng.random_range(0.2..0.8),
        },
        1 => TestingProblem::TwoSidedMean {
            mu0: rng.random_range(0.2..0.8),
        },
        _ => TestingProblem::TupleEquality,
    };
    let arms = (0..k)
        .map(|_| {
            if problem == TestingProblem::TupleEquality {
                ArmDistribution::Pair(Box::new(law(rng)), Box::new(law(rng)))
            } else {
                law(rng)
            }
        })
        .collect();
    let mut c = SimConfig::new(problem, arms);
    c.policy = match rng.random_range(0..3) {
        0 => PolicyChoice::Spruce,
        1 => PolicyChoice::RoundRobin,
        _ => PolicyChoice::UniformRandom,
    };
    c.zeta = if rng.random_bool(0.5) {
        1.0
    } else {
        presets::PRESET_ZETA
    };
    c.statistic = StatisticKind::Up;
    c.horizon = rng.random_range(k as u64..=max_len);
    c.master_seed = seed;
    Ok(c)
}

fn traces(p: &SuiteParams) -> Result<Vec<(Simulator, crate::harness::RunTrace)>> {
    (0..p.traces)
        .into_par_iter()
        .map(|i| {
            let sim = Simulator::new(random_trace_config(p.seed, i, p.trace_len)?)?;
            let trace = sim.run_episode(i)?;
            Ok((sim, trace))
        })
        .collect()
}

/// Folds per-trace reports into one: all must pass, measured is the worst.
fn fold(name: &str, reports: Vec<CheckReport>, bound: f64, larger_is_worse: bool) -> CheckReport {
    let count = reports.len();
    let failures = reports.iter().filter(|r| !r.passed).count();
    let worst = reports.iter().map(|r| r.measured).fold(
        if larger_is_worse {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        },
        |a, b| if larger_is_worse { a.max(b) } else { a.min(b) },
    );
    CheckReport::new(name, failures == 0, worst, bound).with_note(format!("{failures} of {count} failed"))
}

fn ordering(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let reports = traces(p)?
        .iter()
        .map(|(sim, t)| diag::evalue_ordering_check(sim, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![fold("max log W^CO96 − log W^UP over traces", reports, 1e-6, true)])
}

fn regret(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let mut up = Vec::new();
    let mut co96 = Vec::new();
    for (sim, trace) in traces(p)? {
        let mut cfg = sim.config().clone();
        cfg.statistic = StatisticKind::Co96;
        let co_sim = Simulator::new(cfg)?;
        for arm in 0..sim.config().k() {
            up.push(diag::portfolio_regret_check(&sim, &trace, arm)?);
            co96.push(diag::portfolio_regret_check(&co_sim, &trace, arm)?);
        }
    }
    Ok(vec![
        fold("UP regret − R^CO96 over traces and arms", up, 1e-6, true),
        fold("CO96 regret identity over traces and arms", co96, 0.0, true),
    ])
}

fn growth(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let mut c = easy(p);
    c.reps = p.growth_seeds;
    c.horizon = p.growth_horizon;
    let oracle = diag::solve_oracle(&c)?;
    let mut out = vec![CheckReport::at_most(
        "|ℓ* − 0.082289|",
        (oracle.optimal_growth - EASY_GROWTH).abs(),
        EASY_GROWTH_TOLERANCE,
    )
    .with_note(format!(
        "ℓ* = {:.9}, grid {:.9}",
        oracle.optimal_growth,
        oracle.arms[oracle.best_arm].grid_growth.unwrap_or(f64::NAN)
    ))];
    out.push(CheckReport::new(
        "a_Q is arm 1",
        oracle.best_arm == 0,
        (oracle.best_arm + 1) as f64,
        1.0,
    ));
    out.extend(diag::growth_optimality_check(&c, &oracle, 0.01, 0.005)?);
    Ok(out)
}

fn sweep(c: &SimConfig, oracle: &OracleSolution, p: &SuiteParams, cap: f64, label: &str) -> Result<Vec<CheckReport>> {
    let report = diag::stopping_ratio_sweep(
        &Simulator::new(c.clone())?,
        oracle,
        &p.sweep_alphas,
        p.sweep_seeds,
        Some(cap),
    )?;
    Ok(report
        .checks
        .into_iter()
        .map(|mut r| {
            r.name = format!("{label}: {}", r.name);
            r
        })
        .collect())
}

fn sandwich(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let c = easy(p);
    let oracle = diag::solve_oracle(&c)?;
    let mut out = sweep(&c, &oracle, p, p.spruce_cap, "SPRUCE")?;
    let mut o = c.clone();
    o.policy = PolicyChoice::Oracle(oracle.best_arm);
    out.extend(sweep(&o, &oracle, p, p.oracle_cap, "oracle")?);
    Ok(out)
}

fn mgf(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let c = easy(p);
    let oracle = diag::solve_oracle(&c)?;
    diag::mgf_check(&c, 0, &oracle, &p.mgf_thetas, p.mgf_samples, 1e-3)
}

fn pulls(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let c = easy(p);
    let oracle = diag::solve_oracle(&c)?;
    diag::suboptimal_pulls_check(&Simulator::new(c)?, &oracle, &p.pull_grid, p.pull_seeds, 0.95)
}

fn numeraire(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let c = easy(p);
    let oracle = diag::solve_oracle(&c)?;
    diag::numeraire_ratio_check(&Simulator::tracking_up(c)?, &oracle, &p.numeraire_ns, p.numeraire_reps)
}

/// Mean rejection time of `c` at its `alpha` over `seeds` episodes.
pub fn mean_rejection_time(c: &SimConfig, seeds: u64) -> Result<Moments> {
    let sim = Simulator::new(c.clone())?;
    let times: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|rep| Ok(sim.run_until_rejection(rep, c.max_horizon)?.time() as f64))
        .collect::<Result<_>>()?;
    Ok(Moments::from_values(times))
}

fn ate(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let mut c = presets::rct();
    c.master_seed = p.seed;
    let mut out = Vec::new();
    for arm in 0..c.k() {
        out.push(diag::ht_unbiasedness_check(&c, arm, p.ht_rounds)?);
    }
    let sim = Simulator::new(c.clone())?;
    out.push(diag::unit_portfolio_check(&sim, &sim.run_rct_episode(0)?)?);

    let mut null = c.clone();
    null.arms = vec![ArmDistribution::Bernoulli(0.5); 3];
    null.alpha = 0.05;
    null.reps = p.null_reps;
    null.horizon = p.null_horizon;
    let mut t1 = diag::type_one_error_check(&Simulator::new(null)?)?;
    t1.name = format!("RCT {}", t1.name);
    out.push(t1);

    c.alpha = p.rct_alpha;
    let spruce = mean_rejection_time(&c, p.rct_seeds)?;
    let mut rr = c.clone();
    rr.policy = PolicyChoice::RoundRobin;
    let rr = mean_rejection_time(&rr, p.rct_seeds)?;
    let ratio = spruce.mean() / rr.mean();
    let se = ratio * ((spruce.std_error() / spruce.mean()).powi(2) + (rr.std_error() / rr.mean()).powi(2)).sqrt();
    out.push(
        CheckReport::at_most(
            format!("SPRUCE / round-robin mean τ at α={}", p.rct_alpha),
            ratio,
            p.rct_ratio_cap,
        )
        .with_error(se)
        .with_note(format!(
            "SPRUCE {:.1}, round robin {:.1}, {} seeds",
            spruce.mean(),
            rr.mean(),
            p.rct_seeds
        )),
    );
    Ok(out)
}

/// Renders the same outputs twice, on pools of different sizes, and
/// compares bytes.
fn determinism(p: &SuiteParams) -> Result<Vec<CheckReport>> {
    let mut c = easy(p);
    c.reps = p.determinism_reps;
    c.horizon = 2000;
    let sim = Simulator::new(c.clone())?;
    let render = |threads| -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mc = sim.monte_carlo(Some(threads))?;
        output::render_simulation(&c, &mc.reps, &mc.summary)
    };
    let (a, b) = (render(1)?, render(3)?);
    let mut out: Vec<CheckReport> = a
        .iter()
        .zip(&b)
        .map(|((name, x), (_, y))| {
            let differing = x.iter().zip(y).filter(|(u, v)| u != v).count() + x.len().abs_diff(y.len());
            CheckReport::new(format!("{name} byte-identical"), x == y, differing as f64, 0.0)
                .with_note(format!("{} bytes", x.len()))
        })
        .collect();

    let oracle = diag::solve_oracle(&c)?;
    let sweep_bytes = || -> Result<Vec<u8>> {
        let rows = diag::stopping_ratio_sweep(&sim, &oracle, &[1e-2, 1e-4], p.determinism_reps, None)?.rows;
        let mut buf = Vec::new();
        output::write_alpha_sweep(&mut buf, &rows)?;
        Ok(buf)
    };
    let (x, y) = (sweep_bytes()?, sweep_bytes()?);
    out.push(CheckReport::new(
        format!("{} byte-identical", output::ALPHA_SWEEP),
        x == y,
        (x != y) as u8 as f64,
        0.0,
    ));
    Ok(out)
}
