//! Empirical checks of the guarantees: oracle growth rates, portfolio
//! regret, sub-exponential moments, numeraire ratios, suboptimal pulls and
//! rejection times.
//!
//! Every check returns a [`CheckReport`] carrying the measured quantity, the
//! bound it was compared against and the Monte-Carlo standard error where
//! one applies.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use spruce_core::{
    co96_regret, kelly_oracle, log_increment, EVector, Observation, Portfolio, StatisticKind, TestingProblem,
    UpMixture, WealthState,
};

use crate::config::{PolicyChoice, SimConfig, MAX_ORACLE_ATOMS};
use crate::distribution::{ArmDistribution, Outcome};
use crate::error::{Result, SimError};
use crate::harness::{median, RunTrace, Simulator, StoppingResult};
use crate::rng::{Stream, Tag};

/// Optimality tolerance of oracle computations, in nats.
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Resolution of the brute-force grid that vets oracle growth rates.
pub const GRID_STEP: f64 = 1e-5;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub mc_error: Option<f64>,
    pub note: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, passed: bool, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed,
            measured,
            bound,
            mc_error: None,
            note: String::new(),
        }
    }

    pub fn with_error(mut self, se: f64) -> Self {
        self.mc_error = Some(se);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured <= bound, measured, bound)
    }

    /// `measured ≥ bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured >= bound, measured, bound)
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: measured {:.6} vs bound {:.6}",
            self.status(),
            self.name,
            self.measured,
            self.bound
        )?;
        if let Some(se) = self.mc_error {
            write!(f, " (se {se:.3e})")?;
        }
        if !self.note.is_empty() {
            write!(f, " — {}", self.note)?;
        }
        Ok(())
    }
}

/// Streaming mean and standard error.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut m = Self::default();
        values.into_iter().for_each(|x| m.push(x));
        m
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let var = (self.sum_sq - self.n * m * m).max(0.0) / (self.n - 1.0);
        (var / self.n).sqrt()
    }
}

/// Kelly solution for one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmOracle {
    /// `λ_Q(a)` as weights.
    pub portfolio: Vec<f64>,
    /// `ℓ*(a)`.
    pub growth: f64,
    /// Best value on the `10⁻⁵` grid, for `d = 1`.
    pub grid_growth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub arms: Vec<ArmOracle>,
    /// Zero-based `a_Q`.
    pub best_arm: usize,
    pub optimal_growth: f64,
    pub gaps: Vec<f64>,
}

impl OracleSolution {
    pub fn portfolio(&self, arm: usize) -> Portfolio {
        Portfolio::new(self.arms[arm].portfolio.clone()).expect("oracle portfolios lie in the simplex")
    }
}

fn merge_atoms(atoms: impl IntoIterator<Item = (EVector, f64)>) -> Vec<(EVector, f64)> {
    let mut out: Vec<(EVector, f64)> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for (e, p) in atoms {
        let key: Vec<u64> = e.values().iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => out[i].1 += p,
            None => {
                index.insert(key, out.len());
                out.push((e, p));
            }
        }
    }
    out
}

fn finite_support(law: &ArmDistribution, atoms: Option<usize>, what: &str) -> Result<Vec<(Outcome, f64)>> {
    if law.is_continuous() && atoms.is_none() {
        return Err(SimError::config(format!(
            "{what} is continuous; set `discretization` to compute its oracle"
        )));
    }
    let atoms = atoms.unwrap_or(1);
    let size = match law {
        ArmDistribution::Pair(x, y) => law_size(x, atoms) * law_size(y, atoms),
        other => law_size(other, atoms),
    };
    if size > MAX_ORACLE_ATOMS {
        return Err(SimError::config(format!(
            "{what} discretizes to {size} atoms, more than {MAX_ORACLE_ATOMS}"
        )));
    }
    Ok(law.support(atoms))
}

fn law_size(law: &ArmDistribution, atoms: usize) -> usize {
    match law {
        ArmDistribution::Bernoulli(_) => 2,
        ArmDistribution::Beta { .. } => atoms,
        ArmDistribution::Discrete { points, .. } => points.len(),
        ArmDistribution::Pair(..) => unreachable!("pairs are not nested"),
    }
}

/// The finitely supported law of arm `arm`'s e-vector.
pub fn evector_law(config: &SimConfig, arm: usize) -> Result<Vec<(EVector, f64)>> {
    let law = config
        .arms
        .get(arm)
        .ok_or_else(|| SimError::config(format!("no arm {}", arm + 1)))?;
    let what = format!("arm {}", arm + 1);
    let support = finite_support(law, config.discretization, &what)?;
    let problem = config.problem;
    let mut atoms = Vec::new();
    match problem {
        TestingProblem::AteThreshold { pi, .. } => {
            let control = config
                .control
                .as_ref()
                .ok_or_else(|| SimError::config("missing control law"))?;
            for (o, p) in support {
                let Outcome::Scalar(y) = o else {
                    unreachable!("validated scalar arms")
                };
                atoms.push((
                    problem.evector(Observation::Assigned {
                        y_obs: y,
                        treated: true,
                    })?,
                    pi * p,
                ));
            }
            for (o, p) in finite_support(control, config.discretization, "control")? {
                let Outcome::Scalar(y) = o else {
                    unreachable!("validated scalar control")
                };
                atoms.push((
                    problem.evector(Observation::Assigned {
                        y_obs: y,
                        treated: false,
                    })?,
                    (1.0 - pi) * p,
                ));
            }
        }
        _ => {
            for (o, p) in support {
                let obs = match o {
                    Outcome::Scalar(y) => Observation::Scalar(y),
                    Outcome::Pair(x, y) => Observation::Pair(x, y),
                };
                atoms.push((problem.evector(obs)?, p));
            }
        }
    }
    let mut merged = merge_atoms(atoms);
    // Renormalize away the round-off of products of probabilities.
    let total: f64 = merged.iter().map(|(_, p)| p).sum();
    merged.iter_mut().for_each(|(_, p)| *p /= total);
    Ok(merged)
}

fn expected_log(law: &[(EVector, f64)], lambda1: f64) -> f64 {
    law.iter()
        .map(|(e, p)| {
            let v = e.values();
            let inc = (1.0 - lambda1) * v[0] + lambda1 * v[1];
            if inc > 0.0 {
                p * inc.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// Best expected log-increment over the grid `λ₁ ∈ {0, 10⁻⁵, …, 1}`.
pub fn grid_growth(law: &[(EVector, f64)]) -> f64 {
    let steps = (1.0 / GRID_STEP).round() as usize;
    (0..=steps)
        .map(|i| expected_log(law, i as f64 / steps as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Kelly portfolios and growth rates of every arm. For `d = 1` each
/// growth rate is vetted against the brute-force grid before it is returned.
pub fn solve_oracle(config: &SimConfig) -> Result<OracleSolution> {
    let constants = config.constants()?;
    let mut arms = Vec::with_capacity(config.k());
    for arm in 0..config.k() {
        let law = evector_law(config, arm)?;
        let opt = kelly_oracle(&law, ORACLE_TOLERANCE)?;
        let at_tilde: f64 = law
            .iter()
            .map(|(e, p)| p * log_increment(constants.lambda_tilde(), e).unwrap_or(0.0))
            .sum();
        let (portfolio, growth) = if at_tilde > opt.value {
            (constants.lambda_tilde().weights().to_vec(), at_tilde)
        } else {
            (opt.portfolio.weights().to_vec(), opt.value)
        };
        let grid = (constants.d() == 1).then(|| grid_growth(&law));
        if let Some(g) = grid {
            // The grid can only lose to the true maximum, and by at most the
            // curvature over half a grid step.
            if g > growth + 1e-9 || growth - g > 1e-6 {
                return Err(SimError::runtime(format!(
                    "arm {}: oracle growth {growth} disagrees with grid value {g}",
                    arm + 1
                )));
            }
        }
        arms.push(ArmOracle {
            portfolio,
            growth: growth.max(0.0),
            grid_growth: grid,
        });
    }
    let mut best_arm = 0;
    for (a, o) in arms.iter().enumerate() {
        if o.growth > arms[best_arm].growth {
            best_arm = a;
        }
    }
    let optimal_growth = arms[best_arm].growth;
    let gaps = arms.iter().map(|o| optimal_growth - o.growth).collect();
    Ok(OracleSolution {
        arms,
        best_arm,
        optimal_growth,
        gaps,
    })
}

/// Arm-wise portfolio regret along a trace, replayed with both statistics.
///
/// For the universal portfolio: `0 ≤ regret ≤ R^CO96(N_a) + 10⁻⁶` at every
/// round (the lower edge allows the same slack for the optimizer tolerance).
/// For CO96 the arm's log-wealth must be exactly `bih − R^CO96(N_a)`; the
/// measured value is the largest floating-point gap `|regret − R^CO96|`.
pub fn portfolio_regret_check(sim: &Simulator, trace: &RunTrace, arm: usize) -> Result<CheckReport> {
    let cfg = sim.config();
    let d = sim.constants().d();
    let mixture = Arc::new(UpMixture::new(cfg.up_nodes)?);
    let mut state = WealthState::with_mixture(cfg.k(), sim.constants().clone(), cfg.statistic, mixture)?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for record in &trace.records {
        state.update(record.arm, &record.evector)?;
        let ledger = state.ledger(arm)?;
        if ledger.pull_count() == 0 {
            continue;
        }
        let bound = co96_regret(ledger.pull_count(), d);
        match cfg.statistic {
            StatisticKind::Up => {
                let regret = ledger.bih_value() - ledger.up_log_wealth().expect("tracked");
                ok &= regret >= -1e-6 && regret <= bound + 1e-6;
                worst = worst.max(regret - bound);
            }
            StatisticKind::Co96 => {
                let wealth = ledger.co96_log_wealth(d);
                ok &= wealth.to_bits() == (ledger.bih_value() - bound).to_bits();
                worst = worst.max(((ledger.bih_value() - wealth) - bound).abs());
            }
        }
    }
    let name = format!("portfolio regret, arm {}", arm + 1);
    let report = match cfg.statistic {
        StatisticKind::Up => {
            CheckReport::new(name, ok, worst, 1e-6).with_note("max over rounds of regret − R^CO96(N_a)")
        }
        StatisticKind::Co96 => {
            CheckReport::new(name, ok, worst, 0.0).with_note("CO96 identity; measured is the rounding gap |regret − R|")
        }
    };
    Ok(report)
}

/// `log W^CO96 ≤ log W̄^UP + 10⁻⁶` at every round of a trace; measured is
/// the largest excess `log W^CO96 − log W̄^UP`.
pub fn evalue_ordering_check(sim: &Simulator, trace: &RunTrace) -> Result<CheckReport> {
    let cfg = sim.config();
    let mixture = Arc::new(UpMixture::new(cfg.up_nodes)?);
    let mut state = WealthState::with_mixture(cfg.k(), sim.constants().clone(), StatisticKind::Co96, mixture)?;
    let mut worst = f64::NEG_INFINITY;
    for record in &trace.records {
        state.update(record.arm, &record.evector)?;
        let co96 = state.log_evalue_of(StatisticKind::Co96).expect("configured statistic");
        let up = state.log_evalue_of(StatisticKind::Up).expect("tracked");
        worst = worst.max(co96 - up);
    }
    Ok(CheckReport::at_most("log W^CO96 − log W^UP", worst, 1e-6).with_note(format!("{} rounds", trace.records.len())))
}

/// Draws one e-vector of `arm` straight from its outcome law.
pub fn sample_evector<R: Rng + ?Sized>(config: &SimConfig, arm: usize, rng: &mut R) -> Result<EVector> {
    let outcome = config.arms[arm].sample(rng);
    let obs = match (config.problem, outcome) {
        (TestingProblem::AteThreshold { pi, .. }, Outcome::Scalar(y1)) => {
            let treated = rng.random_bool(pi);
            let y_obs = if treated {
                y1
            } else {
                match config.control.as_ref().expect("validated control").sample(rng) {
                    Outcome::Scalar(y0) => y0,
                    Outcome::Pair(..) => unreachable!("validated scalar control"),
                }
            };
            Observation::Assigned { y_obs, treated }
        }
        (_, Outcome::Scalar(y)) => Observation::Scalar(y),
        (_, Outcome::Pair(x, y)) => Observation::Pair(x, y),
    };
    Ok(config.problem.evector(obs)?)
}

/// `E[exp(θ(ℓ − ℓ*))] ≤ b` for `ℓ = log(λ_Qᵀ𝐄)`, by Monte Carlo, with the
/// exact finite-support value as a cross-check (within `agreement`).
pub fn mgf_check(
    config: &SimConfig,
    arm: usize,
    oracle: &OracleSolution,
    thetas: &[f64],
    samples: usize,
    agreement: f64,
) -> Result<Vec<CheckReport>> {
    let b = config.constants()?.b();
    let lambda = oracle.portfolio(arm);
    let growth = oracle.arms[arm].growth;
    let law = evector_law(config, arm)?;
    let mut rng = Stream::new(config.master_seed, arm as u64, Tag::Diagnostic);
    let rng = rng.at_round(0);
    let mut logs = Vec::with_capacity(samples);
    for _ in 0..samples {
        logs.push(log_increment(&lambda, &sample_evector(config, arm, rng)?)?);
    }
    let mut out = Vec::new();
    for &theta in thetas {
        let m = Moments::from_values(logs.iter().map(|l| (theta * (l - growth)).exp()));
        let exact: f64 = law
            .iter()
            .map(|(e, p)| p * (theta * (log_increment(&lambda, e).expect("matching dimension") - growth)).exp())
            .sum();
        let limit = b + config.slack * m.std_error();
        out.push(
            CheckReport::at_most(format!("mgf θ={theta}, arm {}", arm + 1), m.mean(), limit)
                .with_error(m.std_error())
                .with_note(format!("b = {b}, {samples} samples")),
        );
        out.push(
            CheckReport::at_most(
                format!("mgf θ={theta} closed form, arm {}", arm + 1),
                (m.mean() - exact).abs(),
                agreement,
            )
            .with_note(format!("exact {exact:.6}")),
        );
    }
    Ok(out)
}

/// `log S_n = Σᵢ≤ₙ log(λᵢᵀEᵢ) − log(λ_Q(Aᵢ)ᵀEᵢ)` with `λᵢ` the universal
/// portfolio each pulled arm bet with; `None` if the trace is shorter.
pub fn numeraire_log_ratio(trace: &RunTrace, oracle: &OracleSolution, n: u64) -> Result<Option<f64>> {
    if (trace.records.len() as u64) < n {
        return Ok(None);
    }
    let portfolios: Vec<Portfolio> = (0..oracle.arms.len()).map(|a| oracle.portfolio(a)).collect();
    let mut total = 0.0;
    for r in &trace.records[..n as usize] {
        let played = r
            .portfolio
            .as_ref()
            .ok_or_else(|| SimError::runtime("trace does not carry portfolios"))?;
        total += log_increment(played, &r.evector)? - log_increment(&portfolios[r.arm], &r.evector)?;
    }
    Ok(Some(total))
}

/// Mean of the allocation-wise numeraire ratio `S_n` over `reps` episodes,
/// compared against `1 + slack·se` at each `n`.
pub fn numeraire_ratio_check(
    sim: &Simulator,
    oracle: &OracleSolution,
    ns: &[u64],
    reps: u64,
) -> Result<Vec<CheckReport>> {
    let mut cfg = sim.config().clone();
    cfg.horizon = ns.iter().copied().max().unwrap_or(1).max(cfg.k() as u64);
    cfg.early_stop = false;
    let runner = Simulator::tracking_up(cfg)?;
    let ratios: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let trace = runner.run_episode(rep)?;
            ns.iter()
                .map(|&n| Ok(numeraire_log_ratio(&trace, oracle, n)?.expect("horizon covers n").exp()))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ns
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let m = Moments::from_values(ratios.iter().map(|r| r[i]));
            let limit = 1.0 + sim.config().slack * m.std_error();
            CheckReport::at_most(format!("numeraire mean S_{n}"), m.mean(), limit)
                .with_error(m.std_error())
                .with_note(format!("{reps} reps"))
        })
        .collect())
}

/// `1 + max{72bγL/Δ², 15γL/Δ, 3R_{n−1}/Δ} + 4ζ^(−γ)/(γ−2)` with `L = log(ζn+1)`.
pub fn suboptimal_pull_bound(n: u64, b: f64, gamma: f64, zeta: f64, gap: f64, d: usize) -> f64 {
    let l = (zeta * n as f64).ln_1p();
    let regret = co96_regret(n.saturating_sub(1), d);
    let branch = f64::max(
        f64::max(72.0 * b * gamma * l / (gap * gap), 15.0 * gamma * l / gap),
        3.0 * regret / gap,
    );
    1.0 + branch + 4.0 * zeta.powf(-gamma) / (gamma - 2.0)
}

/// Pull counts of every arm at each `n` of `n_grid`, for one episode.
pub fn pulls_at(sim: &Simulator, rep: u64, n_grid: &[u64]) -> Result<Vec<Vec<u64>>> {
    let mut episode = sim.episode(rep)?;
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        while episode.round() < n {
            episode.step_quiet()?;
        }
        out.push(episode.state().ledgers().iter().map(|l| l.pull_count()).collect());
    }
    Ok(out)
}

/// Mean suboptimal pulls against the bound at each `n`, plus the fraction
/// of seeds on which `N_a(n)/n` decreases between consecutive grid points
/// (required to be at least `decrease_fraction`). The bound is SPRUCE's;
/// any other policy is measured against it unchanged.
pub fn suboptimal_pulls_check(
    sim: &Simulator,
    oracle: &OracleSolution,
    n_grid: &[u64],
    seeds: u64,
    decrease_fraction: f64,
) -> Result<Vec<CheckReport>> {
    let cfg = sim.config();
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    let runs: Vec<Vec<Vec<u64>>> = (0..seeds)
        .into_par_iter()
        .map(|rep| pulls_at(sim, rep, &grid))
        .collect::<Result<_>>()?;
    let b = sim.constants().b();
    let d = sim.constants().d();
    let mut out = Vec::new();
    for arm in 0..cfg.k() {
        if arm == oracle.best_arm {
            continue;
        }
        let gap = oracle.gaps[arm];
        if gap <= 0.0 {
            out.push(
                CheckReport::new(format!("suboptimal pulls, arm {}", arm + 1), true, 0.0, 0.0)
                    .with_note("skipped: Δ = 0"),
            );
            continue;
        }
        for (i, &n) in grid.iter().enumerate() {
            let m = Moments::from_values(runs.iter().map(|r| r[i][arm] as f64));
            let bound = suboptimal_pull_bound(n, b, cfg.gamma, cfg.zeta, gap, d);
            out.push(
                CheckReport::at_most(format!("mean N_{}({n})", arm + 1), m.mean(), bound)
                    .with_error(m.std_error())
                    .with_note(format!("Δ = {gap:.6}, {seeds} seeds")),
            );
        }
        for w in 0..grid.len().saturating_sub(1) {
            let (n1, n2) = (grid[w], grid[w + 1]);
            let hits = runs
                .iter()
                .filter(|r| (r[w + 1][arm] as f64 / n2 as f64) < (r[w][arm] as f64 / n1 as f64))
                .count();
            out.push(CheckReport::at_least(
                format!("N_{a}({n2})/{n2} < N_{a}({n1})/{n1} fraction", a = arm + 1),
                hits as f64 / seeds as f64,
                decrease_fraction,
            ));
        }
    }
    if out.is_empty() {
        out.push(CheckReport::new("suboptimal pulls", true, 0.0, 0.0).with_note("vacuous: no suboptimal arm"));
    }
    Ok(out)
}

/// First crossing of each threshold in one episode, censored at
/// `max_horizon`; equivalent to one `run_until_rejection` per threshold.
pub fn first_crossings(sim: &Simulator, rep: u64, thresholds: &[f64], max_horizon: u64) -> Result<Vec<StoppingResult>> {
    let mut out = vec![StoppingResult::Censored { horizon: max_horizon }; thresholds.len()];
    let mut pending = thresholds.len();
    let mut episode = sim.episode(rep)?;
    while pending > 0 && episode.round() < max_horizon {
        episode.step_quiet()?;
        let log_e = episode.state().log_evalue();
        for (slot, t) in out.iter_mut().zip(thresholds) {
            if !slot.rejected() && log_e >= *t {
                *slot = StoppingResult::Rejected { tau: episode.round() };
                pending -= 1;
            }
        }
    }
    Ok(out)
}

/// One row of an α-sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub mean_tau: f64,
    /// `mean_tau ± 3` standard errors.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `ℓ*·mean(τ)/log(1/α)`.
    pub ratio: f64,
    pub ratio_se: f64,
    pub censored_frac: f64,
}

impl SweepRow {
    /// With censoring the mean only bounds `E[τ]` from below.
    pub fn lower_estimate(&self) -> bool {
        self.censored_frac > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub checks: Vec<CheckReport>,
}

/// Rejection-time ratios across `alphas` (sorted decreasing), with the
/// lower-bound check at every α, CI-overlap monotonicity, and optionally a
/// cap on the ratio at the smallest α.
pub fn stopping_ratio_sweep(
    sim: &Simulator,
    oracle: &OracleSolution,
    alphas: &[f64],
    seeds: u64,
    final_cap: Option<f64>,
) -> Result<SweepReport> {
    let growth = oracle.optimal_growth;
    if !(growth > 0.0) {
        return Err(SimError::config(
            "stopping_ratio_sweep needs a positive optimal growth rate",
        ));
    }
    let mut alphas = alphas.to_vec();
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(SimError::config("every alpha must lie in (0, 1)"));
    }
    alphas.sort_by(|a, b| b.total_cmp(a));
    let thresholds: Vec<f64> = alphas.iter().map(|a| (1.0 / a).ln()).collect();
    let max_horizon = sim.config().max_horizon;
    let runs: Vec<Vec<StoppingResult>> = (0..seeds)
        .into_par_iter()
        .map(|rep| first_crossings(sim, rep, &thresholds, max_horizon))
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = alphas
        .iter()
        .zip(&thresholds)
        .enumerate()
        .map(|(i, (&alpha, &t))| {
            let m = Moments::from_values(runs.iter().map(|r| r[i].time() as f64));
            let censored = runs.iter().filter(|r| !r[i].rejected()).count();
            SweepRow {
                alpha,
                mean_tau: m.mean(),
                ci_lo: m.mean() - 3.0 * m.std_error(),
                ci_hi: m.mean() + 3.0 * m.std_error(),
                ratio: growth * m.mean() / t,
                ratio_se: growth * m.std_error() / t,
                censored_frac: censored as f64 / seeds as f64,
            }
        })
        .collect();
    let mut checks = Vec::new();
    for row in &rows {
        let mut c = CheckReport::at_least(
            format!("ratio lower bound at α={}", row.alpha),
            row.ratio,
            1.0 - 3.0 * row.ratio_se,
        )
        .with_error(row.ratio_se);
        if row.lower_estimate() {
            c = c.with_note(format!(
                "censored fraction {}; ratio is a lower estimate",
                row.censored_frac
            ));
        }
        checks.push(c);
    }
    for pair in rows.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        checks.push(
            CheckReport::at_most(
                format!("ratio nonincreasing α={} → α={}", prev.alpha, next.alpha),
                next.ratio - 3.0 * next.ratio_se,
                prev.ratio + 3.0 * prev.ratio_se,
            )
            .with_note("3σ intervals must overlap or decrease"),
        );
    }
    if let (Some(cap), Some(last)) = (final_cap, rows.last()) {
        checks.push(
            CheckReport::at_most(format!("ratio at α={}", last.alpha), last.ratio, cap).with_error(last.ratio_se),
        );
    }
    Ok(SweepReport { rows, checks })
}

/// Rejection-by-horizon frequency under a global null, against
/// `α + 3·√(α(1−α)/reps)`.
pub fn type_one_error_check(sim: &Simulator) -> Result<CheckReport> {
    let cfg = sim.config();
    let mc = sim.monte_carlo(None)?;
    let alpha = cfg.alpha;
    let reps = cfg.reps as f64;
    let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / reps).sqrt();
    Ok(
        CheckReport::at_most("time-uniform type-I error", mc.summary.rejection_rate, bound)
            .with_error(mc.summary.rejection_std_error)
            .with_note(format!(
                "{} of {} reps rejected by n = {}",
                mc.summary.rejections, cfg.reps, cfg.horizon
            )),
    )
}

/// Median of `log W_n/n` at `n = horizon` for SPRUCE and for the oracle-arm
/// policy, compared with `ℓ*` (within `to_optimal`) and with each other
/// (within `to_oracle`).
pub fn growth_optimality_check(
    config: &SimConfig,
    oracle: &OracleSolution,
    to_optimal: f64,
    to_oracle: f64,
) -> Result<Vec<CheckReport>> {
    let medians = |policy| -> Result<f64> {
        let mut c = config.clone();
        c.policy = policy;
        c.early_stop = false;
        let mc = Simulator::new(c)?.monte_carlo(None)?;
        Ok(median(
            &mc.reps
                .iter()
                .map(|r| r.final_log_evalue / r.rounds as f64)
                .collect::<Vec<_>>(),
        ))
    };
    let spruce = medians(PolicyChoice::Spruce)?;
    let best = medians(PolicyChoice::Oracle(oracle.best_arm))?;
    let l = oracle.optimal_growth;
    let n = config.horizon;
    Ok(vec![
        CheckReport::at_most(
            format!("|SPRUCE median log W_n/n − ℓ*| at n={n}"),
            (spruce - l).abs(),
            to_optimal,
        )
        .with_note(format!("SPRUCE median {spruce:.6}, ℓ* {l:.6}")),
        CheckReport::at_most(
            format!("|SPRUCE − oracle median| at n={n}"),
            (spruce - best).abs(),
            to_oracle,
        )
        .with_note(format!("oracle-arm median {best:.6}")),
    ])
}

/// Horvitz–Thompson estimates along a randomized-experiment trace.
pub fn horvitz_thompson_estimates(config: &SimConfig, trace: &RunTrace) -> Result<Vec<f64>> {
    let TestingProblem::AteThreshold { pi, .. } = config.problem else {
        return Err(SimError::config(
            "Horvitz–Thompson estimates need an ate_threshold problem",
        ));
    };
    trace
        .records
        .iter()
        .map(|r| match r.observation {
            Observation::Assigned { y_obs, treated } => Ok(spruce_core::models::horvitz_thompson(y_obs, treated, pi)),
            _ => Err(SimError::runtime("randomized-experiment record without assignment")),
        })
        .collect()
}

/// Mean HT estimate on one arm within `slack` standard errors of `ψ`.
pub fn ht_unbiasedness_check(config: &SimConfig, arm: usize, rounds: u64) -> Result<CheckReport> {
    let mut c = config.clone();
    c.policy = PolicyChoice::Oracle(arm);
    c.horizon = rounds;
    c.early_stop = false;
    let sim = Simulator::new(c)?;
    let trace = sim.run_rct_episode(0)?;
    let m = Moments::from_values(horvitz_thompson_estimates(sim.config(), &trace)?);
    let control = config
        .control
        .as_ref()
        .ok_or_else(|| SimError::config("missing control law"))?;
    let psi = config.arms[arm].mean() - control.mean();
    Ok(CheckReport::at_most(
        format!("HT unbiasedness, arm {}", arm + 1),
        (m.mean() - psi).abs(),
        config.slack * m.std_error(),
    )
    .with_error(m.std_error())
    .with_note(format!("mean ψ̂ {:.6} vs ψ {psi}, {rounds} rounds", m.mean())))
}

/// Counts trace e-vectors whose `λ̃`-increment is not exactly zero.
pub fn unit_portfolio_check(sim: &Simulator, trace: &RunTrace) -> Result<CheckReport> {
    let tilde = sim.constants().lambda_tilde();
    let mut worst = 0.0f64;
    let mut misses = 0usize;
    for r in &trace.records {
        let inc = log_increment(tilde, &r.evector)?;
        if inc != 0.0 {
            misses += 1;
            worst = worst.max(inc.abs());
        }
    }
    Ok(CheckReport::new("λ̃ identity", misses == 0, worst, 0.0)
        .with_note(format!("{misses} of {} rounds inexact", trace.records.len())))
}
