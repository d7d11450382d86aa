//! Episodes of the data-collection protocols and Monte-Carlo orchestration.
//!
//! Each round nature draws the full outcome vector (and the control outcome
//! in a randomized experiment), the allocation rule picks an arm from the
//! wealth state alone, and only the chosen arm's outcome reaches the
//! statistician. Off-path coordinates are kept in the trace purely so that
//! [`Simulator::replay`] can demonstrate they were never read.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use spruce_core::{EVector, ModelConstants, Observation, Policy, Portfolio, TestingProblem, UpMixture, WealthState};

use crate::config::SimConfig;
use crate::distribution::Outcome;
use crate::error::{Result, SimError};
use crate::rng::{Stream, Tag};

/// Nature's draw for one round, including the counterfactual coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NatureDraw {
    /// `Y(0)` in a randomized experiment.
    pub control: Option<f64>,
    /// One outcome per arm.
    pub outcomes: Vec<Outcome>,
}

/// One round of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub n: u64,
    /// Zero-based arm `A_n`.
    pub arm: usize,
    /// What the statistician saw.
    pub observation: Observation,
    pub evector: EVector,
    /// The universal portfolio the pulled arm bet with, when tracked.
    pub portfolio: Option<Portfolio>,
    /// Log of the configured statistic after this round.
    pub log_evalue: f64,
    /// Full outcome vector; `None` once stripped.
    pub nature: Option<NatureDraw>,
}

/// Outcome of a level-α stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingResult {
    /// First round with `log W_n ≥ log(1/α)`.
    Rejected { tau: u64 },
    /// No rejection within `horizon` rounds.
    Censored { horizon: u64 },
}

impl StoppingResult {
    pub fn rejected(&self) -> bool {
        matches!(self, Self::Rejected { .. })
    }

    /// `τ` or the censoring horizon.
    pub fn time(&self) -> u64 {
        match *self {
            Self::Rejected { tau } => tau,
            Self::Censored { horizon } => horizon,
        }
    }
}

/// The chronological record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rep: u64,
    pub records: Vec<RoundRecord>,
    pub stopping: StoppingResult,
    pub final_state: WealthState,
}

impl RunTrace {
    /// A copy with every off-path coordinate deleted.
    pub fn without_counterfactuals(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.nature = None;
        }
        out
    }
}

/// `(n, log W_n / n)` for every recorded round.
pub fn growth_trajectory(trace: &RunTrace) -> Vec<(u64, f64)> {
    trace.records.iter().map(|r| (r.n, r.log_evalue / r.n as f64)).collect()
}

/// A validated configuration ready to run episodes.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    constants: ModelConstants,
    policy: Policy,
    mixture: Option<Arc<UpMixture>>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        let track = config.statistic == spruce_core::StatisticKind::Up;
        Self::build(config, track)
    }

    /// Like [`Simulator::new`], but universal-portfolio wealth and bets are
    /// tracked whatever the configured statistic.
    pub fn tracking_up(config: SimConfig) -> Result<Self> {
        Self::build(config, true)
    }

    fn build(config: SimConfig, track_up: bool) -> Result<Self> {
        config.validate()?;
        let constants = config.constants()?;
        let policy = config.policy()?;
        let mixture = if track_up {
            Some(Arc::new(UpMixture::new(config.up_nodes)?))
        } else {
            None
        };
        Ok(Self {
            config,
            constants,
            policy,
            mixture,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    fn fresh_state(&self) -> Result<WealthState> {
        let k = self.config.k();
        let state = match &self.mixture {
            Some(m) => WealthState::with_mixture(k, self.constants.clone(), self.config.statistic, Arc::clone(m))?,
            None => WealthState::new(k, self.constants.clone(), self.config.statistic)?,
        };
        Ok(state)
    }

    pub fn episode(&self, rep: u64) -> Result<Episode<'_>> {
        let seed = self.config.master_seed;
        Ok(Episode {
            sim: self,
            state: self.fresh_state()?,
            nature: Stream::new(seed, rep, Tag::Nature),
            policy_rng: Stream::new(seed, rep, Tag::Policy),
            assign: Stream::new(seed, rep, Tag::Assign),
        })
    }

    /// Runs `horizon` rounds, or until rejection when `early_stop` is set.
    pub fn run_episode(&self, rep: u64) -> Result<RunTrace> {
        let mut episode = self.episode(rep)?;
        let mut records = Vec::with_capacity(self.config.horizon.min(1 << 20) as usize);
        let mut stopping = StoppingResult::Censored {
            horizon: self.config.horizon,
        };
        let threshold = spruce_core::rejection_threshold(self.config.alpha)?;
        while episode.round() < self.config.horizon {
            let record = episode.step()?;
            let n = record.n;
            let crossed = record.log_evalue >= threshold;
            records.push(record);
            if crossed && !stopping.rejected() {
                stopping = StoppingResult::Rejected { tau: n };
                if self.config.early_stop {
                    break;
                }
            }
        }
        Ok(RunTrace {
            rep,
            records,
            stopping,
            final_state: episode.state,
        })
    }

    /// A randomized-experiment episode; the configuration must be one.
    pub fn run_rct_episode(&self, rep: u64) -> Result<RunTrace> {
        if !self.config.is_rct() {
            return Err(SimError::config("run_rct_episode needs an ate_threshold problem"));
        }
        self.run_episode(rep)
    }

    /// Rounds until the level-α test rejects, censored at `max_horizon`.
    pub fn run_until_rejection(&self, rep: u64, max_horizon: u64) -> Result<StoppingResult> {
        let threshold = spruce_core::rejection_threshold(self.config.alpha)?;
        let mut episode = self.episode(rep)?;
        while episode.round() < max_horizon {
            episode.advance(false)?;
            if episode.state.log_evalue() >= threshold {
                return Ok(StoppingResult::Rejected { tau: episode.round() });
            }
        }
        Ok(StoppingResult::Censored { horizon: max_horizon })
    }

    /// Recomputes the allocation and wealth path from the on-path
    /// observations alone, failing at the first divergence.
    pub fn replay(&self, trace: &RunTrace) -> Result<Vec<(usize, f64)>> {
        let mut state = self.fresh_state()?;
        let mut policy_rng = Stream::new(self.config.master_seed, trace.rep, Tag::Policy);
        let mut out = Vec::with_capacity(trace.records.len());
        for record in &trace.records {
            let n = state.round() + 1;
            let arm = self.policy.select(&state, n, policy_rng.at_round(n))?;
            if arm != record.arm || n != record.n {
                return Err(SimError::runtime(format!("replay diverged at round {n}")));
            }
            let e = self.config.problem.evector(record.observation)?;
            state.update(arm, &e)?;
            out.push((arm, state.log_evalue()));
        }
        Ok(out)
    }

    /// Runs `reps` episodes, each on its own seeded streams, on up to
    /// `threads` workers (the global pool when `None`). Results are in rep
    /// order regardless of scheduling.
    pub fn monte_carlo(&self, threads: Option<usize>) -> Result<MonteCarlo> {
        let run = || -> Result<Vec<RepOutcome>> {
            (0..self.config.reps)
                .into_par_iter()
                .map(|rep| self.summarize_rep(rep))
                .collect()
        };
        let reps = match threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| SimError::runtime(e.to_string()))?
                .install(run)?,
            None => run()?,
        };
        let summary = McSummary::new(&self.config, &reps);
        Ok(MonteCarlo { reps, summary })
    }

    fn summarize_rep(&self, rep: u64) -> Result<RepOutcome> {
        let cfg = &self.config;
        let threshold = spruce_core::rejection_threshold(cfg.alpha)?;
        let checkpoints = checkpoints(cfg.horizon);
        let mut episode = self.episode(rep)?;
        let mut path = Vec::new();
        let mut at_checkpoints = Vec::with_capacity(checkpoints.len());
        let mut stopping = StoppingResult::Censored { horizon: cfg.horizon };
        while episode.round() < cfg.horizon {
            let arm = episode.advance(false)?.0;
            let n = episode.round();
            let log_e = episode.state.log_evalue();
            if n % cfg.trajectory_stride == 0 || n == cfg.horizon {
                path.push(PathPoint {
                    n,
                    arm,
                    log_evalue: log_e,
                });
            }
            if checkpoints.get(at_checkpoints.len()) == Some(&n) {
                at_checkpoints.push(log_e);
            }
            if log_e >= threshold && !stopping.rejected() {
                stopping = StoppingResult::Rejected { tau: n };
                if cfg.early_stop {
                    if path.last().map(|p| p.n) != Some(n) {
                        path.push(PathPoint {
                            n,
                            arm,
                            log_evalue: log_e,
                        });
                    }
                    break;
                }
            }
        }
        let state = &episode.state;
        Ok(RepOutcome {
            rep,
            path,
            checkpoint_log_evalues: at_checkpoints,
            stopping,
            rounds: state.round(),
            final_log_evalue: state.log_evalue(),
            pulls: state.ledgers().iter().map(|l| l.pull_count()).collect(),
        })
    }
}

/// A running episode.
#[derive(Debug)]
pub struct Episode<'a> {
    sim: &'a Simulator,
    state: WealthState,
    nature: Stream,
    policy_rng: Stream,
    assign: Stream,
}

impl Episode<'_> {
    pub fn state(&self) -> &WealthState {
        &self.state
    }

    pub fn round(&self) -> u64 {
        self.state.round()
    }

    /// Plays one round and returns its full record.
    pub fn step(&mut self) -> Result<RoundRecord> {
        Ok(self.advance(true)?.1.expect("detailed record requested"))
    }

    /// Plays one round without building its record; returns the arm.
    pub fn step_quiet(&mut self) -> Result<usize> {
        Ok(self.advance(false)?.0)
    }

    fn draw_nature(&mut self, n: u64) -> NatureDraw {
        let cfg = &self.sim.config;
        let rng = self.nature.at_round(n);
        let control = cfg.control.as_ref().map(|c| match c.sample(rng) {
            Outcome::Scalar(y) => y,
            Outcome::Pair(..) => unreachable!("control law is scalar"),
        });
        let outcomes = cfg.arms.iter().map(|a| a.sample(rng)).collect();
        NatureDraw { control, outcomes }
    }

    pub(crate) fn advance(&mut self, detail: bool) -> Result<(usize, Option<RoundRecord>)> {
        let n = self.state.round() + 1;
        let nature = self.draw_nature(n);
        let arm = self.sim.policy.select(&self.state, n, self.policy_rng.at_round(n))?;
        let observation = match (self.sim.config.problem, nature.outcomes[arm]) {
            (TestingProblem::AteThreshold { pi, .. }, Outcome::Scalar(y1)) => {
                let treated = self.assign.at_round(n).random_bool(pi);
                let y_obs = if treated {
                    y1
                } else {
                    nature.control.expect("validated control law")
                };
                Observation::Assigned { y_obs, treated }
            }
            (_, Outcome::Scalar(y)) => Observation::Scalar(y),
            (_, Outcome::Pair(x, y)) => Observation::Pair(x, y),
        };
        let evector = self.sim.config.problem.evector(observation)?;
        let portfolio = if detail {
            self.state.ledger(arm)?.up_next_portfolio().cloned()
        } else {
            None
        };
        self.state.update(arm, &evector)?;
        let record = detail.then(|| RoundRecord {
            n,
            arm,
            observation,
            evector,
            portfolio,
            log_evalue: self.state.log_evalue(),
            nature: Some(nature),
        });
        Ok((arm, record))
    }
}

/// Powers of ten below the horizon, then the horizon itself.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |n| n.checked_mul(10))
        .take_while(|n| *n < horizon)
        .collect();
    out.push(horizon);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub n: u64,
    pub arm: usize,
    pub log_evalue: f64,
}

/// What one Monte-Carlo replication keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: u64,
    /// Every `trajectory_stride`-th round and the last one.
    pub path: Vec<PathPoint>,
    /// `log W_n` at each reached [`checkpoints`] entry.
    pub checkpoint_log_evalues: Vec<f64>,
    pub stopping: StoppingResult,
    pub rounds: u64,
    pub final_log_evalue: f64,
    pub pulls: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub reps: Vec<RepOutcome>,
    pub summary: McSummary,
}

/// Quantiles of `log W_n / n` across replications at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthQuantiles {
    pub n: u64,
    pub reps: usize,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

/// Aggregates over replications, reduced in rep order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub reps: u64,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub rejection_std_error: f64,
    /// Wilson 95% interval.
    pub rejection_ci: (f64, f64),
    pub mean_tau_rejected: Option<f64>,
    pub growth: Vec<GrowthQuantiles>,
    pub stopping_histogram: Vec<HistogramBin>,
    pub mean_pulls: Vec<f64>,
}

impl McSummary {
    fn new(config: &SimConfig, reps: &[RepOutcome]) -> Self {
        let total = reps.len() as u64;
        let taus: Vec<u64> = reps
            .iter()
            .filter(|r| r.stopping.rejected())
            .map(|r| r.stopping.time())
            .collect();
        let rejections = taus.len() as u64;
        let rate = rejections as f64 / total as f64;
        let growth = checkpoints(config.horizon)
            .into_iter()
            .enumerate()
            .filter_map(|(i, n)| {
                let values: Vec<f64> = reps
                    .iter()
                    .filter_map(|r| r.checkpoint_log_evalues.get(i).map(|v| v / n as f64))
                    .collect();
                (!values.is_empty()).then(|| {
                    let [q10, q25, median, q75, q90] = quantiles(&values, [0.1, 0.25, 0.5, 0.75, 0.9]);
                    GrowthQuantiles {
                        n,
                        reps: values.len(),
                        q10,
                        q25,
                        median,
                        q75,
                        q90,
                    }
                })
            })
            .collect();
        let width = config.horizon.div_ceil(20).max(1);
        let stopping_histogram = (0..config.horizon.div_ceil(width))
            .map(|i| {
                let (lo, hi) = (i * width + 1, ((i + 1) * width).min(config.horizon));
                HistogramBin {
                    lo,
                    hi,
                    count: taus.iter().filter(|t| (lo..=hi).contains(*t)).count() as u64,
                }
            })
            .collect();
        let k = config.k();
        let mean_pulls = (0..k)
            .map(|a| reps.iter().map(|r| r.pulls[a] as f64).sum::<f64>() / total as f64)
            .collect();
        Self {
            reps: total,
            rejections,
            rejection_rate: rate,
            rejection_std_error: (rate * (1.0 - rate) / total as f64).sqrt(),
            rejection_ci: wilson_interval(rejections, total, 1.96),
            mean_tau_rejected: (!taus.is_empty()).then(|| taus.iter().sum::<u64>() as f64 / rejections as f64),
            growth,
            stopping_histogram,
            mean_pulls,
        }
    }
}

/// Linear-interpolation sample quantiles (type 7).
pub fn quantiles<const N: usize>(values: &[f64], probs: [f64; N]) -> [f64; N] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.map(|p| {
        let h = (sorted.len() - 1) as f64 * p;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    })
}

pub fn median(values: &[f64]) -> f64 {
    quantiles(values, [0.5])[0]
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PolicyChoice;
    use crate::distribution::ArmDistribution;

    fn one_sided(arms: &[f64]) -> SimConfig {
        let arms = arms.iter().map(|p| ArmDistribution::Bernoulli(*p)).collect();
        SimConfig::new(TestingProblem::one_sided(0.5).unwrap(), arms)
    }

    #[test]
    fn single_arm_oracle_episode() {
        let mut c = one_sided(&[0.6]);
        c.policy = PolicyChoice::Oracle(0);
        c.horizon = 10;
        let trace = Simulator::new(c).unwrap().run_episode(0).unwrap();
        assert_eq!(trace.records.len(), 10);
        assert!(trace.records.iter().all(|r| r.arm == 0));
        assert_eq!(
            trace.records.iter().map(|r| r.n).collect::<Vec<_>>(),
            (1..=10).collect::<Vec<_>>()
        );
    }

    #[test]
    fn episodes_are_reproducible() {
        let mut c = one_sided(&[0.7, 0.5, 0.5]);
        c.horizon = 300;
        c.policy = PolicyChoice::UniformRandom;
        let sim = Simulator::new(c).unwrap();
        assert_eq!(sim.run_episode(4).unwrap(), sim.run_episode(4).unwrap());
        assert_ne!(sim.run_episode(4).unwrap().records, sim.run_episode(5).unwrap().records);
    }

    #[test]
    fn early_stop_truncates_at_tau() {
        let mut c = one_sided(&[0.9]);
        c.policy = PolicyChoice::Oracle(0);
        c.horizon = 1000;
        c.early_stop = true;
        let sim = Simulator::new(c).unwrap();
        let trace = sim.run_episode(0).unwrap();
        let tau = match trace.stopping {
            StoppingResult::Rejected { tau } => tau,
            other => panic!("{other:?}"),
        };
        assert_eq!(trace.records.len() as u64, tau);
        assert_eq!(sim.run_until_rejection(0, 1000).unwrap(), trace.stopping);
    }

    #[test]
    fn growth_trajectory_matches_records() {
        let mut c = one_sided(&[0.5, 0.5]);
        c.horizon = 50;
        let trace = Simulator::new(c).unwrap().run_episode(1).unwrap();
        for ((n, g), r) in growth_trajectory(&trace).iter().zip(&trace.records) {
            assert_eq!(*n, r.n);
            assert_eq!(*g, r.log_evalue / r.n as f64);
        }
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(10_000), vec![10, 100, 1000, 10_000]);
        assert_eq!(checkpoints(5000), vec![10, 100, 1000, 5000]);
        assert_eq!(checkpoints(5), vec![5]);
    }

    #[test]
    fn interval_helpers() {
        assert_eq!(quantiles(&[3.0, 1.0, 2.0], [0.0, 0.5, 1.0]), [1.0, 2.0, 3.0]);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        let (lo, hi) = wilson_interval(5, 100, 1.96);
        assert!(lo < 0.05 && hi > 0.05 && lo > 0.0);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }
}
