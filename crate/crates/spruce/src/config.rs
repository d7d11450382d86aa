//! Simulation configuration and its flat TOML file format.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `problem` | `one_sided_mean`, `two_sided_mean`, `tuple_equality`, `ate_threshold` | required |
//! | `mu0` | null mean (mean-testing problems) | required there |
//! | `pi` | treatment propensity (`ate_threshold`) | required there |
//! | `delta` | effect threshold (`ate_threshold`) | `0.0` |
//! | `arms` | list of arm laws (treated laws for `ate_threshold`) | required |
//! | `control` | control law (`ate_threshold` only) | required there |
//! | `policy` | `spruce`, `round_robin`, `uniform_random`, `oracle` | `spruce` |
//! | `oracle_arm` | 1-based arm pulled by `oracle` | required there |
//! | `gamma` | SPRUCE exploration exponent, `> 2` | `3.0` |
//! | `zeta` | SPRUCE exploration scale, `> 0` | `1.0` |
//! | `statistic` | `co96` or `up` | `co96` |
//! | `alpha` | test level in `(0, 1)` | `0.05` |
//! | `horizon` | rounds per episode, `≥ K` | `10000` |
//! | `reps` | Monte-Carlo replications | `100` |
//! | `master_seed` | root of all random streams (`SPRUCE_SEED` overrides) | `0` |
//! | `early_stop` | stop an episode once the test rejects | `false` |
//! | `max_horizon` | censoring point of stopping-time studies | `1000000` |
//! | `discretization` | atoms per beta law for oracle computations | unset: beta arms have no oracle |
//! | `up_nodes` | quadrature nodes of the universal portfolio | `2001` |
//! | `slack` | standard-error multiplier of Monte-Carlo checks | `4.0` |
//! | `trajectory_stride` | write every `k`-th round to `trajectories.csv` | `1` |
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spruce_core::{ModelConstants, Policy, StatisticKind, TestingProblem, UcbParams};

use crate::distribution::ArmDistribution;
use crate::error::{Result, SimError};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_REPS: u64 = 100;
pub const DEFAULT_MAX_HORIZON: u64 = 1_000_000;
pub const DEFAULT_UP_NODES: usize = 2001;
pub const DEFAULT_SLACK: f64 = 4.0;
pub const MAX_ORACLE_ATOMS: usize = 10_000;
pub const SEED_ENV: &str = "SPRUCE_SEED";

/// Allocation rule as configured; SPRUCE's `b` comes from the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Spruce,
    RoundRobin,
    UniformRandom,
    /// Zero-based arm index.
    Oracle(usize),
}

/// A validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub problem: TestingProblem,
    pub arms: Vec<ArmDistribution>,
    pub control: Option<ArmDistribution>,
    pub policy: PolicyChoice,
    pub gamma: f64,
    pub zeta: f64,
    pub statistic: StatisticKind,
    pub alpha: f64,
    pub horizon: u64,
    pub reps: u64,
    pub master_seed: u64,
    pub early_stop: bool,
    pub max_horizon: u64,
    pub discretization: Option<usize>,
    pub up_nodes: usize,
    pub slack: f64,
    pub trajectory_stride: u64,
}

impl SimConfig {
    /// A configuration with every optional key at its default.
    pub fn new(problem: TestingProblem, arms: Vec<ArmDistribution>) -> Self {
        Self {
            problem,
            arms,
            control: None,
            policy: PolicyChoice::Spruce,
            gamma: UcbParams::DEFAULT_GAMMA,
            zeta: UcbParams::DEFAULT_ZETA,
            statistic: StatisticKind::Co96,
            alpha: DEFAULT_ALPHA,
            horizon: DEFAULT_HORIZON,
            reps: DEFAULT_REPS,
            master_seed: 0,
            early_stop: false,
            max_horizon: DEFAULT_MAX_HORIZON,
            discretization: None,
            up_nodes: DEFAULT_UP_NODES,
            slack: DEFAULT_SLACK,
            trajectory_stride: 1,
        }
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn is_rct(&self) -> bool {
        matches!(self.problem, TestingProblem::AteThreshold { .. })
    }

    pub fn constants(&self) -> Result<ModelConstants> {
        Ok(self.problem.constants()?)
    }

    pub fn ucb_params(&self) -> Result<UcbParams> {
        UcbParams::new(self.gamma, self.zeta, self.constants()?.b()).map_err(|e| SimError::config(e.to_string()))
    }

    pub fn policy(&self) -> Result<Policy> {
        Ok(match self.policy {
            PolicyChoice::Spruce => Policy::Spruce(self.ucb_params()?),
            PolicyChoice::RoundRobin => Policy::RoundRobin,
            PolicyChoice::UniformRandom => Policy::UniformRandom,
            PolicyChoice::Oracle(arm) => Policy::Oracle(arm),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.problem
            .validate()
            .map_err(|e| SimError::config(format!("problem: {e}")))?;
        if self.arms.is_empty() {
            return Err(SimError::config("at least one arm is required"));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            arm.validate()
                .map_err(|e| SimError::config(format!("arm {}: {e}", i + 1)))?;
        }
        let pairs = matches!(self.problem, TestingProblem::TupleEquality);
        if let Some(i) = self.arms.iter().position(|a| a.is_pair() != pairs) {
            let want = if pairs { "pair(..) laws" } else { "scalar laws" };
            return Err(SimError::config(format!("arm {}: this problem needs {want}", i + 1)));
        }
        match (&self.control, self.is_rct()) {
            (Some(c), true) => {
                c.validate()?;
                if c.is_pair() {
                    return Err(SimError::config("control must be a scalar law"));
                }
            }
            (None, true) => return Err(SimError::config("ate_threshold needs a control law")),
            (Some(_), false) => return Err(SimError::config("control is only used by ate_threshold")),
            (None, false) => {}
        }
        if let PolicyChoice::Oracle(arm) = self.policy {
            if arm >= self.k() {
                return Err(SimError::config(format!(
                    "oracle_arm {} exceeds the {} arms",
                    arm + 1,
                    self.k()
                )));
            }
        }
        if !(self.gamma > 2.0) {
            return Err(SimError::config(format!("gamma = {} violates gamma > 2", self.gamma)));
        }
        if !(self.zeta > 0.0) {
            return Err(SimError::config(format!("zeta = {} violates zeta > 0", self.zeta)));
        }
        self.ucb_params()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SimError::config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.horizon < self.k() as u64 {
            return Err(SimError::config("horizon must be at least the number of arms"));
        }
        if self.reps == 0 {
            return Err(SimError::config("reps must be positive"));
        }
        if self.max_horizon == 0 {
            return Err(SimError::config("max_horizon must be positive"));
        }
        if self.discretization.is_some_and(|a| a == 0 || a > MAX_ORACLE_ATOMS) {
            return Err(SimError::config(format!(
                "discretization must lie in 1..={MAX_ORACLE_ATOMS}"
            )));
        }
        if self.up_nodes == 0 {
            return Err(SimError::config("up_nodes must be positive"));
        }
        if self.statistic == StatisticKind::Up && self.constants()?.d() != 1 {
            return Err(SimError::config("the universal portfolio needs d = 1"));
        }
        if !(self.slack > 0.0) {
            return Err(SimError::config("slack must be positive"));
        }
        if self.trajectory_stride == 0 {
            return Err(SimError::config("trajectory_stride must be positive"));
        }
        Ok(())
    }

    /// Replaces the master seed with `SPRUCE_SEED` when that is set.
    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(text) = std::env::var(SEED_ENV) {
            self.master_seed = text
                .trim()
                .parse()
                .map_err(|_| SimError::config(format!("{SEED_ENV}={text} is not a 64-bit unsigned integer")))?;
        }
        Ok(())
    }

    /// The fully resolved file form, defaults filled in.
    pub fn to_file(&self) -> ConfigFile {
        let (problem, mu0, pi, delta) = match self.problem {
            TestingProblem::OneSidedMean { mu0 } => ("one_sided_mean", Some(mu0), None, None),
            TestingProblem::TwoSidedMean { mu0 } => ("two_sided_mean", Some(mu0), None, None),
            TestingProblem::TupleEquality => ("tuple_equality", None, None, None),
            TestingProblem::AteThreshold { pi, delta } => ("ate_threshold", None, Some(pi), Some(delta)),
        };
        let (policy, oracle_arm) = match self.policy {
            PolicyChoice::Spruce => ("spruce", None),
            PolicyChoice::RoundRobin => ("round_robin", None),
            PolicyChoice::UniformRandom => ("uniform_random", None),
            PolicyChoice::Oracle(a) => ("oracle", Some(a + 1)),
        };
        ConfigFile {
            problem: Some(problem.into()),
            mu0,
            pi,
            delta,
            arms: Some(self.arms.iter().map(ToString::to_string).collect()),
            control: self.control.as_ref().map(ToString::to_string),
            policy: Some(policy.into()),
            oracle_arm,
            gamma: Some(self.gamma),
            zeta: Some(self.zeta),
            statistic: Some(statistic_name(self.statistic).into()),
            alpha: Some(self.alpha),
            horizon: Some(self.horizon),
            reps: Some(self.reps),
            master_seed: Some(self.master_seed),
            early_stop: Some(self.early_stop),
            max_horizon: Some(self.max_horizon),
            discretization: self.discretization,
            up_nodes: Some(self.up_nodes),
            slack: Some(self.slack),
            trajectory_stride: Some(self.trajectory_stride),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::config(e.to_string()))?;
        file.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Read {
            path: path.into(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

pub fn statistic_name(kind: StatisticKind) -> &'static str {
    match kind {
        StatisticKind::Co96 => "co96",
        StatisticKind::Up => "up",
    }
}

/// The on-disk schema; see the module documentation for the keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_arm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub up_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_stride: Option<u64>,
}

fn required<T>(value: Option<T>, key: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| SimError::config(format!("`{key}` is required for {context}")))
}

fn forbid<T>(value: &Option<T>, key: &str, context: &str) -> Result<()> {
    match value {
        Some(_) => Err(SimError::config(format!("`{key}` does not apply to {context}"))),
        None => Ok(()),
    }
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<SimConfig> {
        let kind = required(self.problem.as_deref(), "problem", "every config")?;
        let problem = match kind {
            "one_sided_mean" | "two_sided_mean" => {
                forbid(&self.pi, "pi", kind)?;
                forbid(&self.delta, "delta", kind)?;
                let mu0 = required(self.mu0, "mu0", kind)?;
                let built = if kind == "one_sided_mean" {
                    TestingProblem::one_sided(mu0)
                } else {
                    TestingProblem::two_sided(mu0)
                };
                built.map_err(|e| SimError::config(format!("mu0 = {mu0}: {e}")))?
            }
            "tuple_equality" => {
                forbid(&self.mu0, "mu0", kind)?;
                forbid(&self.pi, "pi", kind)?;
                forbid(&self.delta, "delta", kind)?;
                TestingProblem::tuple_equality()
            }
            "ate_threshold" => {
                forbid(&self.mu0, "mu0", kind)?;
                let pi = required(self.pi, "pi", kind)?;
                let delta = self.delta.unwrap_or(0.0);
                TestingProblem::ate(pi, delta)
                    .map_err(|e| SimError::config(format!("pi = {pi}, delta = {delta}: {e}")))?
            }
            other => return Err(SimError::config(format!("unknown problem '{other}'"))),
        };
        let arms = required(self.arms.as_ref(), "arms", "every config")?
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ArmDistribution>>>()?;
        let mut config = SimConfig::new(problem, arms);
        config.control = self.control.as_deref().map(str::parse).transpose()?;
        config.policy = match self.policy.as_deref().unwrap_or("spruce") {
            "spruce" => PolicyChoice::Spruce,
            "round_robin" => PolicyChoice::RoundRobin,
            "uniform_random" => PolicyChoice::UniformRandom,
            "oracle" => {
                let arm = required(self.oracle_arm, "oracle_arm", "the oracle policy")?;
                if arm == 0 {
                    return Err(SimError::config("oracle_arm is 1-based"));
                }
                PolicyChoice::Oracle(arm - 1)
            }
            other => return Err(SimError::config(format!("unknown policy '{other}'"))),
        };
        if !matches!(config.policy, PolicyChoice::Oracle(_)) {
            forbid(&self.oracle_arm, "oracle_arm", "policies other than oracle")?;
        }
        config.statistic = match self.statistic.as_deref().unwrap_or("co96") {
            "co96" => StatisticKind::Co96,
            "up" => StatisticKind::Up,
            other => return Err(SimError::config(format!("unknown statistic '{other}'"))),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { config.$field = v; } )* };
        }
        set!(
            gamma,
            zeta,
            alpha,
            horizon,
            reps,
            master_seed,
            early_stop,
            max_horizon,
            up_nodes,
            slack,
            trajectory_stride
        );
        config.discretization = self.discretization;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::runtime(e.to_string()))
    }
}
