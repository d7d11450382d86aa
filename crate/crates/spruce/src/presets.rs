//! Named scenarios.
//!
//! The "easy" and "hard" scenarios are qualitative analogues of the usual
//! demonstrations (one clearly non-null arm among nulls; several mildly
//! non-null arms), not replicas of any published parameters.
//!
//! SPRUCE presets use `ζ = 10⁻⁶`. The exploration terms scale with
//! `√(8bγ·log(ζn+1)/N)`, which with `ζ = 1` keeps null arms near a third of
//! all pulls well past `n = 2·10⁴`; a small `ζ` leaves the regret bonus
//! `R_N/N` as the main exploration force. Any `ζ > 0` keeps the guarantees.

use spruce_core::{StatisticKind, TestingProblem};

use crate::config::{PolicyChoice, SimConfig};
use crate::distribution::ArmDistribution;

pub const PRESET_ZETA: f64 = 1e-6;
pub const NAMES: [&str; 4] = ["easy", "hard", "rct", "null"];

fn bernoullis(ps: &[f64]) -> Vec<ArmDistribution> {
    ps.iter().map(|p| ArmDistribution::Bernoulli(*p)).collect()
}

fn spruce(problem: TestingProblem, arms: &[f64]) -> SimConfig {
    let mut c = SimConfig::new(problem, bernoullis(arms));
    c.policy = PolicyChoice::Spruce;
    c.zeta = PRESET_ZETA;
    c
}

/// Bernoulli(0.7) against two Bernoulli(0.5) arms, one-sided `μ₀ = 0.5`.
pub fn easy() -> SimConfig {
    let mut c = spruce(TestingProblem::OneSidedMean { mu0: 0.5 }, &[0.7, 0.5, 0.5]);
    c.statistic = StatisticKind::Up;
    c.horizon = 20_000;
    c.reps = 50;
    c.trajectory_stride = 10;
    c
}

/// Five arms, three of them slightly above `μ₀ = 0.5`.
pub fn hard() -> SimConfig {
    let mut c = spruce(TestingProblem::OneSidedMean { mu0: 0.5 }, &[0.55, 0.57, 0.6, 0.5, 0.5]);
    c.statistic = StatisticKind::Up;
    c.horizon = 20_000;
    c.reps = 50;
    c.trajectory_stride = 10;
    c
}

/// Randomized experiment, `π = 0.5`, `δ = 0`: treated means 0.8, 0.5, 0.5
/// against a control mean of 0.5.
pub fn rct() -> SimConfig {
    let mut c = spruce(TestingProblem::AteThreshold { pi: 0.5, delta: 0.0 }, &[0.8, 0.5, 0.5]);
    c.control = Some(ArmDistribution::Bernoulli(0.5));
    c.alpha = 1e-3;
    c.reps = 300;
    c
}

/// Three Bernoulli(0.5) arms under the one-sided `μ₀ = 0.5` null.
pub fn null() -> SimConfig {
    let mut c = spruce(TestingProblem::OneSidedMean { mu0: 0.5 }, &[0.5, 0.5, 0.5]);
    c.horizon = 5000;
    c.reps = 2000;
    c.trajectory_stride = 10;
    c
}

pub fn by_name(name: &str) -> Option<SimConfig> {
    match name {
        "easy" => Some(easy()),
        "hard" => Some(hard()),
        "rct" => Some(rct()),
        "null" => Some(null()),
        _ => None,
    }
}
