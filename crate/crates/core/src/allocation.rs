//! Arm-selection rules.
//!
//! Rounds are numbered from 1 as in the protocol; arms are zero-based.

use rand::Rng;

use crate::eprocess::{ArmLedger, WealthState};
use crate::error::{Error, Result};
use crate::portfolio::co96_regret;

/// Exploration parameters of the SPRUCE upper confidence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbParams {
    gamma: f64,
    zeta: f64,
    b: f64,
}

impl UcbParams {
    pub const DEFAULT_GAMMA: f64 = 3.0;
    pub const DEFAULT_ZETA: f64 = 1.0;

    pub fn new(gamma: f64, zeta: f64, b: f64) -> Result<Self> {
        if !(gamma > 2.0) || !gamma.is_finite() {
            return Err(Error::Domain("gamma must be greater than 2"));
        }
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(Error::Domain("zeta must be positive"));
        }
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain("b must be greater than 1"));
        }
        Ok(Self { gamma, zeta, b })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `log(ζn + 1)`.
    fn exploration_log(&self, n: u64) -> f64 {
        libm::log1p(self.zeta * n as f64)
    }
}

/// The three confidence-width terms at round `n` for an arm with `pulls`
/// prior pulls: `(√(8bγL/N), γL/N, R_N/N)` with `L = log(ζn+1)`.
fn widths(pulls: u64, n: u64, params: &UcbParams, d: usize) -> (f64, f64, f64) {
    let count = pulls as f64;
    let l = params.exploration_log(n);
    let root = libm::sqrt(8.0 * params.b * params.gamma * l / count);
    let linear = params.gamma * l / count;
    let regret = co96_regret(pulls, d) / count;
    (root, linear, regret)
}

fn require_pulls(ledger: &ArmLedger) -> Result<u64> {
    match ledger.pull_count() {
        0 => Err(Error::Precondition("confidence bounds need at least one pull")),
        n => Ok(n),
    }
}

/// `UCB_a(n)`: best-in-hindsight average plus sub-exponential and regret
/// bonuses, using the pulls made before round `n`.
pub fn ucb_score(ledger: &ArmLedger, n: u64, params: &UcbParams, d: usize) -> Result<f64> {
    let pulls = require_pulls(ledger)?;
    let (root, linear, regret) = widths(pulls, n, params, d);
    Ok(ledger.bih_value() / pulls as f64 + root + 4.0 * linear + regret)
}

/// Diagnostic lower confidence bound with the `5γ` linear term.
pub fn lcb_score(ledger: &ArmLedger, n: u64, params: &UcbParams, d: usize) -> Result<f64> {
    let pulls = require_pulls(ledger)?;
    let (root, linear, regret) = widths(pulls, n, params, d);
    Ok(ledger.bih_value() / pulls as f64 - root - 5.0 * linear - regret)
}

/// SPRUCE: one initial pull per arm, then the UCB argmax with ties going to
/// the lowest arm index. `state` holds the first `n − 1` rounds.
pub fn spruce_select(state: &WealthState, n: u64, params: &UcbParams) -> Result<usize> {
    if n == 0 {
        return Err(Error::Precondition("rounds are numbered from 1"));
    }
    let k = state.arms();
    if n <= k as u64 {
        return Ok((n - 1) as usize);
    }
    let d = state.constants().d();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (arm, ledger) in state.ledgers().iter().enumerate() {
        // After the sweep every arm has been pulled; an unpulled arm (a
        // state not built by this rule) is treated as maximally uncertain.
        let score = if ledger.pull_count() == 0 {
            f64::INFINITY
        } else {
            ucb_score(ledger, n, params, d)?
        };
        if score > best_score {
            best = arm;
            best_score = score;
        }
    }
    Ok(best)
}

/// `((n − 1) mod K)`, i.e. arm `((n−1) mod K) + 1` in one-based terms.
pub fn round_robin_select(n: u64, k: usize) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::Precondition("round and arm count must be positive"));
    }
    Ok(((n - 1) % k as u64) as usize)
}

/// A uniform draw over the `k` arms from the episode's policy stream.
pub fn uniform_random_select<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Precondition("arm count must be positive"));
    }
    Ok(rng.random_range(0..k))
}

/// Always the configured arm.
pub fn oracle_select(fixed_arm: usize) -> usize {
    fixed_arm
}

/// An allocation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Spruce(UcbParams),
    RoundRobin,
    UniformRandom,
    Oracle(usize),
}

impl Policy {
    pub fn validate(&self, k: usize) -> Result<()> {
        match *self {
            Policy::Oracle(arm) if arm >= k => Err(Error::ArmOutOfRange { arm, arms: k }),
            _ => Ok(()),
        }
    }

    /// Arm for round `n`, given the state after round `n − 1`.
    pub fn select<R: Rng + ?Sized>(&self, state: &WealthState, n: u64, rng: &mut R) -> Result<usize> {
        match self {
            Policy::Spruce(params) => spruce_select(state, n, params),
            Policy::RoundRobin => round_robin_select(n, state.arms()),
            Policy::UniformRandom => uniform_random_select(rng, state.arms()),
            Policy::Oracle(arm) => {
                self.validate(state.arms())?;
                Ok(oracle_select(*arm))
            }
        }
    }

    /// Whether the rule consumes randomness.
    pub fn is_randomized(&self) -> bool {
        matches!(self, Policy::UniformRandom)
    }
}
