//! Multi-armed wealth state and the two test statistics built on it.
//!
//! Each arm keeps its own ledger. The regret-based statistic multiplies, over
//! arms, the best-in-hindsight wealth deflated by Cover's regret bound; the
//! universal-portfolio statistic multiplies the arm-wise universal portfolio
//! wealths. Both are arm-wise products, so each arm contributes a log-wealth
//! term and unpulled arms contribute zero.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::optimize::{maximize_log_wealth, Atom, Optimum};
use crate::portfolio::{co96_regret, ln_or_neg_inf, EVector, ModelConstants, Portfolio};
use crate::universal::UpMixture;

/// Optimality tolerance (nats) for the best-in-hindsight recomputation.
pub const BIH_TOLERANCE: f64 = 1e-9;

/// Which test statistic a [`WealthState`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    /// Regret-deflated best-in-hindsight wealth, an e-process.
    Co96,
    /// Arm-wise universal portfolio wealth, a test supermartingale.
    Up,
}

#[derive(Debug, Clone, PartialEq)]
struct UpArm {
    node_log_wealth: Vec<f64>,
    log_wealth: f64,
    next: Portfolio,
    // Per-node log-increments of the first atoms, by atom index.
    cache: Vec<Vec<f64>>,
}

const CACHED_ATOMS: usize = 32;

/// Running state of one arm.
///
/// The history is kept as distinct e-vectors with multiplicities, which is a
/// sufficient statistic for both the best-in-hindsight program and the
/// universal portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmLedger {
    pulls: u64,
    atoms: Vec<Atom>,
    index: BTreeMap<Vec<u64>, usize>,
    bih: Option<Optimum>,
    up: Option<UpArm>,
}

fn atom_key(e: &EVector) -> Vec<u64> {
    // `+ 0.0` folds -0.0 onto 0.0.
    e.values().iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl ArmLedger {
    fn new(up: Option<&UpMixture>) -> Self {
        Self {
            pulls: 0,
            atoms: Vec::new(),
            index: BTreeMap::new(),
            bih: None,
            up: up.map(|m| UpArm {
                node_log_wealth: m.fresh_wealth(),
                log_wealth: 0.0,
                next: m.portfolio(&m.fresh_wealth()),
                cache: Vec::new(),
            }),
        }
    }

    /// `N_a(n)`.
    pub fn pull_count(&self) -> u64 {
        self.pulls
    }

    /// Distinct e-vectors observed on this arm with their multiplicities.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `max_λ Σ log(λᵀEᵢ)` over this arm's history; zero when unpulled.
    pub fn bih_value(&self) -> f64 {
        self.bih.as_ref().map_or(0.0, |o| o.value)
    }

    /// The best-in-hindsight portfolio, if the arm has been pulled.
    pub fn bih_portfolio(&self) -> Option<&Portfolio> {
        self.bih.as_ref().map(|o| &o.portfolio)
    }

    /// `Σ log(λᵢ^UPᵀEᵢ)`, when universal-portfolio wealth is tracked.
    pub fn up_log_wealth(&self) -> Option<f64> {
        self.up.as_ref().map(|u| u.log_wealth)
    }

    /// The universal portfolio that will be played on the next pull.
    pub fn up_next_portfolio(&self) -> Option<&Portfolio> {
        self.up.as_ref().map(|u| &u.next)
    }

    /// Per-node log-wealth of the universal portfolio mixture.
    pub fn up_node_log_wealth(&self) -> Option<&[f64]> {
        self.up.as_ref().map(|u| u.node_log_wealth.as_slice())
    }

    /// This arm's factor of the regret-based statistic.
    pub fn co96_log_wealth(&self, d: usize) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.bih_value() - co96_regret(self.pulls, d)
        }
    }

    fn record(&mut self, e: &EVector, lambda_tilde: &Portfolio, mixture: Option<&UpMixture>) -> Result<()> {
        let key = atom_key(e);
        let known = self.index.get(&key).copied();
        if let (Some(up), Some(m)) = (self.up.as_mut(), mixture) {
            let step = ln_or_neg_inf(up.next.dot(e)?);
            let slot = known.unwrap_or(self.atoms.len());
            if slot < CACHED_ATOMS {
                if slot == up.cache.len() {
                    up.cache.push(m.log_increments(e)?);
                }
                for (w, inc) in up.node_log_wealth.iter_mut().zip(&up.cache[slot]) {
                    *w += inc;
                }
            } else {
                m.accumulate(&mut up.node_log_wealth, e)?;
            }
            // Absorbed at zero wealth once bankrupt.
            up.log_wealth = if up.log_wealth == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                up.log_wealth + step
            };
            up.next = m.portfolio(&up.node_log_wealth);
        }
        match known {
            Some(i) => self.atoms[i].weight += 1.0,
            None => {
                self.index.insert(key, self.atoms.len());
                self.atoms.push(Atom::new(e.clone(), 1.0));
            }
        }
        self.pulls += 1;
        let warm = self.bih.as_ref().map(|o| &o.portfolio);
        let mut optimum = maximize_log_wealth(&self.atoms, BIH_TOLERANCE, warm)?;
        if optimum.value < 0.0 {
            // The maximum can never fall below the unit-increment portfolio's
            // wealth; guard against round-off right at λ̃.
            let at_tilde = crate::optimize::log_wealth(lambda_tilde, &self.atoms)?;
            if at_tilde > optimum.value {
                optimum = Optimum {
                    portfolio: lambda_tilde.clone(),
                    value: at_tilde,
                };
            }
        }
        self.bih = Some(optimum);
        Ok(())
    }
}

/// The full multi-armed test statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthState {
    constants: ModelConstants,
    statistic: StatisticKind,
    round: u64,
    ledgers: Vec<ArmLedger>,
    mixture: Option<Arc<UpMixture>>,
}

impl WealthState {
    /// A fresh state with `k` arms. The universal-portfolio statistic builds
    /// its own default quadrature; use [`WealthState::with_mixture`] to share
    /// one across many episodes.
    pub fn new(k: usize, constants: ModelConstants, statistic: StatisticKind) -> Result<Self> {
        let mixture = match statistic {
            StatisticKind::Up => Some(Arc::new(UpMixture::standard())),
            StatisticKind::Co96 => None,
        };
        Self::build(k, constants, statistic, mixture)
    }

    /// A fresh state that tracks universal-portfolio wealth with `mixture`
    /// regardless of `statistic`, so both statistics can be read side by side.
    pub fn with_mixture(
        k: usize,
        constants: ModelConstants,
        statistic: StatisticKind,
        mixture: Arc<UpMixture>,
    ) -> Result<Self> {
        Self::build(k, constants, statistic, Some(mixture))
    }

    fn build(
        k: usize,
        constants: ModelConstants,
        statistic: StatisticKind,
        mixture: Option<Arc<UpMixture>>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("at least one arm is required"));
        }
        if mixture.is_some() && constants.d() != 1 {
            return Err(Error::UnsupportedDimension(constants.d()));
        }
        let ledgers = (0..k).map(|_| ArmLedger::new(mixture.as_deref())).collect();
        Ok(Self {
            constants,
            statistic,
            round: 0,
            ledgers,
            mixture,
        })
    }

    pub fn arms(&self) -> usize {
        self.ledgers.len()
    }

    /// Number of updates applied so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn statistic(&self) -> StatisticKind {
        self.statistic
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn ledgers(&self) -> &[ArmLedger] {
        &self.ledgers
    }

    pub fn ledger(&self, arm: usize) -> Result<&ArmLedger> {
        self.ledgers.get(arm).ok_or(Error::ArmOutOfRange {
            arm,
            arms: self.ledgers.len(),
        })
    }

    /// Whether the universal-portfolio wealth is being tracked.
    pub fn tracks_up(&self) -> bool {
        self.mixture.is_some()
    }

    /// Appends an e-vector observed on `arm` (zero-based).
    pub fn update(&mut self, arm: usize, e: &EVector) -> Result<()> {
        let arms = self.ledgers.len();
        if e.len() != self.constants.d() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.constants.d() + 1,
                found: e.len(),
            });
        }
        let ledger = self.ledgers.get_mut(arm).ok_or(Error::ArmOutOfRange { arm, arms })?;
        ledger.record(e, self.constants.lambda_tilde(), self.mixture.as_deref())?;
        self.round += 1;
        Ok(())
    }

    /// Log of the configured statistic.
    pub fn log_evalue(&self) -> f64 {
        self.log_evalue_of(self.statistic)
            .expect("configured statistic is always tracked")
    }

    /// Log of either statistic; `None` for an untracked universal portfolio.
    pub fn log_evalue_of(&self, statistic: StatisticKind) -> Option<f64> {
        let mut total = 0.0;
        for arm in 0..self.ledgers.len() {
            total += self.arm_log_wealth_of(arm, statistic)?;
        }
        Some(total)
    }

    /// `log W_n(a)` under the configured statistic.
    pub fn arm_log_wealth(&self, arm: usize) -> Result<f64> {
        self.ledger(arm)?;
        Ok(self
            .arm_log_wealth_of(arm, self.statistic)
            .expect("configured statistic is always tracked"))
    }

    fn arm_log_wealth_of(&self, arm: usize, statistic: StatisticKind) -> Option<f64> {
        let ledger = self.ledgers.get(arm)?;
        match statistic {
            StatisticKind::Co96 => Some(ledger.co96_log_wealth(self.constants.d())),
            StatisticKind::Up => ledger.up_log_wealth(),
        }
    }

    /// Level-`alpha` rejection: `log W_n ≥ log(1/α)`.
    pub fn reject(&self, alpha: f64) -> Result<bool> {
        reject(self.log_evalue(), alpha)
    }
}

/// `true` iff `log_evalue ≥ log(1/alpha)`.
pub fn reject(log_evalue: f64, alpha: f64) -> Result<bool> {
    Ok(log_evalue >= rejection_threshold(alpha)?)
}

/// `log(1/alpha)` for `alpha ∈ (0, 1)`.
pub fn rejection_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain("alpha must lie in (0, 1)"));
    }
    Ok(-libm::log(alpha))
}
