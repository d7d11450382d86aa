//! Algorithms for multi-armed sequential hypothesis testing by betting.
//!
//! The crate is `no_std` (it needs `alloc`) and free of IO. It provides
//!
//! - simplex portfolio arithmetic, best-in-hindsight and Kelly portfolios,
//!   and Cover's universal portfolio for `d = 1` ([`portfolio`],
//!   [`optimize`], [`universal`]);
//! - e-vector constructions for bounded-mean, tuple-equality and
//!   treatment-effect nulls ([`models`]);
//! - the multi-armed wealth state with the regret-based e-process and the
//!   universal-portfolio test supermartingale ([`eprocess`]);
//! - the SPRUCE allocation rule and its baselines ([`allocation`]).
//!
//! Wealth is always handled in log domain.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is the NaN-rejecting form of a domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod allocation;
pub mod eprocess;
mod error;
pub mod models;
pub mod optimize;
pub mod portfolio;
pub mod universal;

pub use allocation::{
    lcb_score, round_robin_select, spruce_select, ucb_score, uniform_random_select, Policy, UcbParams,
};
pub use eprocess::{reject, rejection_threshold, ArmLedger, StatisticKind, WealthState};
pub use error::{Error, Result};
pub use models::{Observation, TestingProblem};
pub use optimize::{best_in_hindsight, kelly_oracle, maximize_log_wealth, Atom, Optimum};
pub use portfolio::{co96_regret, log_increment, EVector, ModelConstants, Portfolio};
pub use universal::{universal_portfolio_next, UpMixture};
