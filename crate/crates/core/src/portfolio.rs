//! Simplex portfolios, e-vectors and the wealth arithmetic connecting them.
//!
//! All wealth is carried in log domain (nats). A zero wealth increment is
//! represented by `f64::NEG_INFINITY`, never by NaN.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on the portfolio weight sum.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A `(d+1)`-vector of nonnegative e-values for one observation.
#[derive(Clone, PartialEq)]
pub struct EVector(Vec<f64>);

impl EVector {
    /// Builds an e-vector, rejecting negative or non-finite components and
    /// vectors shorter than two.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidEVector);
        }
        Ok(Self(values))
    }

    /// Shorthand for the `d = 1` case.
    pub fn pair(first: f64, second: f64) -> Result<Self> {
        Self::new(alloc::vec![first, second])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The portfolio dimension `d` (one less than the length).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Largest component, which equals `max_λ λᵀe` over the simplex.
    pub fn max_component(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl fmt::Debug for EVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("EVector").field(&self.0).finish()
    }
}

/// A point of the simplex `Δ_d`: the bet placed on an e-vector.
#[derive(Clone, PartialEq)]
pub struct Portfolio(Vec<f64>);

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPortfolio);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidPortfolio);
        }
        Ok(Self(weights))
    }

    /// `(1 − λ₁, λ₁)` for `λ₁ ∈ [0, 1]`.
    pub fn binary(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidPortfolio);
        }
        Ok(Self(alloc::vec![1.0 - lambda, lambda]))
    }

    /// The barycenter of `Δ_d`.
    pub fn uniform(d: usize) -> Self {
        let w = 1.0 / (d + 1) as f64;
        Self(alloc::vec![w; d + 1])
    }

    /// All mass on coordinate `j`.
    pub fn vertex(d: usize, j: usize) -> Result<Self> {
        if j > d {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: j + 1,
            });
        }
        let mut w = alloc::vec![0.0; d + 1];
        w[j] = 1.0;
        Ok(Self(w))
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// `λᵀe`.
    pub fn dot(&self, e: &EVector) -> Result<f64> {
        if self.0.len() != e.0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.0.len(),
                found: e.0.len(),
            });
        }
        Ok(self.0.iter().zip(&e.0).map(|(w, v)| w * v).sum())
    }
}

impl fmt::Debug for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Portfolio").field(&self.0).finish()
    }
}

/// Per-model constants: dimension, almost-sure increment bound and the
/// unit-increment portfolio `λ̃` with `λ̃ᵀe = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    d: usize,
    b: f64,
    lambda_tilde: Portfolio,
}

impl ModelConstants {
    pub fn new(d: usize, b: f64, lambda_tilde: Portfolio) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("d must be at least 1"));
        }
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain("b must be finite and greater than 1"));
        }
        if lambda_tilde.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: lambda_tilde.0.len(),
            });
        }
        Ok(Self { d, b, lambda_tilde })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda_tilde(&self) -> &Portfolio {
        &self.lambda_tilde
    }
}

/// `log(λᵀe)` in nats, `-inf` for a zero increment.
pub fn log_increment(portfolio: &Portfolio, e: &EVector) -> Result<f64> {
    Ok(ln_or_neg_inf(portfolio.dot(e)?))
}

pub(crate) fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        libm::log(x)
    } else {
        f64::NEG_INFINITY
    }
}

/// Cover's pathwise regret bound for the Dirichlet(1/2) universal portfolio:
/// `d·log(n+1)/2 + log 2`.
pub fn co96_regret(n: u64, d: usize) -> f64 {
    d as f64 * libm::log1p(n as f64) / 2.0 + core::f64::consts::LN_2
}
