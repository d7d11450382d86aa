//! Cover's universal portfolio for `d = 1` with the Dirichlet(1/2, 1/2)
//! (arcsine) prior.
//!
//! The mixture integral is discretized once. Substituting `λ₁ = sin²θ` turns
//! the arcsine law into the uniform law on `θ ∈ (0, π/2)`, which removes the
//! endpoint singularities of the density; Gauss–Legendre nodes in `θ` then
//! integrate smooth functions of `λ₁` spectrally. Wealth per node is kept in
//! log domain and the next portfolio is a log-sum-exp ratio.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::portfolio::{ln_or_neg_inf, EVector, Portfolio};

/// Default number of quadrature nodes.
pub const DEFAULT_NODES: usize = 2001;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Discretized arcsine prior over `λ₁ ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpMixture {
    lambda: Vec<f64>,
    one_minus_lambda: Vec<f64>,
    log_weight: Vec<f64>,
}

impl UpMixture {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::Domain("quadrature needs at least one node"));
        }
        let (x, w) = gauss_legendre(nodes);
        let mut lambda = Vec::with_capacity(nodes);
        let mut one_minus_lambda = Vec::with_capacity(nodes);
        let mut log_weight = Vec::with_capacity(nodes);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = PI / 4.0 * (xi + 1.0);
            let (s, c) = (libm::sin(theta), libm::cos(theta));
            lambda.push(s * s);
            one_minus_lambda.push(c * c);
            // dθ-measure π/4·w, times the uniform density 2/π.
            log_weight.push(libm::log(wi / 2.0));
        }
        Ok(Self {
            lambda,
            one_minus_lambda,
            log_weight,
        })
    }

    pub fn standard() -> Self {
        Self::new(DEFAULT_NODES).expect("default node count is positive")
    }

    pub fn nodes(&self) -> usize {
        self.lambda.len()
    }

    /// Node locations `λ₁`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Empty per-node log-wealth (all zeros).
    pub fn fresh_wealth(&self) -> Vec<f64> {
        alloc::vec![0.0; self.lambda.len()]
    }

    /// Adds `log(λⱼᵀe)` to each node's log-wealth.
    pub fn accumulate(&self, log_wealth: &mut [f64], e: &EVector) -> Result<()> {
        let v = binary_values(e)?;
        for ((w, l), m) in log_wealth.iter_mut().zip(&self.lambda).zip(&self.one_minus_lambda) {
            *w += ln_or_neg_inf(m * v[0] + l * v[1]);
        }
        Ok(())
    }

    /// The per-node terms `log(λⱼᵀe)` that [`UpMixture::accumulate`] adds.
    pub fn log_increments(&self, e: &EVector) -> Result<Vec<f64>> {
        let v = binary_values(e)?;
        Ok(self
            .lambda
            .iter()
            .zip(&self.one_minus_lambda)
            .map(|(l, m)| ln_or_neg_inf(m * v[0] + l * v[1]))
            .collect())
    }

    /// Posterior-mean portfolio for the given per-node log-wealth.
    pub fn portfolio(&self, log_wealth: &[f64]) -> Portfolio {
        let mut top = f64::NEG_INFINITY;
        for (w, lw) in log_wealth.iter().zip(&self.log_weight) {
            top = top.max(w + lw);
        }
        if top == f64::NEG_INFINITY {
            // Every node is bankrupt; the bet no longer matters.
            return Portfolio::from_raw(alloc::vec![0.5, 0.5]);
        }
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for ((w, lw), l) in log_wealth.iter().zip(&self.log_weight).zip(&self.lambda) {
            let mass = libm::exp(w + lw - top);
            numerator += l * mass;
            denominator += mass;
        }
        let l1 = (numerator / denominator).clamp(0.0, 1.0);
        Portfolio::from_raw(alloc::vec![1.0 - l1, l1])
    }

    /// `log ∫ W̄(λ) dF(λ)`: log-wealth of the mixture itself.
    pub fn log_mixture_wealth(&self, log_wealth: &[f64]) -> f64 {
        let mut top = f64::NEG_INFINITY;
        for (w, lw) in log_wealth.iter().zip(&self.log_weight) {
            top = top.max(w + lw);
        }
        if top == f64::NEG_INFINITY {
            return top;
        }
        let s: f64 = log_wealth
            .iter()
            .zip(&self.log_weight)
            .map(|(w, lw)| libm::exp(w + lw - top))
            .sum();
        top + libm::log(s)
    }

    /// `λ_n^UP` for a full history.
    pub fn next_portfolio(&self, history: &[EVector]) -> Result<Portfolio> {
        let mut wealth = self.fresh_wealth();
        for e in history {
            self.accumulate(&mut wealth, e)?;
        }
        Ok(self.portfolio(&wealth))
    }
}

fn binary_values(e: &EVector) -> Result<&[f64]> {
    if e.dim() != 1 {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    Ok(e.values())
}

/// The universal portfolio for the next round given an arm's history, using
/// the default quadrature. Only `d = 1` is supported.
pub fn universal_portfolio_next(evectors: &[EVector]) -> Result<Portfolio> {
    if let Some(e) = evectors.iter().find(|e| e.dim() != 1) {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    UpMixture::standard().next_portfolio(evectors)
}
