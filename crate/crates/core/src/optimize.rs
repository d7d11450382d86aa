//! Maximization of weighted log-wealth `Σ wᵢ log(λᵀeᵢ)` over the simplex.
//!
//! The same concave program yields the best-in-hindsight portfolio (weights
//! are multiplicities) and the Kelly portfolio of a finitely supported
//! increment law (weights are probabilities).
//!
//! For `d = 1` the derivative in `λ₁` is monotone and the root is found by a
//! bracketed Newton iteration that falls back to bisection; boundary optima
//! are detected from the endpoint derivatives and reported exactly. For
//! `d ≥ 2` projected-gradient ascent with backtracking is used, stopped by the
//! Frank–Wolfe duality gap, which upper-bounds the distance to the optimum.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::portfolio::{ln_or_neg_inf, EVector, Portfolio};

/// Bracket width at which the `d = 1` root search stops.
pub const LAMBDA_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;
const CLIP: f64 = 1e-300;

/// A distinct e-vector together with its weight in the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub evector: EVector,
    pub weight: f64,
}

impl Atom {
    pub fn new(evector: EVector, weight: f64) -> Self {
        Self { evector, weight }
    }
}

/// Maximizer and maximum of a log-wealth program.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub portfolio: Portfolio,
    pub value: f64,
}

/// Weighted log-wealth of `portfolio` on `atoms`.
pub fn log_wealth(portfolio: &Portfolio, atoms: &[Atom]) -> Result<f64> {
    let mut total = 0.0;
    for atom in atoms {
        if atom.weight == 0.0 {
            continue;
        }
        total += atom.weight * ln_or_neg_inf(portfolio.dot(&atom.evector)?);
    }
    Ok(total)
}

/// Best constant portfolio in hindsight for a sequence of e-vectors.
///
/// Returns the maximizer of `Σᵢ log(λᵀEᵢ)` and the maximum; `tol` bounds
/// the optimality gap of the returned value in nats.
pub fn best_in_hindsight(evectors: &[EVector], tol: f64) -> Result<Optimum> {
    if evectors.is_empty() {
        return Err(Error::Empty);
    }
    let mut atoms: Vec<Atom> = Vec::new();
    // Repeated e-vectors are merged; order of first appearance is kept so the
    // summation order is a function of the input alone.
    for e in evectors {
        match atoms.iter_mut().find(|a| a.evector == *e) {
            Some(a) => a.weight += 1.0,
            None => atoms.push(Atom::new(e.clone(), 1.0)),
        }
    }
    maximize_log_wealth(&atoms, tol, None)
}

/// Log-optimal (Kelly) portfolio of a finitely supported e-vector law and
/// its growth rate `E[log(λᵀE)]`.
pub fn kelly_oracle(support: &[(EVector, f64)], tol: f64) -> Result<Optimum> {
    if support.is_empty() {
        return Err(Error::Empty);
    }
    if support.iter().any(|(_, p)| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain("probabilities must be nonnegative"));
    }
    let total: f64 = support.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("probabilities must sum to one"));
    }
    let atoms: Vec<Atom> = support.iter().map(|(e, p)| Atom::new(e.clone(), *p)).collect();
    maximize_log_wealth(&atoms, tol, None)
}

/// Maximizes `Σ w log(λᵀe)` over the simplex, optionally warm-started.
pub fn maximize_log_wealth(atoms: &[Atom], tol: f64, warm: Option<&Portfolio>) -> Result<Optimum> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive"));
    }
    let first = atoms.first().ok_or(Error::Empty)?;
    let len = first.evector.len();
    for atom in atoms {
        if atom.evector.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: atom.evector.len(),
            });
        }
        if atom.weight > 0.0 && atom.evector.values().iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateInput);
        }
    }
    if let Some(w) = warm {
        if w.weights().len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: w.weights().len(),
            });
        }
    }
    if len == 2 {
        let start = warm.map(|w| w.weights()[1]);
        let lambda = solve_binary(atoms, start);
        let portfolio = Portfolio::from_raw(alloc::vec![1.0 - lambda, lambda]);
        let value = log_wealth(&portfolio, atoms)?;
        Ok(Optimum { portfolio, value })
    } else {
        solve_simplex(atoms, tol, warm)
    }
}

/// Derivative of the `d = 1` objective at `x`, with one-sided infinite
/// limits at the endpoints.
fn binary_derivatives(atoms: &[Atom], x: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut h = 0.0;
    for atom in atoms {
        let v = atom.evector.values();
        let slope = v[1] - v[0];
        if atom.weight == 0.0 || slope == 0.0 {
            continue;
        }
        let inc = v[0] + x * slope;
        if inc <= 0.0 {
            // Only reachable at an endpoint: the increment vanishes there.
            g += if slope > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
            h = f64::NEG_INFINITY;
            continue;
        }
        let r = slope / inc;
        g += atom.weight * r;
        h -= atom.weight * r * r;
    }
    (g, h)
}

fn solve_binary(atoms: &[Atom], start: Option<f64>) -> f64 {
    let (g0, _) = binary_derivatives(atoms, 0.0);
    if !(g0 > 0.0) {
        return 0.0;
    }
    let (g1, _) = binary_derivatives(atoms, 1.0);
    if g1 >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = match start {
        Some(s) if s > 0.0 && s < 1.0 => s,
        _ => 0.5,
    };
    for _ in 0..MAX_ITERATIONS {
        let (g, h) = binary_derivatives(atoms, x);
        if g > 0.0 {
            lo = x;
        } else if g < 0.0 {
            hi = x;
        } else {
            return x;
        }
        if hi - lo <= LAMBDA_TOLERANCE {
            break;
        }
        let newton = x - g / h;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-3 * LAMBDA_TOLERANCE {
            return next;
        }
        x = next;
    }
    0.5 * (lo + hi)
}

fn clipped_objective(atoms: &[Atom], x: &[f64]) -> f64 {
    atoms
        .iter()
        .filter(|a| a.weight != 0.0)
        .map(|a| a.weight * libm::log(dot(x, a.evector.values()).max(CLIP)))
        .sum()
}

fn gradient(atoms: &[Atom], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    for atom in atoms.iter().filter(|a| a.weight != 0.0) {
        let v = atom.evector.values();
        let scale = atom.weight / dot(x, v).max(CLIP);
        for (g, e) in out.iter_mut().zip(v) {
            *g += scale * e;
        }
    }
}

fn dot(x: &[f64], v: &[f64]) -> f64 {
    x.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|v| (v - theta).max(0.0)).collect();
    let sum: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= sum);
    x
}

fn solve_simplex(atoms: &[Atom], tol: f64, warm: Option<&Portfolio>) -> Result<Optimum> {
    let len = atoms[0].evector.len();
    let uniform = Portfolio::uniform(len - 1);
    let mut x: Vec<f64> = warm.unwrap_or(&uniform).weights().to_vec();
    let mut f = clipped_objective(atoms, &x);
    if warm.is_some() && f < clipped_objective(atoms, uniform.weights()) {
        x = uniform.weights().to_vec();
        f = clipped_objective(atoms, &x);
    }
    let scale: f64 = atoms.iter().map(|a| a.weight).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut step = 1.0 / scale;
    let mut g = alloc::vec![0.0; len];
    for _ in 0..MAX_ITERATIONS {
        gradient(atoms, &x, &mut g);
        let gx = dot(&g, &x);
        let gap = g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - gx;
        if gap <= tol {
            break;
        }
        let mut accepted = None;
        let mut t = step;
        while t > 1e-30 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + t * gi).collect();
            let y = project_to_simplex(&trial);
            let fy = clipped_objective(atoms, &y);
            let ascent: f64 = g
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(gi, (yi, xi))| gi * (yi - xi))
                .sum();
            if fy >= f + 1e-4 * ascent && fy >= f {
                accepted = Some((y, fy));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let improvement = fy - f;
        x = y;
        f = fy;
        step = 2.0 * t;
        if improvement <= 1e-15 * f.abs().max(1.0) {
            break;
        }
    }
    let portfolio = Portfolio::from_raw(x);
    let value = log_wealth(&portfolio, atoms)?;
    if value == f64::NEG_INFINITY {
        return Err(Error::DegenerateInput);
    }
    Ok(Optimum { portfolio, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn pair(a: f64, b: f64) -> EVector {
        EVector::pair(a, b).unwrap()
    }

    /// Independent oracle: dense grid scan over λ₁.
    fn grid_max(evectors: &[EVector], points: usize) -> (f64, f64) {
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=points {
            let l = i as f64 / points as f64;
            let v: f64 = evectors
                .iter()
                .map(|e| ln_or_neg_inf((1.0 - l) * e.values()[0] + l * e.values()[1]))
                .sum();
            if v > best.1 {
                best = (l, v);
            }
        }
        best
    }

    #[test]
    fn constant_objective() {
        let opt = best_in_hindsight(&[pair(1.0, 1.0)], 1e-9).unwrap();
        assert_eq!(opt.value, 0.0);
    }

    #[test]
    fn stationary_point_at_the_boundary() {
        let evs = [pair(1.0, 2.0), pair(1.0, 2.0), pair(1.0, 0.5)];
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        assert_eq!(opt.portfolio.weights()[1], 1.0);
        assert!((opt.value - core::f64::consts::LN_2).abs() < 1e-12);
        let (l, v) = grid_max(&evs, 10_000);
        assert!((l - 1.0).abs() < 1e-4);
        assert!(opt.value >= v - 1e-12);
    }

    #[test]
    fn symmetric_binary_payoff() {
        // Fifty wins and fifty total losses: the objective 50·log(1+λ₁) +
        // 50·log(1−λ₁) peaks at λ₁ = 0 with value 0, not at λ₁ = 0.5 (whose
        // value 50·log 1.5 + 50·log 0.5 ≈ −14.384 is strictly worse).
        let mut evs = vec![pair(1.0, 2.0); 50];
        evs.extend(vec![pair(1.0, 0.0); 50]);
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        assert_eq!(opt.portfolio.weights()[1], 0.0);
        assert_eq!(opt.value, 0.0);
        let at_half = 50.0 * 1.5f64.ln() + 50.0 * 0.5f64.ln();
        assert!((at_half - -14.384).abs() < 1e-3);
        assert!(opt.value > at_half);
        let (l, v) = grid_max(&evs, 10_000);
        assert_eq!(l, 0.0);
        assert!(opt.value >= v - 1e-12);
    }

    #[test]
    fn asymmetric_binary_payoff() {
        // 60 wins, 40 losses: λ₁* = 0.2 by the Kelly formula 2p − 1.
        let mut evs = vec![pair(1.0, 2.0); 60];
        evs.extend(vec![pair(1.0, 0.0); 40]);
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        assert!((opt.portfolio.weights()[1] - 0.2).abs() < 1e-9);
        let expected = 60.0 * 1.2f64.ln() + 40.0 * 0.8f64.ln();
        assert!((opt.value - expected).abs() < 1e-9);
        let (l, _) = grid_max(&evs, 10_000);
        assert!((l - 0.2).abs() < 1e-4);
    }

    #[test]
    fn degenerate_all_zero_vector() {
        let err = best_in_hindsight(&[pair(1.0, 2.0), pair(0.0, 0.0)], 1e-9).unwrap_err();
        assert_eq!(err, Error::DegenerateInput);
        assert_eq!(best_in_hindsight(&[], 1e-9).unwrap_err(), Error::Empty);
    }

    #[test]
    fn zero_components_push_optimum_inside() {
        // (0, 2) forbids λ₁ = 0 and (1, 0) forbids λ₁ = 1.
        let evs = [pair(0.0, 2.0), pair(1.0, 0.0)];
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        let (l, v) = grid_max(&evs, 100_000);
        assert!((opt.portfolio.weights()[1] - l).abs() < 1e-4);
        assert!(opt.value.is_finite() && opt.value >= v - 1e-12);
    }

    #[test]
    fn kelly_bernoulli_one_sided() {
        // p = 0.7, μ₀ = 0.5: λ₁* = p − (1 − p)μ₀/(1 − μ₀) = 0.4.
        let support = vec![(pair(1.0, 2.0), 0.7), (pair(1.0, 0.0), 0.3)];
        let opt = kelly_oracle(&support, 1e-12).unwrap();
        assert!((opt.portfolio.weights()[1] - 0.4).abs() < 1e-9);
        let analytic = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((opt.value - analytic).abs() < 1e-12);
        // The quoted figure 0.082289 is 0.0822829 rounded loosely; 1e-5 covers it.
        assert!((opt.value - 0.082289).abs() < 1e-5);
        // 1e-5 grid brute force.
        let mut best = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let l = i as f64 / 100_000.0;
            best = best.max(0.7 * (1.0 + l).ln() + 0.3 * (1.0 - l).ln());
        }
        assert!((opt.value - best).abs() < 1e-9);
    }

    #[test]
    fn kelly_null_boundary_and_point_mass() {
        let support = vec![(pair(1.0, 2.0), 0.5), (pair(1.0, 0.0), 0.5)];
        let opt = kelly_oracle(&support, 1e-12).unwrap();
        assert_eq!(opt.portfolio.weights()[1], 0.0);
        assert_eq!(opt.value, 0.0);
        let point = kelly_oracle(&[(pair(0.0, 2.0), 1.0)], 1e-12).unwrap();
        assert_eq!(point.portfolio.weights()[1], 1.0);
        assert!((point.value - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kelly_oracle(&[], 1e-9).unwrap_err(), Error::Empty);
        assert!(kelly_oracle(&[(pair(1.0, 2.0), 0.5)], 1e-9).is_err());
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let evs: Vec<Atom> = vec![Atom::new(pair(1.0, 1.7), 13.0), Atom::new(pair(1.0, 0.2), 9.0)];
        let cold = maximize_log_wealth(&evs, 1e-9, None).unwrap();
        for s in [0.01, 0.3, 0.99] {
            let warm = maximize_log_wealth(&evs, 1e-9, Some(&Portfolio::binary(s).unwrap())).unwrap();
            assert!((warm.portfolio.weights()[1] - cold.portfolio.weights()[1]).abs() < 1e-9);
            assert!((warm.value - cold.value).abs() < 1e-12);
        }
    }

    #[test]
    fn three_coordinate_simplex() {
        let e = |a: f64, b: f64, c: f64| EVector::new(vec![a, b, c]).unwrap();
        let evs = [e(1.0, 2.0, 0.5), e(1.0, 0.1, 1.8), e(1.0, 1.5, 1.2), e(1.0, 0.4, 0.3)];
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        let w = opt.portfolio.weights();
        assert!(w.iter().all(|v| *v >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut best = f64::NEG_INFINITY;
        let m = 400;
        for i in 0..=m {
            for j in 0..=(m - i) {
                let l = [(m - i - j) as f64 / m as f64, i as f64 / m as f64, j as f64 / m as f64];
                let v: f64 = evs.iter().map(|ev| ln_or_neg_inf(dot(&l, ev.values()))).sum();
                best = best.max(v);
            }
        }
        assert!(opt.value >= best - 1e-9);
        assert!(opt.value <= best + 1e-3);
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[0.2, 0.9, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert_eq!(p[2], 0.0);
        let q = project_to_simplex(&[0.25, 0.25, 0.5]);
        assert_eq!(q, vec![0.25, 0.25, 0.5]);
    }
}
