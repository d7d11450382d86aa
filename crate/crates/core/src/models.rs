//! E-vector constructions for the supported testing problems.
//!
//! Every model here has `d = 1` and a unit-increment portfolio `λ̃` with
//! `λ̃ᵀE = 1` for every observation.

use crate::error::{Error, Result};
use crate::portfolio::{EVector, ModelConstants, Portfolio};

/// One on-path observation as seen by the statistician.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// A `[0, 1]` outcome.
    Scalar(f64),
    /// An `(x, y)` tuple of `[0, 1]` outcomes.
    Pair(f64, f64),
    /// A randomized-experiment record: the observed outcome and whether the
    /// unit was assigned to treatment (`Z = 1`).
    Assigned { y_obs: f64, treated: bool },
}

/// A global null tested arm by arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestingProblem {
    /// `H₀: E[Y(a)] ≤ μ₀` for every arm.
    OneSidedMean { mu0: f64 },
    /// `H₀: E[Y(a)] = μ₀` for every arm.
    TwoSidedMean { mu0: f64 },
    /// `H₀: E[X(a) − Y(a)] = 0` for every arm.
    TupleEquality,
    /// `H₀: ψ(a) ≤ δ` for every treatment arm, with constant propensity `π`.
    AteThreshold { pi: f64, delta: f64 },
}

fn check_unit(x: f64, what: &'static str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(what))
    }
}

fn check_mu0(mu0: f64) -> Result<()> {
    if mu0 > 0.0 && mu0 < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain("mu0 must lie in (0, 1)"))
    }
}

impl TestingProblem {
    pub fn one_sided(mu0: f64) -> Result<Self> {
        check_mu0(mu0)?;
        Ok(Self::OneSidedMean { mu0 })
    }

    pub fn two_sided(mu0: f64) -> Result<Self> {
        check_mu0(mu0)?;
        Ok(Self::TwoSidedMean { mu0 })
    }

    pub fn tuple_equality() -> Self {
        Self::TupleEquality
    }

    pub fn ate(pi: f64, delta: f64) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Domain("propensity pi must lie in (0, 1)"));
        }
        if !(-1.0..=1.0).contains(&delta) {
            return Err(Error::Domain("delta must lie in [-1, 1]"));
        }
        let threshold = transformed_threshold(pi, delta);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Domain("transformed threshold must lie in (0, 1)"));
        }
        Ok(Self::AteThreshold { pi, delta })
    }

    /// Re-checks the invariants of a value built directly from the enum.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::OneSidedMean { mu0 } => Self::one_sided(mu0).map(drop),
            Self::TwoSidedMean { mu0 } => Self::two_sided(mu0).map(drop),
            Self::TupleEquality => Ok(()),
            Self::AteThreshold { pi, delta } => Self::ate(pi, delta).map(drop),
        }
    }

    pub fn constants(&self) -> Result<ModelConstants> {
        self.validate()?;
        match *self {
            Self::OneSidedMean { mu0 } => ModelConstants::new(1, 1.0 / mu0, Portfolio::binary(0.0)?),
            Self::TwoSidedMean { mu0 } => {
                let b = f64::max(1.0 / (1.0 - mu0), 1.0 / mu0);
                ModelConstants::new(1, b, Portfolio::binary(mu0)?)
            }
            Self::TupleEquality => ModelConstants::new(1, 2.0, Portfolio::binary(0.5)?),
            Self::AteThreshold { pi, delta } => {
                ModelConstants::new(1, 1.0 / transformed_threshold(pi, delta), Portfolio::binary(0.0)?)
            }
        }
    }

    /// The e-vector of one observation under this problem.
    pub fn evector(&self, observation: Observation) -> Result<EVector> {
        match (*self, observation) {
            (Self::OneSidedMean { mu0 }, Observation::Scalar(y)) => one_sided_evector(y, mu0),
            (Self::TwoSidedMean { mu0 }, Observation::Scalar(y)) => two_sided_evector(y, mu0),
            (Self::TupleEquality, Observation::Pair(x, y)) => tuple_equality_evector(x, y),
            (Self::AteThreshold { pi, delta }, Observation::Assigned { y_obs, treated }) => {
                ate_evector(y_obs, treated, pi, delta)
            }
            _ => Err(Error::Precondition(
                "observation kind does not match the testing problem",
            )),
        }
    }
}

/// `(1, y/μ₀)`.
pub fn one_sided_evector(y: f64, mu0: f64) -> Result<EVector> {
    check_unit(y, "outcome must lie in [0, 1]")?;
    check_mu0(mu0)?;
    EVector::pair(1.0, y / mu0)
}

/// `((1−y)/(1−μ₀), y/μ₀)`.
pub fn two_sided_evector(y: f64, mu0: f64) -> Result<EVector> {
    check_unit(y, "outcome must lie in [0, 1]")?;
    check_mu0(mu0)?;
    EVector::pair((1.0 - y) / (1.0 - mu0), y / mu0)
}

/// `(2(1−z), 2z)` with `z = (x − y + 1)/2`.
pub fn tuple_equality_evector(x: f64, y: f64) -> Result<EVector> {
    check_unit(x, "x must lie in [0, 1]")?;
    check_unit(y, "y must lie in [0, 1]")?;
    let z = (x - y + 1.0) / 2.0;
    EVector::pair(2.0 * (1.0 - z), 2.0 * z)
}

/// Horvitz–Thompson estimate `Y·(Z/π − (1−Z)/(1−π))` of one unit's effect.
pub fn horvitz_thompson(y_obs: f64, treated: bool, pi: f64) -> f64 {
    if treated {
        y_obs / pi
    } else {
        -y_obs / (1.0 - pi)
    }
}

/// The unit-interval map `x ↦ π(1 + x(1−π))`.
pub fn unit_transform(x: f64, pi: f64) -> f64 {
    pi * (1.0 + x * (1.0 - pi))
}

/// `δ̲ = π(1 + δ(1−π))`.
pub fn transformed_threshold(pi: f64, delta: f64) -> f64 {
    unit_transform(delta, pi)
}

/// Transformed Horvitz–Thompson estimate in `[0, 1]`.
///
/// Evaluated in the simplified forms `π + y(1−π)` (treated) and `π(1−y)`
/// (control), which equal `unit_transform(horvitz_thompson(..))` exactly in
/// real arithmetic and cannot leave `[0, 1]` through cancellation.
pub fn transformed_estimate(y_obs: f64, treated: bool, pi: f64) -> f64 {
    let v = if treated {
        pi + y_obs * (1.0 - pi)
    } else {
        pi * (1.0 - y_obs)
    };
    v.clamp(0.0, 1.0)
}

/// `(1, ψ̲̂/δ̲)`.
pub fn ate_evector(y_obs: f64, treated: bool, pi: f64, delta: f64) -> Result<EVector> {
    check_unit(y_obs, "observed outcome must lie in [0, 1]")?;
    TestingProblem::ate(pi, delta)?;
    EVector::pair(
        1.0,
        transformed_estimate(y_obs, treated, pi) / transformed_threshold(pi, delta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::log_increment;

    fn values(e: EVector) -> (f64, f64) {
        (e.values()[0], e.values()[1])
    }

    #[test]
    fn one_sided_examples() {
        assert_eq!(values(one_sided_evector(0.5, 0.5).unwrap()), (1.0, 1.0));
        assert_eq!(values(one_sided_evector(1.0, 0.5).unwrap()), (1.0, 2.0));
        assert_eq!(values(one_sided_evector(0.0, 0.25).unwrap()), (1.0, 0.0));
        assert!(one_sided_evector(1.1, 0.5).is_err());
        assert!(one_sided_evector(-0.1, 0.5).is_err());
        let c = TestingProblem::one_sided(0.25).unwrap().constants().unwrap();
        assert_eq!(c.b(), 4.0);
        assert_eq!(c.lambda_tilde().weights(), &[1.0, 0.0]);
    }

    #[test]
    fn two_sided_examples() {
        assert_eq!(values(two_sided_evector(0.3, 0.3).unwrap()), (1.0, 1.0));
        assert_eq!(values(two_sided_evector(1.0, 0.5).unwrap()), (0.0, 2.0));
        let (a, b) = values(two_sided_evector(0.9, 0.3).unwrap());
        assert!((a - 1.0 / 7.0).abs() < 1e-15 && (b - 3.0).abs() < 1e-15);
        assert!((0.7 * a + 0.3 * b - 1.0).abs() < 1e-15);
        let c = TestingProblem::two_sided(0.3).unwrap().constants().unwrap();
        assert!((c.b() - 1.0 / 0.3).abs() < 1e-15);
        assert!(TestingProblem::two_sided(0.0).is_err());
        assert!(TestingProblem::two_sided(1.0).is_err());
    }

    #[test]
    fn tuple_examples() {
        assert_eq!(values(tuple_equality_evector(0.4, 0.4).unwrap()), (1.0, 1.0));
        assert_eq!(values(tuple_equality_evector(1.0, 0.0).unwrap()), (0.0, 2.0));
        assert_eq!(values(tuple_equality_evector(0.2, 0.7).unwrap()), (1.5, 0.5));
        assert!(tuple_equality_evector(1.2, 0.0).is_err());
    }

    #[test]
    fn ate_examples() {
        assert_eq!(horvitz_thompson(1.0, true, 0.5), 2.0);
        assert_eq!(unit_transform(2.0, 0.5), 1.0);
        assert_eq!(transformed_threshold(0.5, 0.0), 0.5);
        assert_eq!(values(ate_evector(1.0, true, 0.5, 0.0).unwrap()), (1.0, 2.0));
        assert_eq!(horvitz_thompson(1.0, false, 0.5), -2.0);
        assert_eq!(values(ate_evector(1.0, false, 0.5, 0.0).unwrap()), (1.0, 0.0));
        assert_eq!(values(ate_evector(0.0, false, 0.5, 0.0).unwrap()), (1.0, 1.0));
        assert_eq!(values(ate_evector(0.0, true, 0.5, 0.0).unwrap()), (1.0, 1.0));
        assert!(TestingProblem::ate(0.0, 0.0).is_err());
        assert!(TestingProblem::ate(1.0, 0.0).is_err());
        // δ = −1 maps to δ̲ = π², still admissible; δ = 1 with π → 1 is not.
        assert!(TestingProblem::ate(0.5, -1.0).is_ok());
        assert!(TestingProblem::ate(0.5, 1.5).is_err());
    }

    #[test]
    fn transformed_estimate_agrees_with_composition() {
        for &pi in &[0.1, 0.37, 0.5, 0.9] {
            for i in 0..=100 {
                let y = i as f64 / 100.0;
                for treated in [true, false] {
                    let direct = unit_transform(horvitz_thompson(y, treated, pi), pi);
                    let simplified = transformed_estimate(y, treated, pi);
                    assert!((direct - simplified).abs() < 1e-14);
                    assert!((0.0..=1.0).contains(&simplified));
                }
            }
        }
    }

    #[test]
    fn observation_kind_must_match() {
        let p = TestingProblem::one_sided(0.5).unwrap();
        assert!(p.evector(Observation::Pair(0.1, 0.2)).is_err());
        let e = p.evector(Observation::Scalar(1.0)).unwrap();
        assert_eq!(log_increment(p.constants().unwrap().lambda_tilde(), &e).unwrap(), 0.0);
    }
}
