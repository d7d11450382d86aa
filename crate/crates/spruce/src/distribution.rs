//! Outcome laws for arms and potential outcomes.
//!
//! Distributions are written in config files as
//! `bernoulli(p)`, `beta(a, b)`, `discrete(v1:p1, v2:p2, ...)` and
//! `pair(X, Y)` for independent `(x, y)` tuples.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::{Beta as BetaLaw, ContinuousCDF};

use crate::error::SimError;

/// One arm's outcome, a scalar or an `(x, y)` tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Scalar(f64),
    Pair(f64, f64),
}

/// Law of an arm's outcome; all support lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmDistribution {
    Bernoulli(f64),
    Beta {
        a: f64,
        b: f64,
    },
    Discrete {
        points: Vec<f64>,
        probs: Vec<f64>,
    },
    /// Independent `x` and `y` coordinates.
    Pair(Box<ArmDistribution>, Box<ArmDistribution>),
}

const PROB_TOLERANCE: f64 = 1e-9;

impl ArmDistribution {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Self::Bernoulli(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(SimError::config(format!("bernoulli probability {p} outside [0, 1]")));
                }
            }
            Self::Beta { a, b } => {
                if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(SimError::config(format!("beta({a}, {b}) needs positive finite shapes")));
                }
            }
            Self::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(SimError::config(
                        "discrete law needs matching, nonempty points and probabilities",
                    ));
                }
                if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(SimError::config("discrete support must lie in [0, 1]"));
                }
                if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(SimError::config("discrete probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOLERANCE {
                    return Err(SimError::config(format!(
                        "discrete probabilities sum to {total}, not 1"
                    )));
                }
            }
            Self::Pair(x, y) => {
                if x.is_pair() || y.is_pair() {
                    return Err(SimError::config("pair coordinates must be scalar laws"));
                }
                x.validate()?;
                y.validate()?;
            }
        }
        Ok(())
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, Self::Pair(..))
    }

    /// Whether the law needs discretizing before an exact oracle applies.
    pub fn is_continuous(&self) -> bool {
        match self {
            Self::Beta { .. } => true,
            Self::Pair(x, y) => x.is_continuous() || y.is_continuous(),
            _ => false,
        }
    }

    /// Mean of a scalar law, or of `x − y` for a pair.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Bernoulli(p) => *p,
            Self::Beta { a, b } => a / (a + b),
            Self::Discrete { points, probs } => points.iter().zip(probs).map(|(x, p)| x * p).sum(),
            Self::Pair(x, y) => x.mean() - y.mean(),
        }
    }

    fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli(p) => f64::from(u8::from(rng.random_bool(*p))),
            Self::Beta { a, b } => rand_distr::Beta::new(*a, *b).expect("validated shapes").sample(rng),
            Self::Discrete { points, probs } => {
                let u: f64 = rng.random();
                let mut cumulative = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    cumulative += p;
                    if u < cumulative {
                        return *x;
                    }
                }
                // Round-off in the cumulative sum: fall back to the last atom
                // with positive mass.
                points
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, p)| **p > 0.0)
                    .map_or(points[0], |(x, _)| *x)
            }
            Self::Pair(..) => unreachable!("pairs are sampled coordinate-wise"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        match self {
            Self::Pair(x, y) => {
                let first = x.sample_scalar(rng);
                Outcome::Pair(first, y.sample_scalar(rng))
            }
            other => Outcome::Scalar(other.sample_scalar(rng)),
        }
    }

    fn scalar_support(&self, atoms: usize) -> Vec<(f64, f64)> {
        match self {
            Self::Bernoulli(p) => vec![(0.0, 1.0 - p), (1.0, *p)],
            Self::Beta { a, b } => {
                // Equal-mass atoms at the quantile-midpoints.
                let law = BetaLaw::new(*a, *b).expect("validated shapes");
                let mass = 1.0 / atoms as f64;
                (0..atoms)
                    .map(|i| (law.inverse_cdf((i as f64 + 0.5) * mass).clamp(0.0, 1.0), mass))
                    .collect()
            }
            Self::Discrete { points, probs } => points.iter().copied().zip(probs.iter().copied()).collect(),
            Self::Pair(..) => unreachable!("pairs are expanded coordinate-wise"),
        }
    }

    /// A finitely supported version of the law: exact for Bernoulli and
    /// discrete laws, `atoms` equal-mass quantile points for beta laws.
    /// Zero-probability atoms are dropped.
    pub fn support(&self, atoms: usize) -> Vec<(Outcome, f64)> {
        let out: Vec<(Outcome, f64)> = match self {
            Self::Pair(x, y) => {
                let ys = y.scalar_support(atoms);
                x.scalar_support(atoms)
                    .into_iter()
                    .flat_map(|(xv, xp)| ys.iter().map(move |&(yv, yp)| (Outcome::Pair(xv, yv), xp * yp)))
                    .collect()
            }
            other => other
                .scalar_support(atoms)
                .into_iter()
                .map(|(v, p)| (Outcome::Scalar(v), p))
                .collect(),
        };
        out.into_iter().filter(|(_, p)| *p > 0.0).collect()
    }
}

impl fmt::Display for ArmDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli(p) => write!(f, "bernoulli({p:?})"),
            Self::Beta { a, b } => write!(f, "beta({a:?}, {b:?})"),
            Self::Discrete { points, probs } => {
                write!(f, "discrete(")?;
                for (i, (x, p)) in points.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:?}:{p:?}")?;
                }
                write!(f, ")")
            }
            Self::Pair(x, y) => write!(f, "pair({x}, {y})"),
        }
    }
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.s[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn eat(&mut self, c: char) -> Result<(), String> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(format!("expected '{c}' at offset {}", self.pos))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.s[self.pos..];
        let len = rest
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let rest = &self.s[self.pos..];
        let len = rest.find([',', ')', ':']).unwrap_or(rest.len());
        let text = rest[..len].trim();
        self.pos += len;
        text.parse().map_err(|_| format!("invalid number '{text}'"))
    }

    fn peek_close(&mut self) -> bool {
        self.skip_ws();
        self.s[self.pos..].starts_with(')')
    }

    fn distribution(&mut self) -> Result<ArmDistribution, String> {
        let name = self.word().to_ascii_lowercase();
        self.eat('(')?;
        let dist = match name.as_str() {
            "bernoulli" => ArmDistribution::Bernoulli(self.number()?),
            "beta" => {
                let a = self.number()?;
                self.eat(',')?;
                ArmDistribution::Beta { a, b: self.number()? }
            }
            "discrete" => {
                let (mut points, mut probs) = (Vec::new(), Vec::new());
                loop {
                    points.push(self.number()?);
                    self.eat(':')?;
                    probs.push(self.number()?);
                    if self.peek_close() {
                        break;
                    }
                    self.eat(',')?;
                }
                ArmDistribution::Discrete { points, probs }
            }
            "pair" => {
                let x = self.distribution()?;
                self.eat(',')?;
                ArmDistribution::Pair(Box::new(x), Box::new(self.distribution()?))
            }
            "" => return Err("missing distribution name".into()),
            other => return Err(format!("unknown distribution '{other}'")),
        };
        self.eat(')')?;
        Ok(dist)
    }
}

impl FromStr for ArmDistribution {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { s, pos: 0 };
        let dist = parser
            .distribution()
            .map_err(|e| SimError::config(format!("distribution '{s}': {e}")))?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return Err(SimError::config(format!("distribution '{s}': trailing input")));
        }
        dist.validate()?;
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            "bernoulli(0.7)",
            "beta(2.0, 3.5)",
            "discrete(0.0:0.25, 0.5:0.25, 1.0:0.5)",
            "pair(bernoulli(0.6), beta(1.0, 1.0))",
        ] {
            let d: ArmDistribution = text.parse().unwrap();
            assert_eq!(d.to_string(), text);
            assert_eq!(d.to_string().parse::<ArmDistribution>().unwrap(), d);
        }
        assert_eq!(
            " Bernoulli ( 0.5 ) ".parse::<ArmDistribution>().unwrap(),
            ArmDistribution::Bernoulli(0.5)
        );
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "bernoulli(1.5)",
            "beta(0, 1)",
            "discrete(0:0.5)",
            "discrete(2:1)",
            "gauss(0)",
            "bernoulli(0.5) x",
            "pair(pair(bernoulli(0.5), bernoulli(0.5)), bernoulli(0.5))",
            "",
        ] {
            assert!(bad.parse::<ArmDistribution>().is_err(), "{bad}");
        }
    }

    #[test]
    fn supports() {
        let b = ArmDistribution::Bernoulli(0.7);
        assert_eq!(
            b.support(10),
            vec![(Outcome::Scalar(0.0), 0.30000000000000004), (Outcome::Scalar(1.0), 0.7)]
        );
        assert!(ArmDistribution::Bernoulli(1.0).support(10).len() == 1);
        let beta = ArmDistribution::Beta { a: 2.0, b: 2.0 };
        let s = beta.support(1000);
        assert_eq!(s.len(), 1000);
        let mean: f64 = s
            .iter()
            .map(|(o, p)| if let Outcome::Scalar(x) = o { x * p } else { 0.0 })
            .sum();
        assert!((mean - 0.5).abs() < 1e-6);
        let pair = ArmDistribution::Pair(Box::new(b.clone()), Box::new(ArmDistribution::Bernoulli(0.5)));
        assert_eq!(pair.support(10).len(), 4);
        assert!((pair.mean() - 0.2).abs() < 1e-15);
        assert!(!pair.is_continuous() && beta.is_continuous());
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let laws: Vec<ArmDistribution> = [
            "bernoulli(0.3)",
            "beta(0.5, 0.5)",
            "discrete(0.1:0.2, 0.9:0.8)",
            "pair(bernoulli(0.5), beta(2, 2))",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
        for law in &laws {
            let mut total = 0.0;
            for _ in 0..20_000 {
                match law.sample(&mut rng) {
                    Outcome::Scalar(x) => {
                        assert!((0.0..=1.0).contains(&x));
                        total += x;
                    }
                    Outcome::Pair(x, y) => {
                        assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
                        total += x - y;
                    }
                }
            }
            assert!((total / 20_000.0 - law.mean()).abs() < 0.02, "{law}");
        }
    }
}
