use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear curve through knots with strictly increasing `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Curve {
    knots: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidData("curve needs at least one knot".into()));
        }
        if knots.iter().any(|(u, s)| !u.is_finite() || !s.is_finite()) {
            return Err(Error::InvalidData("curve knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidData("curve knots must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: vec![(0.0, value)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Linear interpolation inside the knot range, constant outside.
    pub fn eval(&self, u: f64) -> f64 {
        let k = &self.knots;
        let first = k[0];
        let last = k[k.len() - 1];
        if u <= first.0 {
            return first.1;
        }
        if u >= last.0 {
            return last.1;
        }
        let hi = k.partition_point(|&(ku, _)| ku <= u);
        let (u0, s0) = k[hi - 1];
        if u == u0 {
            return s0;
        }
        let (u1, s1) = k[hi];
        s0 + (s1 - s0) * (u - u0) / (u1 - u0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for Curve {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<Curve> for Vec<(f64, f64)> {
    fn from(c: Curve) -> Self {
        c.knots
    }
}
