//! Scalar test functions `φ: ℝ → ℝ`.
//!
//! Every function here is piecewise linear or piecewise quadratic-convex, which
//! makes the maximum over a closed interval exactly computable from the
//! interval ends and the listed kink points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function with constant extension beyond the outer breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("piecewise-linear function needs at least one breakpoint"));
        }
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid(format!("breakpoint {i} is not finite")));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "breakpoints must be strictly increasing in x (index {})",
                    i + 1
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            points: vec![(0.0, c)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (x0, y0) = pts[0];
        if x <= x0 {
            return y0;
        }
        let (xl, yl) = pts[pts.len() - 1];
        if x >= xl {
            return yl;
        }
        // first breakpoint strictly greater than x
        let hi = pts.partition_point(|&(bx, _)| bx <= x);
        let (xa, ya) = pts[hi - 1];
        let (xb, yb) = pts[hi];
        let t = (x - xa) / (xb - xa);
        ya + (yb - ya) * t
    }

    pub fn neg(&self) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (x, -y)).collect(),
        }
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (x, lambda * y)).collect(),
        }
    }

    /// Pointwise sum; breakpoints are the union of both breakpoint sets.
    pub fn add(&self, other: &Self) -> Self {
        let mut xs: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .map(|p| p.0)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Self {
            points: xs
                .into_iter()
                .map(|x| (x, self.eval(x) + other.eval(x)))
                .collect(),
        }
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseLinear {
    type Error = Error;
    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<PiecewiseLinear> for Vec<(f64, f64)> {
    fn from(p: PiecewiseLinear) -> Self {
        p.points
    }
}

/// Closed form of `ψ_n(x) = sup_y { n·1{|y| ≥ n} − n|y − x| }`.
pub fn psi(n: u64, x: f64) -> f64 {
    let n = n as f64;
    n * (x.abs() - (n - 1.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TestFunction {
    PiecewiseLinear { breakpoints: PiecewiseLinear },
    Abs,
    Square,
    Identity,
    /// `(−n ∨ x) ∧ n`
    Clamp { n: f64 },
    /// Triangle of height 1 supported on `[center − halfwidth, center + halfwidth]`.
    Tent { center: f64, halfwidth: f64 },
    Psi { n: u64 },
    /// `((−n ∨ x) ∧ n)²`
    ClampSquare { n: f64 },
    /// `(|x| − λ)⁺`
    Excess { lambda: f64 },
}

impl TestFunction {
    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(TestFunction::PiecewiseLinear {
            breakpoints: PiecewiseLinear::new(points)?,
        })
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::PiecewiseLinear {
            breakpoints: PiecewiseLinear::constant(c),
        }
    }

    pub fn tent(center: f64, halfwidth: f64) -> Result<Self> {
        let f = TestFunction::Tent { center, halfwidth };
        f.validate()?;
        Ok(f)
    }

    /// Checks parameter ranges of builtins (deserialized values bypass the constructors).
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite")))
            }
        };
        match *self {
            TestFunction::Clamp { n } | TestFunction::ClampSquare { n } => {
                finite(n, "n")?;
                if n < 0.0 {
                    return Err(Error::invalid("clamp level n must be non-negative"));
                }
            }
            TestFunction::Tent { center, halfwidth } => {
                finite(center, "center")?;
                finite(halfwidth, "halfwidth")?;
                if halfwidth <= 0.0 {
                    return Err(Error::invalid("tent halfwidth must be positive"));
                }
            }
            TestFunction::Psi { n } => {
                if n == 0 {
                    return Err(Error::invalid("psi index n must be at least 1"));
                }
            }
            TestFunction::Excess { lambda } => finite(lambda, "lambda")?,
            _ => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::PiecewiseLinear { ref breakpoints } => breakpoints.eval(x),
            TestFunction::Abs => x.abs(),
            TestFunction::Square => x * x,
            TestFunction::Identity => x,
            TestFunction::Clamp { n } => x.clamp(-n, n),
            TestFunction::Tent { center, halfwidth } => {
                (1.0 - (x - center).abs() / halfwidth).max(0.0)
            }
            TestFunction::Psi { n } => psi(n, x),
            TestFunction::ClampSquare { n } => {
                let c = x.clamp(-n, n);
                c * c
            }
            TestFunction::Excess { lambda } => (x.abs() - lambda).max(0.0),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(
            self,
            TestFunction::Abs | TestFunction::Square | TestFunction::Identity | TestFunction::Excess { .. }
        )
    }

    pub(crate) fn require_bounded(&self) -> Result<()> {
        if self.is_bounded() {
            Ok(())
        } else {
            Err(Error::UnboundedFunction(self.to_string()))
        }
    }

    /// Points where the function changes its formula. Between consecutive kinks
    /// every kind is either affine or convex, so interval maxima sit at kinks or ends.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            TestFunction::PiecewiseLinear { ref breakpoints } => {
                breakpoints.points().iter().map(|p| p.0).collect()
            }
            TestFunction::Abs | TestFunction::Square => vec![0.0],
            TestFunction::Identity => vec![],
            TestFunction::Clamp { n } | TestFunction::ClampSquare { n } => vec![-n, n],
            TestFunction::Tent { center, halfwidth } => {
                vec![center - halfwidth, center, center + halfwidth]
            }
            TestFunction::Psi { n } => {
                let n = n as f64;
                vec![-n, -(n - 1.0), n - 1.0, n]
            }
            TestFunction::Excess { lambda } => vec![-lambda, lambda],
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::PiecewiseLinear { breakpoints } => {
                write!(f, "piecewise_linear{:?}", breakpoints.points())
            }
            TestFunction::Abs => write!(f, "abs"),
            TestFunction::Square => write!(f, "square"),
            TestFunction::Identity => write!(f, "identity"),
            TestFunction::Clamp { n } => write!(f, "clamp({n})"),
            TestFunction::Tent { center, halfwidth } => write!(f, "tent({center}, {halfwidth})"),
            TestFunction::Psi { n } => write!(f, "psi({n})"),
            TestFunction::ClampSquare { n } => write!(f, "clamp_square({n})"),
            TestFunction::Excess { lambda } => write!(f, "excess({lambda})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_interpolates_and_extends() {
        let f = PiecewiseLinear::new(vec![(-1.0, 1.0), (0.0, 0.0), (2.0, 4.0)]).unwrap();
        assert_eq!(f.eval(-5.0), 1.0);
        assert_eq!(f.eval(-0.5), 0.5);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(9.0), 4.0);
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    fn rejects_unsorted_breakpoints() {
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![]).is_err());
        assert!(serde_json::from_str::<PiecewiseLinear>("[[1.0, 0.0], [0.5, 1.0]]").is_err());
    }

    #[test]
    fn negation_is_bitwise_exact() {
        let f = PiecewiseLinear::new(vec![(-1.3, 0.7), (0.1, -0.2), (2.9, 0.33)]).unwrap();
        let g = f.neg();
        for i in -40..40 {
            let x = i as f64 * 0.0937;
            assert_eq!(g.eval(x).to_bits(), (-f.eval(x)).to_bits());
        }
    }

    #[test]
    fn sum_matches_pointwise() {
        let f = PiecewiseLinear::new(vec![(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let g = PiecewiseLinear::new(vec![(0.0, 1.0), (0.5, -1.0), (3.0, 0.0)]).unwrap();
        let h = f.add(&g);
        for i in -50..50 {
            let x = i as f64 * 0.1;
            assert!((h.eval(x) - f.eval(x) - g.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn builtins() {
        assert_eq!(TestFunction::Clamp { n: 2.0 }.eval(-3.5), -2.0);
        assert_eq!(TestFunction::Tent { center: 0.25, halfwidth: 0.25 }.eval(0.25), 1.0);
        assert_eq!(TestFunction::Tent { center: 0.25, halfwidth: 0.25 }.eval(1.0), 0.0);
        assert_eq!(TestFunction::ClampSquare { n: 2.0 }.eval(5.0), 4.0);
        assert_eq!(TestFunction::Excess { lambda: 1.0 }.eval(-3.0), 2.0);
        assert!(!TestFunction::Square.is_bounded());
        assert!(TestFunction::Psi { n: 3 }.is_bounded());
        assert!(TestFunction::tent(0.0, 0.0).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(5, 5.0), 5.0);
        assert_eq!(psi(5, 4.0), 0.0);
        assert_eq!(psi(5, 4.5), 2.5);
        assert_eq!(psi(5, -4.5), 2.5);
        assert_eq!(psi(1, 0.0), 0.0);
        assert_eq!(psi(1, 0.5), 0.5);
    }

    #[test]
    fn config_shape() {
        let f: TestFunction =
            serde_json::from_str(r#"{"kind": "tent", "params": {"center": 0.25, "halfwidth": 0.25}}"#)
                .unwrap();
        assert_eq!(f, TestFunction::Tent { center: 0.25, halfwidth: 0.25 });
        let g: TestFunction = serde_json::from_str(
            r#"{"kind": "piecewise_linear", "params": {"breakpoints": [[0, 1], [1, 0]]}}"#,
        )
        .unwrap();
        assert_eq!(g.eval(0.5), 0.5);
        let h: TestFunction = serde_json::from_str(r#"{"kind": "abs"}"#).unwrap();
        assert_eq!(h, TestFunction::Abs);
    }
}
