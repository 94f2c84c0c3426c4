//! Countably indexed generator families and the computations around them.
//!
//! * `EXM3`: `P_1 = δ_1`; for `n ≥ 2`, mass `1 − 1/n²` at 1 and `1/n³` at each
//!   of `n, 2n, …, n²`.
//! * `HEAVY`: `P_k = (1 − 1/k)·δ_0 + (1/k)·δ_k`, every member with mean 1.
//!
//! Families are truncated at an index bound and scanned in ascending index
//! order. Weights are kept as integer numerators over a per-generator
//! denominator so that normalization and tail masses are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ambiguity::{DiscreteDistribution, LatticeSpec};
use crate::error::{Error, Result};
use crate::function::TestFunction;

const BOUNDARY_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FamilyName {
    Exm3,
    Heavy,
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyName::Exm3 => "EXM3",
            FamilyName::Heavy => "HEAVY",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricFamily {
    pub name: FamilyName,
    pub truncation: u64,
}

/// One member of a family: integer atoms with weights `numer / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyGenerator {
    Exm3(u64),
    Heavy(u64),
}

impl FamilyGenerator {
    pub fn denom(&self) -> u64 {
        match *self {
            FamilyGenerator::Exm3(1) | FamilyGenerator::Heavy(1) => 1,
            FamilyGenerator::Exm3(n) => n * n * n,
            FamilyGenerator::Heavy(k) => k,
        }
    }

    /// `(point, numerator)` pairs in increasing point order, zero weights omitted.
    pub fn atoms(&self) -> Box<dyn Iterator<Item = (i64, u64)> + '_> {
        match *self {
            FamilyGenerator::Exm3(1) | FamilyGenerator::Heavy(1) => Box::new(std::iter::once((1, 1))),
            FamilyGenerator::Exm3(n) => Box::new(
                std::iter::once((1, n * n * n - n)).chain((1..=n).map(move |k| ((k * n) as i64, 1))),
            ),
            FamilyGenerator::Heavy(k) => Box::new([(0, k - 1), (k as i64, 1)].into_iter()),
        }
    }

    /// Exact normalization check: numerators sum to the denominator.
    pub fn is_normalized(&self) -> bool {
        self.atoms().map(|(_, w)| w as u128).sum::<u128>() == self.denom() as u128
    }

    /// Numerator of `P(|X| ≥ threshold)`.
    pub fn abs_tail_numer(&self, threshold: f64) -> u64 {
        match *self {
            FamilyGenerator::Exm3(n) if n >= 2 => {
                // atoms k·n with k·n ≥ threshold, plus the atom at 1
                let first_k = if threshold <= n as f64 {
                    1
                } else {
                    (threshold / n as f64).ceil() as u64
                };
                let multiples = (n + 1).saturating_sub(first_k.max(1));
                let base = if threshold <= 1.0 { n * n * n - n } else { 0 };
                base + multiples
            }
            _ => self
                .atoms()
                .filter(|&(x, _)| (x as f64).abs() >= threshold)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// `E[f(X)]` for this member.
    pub fn expect(&self, f: &TestFunction) -> f64 {
        let denom = self.denom() as f64;
        if let (FamilyGenerator::Exm3(n), Some((_, right_at, right_val))) = (*self, tail_constant(f)) {
            if n >= 2 {
                // atoms at or beyond `right_at` all evaluate to `right_val`
                let mut acc = (n * n * n - n) as f64 * f.eval(1.0);
                let mut k = 1;
                while k <= n && ((k * n) as f64) < right_at {
                    acc += f.eval((k * n) as f64);
                    k += 1;
                }
                acc += (n + 1 - k) as f64 * right_val;
                return acc / denom;
            }
        }
        self.atoms()
            .map(|(x, w)| w as f64 * f.eval(x as f64))
            .sum::<f64>()
            / denom
    }

    pub fn to_distribution(&self) -> DiscreteDistribution {
        let denom = self.denom() as f64;
        let points: Vec<(f64, f64)> = self.atoms().map(|(x, w)| (x as f64, w as f64 / denom)).collect();
        DiscreteDistribution::new(LatticeSpec::new(1.0).unwrap(), &points)
            .expect("family members are valid lattice distributions")
    }
}

/// `(left_at, right_at, right_value)`: f is constant for `x ≥ right_at`.
fn tail_constant(f: &TestFunction) -> Option<(f64, f64, f64)> {
    let (lo, hi) = match *f {
        TestFunction::PiecewiseLinear { ref breakpoints } => {
            let p = breakpoints.points();
            (p[0].0, p[p.len() - 1].0)
        }
        TestFunction::Clamp { n } | TestFunction::ClampSquare { n } => (-n, n),
        TestFunction::Tent { center, halfwidth } => (center - halfwidth, center + halfwidth),
        TestFunction::Psi { n } => (-(n as f64), n as f64),
        _ => return None,
    };
    Some((lo, hi, f.eval(hi)))
}

impl ParametricFamily {
    pub fn new(name: FamilyName, truncation: u64) -> Result<Self> {
        let fam = Self { name, truncation };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::invalid("family truncation must be at least 1"));
        }
        if self.name == FamilyName::Exm3 && self.truncation > 2_000_000 {
            return Err(Error::invalid("EXM3 truncation above 2e6 overflows exact weights"));
        }
        Ok(())
    }

    pub fn generator(&self, index: u64) -> Option<FamilyGenerator> {
        if index == 0 || index > self.truncation {
            return None;
        }
        Some(match self.name {
            FamilyName::Exm3 => FamilyGenerator::Exm3(index),
            FamilyName::Heavy => FamilyGenerator::Heavy(index),
        })
    }

    pub fn generators(&self) -> impl Iterator<Item = FamilyGenerator> + '_ {
        (1..=self.truncation).map(|i| self.generator(i).unwrap())
    }

    /// Upper and lower envelope of `E_P[f]` over the truncated family.
    pub fn envelope(&self, f: &TestFunction) -> Result<Envelope> {
        f.validate()?;
        let mut env = Envelope {
            upper: f64::NEG_INFINITY,
            argmax: 1,
            lower: f64::INFINITY,
            argmin: 1,
            upper_rising_at_boundary: false,
            lower_falling_at_boundary: false,
        };
        let mut recent: Vec<f64> = Vec::with_capacity(BOUNDARY_WINDOW);
        for (i, g) in self.generators().enumerate() {
            let v = g.expect(f);
            if !v.is_finite() {
                return Err(Error::UnboundedEval { point: (i + 1) as f64 });
            }
            if v > env.upper {
                env.upper = v;
                env.argmax = i as u64 + 1;
            }
            if v < env.lower {
                env.lower = v;
                env.argmin = i as u64 + 1;
            }
            if recent.len() == BOUNDARY_WINDOW {
                recent.remove(0);
            }
            recent.push(v);
        }
        if recent.len() >= 2 {
            env.upper_rising_at_boundary = recent.windows(2).all(|w| w[1] > w[0]);
            env.lower_falling_at_boundary = recent.windows(2).all(|w| w[1] < w[0]);
        }
        Ok(env)
    }

    /// Exact `V(|X| ≥ threshold)` as `(numer, denom, argmax index)`.
    pub fn upper_abs_tail(&self, threshold: f64) -> (u64, u64, u64) {
        let mut best = (0u64, 1u64, 1u64);
        for (i, g) in self.generators().enumerate() {
            let (num, den) = (g.abs_tail_numer(threshold), g.denom());
            if (num as u128) * (best.1 as u128) > (best.0 as u128) * (den as u128) {
                best = (num, den, i as u64 + 1);
            }
        }
        best
    }

    /// The tail masses of the last indices before the bound are strictly increasing.
    pub fn abs_tail_rising_at_boundary(&self, threshold: f64) -> bool {
        let from = self.truncation.saturating_sub(BOUNDARY_WINDOW as u64 - 1).max(1);
        if from == self.truncation {
            return false;
        }
        let masses: Vec<f64> = (from..=self.truncation)
            .map(|i| {
                let g = self.generator(i).unwrap();
                g.abs_tail_numer(threshold) as f64 / g.denom() as f64
            })
            .collect();
        masses.windows(2).all(|w| w[1] > w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub upper: f64,
    pub argmax: u64,
    pub lower: f64,
    pub argmin: u64,
    /// The last indices before the truncation bound are still strictly increasing.
    pub upper_rising_at_boundary: bool,
    pub lower_falling_at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyExpectation {
    pub value: f64,
    pub argmax: u64,
    pub tail_note: String,
}

/// `max_{index ≤ truncation} E_index[f]`, failing when the truncation still binds.
pub fn family_expect(family: &ParametricFamily, f: &TestFunction) -> Result<FamilyExpectation> {
    family.validate()?;
    let env = family.envelope(f)?;
    if env.upper_rising_at_boundary {
        return Err(Error::TruncationTooSmall {
            truncation: family.truncation,
            reason: format!(
                "E[{f}] is still strictly increasing over the last {} indices",
                BOUNDARY_WINDOW.min(family.truncation as usize)
            ),
        });
    }
    let tail_note = match (family.name, f) {
        (FamilyName::Heavy, TestFunction::Identity) => {
            "every HEAVY member has mean 1; the supremum does not depend on the truncation".to_string()
        }
        (FamilyName::Exm3, TestFunction::Excess { lambda }) => format!(
            "maximizing index near 4*lambda = {}; observed {} of {}",
            4.0 * lambda,
            env.argmax,
            family.truncation
        ),
        _ => format!("maximizing index {} of {}", env.argmax, family.truncation),
    };
    Ok(FamilyExpectation {
        value: env.upper,
        argmax: env.argmax,
        tail_note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub m: u64,
    pub psi_expect: f64,
    pub m_v_tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exm3Report {
    pub truncation: u64,
    pub excess: Vec<LambdaRow>,
    pub psi: Vec<PsiRow>,
}

/// Tabulates `E[(|X| − λ)⁺]` and `(E[ψ_m(X)], m·V(|X| ≥ m))` over the EXM3 family.
pub fn exm3_report(truncation: u64, lambdas: &[f64], ms: &[u64]) -> Result<Exm3Report> {
    let family = ParametricFamily::new(FamilyName::Exm3, truncation)?;
    let max_lambda = lambdas.iter().copied().fold(0.0, f64::max);
    if (truncation as f64) < 4.0 * max_lambda {
        return Err(Error::TruncationTooSmall {
            truncation,
            reason: format!("needs at least 4*lambda = {}", 4.0 * max_lambda),
        });
    }
    let excess = lambdas
        .iter()
        .map(|&lambda| {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
            }
            let v = family_expect(&family, &TestFunction::Excess { lambda })?;
            Ok(LambdaRow {
                lambda,
                value: v.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let psi = ms
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(Error::invalid("m must be at least 1"));
            }
            let psi_expect = family.envelope(&TestFunction::Psi { n: m })?.upper;
            let (num, den, _) = family.upper_abs_tail(m as f64);
            Ok(PsiRow {
                m,
                psi_expect,
                m_v_tail: ratio(m as u128 * num as u128, den as u128),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Exm3Report {
        truncation,
        excess,
        psi,
    })
}

pub(crate) fn ratio(num: u128, den: u128) -> f64 {
    if num == den {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// `φ(x) = 1 ∧ (1 − x)⁺`, the test function showing the LLN failure for HEAVY.
pub fn heavy_phi() -> TestFunction {
    TestFunction::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyLlnResult {
    #[serde(rename = "K")]
    pub truncation: u64,
    pub n: usize,
    pub value: f64,
    pub lower_bound: f64,
}

/// `E_K[φ(S_n/n)]` with `φ = 1 ∧ (1 − x)⁺` over the `K`-truncated HEAVY family,
/// by backward induction on integer states `0..=n·K`.
pub fn heavy_lln_value(truncation: u64, n: usize, state_budget: u64) -> Result<HeavyLlnResult> {
    if truncation == 0 || n == 0 {
        return Err(Error::invalid("K and n must be at least 1"));
    }
    let k_max = truncation as usize;
    let needed: u128 = (0..=n as u128).map(|l| l * truncation as u128 + 1).sum();
    if needed > state_budget as u128 {
        return Err(Error::StateBudgetExceeded {
            needed: u64::try_from(needed).unwrap_or(u64::MAX),
            budget: state_budget,
        });
    }
    let phi = heavy_phi();
    let nf = n as f64;
    let mut next: Vec<f64> = (0..=n * k_max).map(|s| phi.eval(s as f64 / nf)).collect();
    for level in (0..n).rev() {
        let cur: Vec<f64> = (0..=level * k_max)
            .map(|s| {
                let mut best = f64::NEG_INFINITY;
                for k in 1..=k_max {
                    let v = ((k - 1) as f64 * next[s] + next[s + k]) / k as f64;
                    if v > best {
                        best = v;
                    }
                }
                best
            })
            .collect();
        next = cur;
    }
    Ok(HeavyLlnResult {
        truncation,
        n,
        value: next[0],
        lower_bound: (1.0 - 1.0 / truncation as f64).powi(n as i32),
    })
}
