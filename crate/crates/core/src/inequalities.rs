//! Maximal inequalities checked on the lattice: Ottaviani's inequality for
//! capacities and the product identity for increment maxima.

use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::lattice_dp::{capacity, DpOptions, PathEvent, Side};
use crate::lln::set_abs_tail;

pub const COMPARISON_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OttavianiStatus {
    Holds,
    /// The premise `max_k V(|S_n − S_k| ≥ α) ≤ c` fails.
    Vacuous,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OttavianiReport {
    pub n: u64,
    pub alpha: f64,
    pub c: f64,
    pub premise_value: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub status: OttavianiStatus,
}

/// `V(max_k |S_k| ≥ 2α) ≤ V(|S_n| ≥ α)/(1 − c)` whenever `max_k V(|S_n − S_k| ≥ α) ≤ c`.
pub fn ottaviani_check(
    set: &AmbiguitySet,
    n: u64,
    alpha: f64,
    c: f64,
    opts: &DpOptions,
) -> Result<OttavianiReport> {
    if n == 0 {
        return Err(Error::invalid("horizon n must be at least 1"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c must lie in (0, 1), got {c}")));
    }
    let n_us = n as usize;
    let tail = PathEvent::FinalAbsGe { threshold: alpha };
    // S_n − S_k has the law of S_{n−k}; k = n contributes 0
    let mut premise_value: f64 = 0.0;
    for m in 1..n_us {
        premise_value = premise_value.max(capacity(set, m, &tail, Side::Upper, opts)?);
    }
    let lhs = capacity(
        set,
        n_us,
        &PathEvent::MaxPartialAbsGe { threshold: 2.0 * alpha },
        Side::Upper,
        opts,
    )?;
    let rhs = capacity(set, n_us, &tail, Side::Upper, opts)? / (1.0 - c);
    let status = if premise_value > c + COMPARISON_TOLERANCE {
        OttavianiStatus::Vacuous
    } else if lhs <= rhs + COMPARISON_TOLERANCE {
        OttavianiStatus::Holds
    } else {
        OttavianiStatus::Violated
    };
    Ok(OttavianiReport {
        n,
        alpha,
        c,
        premise_value,
        lhs,
        rhs,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductIdentity {
    pub n: u64,
    pub threshold: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    /// `1 − exp(−n·V(|X_1| ≥ threshold))`, never above `rhs`.
    pub exp_lower: f64,
}

/// `V(max_k |X_k| ≥ t) = 1 − (1 − V(|X_1| ≥ t))^n`.
pub fn capacity_product_identity(
    set: &AmbiguitySet,
    n: u64,
    threshold: f64,
    opts: &DpOptions,
) -> Result<ProductIdentity> {
    if n == 0 {
        return Err(Error::invalid("horizon n must be at least 1"));
    }
    if !threshold.is_finite() {
        return Err(Error::invalid(format!("threshold must be finite, got {threshold}")));
    }
    let lhs = capacity(
        set,
        n as usize,
        &PathEvent::MaxIncrementAbsGe { threshold },
        Side::Upper,
        opts,
    )?;
    let p = set_abs_tail(set, threshold);
    let rhs = 1.0 - (1.0 - p).powi(n as i32);
    Ok(ProductIdentity {
        n,
        threshold,
        lhs,
        rhs,
        delta: (lhs - rhs).abs(),
        exp_lower: 1.0 - (-(n as f64) * p).exp(),
    })
}
