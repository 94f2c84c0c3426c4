//! Law-of-large-numbers quantities: truncated means, the tail condition
//! report, the maximal-distribution limit and convergence sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{sublinear_expect, AmbiguitySet};
use crate::counterexamples::{ratio, ParametricFamily};
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::lattice_dp::{capacity, robust_value, DpOptions, PathEvent, Side};

pub use crate::function::psi;

/// Agreement tolerance for declaring a truncated-mean sequence stable.
pub const STABLE_TOLERANCE: f64 = 1e-9;

/// Law of one increment: a finite ambiguity set or a truncated family.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Set(AmbiguitySet),
    Family(ParametricFamily),
}

impl Source {
    pub fn describe(&self) -> String {
        match self {
            Source::Set(s) => {
                let gens: Vec<String> = s
                    .generators()
                    .iter()
                    .map(|g| {
                        let atoms: Vec<String> = g.points().map(|(x, w)| format!("{x}:{w}")).collect();
                        format!("{{{}}}", atoms.join(", "))
                    })
                    .collect();
                format!("set[{}]", gens.join(", "))
            }
            Source::Family(f) => format!("{}(truncation {})", f.name, f.truncation),
        }
    }

    /// `(E[f], −E[−f])`.
    fn envelope(&self, f: &TestFunction) -> Result<(f64, f64)> {
        match self {
            Source::Set(s) => {
                let v = sublinear_expect(s, f)?;
                Ok((v.upper, v.lower))
            }
            Source::Family(fam) => {
                let e = fam.envelope(f)?;
                Ok((e.upper, e.lower))
            }
        }
    }

    /// `n · V(|X_1| ≥ t)`, exact for families.
    fn scaled_abs_tail(&self, n: u64, t: f64) -> f64 {
        match self {
            Source::Set(s) => n as f64 * set_abs_tail(s, t),
            Source::Family(fam) => {
                let (num, den, _) = fam.upper_abs_tail(t);
                ratio(n as u128 * num as u128, den as u128)
            }
        }
    }
}

/// `V(|X_1| ≥ t)` with the threshold snapped to the lattice.
pub fn set_abs_tail(set: &AmbiguitySet, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let k = set.lattice().ceil_coord(t);
    set.generators()
        .iter()
        .map(|g| {
            g.atoms()
                .iter()
                .filter(|a| a.coord.abs() >= k)
                .map(|a| a.weight)
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMeans {
    pub n: u64,
    pub mu_upper: f64,
    pub mu_lower: f64,
}

/// `μ̄_n = E[(−n ∨ X) ∧ n]` and `μ̲_n = −E[(−n ∨ −X) ∧ n]`.
pub fn truncated_means(source: &Source, n: u64) -> Result<TruncatedMeans> {
    if n == 0 {
        return Err(Error::invalid("truncation level n must be at least 1"));
    }
    // the clamp is odd, so −E[−clamp_n(X)] is the lower envelope of clamp_n
    let (mu_upper, mu_lower) = source.envelope(&TestFunction::Clamp { n: n as f64 })?;
    Ok(TruncatedMeans { n, mu_upper, mu_lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub n: u64,
    #[serde(rename = "nV_tail")]
    pub nv_tail: f64,
    pub psi_expect: f64,
    pub mu_lower_n: f64,
    pub mu_upper_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trend {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub source: String,
    pub rows: Vec<ConditionRow>,
    pub condition_i_trend: Trend,
    /// `(μ̲, μ̄)` when both truncated means are stable over the last three rows.
    pub limits: Option<(f64, f64)>,
    pub range: String,
    pub warnings: Vec<String>,
}

/// Tabulates `n·V(|X_1| ≥ n)`, `E[ψ_n(X_1)]`, `μ̲_n`, `μ̄_n` for `n = 1..=n_max`.
pub fn peng_condition_report(source: &Source, n_max: u64) -> Result<ConditionReport> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    if let Source::Family(fam) = source {
        fam.validate()?;
    }
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let means = truncated_means(source, n)?;
            let (psi_expect, _) = source.envelope(&TestFunction::Psi { n })?;
            Ok(ConditionRow {
                n,
                nv_tail: source.scaled_abs_tail(n, n as f64),
                psi_expect,
                mu_lower_n: means.mu_lower,
                mu_upper_n: means.mu_upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = match source {
        Source::Family(fam) => truncation_warnings(fam, n_max)?,
        Source::Set(_) => Vec::new(),
    };
    Ok(ConditionReport {
        source: source.describe(),
        condition_i_trend: tail_trend(&rows),
        limits: stable_limits(&rows),
        range: format!("observed over n <= {n_max}"),
        rows,
        warnings,
    })
}

/// Verdict on `n·V(|X_1| ≥ n) → 0` from the computed range only.
fn tail_trend(rows: &[ConditionRow]) -> Trend {
    let last = rows.last().map_or(0.0, |r| r.nv_tail);
    let peak = rows.iter().map(|r| r.nv_tail).fold(0.0, f64::max);
    if last == 0.0 {
        return Trend::Satisfied;
    }
    if last >= 0.5 * peak {
        return Trend::Violated;
    }
    let quarter = &rows[rows.len() - rows.len().div_ceil(4)..];
    let settling = quarter.windows(2).all(|w| w[1].nv_tail <= w[0].nv_tail);
    if last <= 0.25 * peak && settling {
        Trend::Satisfied
    } else {
        Trend::Inconclusive
    }
}

fn stable_limits(rows: &[ConditionRow]) -> Option<(f64, f64)> {
    if rows.len() < 3 {
        return None;
    }
    let tail = &rows[rows.len() - 3..];
    let agree = |get: fn(&ConditionRow) -> f64| {
        let (lo, hi) = tail
            .iter()
            .map(get)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        hi - lo <= STABLE_TOLERANCE
    };
    if agree(|r| r.mu_lower_n) && agree(|r| r.mu_upper_n) {
        let last = tail[2];
        Some((last.mu_lower_n, last.mu_upper_n))
    } else {
        None
    }
}

fn truncation_warnings(fam: &ParametricFamily, n_max: u64) -> Result<Vec<String>> {
    let mut tail_hits = Vec::new();
    let mut psi_hits = Vec::new();
    let mut upper_hits = Vec::new();
    let mut lower_hits = Vec::new();
    for n in 1..=n_max {
        if fam.abs_tail_rising_at_boundary(n as f64) {
            tail_hits.push(n);
        }
        if fam.envelope(&TestFunction::Psi { n })?.upper_rising_at_boundary {
            psi_hits.push(n);
        }
        let clamp = fam.envelope(&TestFunction::Clamp { n: n as f64 })?;
        if clamp.upper_rising_at_boundary {
            upper_hits.push(n);
        }
        if clamp.lower_falling_at_boundary {
            lower_hits.push(n);
        }
    }
    let mut out = Vec::new();
    for (what, hits) in [
        ("V(|X_1| >= n) still rising", tail_hits),
        ("E[psi_n] still rising", psi_hits),
        ("mu_upper_n still rising", upper_hits),
        ("mu_lower_n still falling", lower_hits),
    ] {
        if let (Some(first), Some(last)) = (hits.first(), hits.last()) {
            out.push(format!(
                "FAMILY_TRUNCATION_WARNING: {what} at truncation {} for {} values of n in [{first}, {last}]",
                fam.truncation,
                hits.len()
            ));
        }
    }
    Ok(out)
}

/// `max_{μ ∈ [lower, upper]} f(μ)`, the maximal-distribution expectation.
pub fn maximal_dist_value(f: &TestFunction, lower: f64, upper: f64) -> Result<f64> {
    if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
        return Err(Error::BadInterval { lower, upper });
    }
    f.validate()?;
    f.require_bounded()?;
    let inner = f.kinks().into_iter().filter(|&k| k > lower && k < upper);
    Ok([lower, upper]
        .into_iter()
        .chain(inner)
        .map(|x| f.eval(x))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub dp_value: f64,
    pub limit_value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub set: String,
    pub function: String,
    pub rows: Vec<SweepRow>,
}

/// `E[φ(S_n/n)]` against `max_{[μ̲_n, μ̄_n]} φ` for each horizon.
pub fn lln_sweep(
    set: &AmbiguitySet,
    f: &TestFunction,
    horizons: &[u64],
    opts: &DpOptions,
) -> Result<SweepReport> {
    f.validate()?;
    f.require_bounded()?;
    if horizons.contains(&0) {
        return Err(Error::invalid("horizons must be at least 1"));
    }
    let opts = DpOptions {
        scale: crate::lattice_dp::Scale::Mean,
        ..*opts
    };
    let source = Source::Set(set.clone());
    let rows = horizons
        .par_iter()
        .map(|&n| {
            let dp_value = robust_value(set, n as usize, f, &opts)?.value;
            let means = truncated_means(&source, n)?;
            let limit_value = maximal_dist_value(f, means.mu_lower, means.mu_upper)?;
            Ok(SweepRow {
                n,
                dp_value,
                limit_value,
                abs_error: (dp_value - limit_value).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        set: source.describe(),
        function: f.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevCheck {
    pub n: u64,
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `V(S_n/n > μ̄_n + ε) ≤ n·V(|X_1| ≥ n) + 8/(nε²)·E[X̃_1²]` with `X̃_1 = (−n ∨ X_1) ∧ n`.
pub fn chebyshev_bound_check(
    set: &AmbiguitySet,
    n: u64,
    eps: f64,
    opts: &DpOptions,
) -> Result<ChebyshevCheck> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if n == 0 {
        return Err(Error::invalid("horizon n must be at least 1"));
    }
    let nf = n as f64;
    let means = truncated_means(&Source::Set(set.clone()), n)?;
    let event = PathEvent::FinalGt {
        threshold: nf * (means.mu_upper + eps),
    };
    let lhs = capacity(set, n as usize, &event, Side::Upper, opts)?;
    let second = sublinear_expect(set, &TestFunction::ClampSquare { n: nf })?.upper;
    let rhs = nf * set_abs_tail(set, nf) + 8.0 / (nf * eps * eps) * second;
    Ok(ChebyshevCheck {
        n,
        eps,
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexamples::FamilyName;
    use proptest::prelude::*;

    const UNIFORM: &[(f64, f64)] = &[(-1.0, 0.5), (1.0, 0.5)];
    const SKEWED: &[(f64, f64)] = &[(-1.0, 0.25), (1.0, 0.75)];

    /// `sup_y { n·[|y| ≥ n] − n|y − x| }` over a y-grid.
    fn psi_by_grid(n: u64, x: f64, step: f64) -> f64 {
        let nf = n as f64;
        let span = 2.0 * nf + x.abs() + 2.0;
        let count = (2.0 * span / step) as i64;
        (0..=count)
            .map(|i| {
                let y = -span + i as f64 * step;
                let ind = if y.abs() >= nf { nf } else { 0.0 };
                ind - nf * (y - x).abs()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn two_generators() -> AmbiguitySet {
        AmbiguitySet::new(1.0, &[UNIFORM, SKEWED]).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(5, 5.0), 5.0);
        assert_eq!(psi(5, 4.0), 0.0);
        assert_eq!(psi(5, 4.5), 2.5);
        for (x, want) in [(5.0, 5.0), (4.0, 0.0), (4.5, 2.5)] {
            assert!((psi_by_grid(5, x, 1e-3) - want).abs() < 2e-2);
        }
    }

    #[test]
    fn psi_sandwich_and_grid_sup() {
        for n in [1u64, 2, 3, 7, 20] {
            let nf = n as f64;
            let mut x = -2.0 * nf;
            while x <= 2.0 * nf {
                let p = psi(n, x);
                let lo = if x.abs() >= nf { nf } else { 0.0 };
                let hi = if x.abs() >= nf - 1.0 { nf } else { 0.0 };
                assert!(lo <= p && p <= hi, "n={n} x={x}");
                x += 0.37;
            }
            for x in [-nf - 0.3, -nf + 0.5, 0.0, nf - 0.25, nf + 1.0] {
                assert!((psi(n, x) - psi_by_grid(n, x, 1e-3)).abs() < 2e-2, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn truncated_means_examples() {
        let sym = Source::Set(AmbiguitySet::new(1.0, &[&[(-3.0, 0.5), (3.0, 0.5)]]).unwrap());
        let m = truncated_means(&sym, 2).unwrap();
        assert_eq!((m.mu_lower, m.mu_upper), (0.0, 0.0));

        let m = truncated_means(&Source::Set(two_generators()), 1).unwrap();
        assert_eq!((m.mu_lower, m.mu_upper), (0.0, 0.5));

        let p2 = AmbiguitySet::new(1.0, &[&[(0.0, 0.5), (2.0, 0.5)]]).unwrap();
        assert_eq!(truncated_means(&Source::Set(p2), 1).unwrap().mu_upper, 0.5);
    }

    #[test]
    fn bounded_support_report_stabilizes() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEWED, &[(-2.0, 0.5), (3.0, 0.5)]]).unwrap();
        let r = peng_condition_report(&Source::Set(set.clone()), 12).unwrap();
        for row in r.rows.iter().filter(|r| r.n > 3) {
            assert_eq!(row.nv_tail, 0.0);
            assert_eq!(row.psi_expect, 0.0);
            assert_eq!(row.mu_upper_n, 0.5);
            assert_eq!(row.mu_lower_n, 0.0);
        }
        assert_eq!(r.condition_i_trend, Trend::Satisfied);
        assert_eq!(r.limits, Some((0.0, 0.5)));
        assert_eq!(r.range, "observed over n <= 12");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn heavy_report_violates_condition() {
        let fam = ParametricFamily::new(FamilyName::Heavy, 100).unwrap();
        let r = peng_condition_report(&Source::Family(fam), 100).unwrap();
        assert!(r.rows.iter().all(|row| row.nv_tail == 1.0));
        assert!(r.rows.iter().all(|row| row.mu_upper_n == 1.0));
        assert_eq!(r.condition_i_trend, Trend::Violated);
        assert_eq!(r.limits, None);
        // μ̲_n = n/K is an artifact of the truncation and is flagged as such
        assert!(r.warnings.iter().any(|w| w.contains("mu_lower_n")));
    }

    #[test]
    fn exm3_report_frozen_values() {
        let fam = ParametricFamily::new(FamilyName::Exm3, 10_000).unwrap();
        let r = peng_condition_report(&Source::Family(fam), 100).unwrap();
        let at = |n: u64| r.rows[(n - 1) as usize];
        // n·V(|X| ≥ n) = n·max_k (k − ⌈n/k⌉ + 1)/k³
        for (n, want) in [(10, 0.32), (20, 0.32), (50, 0.3), (100, 0.27306)] {
            assert!((at(n).nv_tail - want).abs() < 5e-5, "n={n}: {}", at(n).nv_tail);
        }
    }

    #[test]
    fn maximal_dist_examples() {
        assert_eq!(maximal_dist_value(&TestFunction::Clamp { n: 1.0 }, 0.0, 0.5).unwrap(), 0.5);
        let phi = crate::counterexamples::heavy_phi();
        assert_eq!(maximal_dist_value(&phi, 1.0, 1.0).unwrap(), 0.0);
        let tent = TestFunction::tent(0.25, 0.25).unwrap();
        assert_eq!(maximal_dist_value(&tent, 0.0, 0.5).unwrap(), 1.0);
        assert!(matches!(
            maximal_dist_value(&tent, 0.5, 0.0),
            Err(Error::BadInterval { .. })
        ));
        assert!(matches!(
            maximal_dist_value(&TestFunction::Identity, 0.0, 1.0),
            Err(Error::UnboundedFunction(_))
        ));
    }

    #[test]
    fn sweep_examples() {
        let tent = TestFunction::tent(0.25, 0.25).unwrap();
        let r = lln_sweep(&two_generators(), &tent, &[1, 256], &DpOptions::default()).unwrap();
        assert_eq!(r.rows[0].dp_value, 0.0);
        assert_eq!(r.rows[0].limit_value, 1.0);
        assert_eq!(r.rows[0].abs_error, 1.0);
        assert!(r.rows[1].abs_error <= 0.1, "{:?}", r.rows[1]);

        let delta = AmbiguitySet::new(1.0, &[&[(0.0, 1.0)]]).unwrap();
        let r = lln_sweep(&delta, &tent, &[1, 5, 40], &DpOptions::default()).unwrap();
        for row in r.rows {
            assert_eq!(row.dp_value, tent.eval(0.0));
            assert_eq!(row.abs_error, 0.0);
        }
    }

    #[test]
    fn chebyshev_examples() {
        let opts = DpOptions::default();
        let delta = AmbiguitySet::new(1.0, &[&[(0.0, 1.0)]]).unwrap();
        let c = chebyshev_bound_check(&delta, 5, 1.0, &opts).unwrap();
        assert_eq!((c.lhs, c.rhs, c.holds), (0.0, 0.0, true));

        let uni = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let c = chebyshev_bound_check(&uni, 2, 1.0, &opts).unwrap();
        assert_eq!((c.lhs, c.rhs, c.holds), (0.0, 4.0, true));

        let c = chebyshev_bound_check(&two_generators(), 4, 0.25, &opts).unwrap();
        assert_eq!(c.rhs, 32.0);
        assert!(c.holds);
    }

    fn small_set() -> impl Strategy<Value = AmbiguitySet> {
        let gen = prop::collection::vec((-4i64..=4, 1u32..=10), 1..=3);
        prop::collection::vec(gen, 1..=3).prop_map(|gens| {
            let dists: Vec<Vec<(f64, f64)>> = gens
                .into_iter()
                .map(|atoms| {
                    let total: u32 = atoms.iter().map(|a| a.1).sum();
                    atoms
                        .into_iter()
                        .map(|(x, w)| (x as f64, w as f64 / total as f64))
                        .collect()
                })
                .collect();
            let refs: Vec<&[(f64, f64)]> = dists.iter().map(|d| d.as_slice()).collect();
            AmbiguitySet::new(1.0, &refs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn psi_expectation_is_sandwiched(set in small_set(), n in 2u64..8) {
            let source = Source::Set(set.clone());
            let (p, _) = source.envelope(&TestFunction::Psi { n }).unwrap();
            let lo = n as f64 * set_abs_tail(&set, n as f64);
            let hi = n as f64 * set_abs_tail(&set, (n - 1) as f64);
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }

        #[test]
        fn truncated_means_ordered(set in small_set(), n in 1u64..8) {
            let m = truncated_means(&Source::Set(set), n).unwrap();
            prop_assert!(m.mu_lower <= m.mu_upper);
        }

        #[test]
        fn chebyshev_holds(set in small_set(), n in 1u64..10, e in 1usize..8) {
            let c = chebyshev_bound_check(&set, n, e as f64 * 0.125, &DpOptions::default()).unwrap();
            prop_assert!(c.holds, "{:?}", c);
        }
    }
}
