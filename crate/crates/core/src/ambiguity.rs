//! Lattice distributions, finitely generated ambiguity sets and the one-step
//! sublinear expectation `E[φ(X)] = max_g E_g[φ(X)]`.
//!
//! A convex set of measures is represented by its extreme points. A linear
//! functional attains its supremum over the convex hull at one of them, so the
//! upper expectation is a maximum over generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::TestFunction;

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
const LATTICE_TOLERANCE: f64 = 1e-9;

/// Lattice spacing shared by every generator of a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    step: f64,
}

impl LatticeSpec {
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("lattice step must be positive, got {step}")));
        }
        Ok(Self { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn point(&self, coord: i64) -> f64 {
        coord as f64 * self.step
    }

    /// Lattice coordinate of `x`, or `None` if `x` is not a multiple of the step.
    pub fn coord_of(&self, x: f64) -> Option<i64> {
        let q = x / self.step;
        let r = q.round();
        if (q - r).abs() <= LATTICE_TOLERANCE * r.abs().max(1.0) && r.abs() < i64::MAX as f64 {
            Some(r as i64)
        } else {
            None
        }
    }

    /// Smallest coordinate `c` with `point(c) >= a`.
    pub(crate) fn ceil_coord(&self, a: f64) -> i64 {
        snap(a / self.step, f64::ceil)
    }

    /// Largest coordinate `c` with `point(c) <= a`.
    pub(crate) fn floor_coord(&self, a: f64) -> i64 {
        snap(a / self.step, f64::floor)
    }
}

// Thresholds within LATTICE_TOLERANCE of a lattice point count as that point.
fn snap(q: f64, round: fn(f64) -> f64) -> i64 {
    let r = q.round();
    let q = if (q - r).abs() <= LATTICE_TOLERANCE * r.abs().max(1.0) {
        r
    } else {
        round(q)
    };
    q.clamp(-(1i64 << 60) as f64, (1i64 << 60) as f64) as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub coord: i64,
    pub weight: f64,
}

/// Finite-support probability measure on a lattice. Atoms are sorted by
/// strictly increasing coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    lattice: LatticeSpec,
    atoms: Vec<Atom>,
}

impl DiscreteDistribution {
    /// Validates `(point, weight)` pairs, sorting atoms and merging duplicate points.
    pub fn new(lattice: LatticeSpec, points: &[(f64, f64)]) -> Result<Self> {
        Self::build(lattice, points, 0)
    }

    fn build(lattice: LatticeSpec, points: &[(f64, f64)], generator: usize) -> Result<Self> {
        let mut atoms = Vec::with_capacity(points.len());
        for (atom, &(point, weight)) in points.iter().enumerate() {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::NegativeWeight {
                    generator,
                    atom,
                    weight,
                });
            }
            let coord = lattice.coord_of(point).ok_or(Error::OffLattice {
                generator,
                point,
                step: lattice.step,
            })?;
            atoms.push(Atom { coord, weight });
        }
        atoms.sort_by_key(|a| a.coord);
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.coord == a.coord => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let sum: f64 = merged.iter().map(|a| a.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum { generator, sum });
        }
        Ok(Self {
            lattice,
            atoms: merged,
        })
    }

    /// Unit mass at a lattice coordinate.
    pub fn point_mass(lattice: LatticeSpec, coord: i64) -> Self {
        Self {
            lattice,
            atoms: vec![Atom { coord, weight: 1.0 }],
        }
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn min_coord(&self) -> i64 {
        self.atoms[0].coord
    }

    pub fn max_coord(&self) -> i64 {
        self.atoms[self.atoms.len() - 1].coord
    }

    /// `(point, weight)` pairs in increasing point order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms
            .iter()
            .map(move |a| (self.lattice.point(a.coord), a.weight))
    }

    /// `Σ w_j g(x_j)` in increasing point order.
    pub fn expect_by(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.points().map(|(x, w)| w * g(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect_by(|x| x)
    }

    /// `P(|X| ≥ threshold)`.
    pub fn abs_tail(&self, threshold: f64) -> f64 {
        self.expect_by(|x| if x.abs() >= threshold { 1.0 } else { 0.0 })
    }
}

/// Unvalidated set description as it appears in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAmbiguitySet {
    pub step: f64,
    pub generators: Vec<Vec<(f64, f64)>>,
}

/// Non-empty list of generator distributions on a common lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    lattice: LatticeSpec,
    generators: Vec<DiscreteDistribution>,
}

impl AmbiguitySet {
    pub fn new(step: f64, generators: &[&[(f64, f64)]]) -> Result<Self> {
        validate_ambiguity_set(&RawAmbiguitySet {
            step,
            generators: generators.iter().map(|g| g.to_vec()).collect(),
        })
    }

    pub fn from_distributions(generators: Vec<DiscreteDistribution>) -> Result<Self> {
        let lattice = generators.first().ok_or(Error::EmptySet)?.lattice;
        if generators.iter().any(|g| g.lattice != lattice) {
            return Err(Error::invalid("generators live on different lattices"));
        }
        Ok(Self {
            lattice,
            generators,
        })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn generators(&self) -> &[DiscreteDistribution] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn min_coord(&self) -> i64 {
        self.generators.iter().map(|g| g.min_coord()).min().unwrap()
    }

    pub fn max_coord(&self) -> i64 {
        self.generators.iter().map(|g| g.max_coord()).max().unwrap()
    }

    /// Sorted union of all generator supports (lattice coordinates).
    pub fn union_support(&self) -> Vec<i64> {
        let mut c: Vec<i64> = self
            .generators
            .iter()
            .flat_map(|g| g.atoms().iter().map(|a| a.coord))
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Upper capacity of a one-step event given as a predicate on points.
    pub fn upper_probability(&self, event: impl Fn(f64) -> bool) -> f64 {
        self.generators
            .iter()
            .map(|g| g.expect_by(|x| if event(x) { 1.0 } else { 0.0 }))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_raw(&self) -> RawAmbiguitySet {
        RawAmbiguitySet {
            step: self.lattice.step,
            generators: self.generators.iter().map(|g| g.points().collect()).collect(),
        }
    }
}

pub fn validate_ambiguity_set(raw: &RawAmbiguitySet) -> Result<AmbiguitySet> {
    let lattice = LatticeSpec::new(raw.step)?;
    if raw.generators.is_empty() {
        return Err(Error::EmptySet);
    }
    let generators = raw
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| DiscreteDistribution::build(lattice, g, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AmbiguitySet {
        lattice,
        generators,
    })
}

/// Classical expectation `Σ w_j f(x_j)`, summed in increasing point order.
pub fn linear_expect(dist: &DiscreteDistribution, f: &TestFunction) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in dist.points() {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(Error::UnboundedEval { point: x });
        }
        acc += w * v;
    }
    if !acc.is_finite() {
        return Err(Error::UnboundedEval {
            point: dist.lattice.point(dist.max_coord()),
        });
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublinearValue {
    /// `E[φ(X)]`
    pub upper: f64,
    /// `−E[−φ(X)]`
    pub lower: f64,
    pub argmax_upper: usize,
    pub argmin_lower: usize,
}

/// Upper and lower expectation with their attaining generators (lowest index on ties).
pub fn sublinear_expect(set: &AmbiguitySet, f: &TestFunction) -> Result<SublinearValue> {
    let mut out = SublinearValue {
        upper: f64::NEG_INFINITY,
        lower: f64::INFINITY,
        argmax_upper: 0,
        argmin_lower: 0,
    };
    for (i, g) in set.generators.iter().enumerate() {
        let v = linear_expect(g, f)?;
        if v > out.upper {
            out.upper = v;
            out.argmax_upper = i;
        }
        if v < out.lower {
            out.lower = v;
            out.argmin_lower = i;
        }
    }
    Ok(out)
}
