//! Brute-force ground truth for the lattice recursion.
//!
//! Histories are tuples of indices into the union support of the set, and a
//! [`KernelSelection`] assigns a generator to every history, without any
//! Markov restriction. Two evaluators are provided:
//!
//! * [`enumerate_selections_value`] walks every kernel selection and sums the
//!   induced path probabilities explicitly. Its cost is
//!   `(#generators)^(#histories)`, so it only covers the very smallest cases.
//! * [`brute_force_value`] walks the full history tree (no merging of
//!   histories with equal partial sums) and picks the extremal generator
//!   independently at every history. Because selections at different
//!   histories act on disjoint subtrees, this equals the optimum over all
//!   selections while costing only `#histories × #generators`.

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::lattice_dp::{KernelPolicy, PathEvent, Scale, Side};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Function { f: &'a TestFunction, scale: Scale },
    Event(&'a PathEvent),
}

impl Target<'_> {
    fn eval(&self, set: &AmbiguitySet, path: &[i64]) -> f64 {
        let lat = set.lattice();
        match *self {
            Target::Function { f, scale } => {
                let s = lat.point(path.iter().sum());
                match scale {
                    Scale::Mean => f.eval(s / path.len() as f64),
                    Scale::Sum => f.eval(s),
                }
            }
            Target::Event(ev) => {
                let incs: Vec<f64> = path.iter().map(|&c| lat.point(c)).collect();
                if ev.holds_on_path(&incs) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// History-dependent kernel choice for every history of length `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSelection {
    support: Vec<i64>,
    horizon: usize,
    choices: Vec<usize>,
}

impl KernelSelection {
    fn history_index(&self, history: &[u16]) -> usize {
        let u = self.support.len();
        history_count(u, history.len()) + local_index(history, u)
    }

    /// Generator chosen after `history` (atom indices into the union support).
    pub fn generator(&self, history: &[u16]) -> Option<usize> {
        if history.len() >= self.horizon || history.iter().any(|&h| h as usize >= self.support.len()) {
            return None;
        }
        self.choices.get(self.history_index(history)).copied()
    }

    /// The history-dependent form of a flag-free Markov policy, as extracted for terminal functionals.
    pub fn from_policy(set: &AmbiguitySet, n: usize, policy: &KernelPolicy) -> Result<Self> {
        policy.check_coverage(set, n)?;
        let support = set.union_support();
        let mut choices = Vec::with_capacity(history_count(support.len(), n));
        for len in 0..n {
            for_each_tuple(support.len(), len, |h| {
                let coord: i64 = h.iter().map(|&i| support[i as usize]).sum();
                // histories unreachable under the policy still get some generator
                choices.push(policy.choice(len + 1, coord, false).unwrap_or(0));
            });
        }
        Ok(Self {
            support,
            horizon: n,
            choices,
        })
    }
}

fn local_index(history: &[u16], u: usize) -> usize {
    history.iter().fold(0usize, |acc, &h| acc * u + h as usize)
}

fn history_count(u: usize, n: usize) -> usize {
    (0..n).map(|k| u.pow(k as u32)).sum()
}

/// Calls `visit` on every tuple of length `len` over `0..u`, in lexicographic order.
fn for_each_tuple(u: usize, len: usize, mut visit: impl FnMut(&[u16])) {
    let mut t = vec![0u16; len];
    loop {
        visit(&t);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if (t[i] as usize) < u {
                break;
            }
            t[i] = 0;
        }
    }
}

struct Tree<'a> {
    set: &'a AmbiguitySet,
    n: usize,
    target: Target<'a>,
    /// per generator, per atom: (union index, coord, weight)
    atoms: Vec<Vec<(u16, i64, f64)>>,
}

impl<'a> Tree<'a> {
    fn new(set: &'a AmbiguitySet, n: usize, target: Target<'a>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("horizon n must be at least 1"));
        }
        if let Target::Function { f, .. } = target {
            f.validate()?;
        }
        let support = set.union_support();
        if support.len() > u16::MAX as usize {
            return Err(Error::invalid("union support too large for the oracle"));
        }
        let atoms = set
            .generators()
            .iter()
            .map(|g| {
                g.atoms()
                    .iter()
                    .map(|a| {
                        let idx = support.binary_search(&a.coord).unwrap() as u16;
                        (idx, a.coord, a.weight)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            set,
            n,
            target,
            atoms,
        })
    }

    fn extremal(&self, path: &mut Vec<i64>, side: Side) -> f64 {
        if path.len() == self.n {
            return self.target.eval(self.set, path);
        }
        let mut best = match side {
            Side::Upper => f64::NEG_INFINITY,
            Side::Lower => f64::INFINITY,
        };
        for gen in &self.atoms {
            let mut acc = 0.0;
            for &(_, coord, w) in gen {
                path.push(coord);
                acc += w * self.extremal(path, side);
                path.pop();
            }
            best = match side {
                Side::Upper => best.max(acc),
                Side::Lower => best.min(acc),
            };
        }
        best
    }

    /// Explicit path summation under one selection.
    fn path_sum(
        &self,
        sel: &KernelSelection,
        history: &mut Vec<u16>,
        path: &mut Vec<i64>,
        prob: f64,
        total: &mut f64,
    ) {
        if path.len() == self.n {
            *total += prob * self.target.eval(self.set, path);
            return;
        }
        let g = sel.generator(history).expect("selection is total");
        for &(idx, coord, w) in &self.atoms[g] {
            history.push(idx);
            path.push(coord);
            self.path_sum(sel, history, path, prob * w, total);
            path.pop();
            history.pop();
        }
    }
}

/// Optimum over all history-dependent kernel selections.
pub fn brute_force_value(
    set: &AmbiguitySet,
    n: usize,
    target: Target<'_>,
    side: Side,
    budget: u64,
) -> Result<f64> {
    let tree = Tree::new(set, n, target)?;
    let u = set.union_support().len() as f64;
    let needed: f64 = (0..n).map(|k| u.powi(k as i32)).sum::<f64>() * set.len() as f64;
    if needed > budget as f64 {
        return Err(Error::EnumerationBudgetExceeded { needed, budget });
    }
    Ok(tree.extremal(&mut Vec::with_capacity(n), side))
}

/// Induced linear expectation of one kernel selection, by explicit path summation.
pub fn selection_value(
    set: &AmbiguitySet,
    n: usize,
    target: Target<'_>,
    selection: &KernelSelection,
) -> Result<f64> {
    let tree = Tree::new(set, n, target)?;
    if selection.horizon != n || selection.support != set.union_support() {
        return Err(Error::invalid("kernel selection does not match the set and horizon"));
    }
    if selection.choices.iter().any(|&g| g >= set.len()) {
        return Err(Error::invalid("kernel selection names a missing generator"));
    }
    let mut total = 0.0;
    tree.path_sum(selection, &mut Vec::new(), &mut Vec::new(), 1.0, &mut total);
    Ok(total)
}

/// Optimum over all kernel selections, enumerated one by one.
pub fn enumerate_selections_value(
    set: &AmbiguitySet,
    n: usize,
    target: Target<'_>,
    side: Side,
    budget: u64,
) -> Result<f64> {
    let tree = Tree::new(set, n, target)?;
    let support = set.union_support();
    let histories = history_count(support.len(), n);
    let g = set.len();
    let needed = (g as f64).powi(histories as i32);
    if needed > budget as f64 {
        return Err(Error::EnumerationBudgetExceeded { needed, budget });
    }
    let mut sel = KernelSelection {
        support,
        horizon: n,
        choices: vec![0; histories],
    };
    let mut best = match side {
        Side::Upper => f64::NEG_INFINITY,
        Side::Lower => f64::INFINITY,
    };
    loop {
        let mut total = 0.0;
        tree.path_sum(&sel, &mut Vec::new(), &mut Vec::new(), 1.0, &mut total);
        best = match side {
            Side::Upper => best.max(total),
            Side::Lower => best.min(total),
        };
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == histories {
                return Ok(best);
            }
            sel.choices[i] += 1;
            if sel.choices[i] < g {
                break;
            }
            sel.choices[i] = 0;
            i += 1;
        }
    }
}
