//! Exact backward induction on the partial-sum lattice.
//!
//! With i.i.d. increments drawn from an ambiguity set, the upper expectation
//! of a functional of the path is computed by the nested recursion
//!
//! ```text
//! u_n(s)     = payoff(s)
//! u_{k-1}(s) = max_g  Σ_j w_{g,j} · u_k(s + x_{g,j})
//! ```
//!
//! The state is the integer lattice coordinate of the partial sum, extended by
//! one boolean flag for running-maximum events. The per-state argmax is a
//! Markov kernel selection, i.e. one concrete measure of the canonical
//! construction; it is returned as a [`KernelPolicy`].
//!
//! Evaluation order is fixed (states ascending, generators ascending, atoms
//! ascending) so results are bitwise reproducible regardless of how the states
//! of a level are split across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{AmbiguitySet, LatticeSpec};
use crate::error::{Error, Result};
use crate::function::TestFunction;

pub const DEFAULT_STATE_BUDGET: u64 = 50_000_000;

const PAR_THRESHOLD: usize = 4096;
const NO_CHOICE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `V(A) = sup_P P(A)`, or the upper expectation.
    Upper,
    /// `v(A) = inf_P P(A)`, or the lower expectation.
    Lower,
}

/// How the terminal partial sum is fed to the test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// `φ(S_n / n)`; requires a bounded `φ`.
    #[default]
    Mean,
    /// `φ(S_n)`; moment mode, unbounded `φ` allowed.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    pub scale: Scale,
    /// Maximum number of (level, state) pairs over the whole run.
    pub state_budget: u64,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Mean,
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

impl DpOptions {
    pub fn moments() -> Self {
        Self {
            scale: Scale::Sum,
            ..Self::default()
        }
    }
}

/// Path events with a finite-state description. Thresholds refer to the
/// unnormalized partial sums `S_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum PathEvent {
    /// `|S_n| ≥ a`
    FinalAbsGe { threshold: f64 },
    /// `|S_n| < a`, the complement of `FinalAbsGe`.
    FinalAbsLt { threshold: f64 },
    /// `S_n > a`
    FinalGt { threshold: f64 },
    /// `S_n < a`
    FinalLt { threshold: f64 },
    /// `max_{1≤k≤n} |S_k| ≥ a`
    MaxPartialAbsGe { threshold: f64 },
    /// `max_{1≤k≤n} |X_k| ≥ a`
    MaxIncrementAbsGe { threshold: f64 },
    /// `|S_n − S_k| ≥ a` with `k = from_index`
    TailSumAbsGe { threshold: f64, from_index: usize },
}

impl PathEvent {
    pub fn threshold(&self) -> f64 {
        match *self {
            PathEvent::FinalAbsGe { threshold }
            | PathEvent::FinalAbsLt { threshold }
            | PathEvent::FinalGt { threshold }
            | PathEvent::FinalLt { threshold }
            | PathEvent::MaxPartialAbsGe { threshold }
            | PathEvent::MaxIncrementAbsGe { threshold }
            | PathEvent::TailSumAbsGe { threshold, .. } => threshold,
        }
    }

    /// Direct evaluation on an explicit path of increments `x_1, …, x_n`.
    pub fn holds_on_path(&self, increments: &[f64]) -> bool {
        let a = self.threshold();
        let sum: f64 = increments.iter().sum();
        match *self {
            PathEvent::FinalAbsGe { .. } => sum.abs() >= a,
            PathEvent::FinalAbsLt { .. } => sum.abs() < a,
            PathEvent::FinalGt { .. } => sum > a,
            PathEvent::FinalLt { .. } => sum < a,
            PathEvent::MaxPartialAbsGe { .. } => {
                let mut s = 0.0;
                increments.iter().any(|x| {
                    s += x;
                    s.abs() >= a
                })
            }
            PathEvent::MaxIncrementAbsGe { .. } => increments.iter().any(|x| x.abs() >= a),
            PathEvent::TailSumAbsGe { from_index, .. } => {
                let tail: f64 = increments.iter().skip(from_index).sum();
                tail.abs() >= a
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.threshold().is_finite() {
            return Err(Error::UnsupportedEvent(format!(
                "threshold must be finite in {self:?}"
            )));
        }
        if let PathEvent::TailSumAbsGe { from_index, .. } = *self {
            if from_index > n {
                return Err(Error::UnsupportedEvent(format!(
                    "from_index {from_index} exceeds horizon {n}"
                )));
            }
        }
        Ok(())
    }
}

/// The per-level value function of the backward induction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub level: usize,
    layer: Layer,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn get(&self, coord: i64, flag: bool) -> Option<f64> {
        self.layer.index(coord, flag).map(|i| self.values[i])
    }

    pub fn coord_range(&self) -> (i64, i64) {
        (self.layer.lo, self.layer.lo + self.layer.len as i64 - 1)
    }

    pub fn entry_count(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    lo: i64,
    len: usize,
    planes: usize,
}

impl Layer {
    fn index(&self, coord: i64, flag: bool) -> Option<usize> {
        let off = coord.checked_sub(self.lo)?;
        if off < 0 || off as usize >= self.len || (flag && self.planes < 2) {
            return None;
        }
        Some(usize::from(flag) * self.len + off as usize)
    }

    fn state(&self, idx: usize) -> (i64, bool) {
        (self.lo + (idx % self.len) as i64, idx >= self.len)
    }

    fn size(&self) -> usize {
        self.len * self.planes
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PolicyLevel {
    layer: Layer,
    choice: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
enum PolicyKind {
    Constant(usize),
    Table(Vec<PolicyLevel>),
}

/// Markov kernel selection: a generator index for every (step, state).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPolicy {
    horizon: usize,
    kind: PolicyKind,
}

impl KernelPolicy {
    /// Always draw from generator `g`; the i.i.d. measure with marginal `g`.
    pub fn constant(horizon: usize, g: usize) -> Self {
        Self {
            horizon,
            kind: PolicyKind::Constant(g),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Generator used for step `step` (1-based) when the state before the step
    /// is `(coord, flag)`.
    pub fn choice(&self, step: usize, coord: i64, flag: bool) -> Option<usize> {
        if step == 0 || step > self.horizon {
            return None;
        }
        match &self.kind {
            PolicyKind::Constant(g) => Some(*g),
            PolicyKind::Table(levels) => {
                let lvl = &levels[step - 1];
                let c = lvl.choice[lvl.layer.index(coord, flag)?];
                (c != NO_CHOICE).then_some(c as usize)
            }
        }
    }

    /// Generator indices used on the whole table, in state order, for one step.
    pub fn step_choices(&self, step: usize) -> Vec<Option<usize>> {
        match &self.kind {
            PolicyKind::Constant(g) => vec![Some(*g)],
            PolicyKind::Table(levels) => levels[step - 1]
                .choice
                .iter()
                .map(|&c| (c != NO_CHOICE).then_some(c as usize))
                .collect(),
        }
    }

    /// Forward reachability check: every state reachable under this policy
    /// must carry a valid generator index.
    pub fn check_coverage(&self, set: &AmbiguitySet, n: usize) -> Result<()> {
        let payoff = Payoff::Function {
            f: &TestFunction::constant(0.0),
            scale: Scale::Sum,
            n,
        };
        let plan = Plan::new(set, n, &payoff, u64::MAX)?;
        plan.reachable(set, &payoff, self).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustResult {
    pub value: f64,
    pub policy: KernelPolicy,
    pub state_count: u64,
}

enum Payoff<'a> {
    Function {
        f: &'a TestFunction,
        scale: Scale,
        n: usize,
    },
    Event(CompiledEvent),
}

#[derive(Debug, Clone, Copy)]
enum CompiledEvent {
    AbsGe { c: i64 },
    AbsLt { c: i64 },
    Gt { c: i64 },
    Lt { c: i64 },
    MaxPartial { c: i64 },
    MaxIncrement { c: i64 },
    Tail { c: i64, from: usize },
}

impl CompiledEvent {
    fn new(ev: &PathEvent, lattice: LatticeSpec) -> Self {
        let a = ev.threshold();
        match *ev {
            PathEvent::FinalAbsGe { .. } => CompiledEvent::AbsGe { c: lattice.ceil_coord(a) },
            PathEvent::FinalAbsLt { .. } => CompiledEvent::AbsLt { c: lattice.ceil_coord(a) },
            PathEvent::FinalGt { .. } => CompiledEvent::Gt { c: lattice.floor_coord(a) },
            PathEvent::FinalLt { .. } => CompiledEvent::Lt { c: lattice.ceil_coord(a) },
            PathEvent::MaxPartialAbsGe { .. } => {
                CompiledEvent::MaxPartial { c: lattice.ceil_coord(a) }
            }
            PathEvent::MaxIncrementAbsGe { .. } => {
                CompiledEvent::MaxIncrement { c: lattice.ceil_coord(a) }
            }
            PathEvent::TailSumAbsGe { from_index, .. } => CompiledEvent::Tail {
                c: lattice.ceil_coord(a),
                from: from_index,
            },
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Payoff<'_> {
    fn flagged(&self) -> bool {
        matches!(
            self,
            Payoff::Event(CompiledEvent::MaxPartial { .. } | CompiledEvent::MaxIncrement { .. })
        )
    }

    /// Whether increment `step` moves the tracked coordinate.
    fn accumulates(&self, step: usize) -> bool {
        match self {
            Payoff::Event(CompiledEvent::MaxIncrement { .. }) => false,
            Payoff::Event(CompiledEvent::Tail { from, .. }) => step > *from,
            _ => true,
        }
    }

    fn trigger(&self, new_coord: i64, increment: i64) -> bool {
        match *self {
            Payoff::Event(CompiledEvent::MaxPartial { c }) => new_coord.abs() >= c,
            Payoff::Event(CompiledEvent::MaxIncrement { c }) => increment.abs() >= c,
            _ => false,
        }
    }

    fn terminal(&self, lattice: LatticeSpec, coord: i64, flag: bool) -> f64 {
        match *self {
            Payoff::Function { f, scale, n } => {
                let s = lattice.point(coord);
                match scale {
                    Scale::Mean => f.eval(s / n as f64),
                    Scale::Sum => f.eval(s),
                }
            }
            Payoff::Event(ev) => indicator(match ev {
                CompiledEvent::AbsGe { c } | CompiledEvent::Tail { c, .. } => coord.abs() >= c,
                CompiledEvent::AbsLt { c } => coord.abs() < c,
                CompiledEvent::Gt { c } => coord > c,
                CompiledEvent::Lt { c } => coord < c,
                CompiledEvent::MaxPartial { .. } | CompiledEvent::MaxIncrement { .. } => flag,
            }),
        }
    }
}

enum Mode<'p> {
    Optimize(Side),
    Follow(&'p KernelPolicy),
}

/// Layer geometry for a run.
struct Plan {
    n: usize,
    layers: Vec<Layer>,
    state_count: u64,
}

impl Plan {
    fn new(set: &AmbiguitySet, n: usize, payoff: &Payoff<'_>, budget: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("horizon n must be at least 1"));
        }
        let (lo, hi) = (set.min_coord() as i128, set.max_coord() as i128);
        let planes = if payoff.flagged() { 2 } else { 1 };
        let mut layers = Vec::with_capacity(n + 1);
        let mut active: i128 = 0;
        let mut total: u128 = 0;
        for k in 0..=n {
            if k > 0 && payoff.accumulates(k) {
                active += 1;
            }
            let (a, b) = (active * lo, active * hi);
            let len = (b - a + 1) as u128;
            total = total.saturating_add(len * planes as u128);
            if total > budget as u128 || a < i64::MIN as i128 / 2 || b > i64::MAX as i128 / 2 {
                return Err(Error::StateBudgetExceeded {
                    needed: u64::try_from(total).unwrap_or(u64::MAX),
                    budget,
                });
            }
            layers.push(Layer {
                lo: a as i64,
                len: len as usize,
                planes,
            });
        }
        Ok(Self {
            n,
            layers,
            state_count: total as u64,
        })
    }

    fn successor(
        &self,
        payoff: &Payoff<'_>,
        step: usize,
        coord: i64,
        flag: bool,
        inc: i64,
    ) -> (i64, bool) {
        let c = if payoff.accumulates(step) { coord + inc } else { coord };
        (c, flag || payoff.trigger(c, inc))
    }

    /// Marks the states reachable under `policy`; fails on the first uncovered one.
    fn reachable(
        &self,
        set: &AmbiguitySet,
        payoff: &Payoff<'_>,
        policy: &KernelPolicy,
    ) -> Result<Vec<Vec<bool>>> {
        if policy.horizon < self.n {
            return Err(Error::PolicyGap {
                step: policy.horizon + 1,
                coord: 0,
                flag: false,
            });
        }
        let mut reach: Vec<Vec<bool>> = self.layers.iter().map(|l| vec![false; l.size()]).collect();
        reach[0][self.layers[0].index(0, false).unwrap()] = true;
        for step in 1..=self.n {
            let (cur, next) = (self.layers[step - 1], self.layers[step]);
            for idx in 0..cur.size() {
                if !reach[step - 1][idx] {
                    continue;
                }
                let (coord, flag) = cur.state(idx);
                let g = policy
                    .choice(step, coord, flag)
                    .filter(|&g| g < set.len())
                    .ok_or(Error::PolicyGap { step, coord, flag })?;
                for atom in set.generators()[g].atoms() {
                    let (c, f) = self.successor(payoff, step, coord, flag, atom.coord);
                    let j = next.index(c, f).expect("successor inside next layer");
                    reach[step][j] = true;
                }
            }
        }
        Ok(reach)
    }
}

struct Solution {
    value: f64,
    policy: Option<KernelPolicy>,
    state_count: u64,
}

fn solve(
    set: &AmbiguitySet,
    n: usize,
    payoff: &Payoff<'_>,
    mode: Mode<'_>,
    budget: u64,
) -> Result<Solution> {
    let plan = Plan::new(set, n, payoff, budget)?;
    let reach = match mode {
        Mode::Follow(policy) => Some(plan.reachable(set, payoff, policy)?),
        Mode::Optimize(_) => None,
    };
    let lattice = set.lattice();

    let last = plan.layers[n];
    let mut next: Vec<f64> = (0..last.size())
        .map(|idx| {
            let (c, f) = last.state(idx);
            payoff.terminal(lattice, c, f)
        })
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnboundedEval {
            point: lattice.point(last.lo + last.len as i64 - 1),
        });
    }

    let mut levels: Vec<PolicyLevel> = Vec::with_capacity(n);
    for step in (1..=n).rev() {
        let cur = plan.layers[step - 1];
        let nxt = plan.layers[step];
        let next_ref = &next;
        let reach_ref = reach.as_ref().map(|r| &r[step - 1]);
        let cont = |g: usize, coord: i64, flag: bool| -> f64 {
            set.generators()[g]
                .atoms()
                .iter()
                .map(|a| {
                    let (c, f) = plan.successor(payoff, step, coord, flag, a.coord);
                    a.weight * next_ref[nxt.index(c, f).expect("successor inside next layer")]
                })
                .sum()
        };
        let eval_state = |idx: usize| -> (f64, u32) {
            let (coord, flag) = cur.state(idx);
            match mode {
                Mode::Optimize(side) => {
                    let mut best = cont(0, coord, flag);
                    let mut arg = 0u32;
                    for g in 1..set.len() {
                        let v = cont(g, coord, flag);
                        let better = match side {
                            Side::Upper => v > best,
                            Side::Lower => v < best,
                        };
                        if better {
                            best = v;
                            arg = g as u32;
                        }
                    }
                    (best, arg)
                }
                Mode::Follow(policy) => {
                    if !reach_ref.is_some_and(|r| r[idx]) {
                        return (0.0, NO_CHOICE);
                    }
                    let g = policy.choice(step, coord, flag).expect("coverage checked");
                    (cont(g, coord, flag), g as u32)
                }
            }
        };
        let evaluated: Vec<(f64, u32)> = if cur.size() >= PAR_THRESHOLD {
            (0..cur.size()).into_par_iter().map(eval_state).collect()
        } else {
            (0..cur.size()).map(eval_state).collect()
        };
        let (values, choice): (Vec<f64>, Vec<u32>) = evaluated.into_iter().unzip();
        next = values;
        if matches!(mode, Mode::Optimize(_)) {
            levels.push(PolicyLevel { layer: cur, choice });
        }
    }
    levels.reverse();

    let root = plan.layers[0].index(0, false).unwrap();
    let policy = matches!(mode, Mode::Optimize(_)).then(|| KernelPolicy {
        horizon: n,
        kind: PolicyKind::Table(levels),
    });
    Ok(Solution {
        value: next[root],
        policy,
        state_count: plan.state_count,
    })
}

/// `E[φ(S_n/n)]` (or `E[φ(S_n)]` in moment mode) with the maximizing kernel policy.
pub fn robust_value(
    set: &AmbiguitySet,
    n: usize,
    f: &TestFunction,
    opts: &DpOptions,
) -> Result<RobustResult> {
    optimize_function(set, n, f, Side::Upper, opts)
}

/// Like [`robust_value`] for either side; `Side::Lower` gives `−E[−φ(S_n/n)]`.
pub fn optimize_function(
    set: &AmbiguitySet,
    n: usize,
    f: &TestFunction,
    side: Side,
    opts: &DpOptions,
) -> Result<RobustResult> {
    f.validate()?;
    if opts.scale == Scale::Mean {
        f.require_bounded()?;
    }
    let payoff = Payoff::Function {
        f,
        scale: opts.scale,
        n,
    };
    let sol = solve(set, n, &payoff, Mode::Optimize(side), opts.state_budget)?;
    Ok(RobustResult {
        value: sol.value,
        policy: sol.policy.expect("optimize yields a policy"),
        state_count: sol.state_count,
    })
}

/// Linear expectation of the terminal functional under one fixed kernel policy.
pub fn policy_value(
    set: &AmbiguitySet,
    policy: &KernelPolicy,
    n: usize,
    f: &TestFunction,
    opts: &DpOptions,
) -> Result<f64> {
    f.validate()?;
    let payoff = Payoff::Function {
        f,
        scale: opts.scale,
        n,
    };
    Ok(solve(set, n, &payoff, Mode::Follow(policy), opts.state_budget)?.value)
}

/// Upper (`V`) or lower (`v`) capacity of a path event.
pub fn capacity(
    set: &AmbiguitySet,
    n: usize,
    event: &PathEvent,
    side: Side,
    opts: &DpOptions,
) -> Result<f64> {
    Ok(capacity_solution(set, n, event, side, opts)?.value)
}

/// Capacity together with the extremal kernel policy.
pub fn capacity_solution(
    set: &AmbiguitySet,
    n: usize,
    event: &PathEvent,
    side: Side,
    opts: &DpOptions,
) -> Result<RobustResult> {
    event.validate(n)?;
    let payoff = Payoff::Event(CompiledEvent::new(event, set.lattice()));
    let sol = solve(set, n, &payoff, Mode::Optimize(side), opts.state_budget)?;
    Ok(RobustResult {
        value: sol.value,
        policy: sol.policy.expect("optimize yields a policy"),
        state_count: sol.state_count,
    })
}

/// Probability of a path event under one fixed kernel policy.
pub fn policy_event_probability(
    set: &AmbiguitySet,
    policy: &KernelPolicy,
    n: usize,
    event: &PathEvent,
    opts: &DpOptions,
) -> Result<f64> {
    event.validate(n)?;
    let payoff = Payoff::Event(CompiledEvent::new(event, set.lattice()));
    Ok(solve(set, n, &payoff, Mode::Follow(policy), opts.state_budget)?.value)
}

/// All value tables `u_0, …, u_n` of the robust recursion for a terminal functional.
pub fn value_tables(
    set: &AmbiguitySet,
    n: usize,
    f: &TestFunction,
    side: Side,
    opts: &DpOptions,
) -> Result<Vec<ValueTable>> {
    f.validate()?;
    if opts.scale == Scale::Mean {
        f.require_bounded()?;
    }
    let payoff = Payoff::Function {
        f,
        scale: opts.scale,
        n,
    };
    let plan = Plan::new(set, n, &payoff, opts.state_budget)?;
    let lattice = set.lattice();
    let last = plan.layers[n];
    let mut tables = vec![ValueTable {
        level: n,
        layer: last,
        values: (0..last.size())
            .map(|i| {
                let (c, fl) = last.state(i);
                payoff.terminal(lattice, c, fl)
            })
            .collect(),
    }];
    for step in (1..=n).rev() {
        let cur = plan.layers[step - 1];
        let prev = tables.last().unwrap();
        let values = (0..cur.size())
            .map(|idx| {
                let (coord, _) = cur.state(idx);
                let per_gen = set.generators().iter().map(|g| {
                    g.atoms()
                        .iter()
                        .map(|a| a.weight * prev.get(coord + a.coord, false).unwrap())
                        .sum::<f64>()
                });
                match side {
                    Side::Upper => per_gen.fold(f64::NEG_INFINITY, f64::max),
                    Side::Lower => per_gen.fold(f64::INFINITY, f64::min),
                }
            })
            .collect();
        tables.push(ValueTable {
            level: step - 1,
            layer: cur,
            values,
        });
    }
    tables.reverse();
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &[(f64, f64)] = &[(-1.0, 0.5), (1.0, 0.5)];
    const DELTA0: &[(f64, f64)] = &[(0.0, 1.0)];
    const SKEW: &[(f64, f64)] = &[(-1.0, 0.25), (1.0, 0.75)];

    fn clipped_abs() -> TestFunction {
        TestFunction::piecewise_linear(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]).unwrap()
    }

    #[test]
    fn two_step_abs_example() {
        let set = AmbiguitySet::new(1.0, &[DELTA0, UNIFORM]).unwrap();
        let r = robust_value(&set, 2, &clipped_abs(), &DpOptions::default()).unwrap();
        assert_eq!(r.value, 0.5);
        // lowest index attaining the max at the root: delta then uniform also gives 0.5
        assert_eq!(r.policy.choice(1, 0, false), Some(0));
    }

    #[test]
    fn one_step_equals_sublinear_expect() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEW, &[(-2.0, 0.5), (3.0, 0.5)]]).unwrap();
        let f = TestFunction::tent(0.5, 1.5).unwrap();
        let r = robust_value(&set, 1, &f, &DpOptions::default()).unwrap();
        let v = crate::ambiguity::sublinear_expect(&set, &f).unwrap();
        assert_eq!(r.value.to_bits(), v.upper.to_bits());
        assert_eq!(r.policy.choice(1, 0, false), Some(v.argmax_upper));
    }

    #[test]
    fn second_moment_of_symmetric_walk() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let r = robust_value(&set, 2, &TestFunction::Square, &DpOptions::moments()).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn unbounded_function_needs_moment_mode() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        assert!(matches!(
            robust_value(&set, 2, &TestFunction::Square, &DpOptions::default()),
            Err(Error::UnboundedFunction(_))
        ));
    }

    #[test]
    fn capacity_examples() {
        let opts = DpOptions::default();
        let u = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let ev = PathEvent::FinalAbsGe { threshold: 2.0 };
        assert_eq!(capacity(&u, 2, &ev, Side::Upper, &opts).unwrap(), 0.5);
        let du = AmbiguitySet::new(1.0, &[DELTA0, UNIFORM]).unwrap();
        assert_eq!(capacity(&du, 2, &ev, Side::Lower, &opts).unwrap(), 0.0);
        assert_eq!(capacity(&du, 2, &ev, Side::Upper, &opts).unwrap(), 0.5);
    }

    #[test]
    fn policy_value_examples() {
        let set = AmbiguitySet::new(1.0, &[DELTA0, UNIFORM]).unwrap();
        let opts = DpOptions::default();
        let half_abs = TestFunction::piecewise_linear(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        let v = policy_value(&set, &KernelPolicy::constant(2, 1), 2, &half_abs, &opts).unwrap();
        assert_eq!(v, 0.5);
        let v = policy_value(&set, &KernelPolicy::constant(2, 0), 2, &half_abs, &opts).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn extracted_policy_reproduces_value_bitwise() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEW, &[(-2.0, 0.3), (0.0, 0.4), (2.0, 0.3)]]).unwrap();
        let f = TestFunction::tent(0.25, 0.25).unwrap();
        for n in [1, 3, 8, 17] {
            let r = robust_value(&set, n, &f, &DpOptions::default()).unwrap();
            let p = policy_value(&set, &r.policy, n, &f, &DpOptions::default()).unwrap();
            assert_eq!(p.to_bits(), r.value.to_bits(), "n={n}");
        }
    }

    #[test]
    fn policy_gap_is_detected() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEW]).unwrap();
        let f = TestFunction::constant(1.0);
        let short = KernelPolicy::constant(1, 0);
        assert!(matches!(
            policy_value(&set, &short, 2, &f, &DpOptions::default()),
            Err(Error::PolicyGap { step: 2, .. })
        ));
        let bad_index = KernelPolicy::constant(2, 7);
        assert!(matches!(
            policy_value(&set, &bad_index, 2, &f, &DpOptions::default()),
            Err(Error::PolicyGap { step: 1, .. })
        ));
        // a table from a shorter horizon does not cover step 3
        let r = robust_value(&set, 2, &TestFunction::tent(0.0, 1.0).unwrap(), &DpOptions::default()).unwrap();
        assert!(r.policy.check_coverage(&set, 3).is_err());
        assert!(r.policy.check_coverage(&set, 2).is_ok());
    }

    #[test]
    fn state_budget_is_enforced() {
        let set = AmbiguitySet::new(1.0, &[&[(-100.0, 0.5), (100.0, 0.5)]]).unwrap();
        let opts = DpOptions {
            state_budget: 10_000,
            ..DpOptions::default()
        };
        let err = robust_value(&set, 50, &TestFunction::tent(0.0, 1.0).unwrap(), &opts).unwrap_err();
        assert!(matches!(err, Error::StateBudgetExceeded { budget: 10_000, .. }));
        assert!(err.is_budget());
    }

    #[test]
    fn flagged_events_double_the_states() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let opts = DpOptions::default();
        let plain = capacity_solution(&set, 3, &PathEvent::FinalAbsGe { threshold: 1.0 }, Side::Upper, &opts).unwrap();
        let max = capacity_solution(&set, 3, &PathEvent::MaxPartialAbsGe { threshold: 1.0 }, Side::Upper, &opts).unwrap();
        assert_eq!(max.state_count, 2 * plain.state_count);
        assert_eq!(max.value, 1.0);
    }

    #[test]
    fn tail_sum_only_counts_late_increments() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let opts = DpOptions::default();
        let tail = PathEvent::TailSumAbsGe { threshold: 2.0, from_index: 3 };
        let v = capacity(&set, 5, &tail, Side::Upper, &opts).unwrap();
        assert_eq!(v, 0.5);
        let empty = PathEvent::TailSumAbsGe { threshold: 0.5, from_index: 5 };
        assert_eq!(capacity(&set, 5, &empty, Side::Upper, &opts).unwrap(), 0.0);
        let bad = PathEvent::TailSumAbsGe { threshold: 0.5, from_index: 6 };
        assert!(matches!(capacity(&set, 5, &bad, Side::Upper, &opts), Err(Error::UnsupportedEvent(_))));
    }

    #[test]
    fn value_tables_agree_with_solver() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEW]).unwrap();
        let f = TestFunction::tent(0.25, 0.25).unwrap();
        let tables = value_tables(&set, 6, &f, Side::Upper, &DpOptions::default()).unwrap();
        let r = robust_value(&set, 6, &f, &DpOptions::default()).unwrap();
        assert_eq!(tables.len(), 7);
        assert_eq!(tables[0].get(0, false).unwrap().to_bits(), r.value.to_bits());
        for t in &tables {
            assert!(t.entry_count() <= t.level * 2 + 1);
        }
    }

    #[test]
    fn event_config_shape() {
        let ev: PathEvent =
            serde_json::from_str(r#"{"kind": "TAIL_SUM_ABS_GE", "threshold": 2.0, "from_index": 1}"#).unwrap();
        assert_eq!(ev, PathEvent::TailSumAbsGe { threshold: 2.0, from_index: 1 });
        assert!(serde_json::from_str::<PathEvent>(r#"{"kind": "SOMETIMES", "threshold": 1}"#).is_err());
    }
}
