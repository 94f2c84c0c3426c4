#![allow(dead_code)]

use proptest::prelude::*;
use sublin::ambiguity::AmbiguitySet;
use sublin::function::{PiecewiseLinear, TestFunction};
use sublin::lattice_dp::PathEvent;

/// Generators as integer coordinates with positive integer weights, normalized on build.
pub type RawGens = Vec<Vec<(i64, u32)>>;

pub fn raw_gens(max_gens: usize, max_atoms: usize, span: i64) -> impl Strategy<Value = RawGens> {
    prop::collection::vec(
        prop::collection::vec((-span..=span, 1u32..=10), 1..=max_atoms),
        1..=max_gens,
    )
}

pub fn build_set(raw: &RawGens, step: f64) -> AmbiguitySet {
    let gens: Vec<Vec<(f64, f64)>> = raw
        .iter()
        .map(|g| {
            let total: u32 = g.iter().map(|a| a.1).sum();
            g.iter()
                .map(|&(x, w)| (x as f64 * step, w as f64 / total as f64))
                .collect()
        })
        .collect();
    let refs: Vec<&[(f64, f64)]> = gens.iter().map(|g| g.as_slice()).collect();
    AmbiguitySet::new(step, &refs).unwrap()
}

pub fn pl_function() -> impl Strategy<Value = TestFunction> {
    prop::collection::btree_map(-8i32..=8, -4i32..=4, 2..=4).prop_map(|m| {
        let points = m.into_iter().map(|(x, y)| (x as f64 * 0.25, y as f64 * 0.25)).collect();
        TestFunction::PiecewiseLinear {
            breakpoints: PiecewiseLinear::new(points).unwrap(),
        }
    })
}

pub fn event(n: usize) -> impl Strategy<Value = PathEvent> {
    let a = (0i32..=8).prop_map(|k| k as f64 * 0.5);
    let s = (-8i32..=8).prop_map(|k| k as f64 * 0.5);
    prop_oneof![
        a.clone().prop_map(|threshold| PathEvent::FinalAbsGe { threshold }),
        a.clone().prop_map(|threshold| PathEvent::FinalAbsLt { threshold }),
        s.clone().prop_map(|threshold| PathEvent::FinalGt { threshold }),
        s.prop_map(|threshold| PathEvent::FinalLt { threshold }),
        a.clone().prop_map(|threshold| PathEvent::MaxPartialAbsGe { threshold }),
        a.clone().prop_map(|threshold| PathEvent::MaxIncrementAbsGe { threshold }),
        (a, 0..=n).prop_map(|(threshold, from_index)| PathEvent::TailSumAbsGe { threshold, from_index }),
    ]
}
