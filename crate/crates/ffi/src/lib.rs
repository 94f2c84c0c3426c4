//! C ABI over `sublin`. Objects are opaque heap handles released with the
//! matching `*_free`. Every fallible call returns `SL_OK` (0) or an error
//! code; the message for the last failure on the calling thread is available
//! from `sl_last_error_message`. Pointer arguments must be null or valid for
//! the stated length; handles must be live and are not shared across threads
//! while being freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sublin::ambiguity::{sublinear_expect, AmbiguitySet};
use sublin::counterexamples::heavy_lln_value;
use sublin::function::{psi, TestFunction};
use sublin::lattice_dp::{capacity, optimize_function, DpOptions, PathEvent, Side};
use sublin::Error;

pub const SL_OK: i32 = 0;
pub const SL_ERR_NEGATIVE_WEIGHT: i32 = 1;
pub const SL_ERR_WEIGHT_SUM: i32 = 2;
pub const SL_ERR_OFF_LATTICE: i32 = 3;
pub const SL_ERR_EMPTY_SET: i32 = 4;
pub const SL_ERR_INVALID_ARGUMENT: i32 = 5;
pub const SL_ERR_UNBOUNDED_EVAL: i32 = 6;
pub const SL_ERR_UNBOUNDED_FUNCTION: i32 = 7;
pub const SL_ERR_STATE_BUDGET_EXCEEDED: i32 = 8;
pub const SL_ERR_UNSUPPORTED_EVENT: i32 = 9;
pub const SL_ERR_POLICY_GAP: i32 = 10;
pub const SL_ERR_ENUMERATION_BUDGET_EXCEEDED: i32 = 11;
pub const SL_ERR_BAD_INTERVAL: i32 = 12;
pub const SL_ERR_TRUNCATION_TOO_SMALL: i32 = 13;
pub const SL_ERR_NULL_POINTER: i32 = 100;
pub const SL_ERR_PANIC: i32 = 101;

pub const SL_SIDE_UPPER: i32 = 0;
pub const SL_SIDE_LOWER: i32 = 1;

pub const SL_EVENT_FINAL_ABS_GE: i32 = 0;
pub const SL_EVENT_FINAL_ABS_LT: i32 = 1;
pub const SL_EVENT_FINAL_GT: i32 = 2;
pub const SL_EVENT_FINAL_LT: i32 = 3;
pub const SL_EVENT_MAX_PARTIAL_ABS_GE: i32 = 4;
pub const SL_EVENT_MAX_INCREMENT_ABS_GE: i32 = 5;
pub const SL_EVENT_TAIL_SUM_ABS_GE: i32 = 6;

/// Finitely generated ambiguity set.
pub struct SlSet(AmbiguitySet);

/// Test function.
pub struct SlFunction(TestFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: Error) -> i32 {
    set_last_error(&e.to_string());
    e.code() as i32
}

fn null(what: &str) -> i32 {
    set_last_error(&format!("{what} is null"));
    SL_ERR_NULL_POINTER
}

fn guard(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_last_error("internal panic");
            SL_ERR_PANIC
        }
    }
}

fn side(code: i32) -> Result<Side, Error> {
    match code {
        SL_SIDE_UPPER => Ok(Side::Upper),
        SL_SIDE_LOWER => Ok(Side::Lower),
        other => Err(Error::InvalidArgument(format!("unknown side {other}"))),
    }
}

/// Message describing the last failure on this thread; valid until the next call that fails.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a set from `n_generators` generators. Generator `g` owns the next
/// `atom_counts[g]` entries of `points` and `weights`.
/// `atom_counts` must hold `n_generators` entries and `points`/`weights` their sum.
#[no_mangle]
pub unsafe extern "C" fn sl_set_new(
    step: f64,
    n_generators: usize,
    atom_counts: *const usize,
    points: *const f64,
    weights: *const f64,
    out: *mut *mut SlSet,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        if n_generators == 0 {
            return fail(Error::EmptySet);
        }
        if atom_counts.is_null() || points.is_null() || weights.is_null() {
            return null("atom_counts, points or weights");
        }
        let counts = slice::from_raw_parts(atom_counts, n_generators);
        let total: usize = counts.iter().sum();
        let xs = slice::from_raw_parts(points, total);
        let ws = slice::from_raw_parts(weights, total);
        let mut gens: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_generators);
        let mut at = 0;
        for &k in counts {
            gens.push(xs[at..at + k].iter().copied().zip(ws[at..at + k].iter().copied()).collect());
            at += k;
        }
        let refs: Vec<&[(f64, f64)]> = gens.iter().map(|g| g.as_slice()).collect();
        match AmbiguitySet::new(step, &refs) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(SlSet(set)));
                SL_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// `set` must come from `sl_set_new` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_set_free(set: *mut SlSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of generators, or 0 for null.
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_set_len(set: *const SlSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

unsafe fn emit_function(f: Result<TestFunction, Error>, out: *mut *mut SlFunction) -> i32 {
    if out.is_null() {
        return null("out");
    }
    *out = ptr::null_mut();
    match f.and_then(|f| f.validate().map(|_| f)) {
        Ok(f) => {
            *out = Box::into_raw(Box::new(SlFunction(f)));
            SL_OK
        }
        Err(e) => fail(e),
    }
}

/// Continuous piecewise-linear function through `len` breakpoints, constant beyond the ends.
/// `xs` and `ys` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn sl_function_piecewise_linear(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out: *mut *mut SlFunction,
) -> i32 {
    guard(|| {
        if len > 0 && (xs.is_null() || ys.is_null()) {
            return null("xs or ys");
        }
        let points = if len == 0 {
            Vec::new()
        } else {
            let xs = slice::from_raw_parts(xs, len);
            let ys = slice::from_raw_parts(ys, len);
            xs.iter().copied().zip(ys.iter().copied()).collect()
        };
        emit_function(TestFunction::piecewise_linear(points), out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sl_function_tent(center: f64, halfwidth: f64, out: *mut *mut SlFunction) -> i32 {
    guard(|| emit_function(TestFunction::tent(center, halfwidth), out))
}

/// Clamp `(−n ∨ x) ∧ n`.
#[no_mangle]
pub unsafe extern "C" fn sl_function_clamp(n: f64, out: *mut *mut SlFunction) -> i32 {
    guard(|| emit_function(Ok(TestFunction::Clamp { n }), out))
}

/// Tail surrogate `ψ_n`.
#[no_mangle]
pub unsafe extern "C" fn sl_function_psi(n: u64, out: *mut *mut SlFunction) -> i32 {
    guard(|| emit_function(Ok(TestFunction::Psi { n }), out))
}

/// `|x|`; unbounded, so only usable where unbounded functions are accepted.
#[no_mangle]
pub unsafe extern "C" fn sl_function_abs(out: *mut *mut SlFunction) -> i32 {
    guard(|| emit_function(Ok(TestFunction::Abs), out))
}

/// `f` must come from an `sl_function_*` constructor and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_function_free(f: *mut SlFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `f(x)`, or NaN for null.
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_function_eval(f: *const SlFunction, x: f64) -> f64 {
    f.as_ref().map_or(f64::NAN, |f| f.0.eval(x))
}

/// `ψ_n(x) = n·min(1, max(0, |x| − (n − 1)))`.
#[no_mangle]
pub extern "C" fn sl_psi(n: u64, x: f64) -> f64 {
    psi(n, x)
}

/// One-step `E[f(X)]` and `−E[−f(X)]`.
/// Handles must be live; `upper` and `lower` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sublinear_expect(
    set: *const SlSet,
    f: *const SlFunction,
    upper: *mut f64,
    lower: *mut f64,
) -> i32 {
    guard(|| {
        let (Some(set), Some(f)) = (set.as_ref(), f.as_ref()) else {
            return null("set or f");
        };
        if upper.is_null() || lower.is_null() {
            return null("upper or lower");
        }
        match sublinear_expect(&set.0, &f.0) {
            Ok(v) => {
                *upper = v.upper;
                *lower = v.lower;
                SL_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// `E[f(S_n/n)]` for `SL_SIDE_UPPER`, `−E[−f(S_n/n)]` for `SL_SIDE_LOWER`.
/// Handles must be live; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_robust_value(
    set: *const SlSet,
    n: usize,
    f: *const SlFunction,
    side_code: i32,
    value: *mut f64,
) -> i32 {
    guard(|| {
        let (Some(set), Some(f)) = (set.as_ref(), f.as_ref()) else {
            return null("set or f");
        };
        if value.is_null() {
            return null("value");
        }
        let result = side(side_code).and_then(|s| optimize_function(&set.0, n, &f.0, s, &DpOptions::default()));
        match result {
            Ok(r) => {
                *value = r.value;
                SL_OK
            }
            Err(e) => fail(e),
        }
    })
}

fn event(kind: i32, threshold: f64, from_index: usize) -> Result<PathEvent, Error> {
    Ok(match kind {
        SL_EVENT_FINAL_ABS_GE => PathEvent::FinalAbsGe { threshold },
        SL_EVENT_FINAL_ABS_LT => PathEvent::FinalAbsLt { threshold },
        SL_EVENT_FINAL_GT => PathEvent::FinalGt { threshold },
        SL_EVENT_FINAL_LT => PathEvent::FinalLt { threshold },
        SL_EVENT_MAX_PARTIAL_ABS_GE => PathEvent::MaxPartialAbsGe { threshold },
        SL_EVENT_MAX_INCREMENT_ABS_GE => PathEvent::MaxIncrementAbsGe { threshold },
        SL_EVENT_TAIL_SUM_ABS_GE => PathEvent::TailSumAbsGe { threshold, from_index },
        other => return Err(Error::UnsupportedEvent(format!("event kind {other}"))),
    })
}

/// Upper or lower capacity of a path event over `n` steps. `from_index` is
/// read only for `SL_EVENT_TAIL_SUM_ABS_GE`.
/// `set` must be live; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_capacity(
    set: *const SlSet,
    n: usize,
    event_kind: i32,
    threshold: f64,
    from_index: usize,
    side_code: i32,
    value: *mut f64,
) -> i32 {
    guard(|| {
        let Some(set) = set.as_ref() else {
            return null("set");
        };
        if value.is_null() {
            return null("value");
        }
        let result = event(event_kind, threshold, from_index)
            .and_then(|ev| side(side_code).map(|s| (ev, s)))
            .and_then(|(ev, s)| capacity(&set.0, n, &ev, s, &DpOptions::default()));
        match result {
            Ok(v) => {
                *value = v;
                SL_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// `E_K[φ(S_n/n)]` with `φ(x) = 1 ∧ (1 − x)⁺` over the `K`-truncated HEAVY family.
#[no_mangle]
pub unsafe extern "C" fn sl_heavy_lln_value(truncation: u64, n: usize, state_budget: u64, value: *mut f64) -> i32 {
    guard(|| {
        if value.is_null() {
            return null("value");
        }
        match heavy_lln_value(truncation, n, state_budget) {
            Ok(r) => {
                *value = r.value;
                SL_OK
            }
            Err(e) => fail(e),
        }
    })
}
