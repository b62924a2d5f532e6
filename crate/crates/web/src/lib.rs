//! Browser bindings. Each operation returns a JSON string; the plain
//! functions are shared with native tests and the `#[wasm_bindgen]` wrappers
//! only translate errors.

use std::sync::Arc;

use gl2_newform::matcoef::{support_allows, PhiEvaluator};
use gl2_newform::quaternion::{count_by_norm, disc6_fixture, ramified_level_lattice, Enumerator, TidyLattice, UpperHalfPoint};
use gl2_newform::statphase::FastEvaluator;
use gl2_newform::whittaker::ReprSpec;
use num_rational::Ratio;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest conductor and residue characteristic the page accepts.
const MAX_N: u32 = 8;
const MAX_P: u64 = 7;
const MAX_NORM: u64 = 40;

fn spec(family: &str, p: u64, n: u32) -> Result<ReprSpec, String> {
    if p > MAX_P || n > MAX_N {
        return Err(format!("the demo is limited to p <= {MAX_P} and n <= {MAX_N}"));
    }
    ReprSpec::from_tag(family, p, n).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Pair {
    x0: u64,
    u0: (u64, u64),
}

#[derive(Serialize)]
struct Evaluation {
    re: f64,
    im: f64,
    abs: f64,
    ratio_normalized: f64,
    exact_zero: bool,
    support_allows: bool,
    naive_terms: u64,
    /// Critical pairs of the fast engine, when it applies to this index.
    pairs: Option<Vec<Pair>>,
    fast_agrees: Option<bool>,
}

/// `Phi^(i)(a, m)` with `a = p^va * a_unit`, `m = p^vm * m_unit` (`m_unit = 0`
/// means `m = 0`), checked against the stationary-phase engine.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_json(family: &str, p: u64, n: u32, i: u32, va: i32, a_unit: u64, vm: i32, m_unit: u64) -> Result<String, String> {
    let spec = spec(family, p, n)?;
    spec.check_index(i).map_err(|e| e.to_string())?;
    if a_unit.is_multiple_of(p) || (m_unit != 0 && m_unit.is_multiple_of(p)) {
        return Err(format!("unit parts must be prime to {p}"));
    }
    let ctx = spec.context().map_err(|e| e.to_string())?;
    let a = ctx.from_parts(va, a_unit);
    let m = if m_unit == 0 { ctx.zero() } else { ctx.from_parts(vm, m_unit) };
    let naive = PhiEvaluator::new(&spec, i).and_then(|ev| ev.eval(&a, &m)).map_err(|e| e.to_string())?;
    let z = naive.to_complex();
    let (pairs, fast_agrees) = if i + 1 < n {
        let fast = FastEvaluator::new(&spec, i).and_then(|f| f.eval(&a, &m)).map_err(|e| e.to_string())?;
        let agrees = naive.numerator.sub(&fast.value.numerator).map_err(|e| e.to_string())?.is_zero();
        (Some(fast.pairs.iter().map(|c| Pair { x0: c.x0, u0: c.u0 }).collect()), Some(agrees))
    } else {
        (None, None)
    };
    let vm_opt = (!m.is_zero()).then_some(vm);
    json(&Evaluation {
        re: z.re,
        im: z.im,
        abs: z.norm(),
        ratio_normalized: z.norm() * (p as f64).powf((n - i) as f64 / 2.0),
        exact_zero: naive.is_zero(),
        support_allows: support_allows(&spec, i, Some(va), vm_opt),
        naive_terms: naive.terms,
        pairs,
        fast_agrees,
    })
}

#[derive(Serialize)]
struct Cell {
    va: i32,
    /// `None` is the column `m = 0`.
    vm: Option<i32>,
    max_abs: f64,
    all_zero: bool,
    allowed: bool,
}

/// Max `|Phi^(i)|` over a few unit parts in each `(v(a), v(m))` cell, with
/// the cells the support law allows.
pub fn support_map_json(family: &str, p: u64, n: u32, i: u32, units_per_cell: u32) -> Result<String, String> {
    let spec = spec(family, p, n)?;
    let ev = PhiEvaluator::new(&spec, i).map_err(|e| e.to_string())?;
    let ctx = spec.context().map_err(|e| e.to_string())?;
    let units: Vec<u64> = (1..).filter(|u| u % p != 0).take(units_per_cell.clamp(1, 8) as usize).collect();
    let mut cells = Vec::new();
    for va in -1..=2 {
        let cols = (i as i32 - n as i32 - 2..=1).map(Some).chain([None]);
        for vm in cols {
            let (mut max_abs, mut all_zero) = (0.0f64, true);
            for &ua in &units {
                for &um in &units {
                    let a = ctx.from_parts(va, ua);
                    let m = vm.map_or_else(|| ctx.zero(), |v| ctx.from_parts(v, um));
                    let v = ev.eval(&a, &m).map_err(|e| e.to_string())?;
                    max_abs = max_abs.max(v.to_complex().norm());
                    all_zero &= v.is_zero();
                }
            }
            cells.push(Cell { va, vm, max_abs, all_zero, allowed: support_allows(&spec, i, Some(va), vm) });
        }
    }
    json(&cells)
}

#[derive(Serialize)]
struct Counts {
    index: u64,
    shape: (u64, u64, u64),
    counts: Vec<(u64, u64)>,
    enumerators_agree: bool,
}

/// Elements of norm `m <= max_m` in the level-`3^r` lattice of the
/// discriminant-6 maximal order with `u(z, gz) <= delta_num / delta_den`.
pub fn lattice_counts_json(r: u32, x: f64, y: f64, delta_num: i64, delta_den: i64, max_m: u64) -> Result<String, String> {
    if r > 2 || max_m == 0 || max_m > MAX_NORM || delta_den <= 0 || delta_num < 0 || delta_num > 4 * delta_den {
        return Err(format!("need r <= 2, 1 <= m <= {MAX_NORM} and 0 <= delta <= 4"));
    }
    let order = Arc::new(disc6_fixture().map_err(|e| e.to_string())?);
    let lat = if r == 0 {
        TidyLattice::maximal(order)
    } else {
        ramified_level_lattice(order, 3, r).map_err(|e| e.to_string())?
    };
    let z = UpperHalfPoint::new(x, y).map_err(|e| e.to_string())?;
    let delta = Ratio::new(i128::from(delta_num), i128::from(delta_den));
    let norms: Vec<u64> = (1..=max_m).collect();
    let fp = count_by_norm(&lat, &z, delta, &norms, Enumerator::FinckePohst).map_err(|e| e.to_string())?;
    let bb = count_by_norm(&lat, &z, delta, &norms, Enumerator::BoundingBox).map_err(|e| e.to_string())?;
    json(&Counts { index: lat.index, shape: lat.shape, enumerators_agree: fp == bb, counts: fp.into_iter().collect() })
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn evaluate(family: &str, p: u32, n: u32, i: u32, va: i32, a_unit: u32, vm: i32, m_unit: u32) -> Result<String, JsError> {
    evaluate_json(family, p.into(), n, i, va, a_unit.into(), vm, m_unit.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = supportMap)]
pub fn support_map(family: &str, p: u32, n: u32, i: u32, units_per_cell: u32) -> Result<String, JsError> {
    support_map_json(family, p.into(), n, i, units_per_cell).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = latticeCounts)]
pub fn lattice_counts(r: u32, x: f64, y: f64, delta_num: i32, delta_den: i32, max_m: u32) -> Result<String, JsError> {
    lattice_counts_json(r, x, y, delta_num.into(), delta_den.into(), max_m.into()).map_err(|e| JsError::new(&e))
}
