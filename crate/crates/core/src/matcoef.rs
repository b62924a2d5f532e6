//! Matrix coefficients `Phi^(i)(a, m)` of the newvector by direct summation,
//! the translate `Phi'` on `K*(1)`, and verifiers for the support, decay,
//! filtration and dimension laws.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::arith::{inv_mod, lcm, mul_mod, sub_mod, totient};
use crate::cyclo::{CycloValue, Rational, RootSum};
use crate::error::{Error, Result};
use crate::residue::{PAdicContext, PAdicScalar};
use crate::whittaker::{ReprSpec, WhittakerTable};

/// `Phi = numerator / c0` with exact parts.
#[derive(Clone, Debug)]
pub struct PhiValue {
    pub numerator: CycloValue,
    pub c0: CycloValue,
    /// Terms summed (outer points times inner Whittaker terms).
    pub terms: u64,
}

impl PhiValue {
    pub fn to_complex(&self) -> Complex64 {
        self.numerator.to_complex() / self.c0.to_complex()
    }

    /// Exact vanishing (the normalizer is nonzero).
    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }
}

/// A query point.
#[derive(Clone, Debug)]
pub struct MatCoefQuery {
    pub spec: ReprSpec,
    pub i: u32,
    pub a: PAdicScalar,
    pub m: PAdicScalar,
}

/// Depth `max(0, -v(m))` of `psi(m x)` on units.
pub fn psi_depth(m: &PAdicScalar) -> u32 {
    if m.is_zero() {
        0
    } else {
        (-m.valuation_or_max()).max(0) as u32
    }
}

/// Whether the support laws allow `Phi^(i)(a, m) != 0`:
/// `v(a) = 0` and `v(m) = i - n` for `n0 < i < n - 1`; `v(a) = 0 <= v(m) + 1`
/// for `i` in `{n - 1, n}`.
pub fn support_allows(spec: &ReprSpec, i: u32, va: Option<i32>, vm: Option<i32>) -> bool {
    if va != Some(0) {
        return false;
    }
    if i + 1 < spec.n {
        vm == Some(i as i32 - spec.n as i32)
    } else {
        vm.is_none_or(|v| v >= -1)
    }
}

/// Evaluator for `Phi^(i)` at fixed `(spec, i)`, sharing one Whittaker table.
#[derive(Clone, Debug)]
pub struct PhiEvaluator {
    pub table: Arc<WhittakerTable>,
    w_float: Vec<Complex64>,
}

impl PhiEvaluator {
    pub fn new(spec: &ReprSpec, i: u32) -> Result<Self> {
        let table = Arc::new(WhittakerTable::new(spec, i)?);
        let c0 = table.c0.to_complex();
        let scale = *table.scale.numer() as f64 / *table.scale.denom() as f64;
        let pl = spec.p.pow(table.level);
        let m = table.modulus as f64;
        let w_float = (0..pl)
            .map(|y| {
                let s: Complex64 = table.numerator_sum(y).iter().map(|&(e, c)| Complex64::from_polar(c as f64, TAU * e as f64 / m)).sum();
                s * scale / c0
            })
            .collect();
        Ok(Self { table, w_float })
    }

    pub fn spec(&self) -> &ReprSpec {
        &self.table.spec
    }

    pub fn i(&self) -> u32 {
        self.table.i
    }

    /// Number of outer points `x in (o / p^k)^x` used for a given `m`.
    pub fn outer_level(&self, m: &PAdicScalar) -> u32 {
        self.table.level.max(psi_depth(m)).max(1)
    }

    /// `(1 / |X|) sum_{x in X} psi(m x) W^(i)(a x)`, `X = (o / p^k)^x`.
    pub fn eval(&self, a: &PAdicScalar, m: &PAdicScalar) -> Result<PhiValue> {
        let t = &self.table;
        let p = t.spec.p;
        let k = self.outer_level(m);
        let pk = p.pow(k);
        let units = totient(pk);
        let depth = psi_depth(m);
        let pd = p.pow(depth);
        let modulus = lcm(t.modulus, pk);
        let (sw, sd) = (modulus / t.modulus, modulus / pd);
        let mut sum = RootSum::new(modulus)?;
        let inner = t.inner_terms;
        let supported = !a.is_zero() && a.valuation()? == 0;
        if supported {
            let pl = p.pow(t.level);
            let ar = a.residue(t.level)?;
            let mr = if depth > 0 { m.fractional_numerator(depth)? } else { 0 };
            for x in (1..pk).filter(|x| x % p != 0) {
                let y = mul_mod(ar, x % pl.max(1), pl.max(1));
                let ph = mul_mod(mr, x % pd, pd) * sd;
                for &(e, c) in t.numerator_sum(y) {
                    sum.add_root((e as u64 * sw + ph) % modulus, c);
                }
            }
        }
        let numerator = sum.reduce().with_scale(t.scale * Rational::new(1, units as i128));
        Ok(PhiValue { numerator, c0: t.c0.clone(), terms: units * inner })
    }

    /// Floating evaluation of the same sum.
    pub fn eval_complex(&self, a: &PAdicScalar, m: &PAdicScalar) -> Result<Complex64> {
        let t = &self.table;
        if a.is_zero() || a.valuation()? != 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let p = t.spec.p;
        let k = self.outer_level(m);
        let pk = p.pow(k);
        let depth = psi_depth(m);
        let pd = p.pow(depth);
        let pl = p.pow(t.level).max(1);
        let ar = a.residue(t.level)?;
        let mr = if depth > 0 { m.fractional_numerator(depth)? } else { 0 };
        let mut s = Complex64::new(0.0, 0.0);
        for x in (1..pk).filter(|x| x % p != 0) {
            let y = mul_mod(ar, x % pl, pl);
            let ph = Complex64::from_polar(1.0, TAU * mul_mod(mr, x % pd, pd) as f64 / pd as f64);
            s += ph * self.w_float[(y % pl) as usize];
        }
        Ok(s / totient(pk) as f64)
    }
}

/// Ground-truth evaluation of a single query.
pub fn phi_naive(q: &MatCoefQuery) -> Result<PhiValue> {
    PhiEvaluator::new(&q.spec, q.i)?.eval(&q.a, &q.m)
}

/// One grid point of a support verification.
#[derive(Clone, Debug)]
pub struct SupportRow {
    pub i: u32,
    pub va: Option<i32>,
    pub a_unit: u64,
    pub vm: Option<i32>,
    pub m_unit: u64,
    pub value: Complex64,
    pub expected_zero: bool,
    pub exact_zero: bool,
}

impl SupportRow {
    pub fn violation(&self) -> bool {
        self.expected_zero && !self.exact_zero
    }
}

#[derive(Clone, Debug, Default)]
pub struct SupportReport {
    pub rows: Vec<SupportRow>,
}

impl SupportReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation()).count()
    }

    pub fn off_support(&self) -> usize {
        self.rows.iter().filter(|r| r.expected_zero).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().map(|r| r.value.norm()).fold(0.0, f64::max)
    }
}

fn scalar_parts(x: &PAdicScalar) -> (Option<i32>, u64) {
    if x.is_zero() {
        (None, 0)
    } else {
        (Some(x.valuation_or_max()), x.unit())
    }
}

/// Evaluates every grid point exactly and flags nonzero values where the
/// support laws predict zero.
pub fn verify_support(spec: &ReprSpec, i: u32, grid: &[(PAdicScalar, PAdicScalar)]) -> Result<SupportReport> {
    let ev = PhiEvaluator::new(spec, i)?;
    let rows = grid
        .iter()
        .map(|(a, m)| {
            let v = ev.eval(a, m)?;
            let (va, a_unit) = scalar_parts(a);
            let (vm, m_unit) = scalar_parts(m);
            Ok(SupportRow {
                i,
                va,
                a_unit,
                vm,
                m_unit,
                value: v.to_complex(),
                expected_zero: !support_allows(spec, i, va, vm),
                exact_zero: v.is_zero(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SupportReport { rows })
}

/// Grid with `v(a) in {-1..2}`, `v(m) in {i-n-2..1}` plus `m = 0`, and
/// `per_cell` random unit parts per valuation pair.
pub fn support_grid<R: Rng>(spec: &ReprSpec, i: u32, ctx: &PAdicContext, per_cell: usize, rng: &mut R) -> Vec<(PAdicScalar, PAdicScalar)> {
    let p = spec.p;
    let unit_mod = p.pow(spec.n + 2);
    let unit = |rng: &mut R| loop {
        let u = rng.gen_range(1..unit_mod);
        if u % p != 0 {
            break u;
        }
    };
    let mut out = Vec::new();
    for va in -1..=2 {
        for vm in (i as i32 - spec.n as i32 - 2)..=1 {
            for _ in 0..per_cell {
                let a = ctx.from_parts(va, unit(rng));
                let m = ctx.from_parts(vm, unit(rng));
                out.push((a, m));
            }
        }
        for _ in 0..per_cell {
            out.push((ctx.from_parts(va, unit(rng)), ctx.zero()));
        }
    }
    out
}

/// One decay sample.
#[derive(Clone, Debug)]
pub struct DecayRow {
    pub a_unit: u64,
    pub vm: i32,
    pub m_unit: u64,
    pub value: Complex64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub i: u32,
    pub rows: Vec<DecayRow>,
    pub max_ratio: f64,
}

/// Normalized maximum `|Phi^(i)(a, m)| q^{(n-i)/2}` over supported points:
/// the full supported set when it has at most `samples` points, otherwise
/// `samples` random ones.
pub fn verify_decay<R: Rng>(spec: &ReprSpec, i: u32, samples: usize, rng: &mut R) -> Result<DecayReport> {
    let ev = PhiEvaluator::new(spec, i)?;
    let ctx = spec.context()?;
    let p = spec.p;
    let la = ev.table.level.max(1);
    let lm = spec.n - i;
    let vm = i as i32 - spec.n as i32;
    let a_units: Vec<u64> = (1..p.pow(la)).filter(|u| u % p != 0).collect();
    let m_units: Vec<u64> = (1..p.pow(lm).max(2)).filter(|u| u % p != 0).collect();
    let points: Vec<(u64, u64)> = if a_units.len() * m_units.len() <= samples {
        a_units.iter().flat_map(|&a| m_units.iter().map(move |&m| (a, m))).collect()
    } else {
        (0..samples)
            .map(|_| (a_units[rng.gen_range(0..a_units.len())], m_units[rng.gen_range(0..m_units.len())]))
            .collect()
    };
    let norm = (p as f64).powf((spec.n - i) as f64 / 2.0);
    let mut rows = Vec::with_capacity(points.len());
    for (au, mu) in points {
        let value = ev.eval_complex(&ctx.from_parts(0, au), &ctx.from_parts(vm, mu))?;
        rows.push(DecayRow { a_unit: au, vm, m_unit: mu, value, ratio: value.norm() * norm });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(DecayReport { i, rows, max_ratio })
}

/// An element of `K*(1)`: `b, c in p Z_p`, `a, d` units, stored modulo `p^prec`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KStarElement {
    pub p: u64,
    pub prec: u32,
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl KStarElement {
    pub fn new(p: u64, prec: u32, a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        let m = p.pow(prec);
        let g = Self { p, prec, a: a % m, b: b % m, c: c % m, d: d % m };
        if g.a.is_multiple_of(p) || g.d.is_multiple_of(p) || !g.b.is_multiple_of(p) || !g.c.is_multiple_of(p) {
            return Err(Error::NotInKStar(format!("{g:?}")));
        }
        Ok(g)
    }

    pub fn identity(p: u64, prec: u32) -> Self {
        Self { p, prec, a: 1, b: 0, c: 0, d: 1 }
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.prec)
    }

    fn val(&self, x: u64) -> u32 {
        if x == 0 {
            self.prec
        } else {
            crate::arith::int_valuation(x as i128, self.p)
        }
    }

    /// `min(v(b), v(c))`, capped at the stored precision.
    pub fn level(&self) -> u32 {
        self.val(self.b).min(self.val(self.c))
    }

    pub fn det(&self) -> u64 {
        let m = self.modulus();
        sub_mod(mul_mod(self.a, self.d, m), mul_mod(self.b, self.c, m), m)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let m = self.modulus();
        let f = |x: u64, y: u64, z: u64, w: u64| (mul_mod(x, y, m) + mul_mod(z, w, m)) % m;
        Self {
            p: self.p,
            prec: self.prec,
            a: f(self.a, o.a, self.b, o.c),
            b: f(self.a, o.b, self.b, o.d),
            c: f(self.c, o.a, self.d, o.c),
            d: f(self.c, o.b, self.d, o.d),
        }
    }

    pub fn inverse(&self) -> Self {
        let m = self.modulus();
        let di = inv_mod(self.det(), m).expect("unit determinant");
        Self {
            p: self.p,
            prec: self.prec,
            a: mul_mod(self.d, di, m),
            b: mul_mod(sub_mod(0, self.b, m), di, m),
            c: mul_mod(sub_mod(0, self.c, m), di, m),
            d: mul_mod(self.a, di, m),
        }
    }

    /// Uniformly random element of `K*(1)` modulo `p^prec`.
    pub fn random<R: Rng>(p: u64, prec: u32, rng: &mut R) -> Self {
        let m = p.pow(prec);
        let unit = |rng: &mut R| loop {
            let u = rng.gen_range(1..m);
            if u % p != 0 {
                break u;
            }
        };
        let (a, d) = (unit(rng), unit(rng));
        let b = p * rng.gen_range(0..m / p);
        let c = p * rng.gen_range(0..m / p);
        Self { p, prec, a, b, c, d }
    }

    /// Random element with `level() = j` exactly.
    pub fn random_at_level<R: Rng>(p: u64, prec: u32, j: u32, rng: &mut R) -> Self {
        let m = p.pow(prec);
        let pj = p.pow(j);
        let rest = p.pow(prec - j);
        let unit = |rng: &mut R, modulus: u64| loop {
            let u = rng.gen_range(1..modulus);
            if u % p != 0 {
                break u;
            }
        };
        let (a, d) = (unit(rng, m), unit(rng, m));
        let (mut rb, mut rc) = (rng.gen_range(0..rest), rng.gen_range(0..rest));
        if rng.gen_bool(0.5) {
            rb = unit(rng, rest.max(2)) % rest.max(1);
        } else {
            rc = unit(rng, rest.max(2)) % rest.max(1);
        }
        Self { p, prec, a, b: mul_mod(pj, rb, m), c: mul_mod(pj, rc, m), d }
    }
}

/// Parameters with `Phi'(g) = Phi^(i)(a, m)`.
#[derive(Clone, Debug)]
pub struct KStarDecomposition {
    pub i: u32,
    pub a: PAdicScalar,
    pub m: PAdicScalar,
}

/// Conjugates `g` by `diag(p^{n1}, 1)` and factors
/// `(A b'; 0 d) diag(1, u) n_-(p^i) diag(1, u^{-1})`.
pub fn decompose_kstar(g: &KStarElement, spec: &ReprSpec, ctx: &Arc<PAdicContext>) -> Result<KStarDecomposition> {
    if g.a.is_multiple_of(g.p) || g.d.is_multiple_of(g.p) || !g.b.is_multiple_of(g.p) || !g.c.is_multiple_of(g.p) {
        return Err(Error::NotInKStar(format!("{g:?}")));
    }
    if g.prec < spec.n1 + spec.n {
        return Err(Error::InsufficientPrecision { needed: (spec.n1 + spec.n) as i64, available: g.prec as i64 });
    }
    let n1 = spec.n1 as i32;
    let (a, b, c, d) = (ctx.from_residue(g.a), ctx.from_residue(g.b), ctx.from_residue(g.c), ctx.from_residue(g.d));
    let b1 = b.shift(-n1);
    let c1 = c.shift(n1);
    let det = a.checked_mul(&d)?.checked_sub(&b.checked_mul(&c)?)?;
    let big_a = det.checked_div(&d)?;
    let m = b1.checked_div(&d)?;
    let vc = if c1.is_zero() { i32::MAX } else { c1.valuation()? };
    if vc >= spec.n as i32 {
        return Ok(KStarDecomposition { i: spec.n, a: big_a.checked_div(&d)?, m });
    }
    let i = vc as u32;
    let t = c1.checked_div(&d)?;
    let u = t.shift(-(i as i32));
    let a_param = big_a.checked_div(&d.checked_mul(&u)?)?;
    Ok(KStarDecomposition { i, a: a_param, m })
}

/// `Phi'` with one evaluator per `i` and a cache keyed by the data `Phi^(i)`
/// depends on.
pub struct PhiPrimeEngine {
    pub spec: ReprSpec,
    ctx: Arc<PAdicContext>,
    evaluators: HashMap<u32, PhiEvaluator>,
    cache: HashMap<(u32, u64, i32, u64), Complex64>,
}

impl PhiPrimeEngine {
    pub fn new(spec: &ReprSpec) -> Result<Self> {
        Ok(Self { spec: spec.clone(), ctx: spec.context()?, evaluators: HashMap::new(), cache: HashMap::new() })
    }

    pub fn precision(&self) -> u32 {
        self.spec.n1 + self.spec.n
    }

    fn evaluator(&mut self, i: u32) -> Result<&PhiEvaluator> {
        if !self.evaluators.contains_key(&i) {
            self.evaluators.insert(i, PhiEvaluator::new(&self.spec, i)?);
        }
        Ok(&self.evaluators[&i])
    }

    pub fn decompose(&self, g: &KStarElement) -> Result<KStarDecomposition> {
        decompose_kstar(g, &self.spec, &self.ctx)
    }

    /// Exact `Phi'(g)`.
    pub fn phi_prime_exact(&mut self, g: &KStarElement) -> Result<PhiValue> {
        let dec = self.decompose(g)?;
        self.evaluator(dec.i)?.eval(&dec.a, &dec.m)
    }

    /// Floating `Phi'(g)`, memoized.
    pub fn phi_prime(&mut self, g: &KStarElement) -> Result<Complex64> {
        let dec = self.decompose(g)?;
        let depth = psi_depth(&dec.m);
        let level = self.evaluator(dec.i)?.table.level;
        let key_a = if dec.a.valuation_or_max() == 0 { dec.a.residue(level)? } else { u64::MAX };
        let key_m = if depth > 0 { dec.m.fractional_numerator(depth)? } else { 0 };
        let key = (dec.i, key_a, depth as i32, key_m);
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let v = self.evaluator(dec.i)?.eval_complex(&dec.a, &dec.m)?;
        self.cache.insert(key, v);
        Ok(v)
    }
}

/// `|Phi'(g)|` on random `g in K*(j) \ K*(j+1)` against `2 q^2 q^{(j - n1)/2}`.
#[derive(Clone, Debug)]
pub struct FiltrationReport {
    pub j: u32,
    pub samples: usize,
    pub max_abs: f64,
    pub bound: f64,
    pub exceptions: usize,
}

pub fn verify_filtration<R: Rng>(engine: &mut PhiPrimeEngine, j: u32, samples: usize, rng: &mut R) -> Result<FiltrationReport> {
    let spec = engine.spec.clone();
    let q = spec.p as f64;
    let bound = 2.0 * q * q * q.powf((j as f64 - spec.n1 as f64) / 2.0);
    let (mut max_abs, mut exceptions) = (0.0f64, 0);
    for _ in 0..samples {
        let g = KStarElement::random_at_level(spec.p, engine.precision(), j, rng);
        debug_assert_eq!(g.level(), j);
        let v = engine.phi_prime(&g)?.norm();
        max_abs = max_abs.max(v);
        exceptions += usize::from(v > bound * (1.0 + 1e-9));
    }
    Ok(FiltrationReport { j, samples, max_abs, bound, exceptions })
}

/// Numerical rank of the Gram matrix `[Phi'(g_s^{-1} g_t)]`.
#[derive(Clone, Debug)]
pub struct GramReport {
    pub samples: usize,
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
}

impl GramReport {
    pub fn is_psd(&self, tol: f64) -> bool {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0).max(1.0);
        self.hermitian_defect <= tol * top && self.min_eigenvalue >= -tol * top
    }
}

/// Rank of the Gram matrix of `pi(g_s) v'` over `g_s` in `elements`.
pub fn gram_rank(engine: &mut PhiPrimeEngine, elements: &[KStarElement], tol: f64) -> Result<GramReport> {
    let s = elements.len();
    let inverses: Vec<KStarElement> = elements.iter().map(|g| g.inverse()).collect();
    let mut g = DMatrix::<Complex64>::zeros(s, s);
    for a in 0..s {
        for b in 0..s {
            g[(a, b)] = engine.phi_prime(&inverses[a].mul(&elements[b]))?;
        }
    }
    let defect = (&g - g.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let herm = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.total_cmp(x));
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues.iter().filter(|&&e| e > tol * top).count();
    let min_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);
    Ok(GramReport { samples: s, rank, eigenvalues, hermitian_defect: defect, min_eigenvalue })
}

/// Samples `count` random elements of `K*(1)` and returns the Gram rank.
pub fn gram_dimension_estimate<R: Rng>(spec: &ReprSpec, count: usize, tol: f64, rng: &mut R) -> Result<GramReport> {
    let mut engine = PhiPrimeEngine::new(spec)?;
    let prec = engine.precision();
    let elements: Vec<KStarElement> = (0..count)
        .map(|_| KStarElement::random(spec.p, prec, rng))
        .collect();
    gram_rank(&mut engine, &elements, tol)
}

/// `eta -> j = floor(n1 eta / 2)` and the lattice `O(j + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiltrationSchedule {
    pub n1: u32,
}

impl FiltrationSchedule {
    pub fn new(n1: u32) -> Self {
        Self { n1 }
    }

    /// `j` for a rational `eta` in `[0, 1/2]`.
    pub fn j(&self, eta: num_rational::Ratio<i64>) -> Result<u32> {
        if eta < num_rational::Ratio::from_integer(0) || eta > num_rational::Ratio::new(1, 2) {
            return Err(Error::Invalid(format!("eta = {eta} outside [0, 1/2]")));
        }
        Ok((eta * self.n1 as i64 / 2).floor().to_integer() as u32)
    }

    /// Exponent `r` of the lattice `O(r)` used at `eta`.
    pub fn lattice_level(&self, eta: num_rational::Ratio<i64>) -> Result<u32> {
        Ok(self.j(eta)? + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_values_at_i_equals_n() {
        for spec in [ReprSpec::principal_series(3, 6).unwrap(), ReprSpec::supercuspidal_ramified(3, 5).unwrap()] {
            let ctx = spec.context().unwrap();
            let ev = PhiEvaluator::new(&spec, spec.n).unwrap();
            let one = ctx.one();
            assert!((ev.eval(&one, &ctx.zero()).unwrap().to_complex() - 1.0).norm() < 1e-12);
            let q = spec.p as f64;
            let v = ev.eval(&one, &ctx.from_parts(-1, 2)).unwrap().to_complex();
            assert!((v + 1.0 / (q - 1.0)).norm() < 1e-12);
            assert!(ev.eval(&one, &ctx.from_parts(-2, 1)).unwrap().is_zero());
            assert!(ev.eval(&ctx.from_int(spec.p as i64), &ctx.zero()).unwrap().is_zero());
        }
    }

    #[test]
    fn exact_and_float_agree() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let ctx = spec.context().unwrap();
        let ev = PhiEvaluator::new(&spec, 4).unwrap();
        for (va, vm) in [(0, -2), (0, -1), (0, -3), (1, -2)] {
            for u in [1u64, 2, 4, 5] {
                let a = ctx.from_parts(va, u);
                let m = ctx.from_parts(vm, u + 3);
                let e = ev.eval(&a, &m).unwrap();
                let f = ev.eval_complex(&a, &m).unwrap();
                assert!((e.to_complex() - f).norm() < 1e-9);
                assert!(f.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn ramanujan_sum_oracle() {
        // Phi^(n)(1, m) = (1/phi(p^k)) sum_x psi(m x), brute-forced in floats.
        let spec = ReprSpec::principal_series(5, 4).unwrap();
        let ctx = spec.context().unwrap();
        let ev = PhiEvaluator::new(&spec, 4).unwrap();
        for vm in -3..=0 {
            let m = ctx.from_parts(vm, 3);
            let k = (-vm).max(1) as u32;
            let pk = 5u64.pow(k);
            let mut s = Complex64::new(0.0, 0.0);
            for x in (1..pk).filter(|x| x % 5 != 0) {
                s += crate::characters::psi(&m.checked_mul(&ctx.from_int(x as i64)).unwrap()).unwrap();
            }
            s /= totient(pk) as f64;
            assert!((ev.eval(&ctx.one(), &m).unwrap().to_complex() - s).norm() < 1e-12);
        }
    }

    #[test]
    fn kstar_identity_and_case_one() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let mut eng = PhiPrimeEngine::new(&spec).unwrap();
        let prec = eng.precision();
        let id = KStarElement::identity(3, prec);
        let dec = eng.decompose(&id).unwrap();
        assert_eq!(dec.i, spec.n);
        assert!((eng.phi_prime(&id).unwrap() - 1.0).norm() < 1e-12);
        for j in 1..3u32 {
            let g = KStarElement::new(3, prec, 2, 0, 3u64.pow(j), 1).unwrap();
            assert_eq!(eng.decompose(&g).unwrap().i, j + spec.n1);
        }
    }

    /// Rebuilds `(y m; 0 1) n_-(p^i)` from the parameters and checks it lies in
    /// the coset of `a(p^{-n1}) g a(p^{n1})` modulo the center times `K0(p^n)`.
    #[test]
    fn kstar_round_trip() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let eng = PhiPrimeEngine::new(&spec).unwrap();
        let ctx = spec.context().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n1 = spec.n1 as i32;
        for _ in 0..200 {
            let j = rng.gen_range(1..=4);
            let g = KStarElement::random_at_level(3, eng.precision(), j, &mut rng);
            let dec = eng.decompose(&g).unwrap();
            // h = (a, b p^{-n1}; c p^{n1}, d); x = (y m; 0 1) n_-(p^i) = (y + m p^i, m; p^i, 1).
            let (a, b, c, d) = (ctx.from_residue(g.a), ctx.from_residue(g.b).shift(-n1), ctx.from_residue(g.c).shift(n1), ctx.from_residue(g.d));
            let pi = ctx.from_parts(dec.i as i32, 1);
            let x11 = dec.a.checked_add(&dec.m.checked_mul(&pi).unwrap()).unwrap();
            let (x12, x21, x22) = (dec.m, pi, ctx.one());
            let xdet = x11.checked_mul(&x22).unwrap().checked_sub(&x12.checked_mul(&x21).unwrap()).unwrap();
            // k = x^{-1} h (up to the scalar det / ...); entries of x^{-1} = (1, -m; -p^i, y + m p^i) / det x.
            let inv11 = x22.checked_div(&xdet).unwrap();
            let inv12 = x12.neg().checked_div(&xdet).unwrap();
            let inv21 = x21.neg().checked_div(&xdet).unwrap();
            let inv22 = x11.checked_div(&xdet).unwrap();
            let k11 = inv11.checked_mul(&a).unwrap().checked_add(&inv12.checked_mul(&c).unwrap()).unwrap();
            let k12 = inv11.checked_mul(&b).unwrap().checked_add(&inv12.checked_mul(&d).unwrap()).unwrap();
            let k21 = inv21.checked_mul(&a).unwrap().checked_add(&inv22.checked_mul(&c).unwrap()).unwrap();
            let k22 = inv21.checked_mul(&b).unwrap().checked_add(&inv22.checked_mul(&d).unwrap()).unwrap();
            // k / z in K0(p^n) for the scalar z = k22.
            let z = k22;
            assert_eq!(z.valuation().unwrap(), 0);
            let r11 = k11.checked_div(&z).unwrap();
            let r12 = k12.checked_div(&z).unwrap();
            let r21 = k21.checked_div(&z).unwrap();
            assert!(r11.valuation_or_max() == 0);
            assert!(r12.valuation_or_max() >= 0);
            assert!(r21.valuation_or_max() >= spec.n as i32);
        }
    }

    #[test]
    fn hermitian_symmetry_and_unitarity() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let mut eng = PhiPrimeEngine::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let g = KStarElement::random_at_level(3, eng.precision(), rng.gen_range(1..4), &mut rng);
            let v = eng.phi_prime(&g).unwrap();
            let w = eng.phi_prime(&g.inverse()).unwrap();
            assert!(v.norm() <= 1.0 + 1e-9);
            assert!((v - w.conj()).norm() < 1e-9, "{v} vs {w}");
        }
    }

    #[test]
    fn single_sample_gram_has_rank_one() {
        let spec = ReprSpec::principal_series(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = gram_dimension_estimate(&spec, 1, 1e-6, &mut rng).unwrap();
        assert_eq!(r.rank, 1);
        assert!(r.is_psd(1e-6));
    }

    #[test]
    fn schedule() {
        let s = FiltrationSchedule::new(4);
        assert_eq!(s.j(Ratio::new(0, 1)).unwrap(), 0);
        assert_eq!(s.j(Ratio::new(1, 2)).unwrap(), 1);
        assert_eq!(s.lattice_level(Ratio::new(1, 2)).unwrap(), 2);
        assert!(s.j(Ratio::new(3, 4)).is_err());
        let mut last = 0;
        for k in 0..=10 {
            let j = s.j(Ratio::new(k, 20)).unwrap();
            assert!(j >= last && j <= s.n1);
            last = j;
        }
    }
}
