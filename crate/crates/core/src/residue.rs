//! Truncated arithmetic in `Q_p` and in quadratic extensions `E = Q_p(sqrt D)`.
//!
//! A [`PAdicScalar`] is stored as `p^val * unit` with the unit known modulo
//! `p^prec`. Every scalar is tagged with the working precision `K` of the
//! [`PAdicContext`] that created it, and arithmetic between scalars with
//! different tags is refused. Cancellation in additions lowers `prec`, so a
//! caller that later needs more digits than survive gets
//! [`Error::InsufficientPrecision`] instead of garbage.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::arith::{
    check_odd_prime, checked_pow, inv_mod, mul_mod, primitive_root_prime_power, reduce_signed,
    smallest_nonresidue, sub_mod,
};
use crate::error::{Error, Result};

/// Largest modulus for which a discrete-log table is built.
pub const LOG_TABLE_LIMIT: u64 = 10_000_000;

/// Working data for `Z_p / p^K`: the prime, the precision and a primitive root
/// with its discrete-log table (built on first use).
pub struct PAdicContext {
    p: u64,
    k: u32,
    modulus: u64,
    generator: u64,
    log_table: OnceLock<std::result::Result<Vec<u32>, Error>>,
}

impl fmt::Debug for PAdicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PAdicContext")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("generator", &self.generator)
            .finish()
    }
}

impl PAdicContext {
    pub fn new(p: u64, k: u32) -> Result<Arc<Self>> {
        check_odd_prime(p)?;
        if k == 0 {
            return Err(Error::Invalid("precision K must be at least 1".into()));
        }
        let modulus = checked_pow(p, k)?;
        // A primitive root mod p^2 generates (Z/p^K)^x for every K.
        let generator = primitive_root_prime_power(p, k.min(2));
        Ok(Arc::new(Self { p, k, modulus, generator, log_table: OnceLock::new() }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    /// `p^K`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// `phi(p^K)`, the order of the unit group.
    pub fn unit_count(&self) -> u64 {
        self.modulus / self.p * (self.p - 1)
    }

    fn build_log_table(&self) -> std::result::Result<Vec<u32>, Error> {
        if self.modulus > LOG_TABLE_LIMIT {
            return Err(Error::Budget {
                what: "discrete log table",
                size: self.modulus,
                budget: LOG_TABLE_LIMIT,
            });
        }
        let mut table = vec![u32::MAX; self.modulus as usize];
        let mut x = 1u64;
        for t in 0..self.unit_count() {
            table[x as usize] = t as u32;
            x = mul_mod(x, self.generator, self.modulus);
        }
        Ok(table)
    }

    fn log_table(&self) -> Result<&[u32]> {
        match self.log_table.get_or_init(|| self.build_log_table()) {
            Ok(t) => Ok(t),
            Err(e) => Err(e.clone()),
        }
    }

    /// Discrete logarithm of a unit residue to the fixed generator.
    pub fn discrete_log(&self, u: u64) -> Result<u64> {
        let u = u % self.modulus;
        if u.is_multiple_of(self.p) {
            return Err(Error::Invalid(format!("{u} is not a unit mod {}", self.modulus)));
        }
        Ok(self.log_table()?[u as usize] as u64)
    }

    pub fn zero(&self) -> PAdicScalar {
        PAdicScalar { p: self.p, k: self.k, zero: true, val: 0, unit: 0, prec: self.k }
    }

    pub fn one(&self) -> PAdicScalar {
        self.from_parts(0, 1)
    }

    /// `p^val * unit`; `unit` must be prime to `p`.
    pub fn from_parts(&self, val: i32, unit: u64) -> PAdicScalar {
        let unit = unit % self.modulus;
        assert!(!unit.is_multiple_of(self.p), "unit part {unit} divisible by p");
        PAdicScalar { p: self.p, k: self.k, zero: false, val, unit, prec: self.k }
    }

    pub fn from_int(&self, n: i64) -> PAdicScalar {
        if n == 0 {
            return self.zero();
        }
        let (mut m, mut v) = (n as i128, 0i32);
        while m % self.p as i128 == 0 {
            m /= self.p as i128;
            v += 1;
        }
        self.from_parts(v, reduce_signed(m, self.modulus))
    }

    pub fn from_ratio(&self, num: i64, den: i64) -> Result<PAdicScalar> {
        if den == 0 {
            return Err(Error::Invalid("zero denominator".into()));
        }
        self.from_int(num).checked_div(&self.from_int(den))
    }

    /// Scalar represented by a residue `r` modulo `p^K` (interpreted as an
    /// element of `Z_p` known to absolute precision `K`).
    pub fn from_residue(&self, r: u64) -> PAdicScalar {
        let r = r % self.modulus;
        if r == 0 {
            return self.zero();
        }
        let mut v = 0u32;
        let mut u = r;
        while u.is_multiple_of(self.p) {
            u /= self.p;
            v += 1;
        }
        PAdicScalar { p: self.p, k: self.k, zero: false, val: v as i32, unit: u, prec: self.k - v }
    }
}

/// An element `p^val * unit` of `Q_p`, or zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdicScalar {
    p: u64,
    k: u32,
    zero: bool,
    val: i32,
    unit: u64,
    prec: u32,
}

impl fmt::Debug for PAdicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "0 + O(p^{})", self.prec)
        } else {
            write!(f, "{}^{} * {} (+O({}^{}))", self.p, self.val, self.unit, self.p, self.prec)
        }
    }
}

impl PAdicScalar {
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Working precision tag `K`.
    pub fn precision_tag(&self) -> u32 {
        self.k
    }

    /// Relative digits known.
    pub fn relative_precision(&self) -> u32 {
        self.prec
    }

    pub fn valuation(&self) -> Result<i32> {
        if self.zero {
            Err(Error::InfiniteValuation)
        } else {
            Ok(self.val)
        }
    }

    /// Valuation with zero mapped to `i32::MAX`.
    pub fn valuation_or_max(&self) -> i32 {
        if self.zero {
            i32::MAX
        } else {
            self.val
        }
    }

    /// Unit part modulo `p^prec`.
    pub fn unit(&self) -> u64 {
        self.unit
    }

    fn pk(&self, digits: u32) -> u64 {
        self.p.pow(digits)
    }

    fn same_tag(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::Invalid(format!("primes differ: {} vs {}", self.p, other.p)));
        }
        if self.k != other.k {
            return Err(Error::PrecisionMismatch(self.k, other.k));
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_tag(other)?;
        if self.zero || other.zero {
            let prec = if self.zero { self.prec } else { other.prec };
            return Ok(Self { zero: true, val: 0, unit: 0, prec, ..*self });
        }
        let prec = self.prec.min(other.prec);
        let m = self.pk(prec);
        Ok(Self { zero: false, val: self.val + other.val, unit: mul_mod(self.unit, other.unit, m), prec, ..*self })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_tag(other)?;
        if other.zero {
            return Ok(*self);
        }
        if self.zero {
            return Ok(*other);
        }
        let (lo, hi) = if self.val <= other.val { (self, other) } else { (other, self) };
        let shift = (hi.val - lo.val) as u32;
        let avail = lo.prec.min(hi.prec.saturating_add(shift)).min(self.k);
        let m = self.pk(avail);
        let hi_part = if shift >= avail { 0 } else { mul_mod(hi.unit % m, self.pk(shift), m) };
        let s = (lo.unit % m + hi_part) % m;
        if s == 0 {
            return Ok(Self { zero: true, val: 0, unit: 0, prec: avail, ..*self });
        }
        let mut t = 0u32;
        let mut u = s;
        while u.is_multiple_of(self.p) {
            u /= self.p;
            t += 1;
        }
        Ok(Self { zero: false, val: lo.val + t as i32, unit: u, prec: avail - t, ..*self })
    }

    pub fn neg(&self) -> Self {
        if self.zero {
            return *self;
        }
        let m = self.pk(self.prec);
        Self { unit: sub_mod(0, self.unit, m), ..*self }
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.zero {
            return Err(Error::InfiniteValuation);
        }
        let m = self.pk(self.prec);
        let unit = inv_mod(self.unit, m).expect("unit part is invertible");
        Ok(Self { val: -self.val, unit, ..*self })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.checked_mul(&other.inv()?)
    }

    /// Multiply by `p^s`.
    pub fn shift(&self, s: i32) -> Self {
        if self.zero {
            return *self;
        }
        Self { val: self.val + s, ..*self }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self { zero: false, val: 0, unit: 1, prec: self.k, ..*self };
        for _ in 0..e {
            acc = acc.checked_mul(self).expect("same tag");
        }
        acc
    }

    /// For `v(x) >= 0`, the residue of `x` modulo `p^t`.
    pub fn residue(&self, t: u32) -> Result<u64> {
        if self.zero {
            return Ok(0);
        }
        if self.val < 0 {
            return Err(Error::Invalid(format!("residue of non-integral element {self:?}")));
        }
        let v = self.val as u32;
        if v >= t {
            return Ok(0);
        }
        let need = t - v;
        if need > self.prec {
            return Err(Error::InsufficientPrecision { needed: need as i64, available: self.prec as i64 });
        }
        Ok(mul_mod(self.unit % self.pk(need), self.pk(v), self.pk(t)))
    }

    /// The class of `x` in `p^{-t} Z_p / Z_p`, returned as the numerator
    /// `r` with `x ≡ r / p^t (mod Z_p)`, `0 <= r < p^t`. Needs the digits of
    /// `x` below valuation 0.
    pub fn fractional_numerator(&self, t: u32) -> Result<u64> {
        if self.zero || self.val >= 0 {
            return Ok(0);
        }
        let depth = (-self.val) as u32;
        if depth > t {
            return Err(Error::Invalid(format!("element {self:?} deeper than p^-{t}")));
        }
        if depth > self.prec {
            return Err(Error::InsufficientPrecision { needed: depth as i64, available: self.prec as i64 });
        }
        // x = p^{-depth} u, so r / p^t with r = u p^{t - depth} mod p^t.
        let m = self.pk(t);
        Ok(mul_mod(self.unit % self.pk(depth), self.pk(t - depth), m))
    }

    /// Equality up to the jointly known digits.
    pub fn congruent(&self, other: &Self, abs_prec: i32) -> Result<bool> {
        let d = self.checked_sub(other)?;
        Ok(d.zero || d.val >= abs_prec)
    }
}

/// Data for the quadratic extension `E = F(sqrt D)` with `v(D) = e_E - 1`.
#[derive(Debug, Clone)]
pub struct QuadExtContext {
    base: Arc<PAdicContext>,
    d: PAdicScalar,
    d_int: u64,
    e: u32,
}

impl QuadExtContext {
    /// Unramified extension: `D` is the smallest quadratic non-residue mod p.
    pub fn unramified(base: Arc<PAdicContext>) -> Self {
        let d_int = smallest_nonresidue(base.p());
        let d = base.from_int(d_int as i64);
        Self { base, d, d_int, e: 1 }
    }

    /// Ramified extension with `D = p`.
    pub fn ramified(base: Arc<PAdicContext>) -> Self {
        let d_int = base.p();
        let d = base.from_int(d_int as i64);
        Self { base, d, d_int, e: 2 }
    }

    pub fn base(&self) -> &Arc<PAdicContext> {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.base.p()
    }

    pub fn d(&self) -> PAdicScalar {
        self.d
    }

    /// `D` as a small positive integer.
    pub fn d_int(&self) -> u64 {
        self.d_int
    }

    /// Ramification index `e_E`.
    pub fn e(&self) -> u32 {
        self.e
    }

    /// Residue degree `f = 2 / e_E`.
    pub fn f(&self) -> u32 {
        2 / self.e
    }

    pub fn element(&self, a: PAdicScalar, b: PAdicScalar) -> QuadExtElement {
        QuadExtElement { a, b }
    }

    pub fn from_base(&self, a: PAdicScalar) -> QuadExtElement {
        QuadExtElement { a, b: self.base.zero() }
    }

    /// The uniformizer: `p` when unramified, `sqrt D` when ramified.
    pub fn uniformizer(&self) -> QuadExtElement {
        if self.e == 1 {
            self.from_base(self.base.from_int(self.p() as i64))
        } else {
            QuadExtElement { a: self.base.zero(), b: self.base.one() }
        }
    }

    pub fn sqrt_d(&self) -> QuadExtElement {
        QuadExtElement { a: self.base.zero(), b: self.base.one() }
    }

    pub fn mul(&self, x: &QuadExtElement, y: &QuadExtElement) -> Result<QuadExtElement> {
        let aa = x.a.checked_mul(&y.a)?;
        let bb = x.b.checked_mul(&y.b)?.checked_mul(&self.d)?;
        let ab = x.a.checked_mul(&y.b)?;
        let ba = x.b.checked_mul(&y.a)?;
        Ok(QuadExtElement { a: aa.checked_add(&bb)?, b: ab.checked_add(&ba)? })
    }

    pub fn add(&self, x: &QuadExtElement, y: &QuadExtElement) -> Result<QuadExtElement> {
        Ok(QuadExtElement { a: x.a.checked_add(&y.a)?, b: x.b.checked_add(&y.b)? })
    }

    pub fn sub(&self, x: &QuadExtElement, y: &QuadExtElement) -> Result<QuadExtElement> {
        Ok(QuadExtElement { a: x.a.checked_sub(&y.a)?, b: x.b.checked_sub(&y.b)? })
    }

    /// `N_{E/F}(a + b sqrt D) = a^2 - D b^2`.
    pub fn norm(&self, x: &QuadExtElement) -> Result<PAdicScalar> {
        let n = x.a.checked_mul(&x.a)?.checked_sub(&x.b.checked_mul(&x.b)?.checked_mul(&self.d)?)?;
        if n.is_zero() && !x.is_zero() {
            return Err(Error::InsufficientPrecision { needed: self.base.precision() as i64 + 1, available: n.prec as i64 });
        }
        Ok(n)
    }

    pub fn trace(&self, x: &QuadExtElement) -> PAdicScalar {
        x.a.checked_add(&x.a).expect("same tag")
    }

    pub fn inv(&self, x: &QuadExtElement) -> Result<QuadExtElement> {
        let n = self.norm(x)?;
        let ninv = n.inv()?;
        let c = x.conj();
        Ok(QuadExtElement { a: c.a.checked_mul(&ninv)?, b: c.b.checked_mul(&ninv)? })
    }

    /// `v_E(x)`: `min(v(a), v(b))` when unramified, `min(2 v(a), 2 v(b) + 1)` when ramified.
    pub fn valuation(&self, x: &QuadExtElement) -> Result<i32> {
        if x.is_zero() {
            return Err(Error::InfiniteValuation);
        }
        let va = x.a.valuation_or_max();
        let vb = x.b.valuation_or_max();
        Ok(if self.e == 1 {
            va.min(vb)
        } else {
            let a2 = if va == i32::MAX { i32::MAX } else { 2 * va };
            let b2 = if vb == i32::MAX { i32::MAX } else { 2 * vb + 1 };
            a2.min(b2)
        })
    }

    /// Residue ring `o_E / p_E^k` in coordinates.
    pub fn residue_ring(&self, k: u32) -> QuadResidueRing {
        QuadResidueRing::new(self.p(), self.d_int, self.e, k)
    }
}

/// `a + b sqrt D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadExtElement {
    pub a: PAdicScalar,
    pub b: PAdicScalar,
}

impl QuadExtElement {
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { a: self.a, b: self.b.neg() }
    }

    /// True when the rational part vanishes.
    pub fn is_purely_imaginary(&self) -> bool {
        self.a.is_zero()
    }
}

/// `o_E / p_E^k` stored as pairs `(x mod p^kx, y mod p^ky)` meaning `x + y sqrt D`.
///
/// Unramified: `kx = ky = k`. Ramified (`D = p`): `kx = ceil(k/2)`, `ky = floor(k/2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadResidueRing {
    pub p: u64,
    pub d: u64,
    pub e: u32,
    pub k: u32,
    pub kx: u32,
    pub ky: u32,
    pub mx: u64,
    pub my: u64,
}

impl QuadResidueRing {
    pub fn new(p: u64, d: u64, e: u32, k: u32) -> Self {
        let (kx, ky) = if e == 1 { (k, k) } else { (k.div_ceil(2), k / 2) };
        Self { p, d, e, k, kx, ky, mx: p.pow(kx), my: p.pow(ky) }
    }

    pub fn size(&self) -> u64 {
        self.mx * self.my
    }

    /// Number of units: `q^{f k} - q^{f (k-1)}`.
    pub fn unit_count(&self) -> u64 {
        if self.k == 0 {
            return 1;
        }
        let f = 2 / self.e;
        let q = self.p;
        q.pow(f * self.k) - q.pow(f * (self.k - 1))
    }

    pub fn is_unit(&self, x: u64, y: u64) -> bool {
        if self.e == 1 {
            !x.is_multiple_of(self.p) || !y.is_multiple_of(self.p)
        } else {
            !x.is_multiple_of(self.p)
        }
    }

    pub fn mul(&self, (x1, y1): (u64, u64), (x2, y2): (u64, u64)) -> (u64, u64) {
        let x = (mul_mod(x1, x2, self.mx) + mul_mod(self.d % self.mx, mul_mod(y1, y2, self.mx), self.mx)) % self.mx;
        let y = (mul_mod(x1 % self.my.max(1), y2, self.my.max(1)) + mul_mod(x2 % self.my.max(1), y1, self.my.max(1))) % self.my.max(1);
        (x, y)
    }

    pub fn index(&self, (x, y): (u64, u64)) -> usize {
        (x % self.mx + self.mx * (y % self.my.max(1))) as usize
    }

    pub fn from_index(&self, idx: usize) -> (u64, u64) {
        let idx = idx as u64;
        (idx % self.mx, idx / self.mx)
    }

    /// Image of an integer residue of `Z_p`.
    pub fn from_int(&self, a: u64) -> (u64, u64) {
        (a % self.mx, 0)
    }

    pub fn conj(&self, (x, y): (u64, u64)) -> (u64, u64) {
        (x, sub_mod(0, y, self.my.max(1)))
    }

    /// Norm `x^2 - D y^2`, modulo `p^kx`.
    pub fn norm(&self, (x, y): (u64, u64)) -> u64 {
        sub_mod(mul_mod(x, x, self.mx), mul_mod(self.d % self.mx, mul_mod(y, y, self.mx), self.mx), self.mx)
    }

    pub fn units(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::with_capacity(self.unit_count() as usize);
        for y in 0..self.my.max(1) {
            for x in 0..self.mx {
                if self.is_unit(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Default enumeration budget for shell representatives.
pub const SHELL_BUDGET: u64 = 2_000_000;

/// Coset representatives of `o_E^x / (1 + p_E^k)`, as coordinate pairs.
pub fn unit_shell_reps(ext: &QuadExtContext, k: u32) -> Result<Vec<(u64, u64)>> {
    if k == 0 {
        return Err(Error::Invalid("shell level must be at least 1".into()));
    }
    let ring = ext.residue_ring(k);
    let size = ring.unit_count();
    if size > SHELL_BUDGET {
        return Err(Error::Budget { what: "unit shell representatives", size, budget: SHELL_BUDGET });
    }
    Ok(ring.units())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> Arc<PAdicContext> {
        PAdicContext::new(3, 8).unwrap()
    }

    #[test]
    fn rejects_two() {
        assert!(matches!(PAdicContext::new(2, 3), Err(Error::NotOddPrime(2))));
        assert!(PAdicContext::new(9, 3).is_err());
    }

    #[test]
    fn valuation_examples() {
        let c = ctx();
        assert_eq!(c.one().valuation().unwrap(), 0);
        assert_eq!(c.from_int(54).valuation().unwrap(), 3);
        assert_eq!(c.zero().valuation(), Err(Error::InfiniteValuation));
    }

    #[test]
    fn log_table_is_bijective() {
        let c = PAdicContext::new(5, 3).unwrap();
        let mut seen = vec![false; c.unit_count() as usize];
        for u in 1..125u64 {
            if u % 5 == 0 {
                continue;
            }
            let l = c.discrete_log(u).unwrap();
            assert!(!seen[l as usize]);
            seen[l as usize] = true;
            assert_eq!(crate::arith::pow_mod(c.generator(), l, 125), u);
        }
    }

    #[test]
    fn cancellation_lowers_precision() {
        let c = ctx();
        let x = c.from_int(10);
        let y = c.from_int(1);
        let s = x.checked_sub(&y).unwrap();
        assert_eq!(s.valuation().unwrap(), 2);
        assert_eq!(s.relative_precision(), 6);
    }

    #[test]
    fn mixed_precision_refused() {
        let a = PAdicContext::new(3, 5).unwrap().one();
        let b = PAdicContext::new(3, 6).unwrap().one();
        assert_eq!(a.checked_add(&b), Err(Error::PrecisionMismatch(5, 6)));
    }

    #[test]
    fn ext_norm_examples() {
        let ext = QuadExtContext::unramified(ctx());
        let one = ext.from_base(ext.base().one());
        assert_eq!(ext.norm(&one).unwrap(), ext.base().one());
        let n = ext.norm(&ext.sqrt_d()).unwrap();
        assert_eq!(n, ext.d().neg());
    }

    #[test]
    fn ext_valuation_uniformizers() {
        let ram = QuadExtContext::ramified(ctx());
        assert_eq!(ram.valuation(&ram.sqrt_d()).unwrap(), 1);
        let unr = QuadExtContext::unramified(ctx());
        assert_eq!(unr.valuation(&unr.uniformizer()).unwrap(), 1);
        assert_eq!(ram.valuation(&ram.uniformizer()).unwrap(), 1);
    }

    #[test]
    fn shell_rep_counts() {
        let c = PAdicContext::new(3, 6).unwrap();
        let unr = QuadExtContext::unramified(c.clone());
        let ram = QuadExtContext::ramified(c);
        assert_eq!(unit_shell_reps(&unr, 1).unwrap().len(), 8);
        assert_eq!(unit_shell_reps(&ram, 2).unwrap().len(), 6);
        let reps = unit_shell_reps(&unr, 3).unwrap();
        assert_eq!(reps.len(), 648);
        // Pairwise non-congruent modulo p_E^3 = p^3 o_E.
        let mut seen = std::collections::HashSet::new();
        for &(x, y) in &reps {
            assert!(seen.insert((x % 27, y % 27)));
        }
    }

    #[test]
    fn conj_is_involution_fixing_rationals() {
        let c = ctx();
        let x = QuadExtElement { a: c.from_int(4), b: c.from_int(7) };
        assert_eq!(x.conj().conj(), x);
        assert_ne!(x.conj(), x);
        let r = QuadExtElement { a: c.from_int(4), b: c.zero() };
        assert_eq!(r.conj(), r);
    }

    fn scalar_strategy() -> impl Strategy<Value = (i32, u64)> {
        (-4i32..5, 1u64..6561).prop_filter("unit", |(_, u)| u % 3 != 0)
    }

    proptest! {
        #[test]
        fn valuation_is_additive((v1, u1) in scalar_strategy(), (v2, u2) in scalar_strategy()) {
            let c = ctx();
            let x = c.from_parts(v1, u1);
            let y = c.from_parts(v2, u2);
            let prod = x.checked_mul(&y).unwrap();
            // Oracle: count factors of p in the integer product of the unit parts.
            let mut n = (u1 as u128) * (u2 as u128);
            let mut extra = 0;
            while n.is_multiple_of(3) { n /= 3; extra += 1; }
            prop_assert_eq!(prod.valuation().unwrap(), v1 + v2 + extra);
        }

        #[test]
        fn ring_axioms(a in 0u64..6561, b in 0u64..6561, cc in 0u64..6561) {
            let c = ctx();
            let (x, y, z) = (c.from_residue(a), c.from_residue(b), c.from_residue(cc));
            let lhs = x.checked_mul(&y.checked_add(&z).unwrap()).unwrap();
            let rhs = x.checked_mul(&y).unwrap().checked_add(&x.checked_mul(&z).unwrap()).unwrap();
            prop_assert!(lhs.congruent(&rhs, 8).unwrap());
            let l2 = x.checked_mul(&y).unwrap().checked_mul(&z).unwrap();
            let r2 = x.checked_mul(&y.checked_mul(&z).unwrap()).unwrap();
            prop_assert!(l2.congruent(&r2, 8).unwrap());
        }

        #[test]
        fn ext_norm_multiplicative(a1 in 1u64..6561, b1 in 0u64..6561, a2 in 1u64..6561, b2 in 0u64..6561, ram in any::<bool>()) {
            let c = ctx();
            let ext = if ram { QuadExtContext::ramified(c.clone()) } else { QuadExtContext::unramified(c.clone()) };
            let x = ext.element(c.from_residue(a1), c.from_residue(b1));
            let y = ext.element(c.from_residue(a2), c.from_residue(b2));
            let xy = ext.mul(&x, &y).unwrap();
            if let (Ok(nx), Ok(ny), Ok(nxy)) = (ext.norm(&x), ext.norm(&y), ext.norm(&xy)) {
                let prod = nx.checked_mul(&ny).unwrap();
                let keep = (nxy.valuation_or_max().min(prod.valuation_or_max())).saturating_add(nxy.relative_precision().min(prod.relative_precision()) as i32);
                prop_assert!(nxy.congruent(&prod, keep).unwrap());
                let vx = ext.valuation(&x).unwrap();
                let vy = ext.valuation(&y).unwrap();
                prop_assert_eq!(ext.valuation(&xy).unwrap(), vx + vy);
                // v_F(N x) = f * v_E(x)
                prop_assert_eq!(nx.valuation().unwrap(), ext.f() as i32 * vx);
            }
        }
    }
}
