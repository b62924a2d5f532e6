//! Exact values in `Z[zeta_M]` and their complex embedding.
//!
//! Character sums are accumulated as bucket counts in `Z[x]/(x^M - 1)`
//! ([`RootSum`]) and reduced modulo the cyclotomic polynomial `Phi_M` to a
//! canonical [`CycloValue`], whose zero test is exact. Coefficients are
//! `i128` with checked arithmetic; an overflow panics since it can only come
//! from a bug in the bound bookkeeping.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::arith::{prime_factors, totient};
use crate::error::{Error, Result};

/// Upper bound on `phi(M)` for exact values.
pub const PHI_BUDGET: u64 = 10_000;

pub type Rational = Ratio<i128>;

/// Sparse monic cyclotomic polynomial: `(exponent, coefficient)` pairs,
/// leading term excluded.
#[derive(Debug)]
pub struct CycloPoly {
    pub modulus: u64,
    pub degree: usize,
    pub lower_terms: Vec<(usize, i128)>,
}

fn cache() -> &'static RwLock<HashMap<u64, Arc<CycloPoly>>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<CycloPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Dense `Phi_n` for squarefree `n`, by dividing `x^n - 1` by `Phi_d`, `d | n, d < n`.
fn dense_cyclotomic_squarefree(n: u64, memo: &mut HashMap<u64, Vec<i128>>) -> Vec<i128> {
    if let Some(v) = memo.get(&n) {
        return v.clone();
    }
    let mut num = vec![0i128; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let den = dense_cyclotomic_squarefree(d, memo);
        num = exact_div(&num, &den);
    }
    memo.insert(n, num.clone());
    num
}

fn exact_div(num: &[i128], den: &[i128]) -> Vec<i128> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let qdeg = num.len() - 1 - dn;
    let mut q = vec![0i128; qdeg + 1];
    for k in (0..=qdeg).rev() {
        let c = rem[k + dn] / den[dn];
        q[k] = c;
        if c != 0 {
            for (j, &d) in den.iter().enumerate() {
                rem[k + j] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    q
}

/// `Phi_M`, cached. Uses `Phi_M(x) = Phi_rad(x^{M / rad})` with `rad` the
/// squarefree kernel of `M`.
pub fn cyclotomic(m: u64) -> Arc<CycloPoly> {
    if let Some(p) = cache().read().expect("cache lock").get(&m) {
        return p.clone();
    }
    let rad: u64 = prime_factors(m).iter().product();
    let stretch = (m / rad) as usize;
    let base = dense_cyclotomic_squarefree(rad, &mut HashMap::new());
    let degree = (base.len() - 1) * stretch;
    let lower_terms = base[..base.len() - 1]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(j, &c)| (j * stretch, c))
        .collect();
    let poly = Arc::new(CycloPoly { modulus: m, degree, lower_terms });
    debug_assert_eq!(degree as u64, totient(m));
    cache().write().expect("cache lock").entry(m).or_insert(poly).clone()
}

fn check_budget(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::Invalid("root-of-unity order must be positive".into()));
    }
    let phi = totient(m);
    if phi > PHI_BUDGET {
        return Err(Error::Budget { what: "cyclotomic degree", size: phi, budget: PHI_BUDGET });
    }
    Ok(())
}

fn add_i(a: i128, b: i128) -> i128 {
    a.checked_add(b).expect("cyclotomic coefficient overflow")
}

fn mul_i(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("cyclotomic coefficient overflow")
}

/// Reduce a polynomial of degree `< M` (already folded by `x^M = 1`) modulo `Phi_M`.
fn reduce_dense(m: u64, mut coeffs: Vec<i128>) -> Vec<i128> {
    let poly = cyclotomic(m);
    let deg = poly.degree;
    for top in (deg..coeffs.len()).rev() {
        let c = coeffs[top];
        if c == 0 {
            continue;
        }
        coeffs[top] = 0;
        let shift = top - deg;
        for &(j, a) in &poly.lower_terms {
            coeffs[shift + j] = add_i(coeffs[shift + j], -mul_i(c, a));
        }
    }
    coeffs.truncate(deg);
    coeffs.resize(deg, 0);
    coeffs
}

/// Accumulator for `sum_e c_e zeta_M^e`.
#[derive(Clone, Debug)]
pub struct RootSum {
    modulus: u64,
    buckets: Vec<i64>,
}

impl RootSum {
    pub fn new(modulus: u64) -> Result<Self> {
        check_budget(modulus)?;
        Ok(Self { modulus, buckets: vec![0; modulus as usize] })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Add `c * zeta_M^e`.
    pub fn add_root(&mut self, e: u64, c: i64) {
        let b = &mut self.buckets[(e % self.modulus) as usize];
        *b = b.checked_add(c).expect("bucket overflow");
    }

    pub fn absorb(&mut self, other: &RootSum) -> Result<()> {
        if other.modulus != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            *a = a.checked_add(*b).expect("bucket overflow");
        }
        Ok(())
    }

    pub fn buckets(&self) -> &[i64] {
        &self.buckets
    }

    /// Number of roots added (sum of absolute bucket values).
    pub fn weight(&self) -> u64 {
        self.buckets.iter().map(|b| b.unsigned_abs()).sum()
    }

    /// Direct floating evaluation of the bucket sum.
    pub fn to_complex(&self) -> Complex64 {
        let m = self.modulus as f64;
        self.buckets
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(e, &c)| Complex64::from_polar(c as f64, TAU * e as f64 / m))
            .sum()
    }

    pub fn reduce(&self) -> CycloValue {
        let coeffs = reduce_dense(self.modulus, self.buckets.iter().map(|&c| c as i128).collect());
        CycloValue { modulus: self.modulus, coeffs, scale: Rational::from_integer(1) }
    }
}

/// `scale * sum_j coeffs[j] zeta_M^j`, reduced modulo `Phi_M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloValue {
    modulus: u64,
    coeffs: Vec<i128>,
    scale: Rational,
}

impl CycloValue {
    pub fn zero(modulus: u64) -> Result<Self> {
        check_budget(modulus)?;
        let deg = totient(modulus) as usize;
        Ok(Self { modulus, coeffs: vec![0; deg], scale: Rational::from_integer(1) })
    }

    pub fn one(modulus: u64) -> Result<Self> {
        root_of_unity(modulus, 0)
    }

    pub fn from_integer(modulus: u64, n: i128) -> Result<Self> {
        let mut v = Self::zero(modulus)?;
        v.coeffs[0] = n;
        Ok(v)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn scale(&self) -> Rational {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        *self.scale.numer() == 0 || self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn with_scale(mut self, s: Rational) -> Self {
        self.scale *= s;
        self
    }

    fn same_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    /// Rewrite over the common scale `gcd(numerators) / lcm(denominators)`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        let (a, b) = (self.scale, other.scale);
        let num = num_integer::Integer::gcd(a.numer(), b.numer());
        let den = num_integer::Integer::lcm(a.denom(), b.denom());
        if num == 0 {
            return Self::zero(self.modulus);
        }
        let common = Rational::new(num, den);
        let fa = (a / common).to_integer();
        let fb = (b / common).to_integer();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&x, &y)| add_i(mul_i(x, fa), mul_i(y, fb)))
            .collect();
        Ok(Self { modulus: self.modulus, coeffs, scale: common })
    }

    pub fn neg(&self) -> Self {
        Self { scale: -self.scale, ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        let deg = self.coeffs.len();
        let mut prod = vec![0i128; (2 * deg).max(1)];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in other.coeffs.iter().enumerate() {
                if y != 0 {
                    prod[i + j] = add_i(prod[i + j], mul_i(x, y));
                }
            }
        }
        // Degree < 2 phi(M) <= 2M; fold x^M = 1 before reducing.
        let m = self.modulus as usize;
        let mut folded = vec![0i128; m.max(prod.len().min(m))];
        for (e, c) in prod.into_iter().enumerate() {
            if c != 0 {
                folded[e % m] = add_i(folded[e % m], c);
            }
        }
        let coeffs = reduce_dense(self.modulus, folded);
        Ok(Self { modulus: self.modulus, coeffs, scale: self.scale * other.scale })
    }

    /// Complex conjugate (`zeta -> zeta^{-1}`).
    pub fn conj(&self) -> Self {
        let m = self.modulus as usize;
        let mut folded = vec![0i128; m];
        for (e, &c) in self.coeffs.iter().enumerate() {
            folded[(m - e) % m] = add_i(folded[(m - e) % m], c);
        }
        Self { modulus: self.modulus, coeffs: reduce_dense(self.modulus, folded), scale: self.scale }
    }

    /// View as an element of `Z[zeta_{M'}]` for a multiple `M'` of `M`.
    pub fn lift(&self, new_modulus: u64) -> Result<Self> {
        if !new_modulus.is_multiple_of(self.modulus) {
            return Err(Error::ModulusMismatch(self.modulus, new_modulus));
        }
        check_budget(new_modulus)?;
        let step = (new_modulus / self.modulus) as usize;
        let mut dense = vec![0i128; new_modulus as usize];
        for (e, &c) in self.coeffs.iter().enumerate() {
            dense[e * step] = c;
        }
        Ok(Self { modulus: new_modulus, coeffs: reduce_dense(new_modulus, dense), scale: self.scale })
    }

    pub fn to_complex(&self) -> Complex64 {
        let m = self.modulus as f64;
        let s: Complex64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(e, &c)| Complex64::from_polar(c as f64, TAU * e as f64 / m))
            .sum();
        let scale = *self.scale.numer() as f64 / *self.scale.denom() as f64;
        s * scale
    }

    /// True when `self = r * other` for a rational `r`, returned if so.
    pub fn rational_ratio(&self, other: &Self) -> Option<Rational> {
        if self.modulus != other.modulus {
            return None;
        }
        if other.is_zero() {
            return if self.is_zero() { Some(Rational::from_integer(0)) } else { None };
        }
        let pivot = other.coeffs.iter().position(|&c| c != 0)?;
        let r = Rational::new(self.coeffs[pivot], other.coeffs[pivot]);
        let ok = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(&a, &b)| Rational::from_integer(a) == r * Rational::from_integer(b));
        ok.then(|| r * self.scale / other.scale)
    }
}

/// `zeta_M^e` reduced modulo `Phi_M`.
pub fn root_of_unity(m: u64, e: i64) -> Result<CycloValue> {
    check_budget(m)?;
    let mut s = RootSum::new(m)?;
    s.add_root(e.rem_euclid(m as i64) as u64, 1);
    Ok(s.reduce())
}
