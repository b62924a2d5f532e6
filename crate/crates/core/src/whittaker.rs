//! Representation data and the Whittaker newvector values `W^(i)(y)` on the
//! torus, for principal series `pi(mu, mu^{-1})` and dihedral supercuspidals.

use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::{checked_pow, inv_mod, lcm, mul_mod, totient};
use crate::characters::gauss::ShellGeometry;
use crate::characters::{gauss_c0_ps, gauss_c0_sc, MultChar, ThetaChar};
use crate::cyclo::{CycloValue, Rational, RootSum};
use crate::error::{Error, Result};
use crate::residue::{PAdicContext, PAdicScalar, QuadExtContext};

#[derive(Clone, Debug)]
pub enum Family {
    PrincipalSeries { mu: MultChar },
    Supercuspidal { theta: ThetaChar },
}

/// A representation with trivial central character and conductor exponent `n`.
#[derive(Clone, Debug)]
pub struct ReprSpec {
    pub family: Family,
    pub p: u64,
    pub n: u32,
    pub n0: u32,
    pub n1: u32,
}

impl ReprSpec {
    fn from_family(family: Family, p: u64, n: u32) -> Self {
        Self { family, p, n, n0: n / 2, n1: n.div_ceil(2) }
    }

    /// `pi(mu, mu^{-1})` with `a(mu) = n / 2`.
    pub fn principal_series_with(mu: MultChar) -> Result<Self> {
        let a = mu.level();
        if a < 2 {
            return Err(Error::Invalid(format!("principal series needs a(mu) >= 2, got {a}")));
        }
        if mu.table_exp() != a {
            return Err(Error::Invalid("character must be tabulated at its conductor".into()));
        }
        let p = mu.p();
        Ok(Self::from_family(Family::PrincipalSeries { mu }, p, 2 * a))
    }

    /// Principal series of conductor `n` with the primitive character `c = 1`.
    pub fn principal_series(p: u64, n: u32) -> Result<Self> {
        if !n.is_multiple_of(2) || n < 4 {
            return Err(Error::Invalid(format!("principal series conductor must be even and >= 4, got {n}")));
        }
        Self::principal_series_with(MultChar::primitive(p, n / 2)?)
    }

    pub fn supercuspidal_with(theta: ThetaChar) -> Result<Self> {
        let a = theta.level();
        let e = theta.ext().e();
        let n = if e == 1 { 2 * a } else { a + 1 };
        if a < 2 {
            return Err(Error::Invalid("theta level must be at least 2".into()));
        }
        let p = theta.ext().p();
        Ok(Self::from_family(Family::Supercuspidal { theta }, p, n))
    }

    /// Unramified dihedral supercuspidal of conductor `n = 2 a(theta)`.
    pub fn supercuspidal_unramified(p: u64, n: u32) -> Result<Self> {
        if !n.is_multiple_of(2) || n < 4 {
            return Err(Error::Invalid(format!("unramified supercuspidal conductor must be even and >= 4, got {n}")));
        }
        let ext = QuadExtContext::unramified(PAdicContext::new(p, n + 2)?);
        Self::supercuspidal_with(ThetaChar::build(&ext, n / 2)?)
    }

    /// Ramified dihedral supercuspidal of conductor `n = a(theta) + 1`.
    pub fn supercuspidal_ramified(p: u64, n: u32) -> Result<Self> {
        if n % 2 != 1 || n < 3 {
            return Err(Error::Invalid(format!("ramified supercuspidal conductor must be odd and >= 3, got {n}")));
        }
        let ext = QuadExtContext::ramified(PAdicContext::new(p, n + 2)?);
        Self::supercuspidal_with(ThetaChar::build(&ext, n - 1)?)
    }

    /// Builds from a family tag `ps`, `sc-unramified` or `sc-ramified`.
    pub fn from_tag(tag: &str, p: u64, n: u32) -> Result<Self> {
        match tag {
            "ps" => Self::principal_series(p, n),
            "sc-unramified" => Self::supercuspidal_unramified(p, n),
            "sc-ramified" => Self::supercuspidal_ramified(p, n),
            other => Err(Error::Invalid(format!("unknown family {other:?}"))),
        }
    }

    pub fn family_tag(&self) -> &'static str {
        match &self.family {
            Family::PrincipalSeries { .. } => "ps",
            Family::Supercuspidal { theta } if theta.ext().e() == 1 => "sc-unramified",
            Family::Supercuspidal { .. } => "sc-ramified",
        }
    }

    pub fn is_principal_series(&self) -> bool {
        matches!(self.family, Family::PrincipalSeries { .. })
    }

    pub fn q(&self) -> u64 {
        self.p
    }

    /// Working precision for queries on this representation.
    pub fn working_precision(&self) -> u32 {
        let mut k = 2 * self.n + 6;
        while checked_pow(self.p, k).is_err() {
            k -= 1;
        }
        k
    }

    pub fn context(&self) -> Result<Arc<PAdicContext>> {
        PAdicContext::new(self.p, self.working_precision())
    }

    /// Same representation with `theta(varpi_E)` negated (ramified only).
    pub fn with_flipped_pi_sign(&self) -> Result<Self> {
        match &self.family {
            Family::Supercuspidal { theta } => Ok(Self { family: Family::Supercuspidal { theta: theta.with_flipped_pi_sign()? }, ..self.clone() }),
            _ => Err(Error::Invalid("sign flip applies to supercuspidals".into())),
        }
    }

    pub fn check_index(&self, i: u32) -> Result<()> {
        if i <= self.n0 || i > self.n {
            return Err(Error::RangeViolation { i, lo: self.n0 + 1, hi: self.n });
        }
        Ok(())
    }
}

/// `W = numerator / c0`, both exact.
#[derive(Clone, Debug)]
pub struct WhittakerValue {
    pub numerator: CycloValue,
    pub c0: CycloValue,
}

impl WhittakerValue {
    pub fn to_complex(&self) -> Complex64 {
        self.numerator.to_complex() / self.c0.to_complex()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }
}

/// Sparse element of `Z[x]/(x^M - 1)`.
pub type SparseSum = Vec<(u32, i64)>;

fn sparsify(buckets: &[i64]) -> SparseSum {
    buckets.iter().enumerate().filter(|(_, &c)| c != 0).map(|(e, &c)| (e as u32, c)).collect()
}

/// All values `W^(i)(y)` for `y` a unit, indexed by `y mod p^level`.
#[derive(Clone, Debug)]
pub struct WhittakerTable {
    pub spec: ReprSpec,
    pub i: u32,
    /// `W^(i)(y)` depends only on `y mod p^level`.
    pub level: u32,
    /// Root-of-unity order of the numerator sums.
    pub modulus: u64,
    /// Numerator sums `S_W(y)`, indexed by the residue of `y`; empty for non-units.
    sums: Vec<SparseSum>,
    /// Scale `1 / (normalizing count)` shared by numerators and `c0`.
    pub scale: Rational,
    pub c0: CycloValue,
    /// Number of terms in each numerator sum.
    pub inner_terms: u64,
}

struct PsData<'a> {
    mu: &'a MultChar,
    pn0: u64,
}

impl WhittakerTable {
    pub fn new(spec: &ReprSpec, i: u32) -> Result<Self> {
        spec.check_index(i)?;
        match &spec.family {
            Family::PrincipalSeries { mu } => Self::new_ps(spec, mu, i),
            Family::Supercuspidal { theta } => Self::new_sc(spec, theta, i),
        }
    }

    fn new_ps(spec: &ReprSpec, mu: &MultChar, i: u32) -> Result<Self> {
        let (p, n0) = (spec.p, spec.n0);
        let pn0 = p.pow(n0);
        let modulus = lcm(mu.order(), pn0);
        let d = PsData { mu, pn0 };
        let units: Vec<u64> = (1..pn0).filter(|u| u % p != 0).collect();
        // mu(1 + u p^{i - n0}) evaluated modulo p^{n0}.
        let twist: Vec<u64> = units
            .iter()
            .map(|&u| mu.exponent((1 + mul_mod(u, p.pow((i - n0).min(n0)), pn0)) % pn0))
            .collect::<Result<_>>()?;
        let mut sums = vec![SparseSum::new(); pn0 as usize];
        for &y in &units {
            sums[y as usize] = ps_numerator(&d, modulus, &units, &twist, y)?;
        }
        let scale = Rational::new(1, pn0 as i128);
        let c0 = gauss_c0_ps(mu, n0)?;
        Ok(Self { spec: spec.clone(), i, level: n0, modulus, sums, scale, c0, inner_terms: units.len() as u64 })
    }

    fn new_sc(spec: &ReprSpec, theta: &ThetaChar, i: u32) -> Result<Self> {
        let shell = ShellGeometry::new(theta);
        let p = spec.p;
        let level = spec.n - i;
        let pl = p.pow(level);
        let tm = shell.trace_modulus();
        let modulus = lcm(lcm(theta.order(), tm), pl);
        let (st, sp, sl) = (modulus / theta.order(), modulus / tm, modulus / pl);
        let reps = shell.ring.units();
        // Per-rep: fixed exponent and the sign-adjusted norm residue.
        let fixed: Vec<(u64, u64)> = reps
            .iter()
            .map(|&u0| {
                let base = (shell.theta_inv_exponent(theta, u0) * st + shell.trace_numerator(u0) * sp) % modulus;
                let (sign, nu) = shell.norm_unit(u0);
                // psi(-y^{-1} p^i N(u)) = e(-sign y^{-1} N(u0) / p^{n-i}).
                let nr = nu % pl;
                let coef = if sign > 0 { (pl - nr) % pl } else { nr };
                (base, coef)
            })
            .collect();
        let mut sums = vec![SparseSum::new(); pl as usize];
        let ys: Vec<u64> = if level == 0 { vec![0] } else { (1..pl).filter(|y| y % p != 0).collect() };
        let mut buckets = vec![0i64; modulus as usize];
        for &y in &ys {
            buckets.iter_mut().for_each(|b| *b = 0);
            let yinv = if level == 0 { 0 } else { inv_mod(y, pl).expect("unit") };
            for &(base, coef) in &fixed {
                let e = (base + mul_mod(coef, yinv, pl.max(1)) * sl) % modulus;
                buckets[e as usize] += 1;
            }
            sums[y as usize] = sparsify(&buckets);
        }
        let scale = shell.class_measure();
        let c0 = gauss_c0_sc(theta)?;
        Ok(Self { spec: spec.clone(), i, level, modulus, sums, scale, c0, inner_terms: reps.len() as u64 })
    }

    /// Numerator sum for a unit `y` given by its residue modulo `p^level` (or finer).
    pub fn numerator_sum(&self, y: u64) -> &SparseSum {
        let pl = self.spec.p.pow(self.level);
        &self.sums[(y % pl.max(1)) as usize]
    }

    /// `W^(i)(y)` for a p-adic `y`: zero unless `v(y) = 0`.
    pub fn value(&self, y: &PAdicScalar) -> Result<WhittakerValue> {
        let zero = CycloValue::zero(self.modulus)?;
        if y.is_zero() || y.valuation()? != 0 {
            return Ok(WhittakerValue { numerator: zero, c0: self.c0.clone() });
        }
        let r = y.residue(self.level)?;
        let mut s = RootSum::new(self.modulus)?;
        for &(e, c) in self.numerator_sum(r) {
            s.add_root(e as u64, c);
        }
        Ok(WhittakerValue { numerator: s.reduce().with_scale(self.scale), c0: self.c0.clone() })
    }
}

fn ps_numerator(d: &PsData, modulus: u64, units: &[u64], twist: &[u64], y: u64) -> Result<SparseSum> {
    let sm = modulus / d.mu.order();
    let sp = modulus / d.pn0;
    let mut buckets = vec![0i64; modulus as usize];
    for (k, &u) in units.iter().enumerate() {
        let yu = mul_mod(y, u, d.pn0);
        let e = ((twist[k] + d.mu.exponent(yu)?) % d.mu.order()) * sm + ((d.pn0 - yu) % d.pn0) * sp;
        buckets[(e % modulus) as usize] += 1;
    }
    Ok(sparsify(&buckets))
}

/// `W^(i)(x)` for a single point.
pub fn whittaker(spec: &ReprSpec, i: u32, x: &PAdicScalar) -> Result<WhittakerValue> {
    WhittakerTable::new(spec, i)?.value(x)
}

/// Level to which `W^(i)` must be known: `n0` (principal series) or `n - i`.
pub fn required_level(spec: &ReprSpec, i: u32) -> u32 {
    if spec.is_principal_series() {
        spec.n0
    } else {
        spec.n - i
    }
}

/// Number of units modulo `p^k`.
pub fn unit_count(p: u64, k: u32) -> u64 {
    totient(p.pow(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn ctx(spec: &ReprSpec) -> Arc<PAdicContext> {
        spec.context().unwrap()
    }

    /// Direct floating summation in reverse order, written from the formulas.
    fn ps_oracle(mu: &MultChar, n0: u32, i: u32, y: u64) -> Complex64 {
        let p = mu.p();
        let pn = p.pow(n0);
        let e = |r: u64, m: u64| Complex64::from_polar(1.0, TAU * r as f64 / m as f64);
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for u in (1..pn).rev().filter(|u| u % p != 0) {
            let tw = (1 + u * p.pow(i - n0)) % pn;
            num += mu.value(tw).unwrap() * mu.value(y * u % pn).unwrap() * e((pn - y * u % pn) % pn, pn);
            den += mu.value(u).unwrap() * e(pn - u, pn);
        }
        num / den
    }

    #[test]
    fn ps_support_and_normalization() {
        let spec = ReprSpec::principal_series(3, 4).unwrap();
        let c = ctx(&spec);
        let t = WhittakerTable::new(&spec, 4).unwrap();
        assert!(t.value(&c.from_int(3)).unwrap().is_zero());
        let w = t.value(&c.one()).unwrap().to_complex();
        assert!((w - 1.0).norm() < 1e-12);
        // i = n: W = 1 on all units.
        for y in [1i64, 2, 4, 5, 7, 8] {
            assert!((t.value(&c.from_int(y)).unwrap().to_complex() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn ps_matches_float_oracle() {
        let spec = ReprSpec::principal_series(3, 4).unwrap();
        let Family::PrincipalSeries { mu } = &spec.family else { unreachable!() };
        let c = ctx(&spec);
        let t = WhittakerTable::new(&spec, 3).unwrap();
        for y in (1..81u64).filter(|y| y % 3 != 0) {
            let w = t.value(&c.from_int(y as i64)).unwrap().to_complex();
            assert!((w - ps_oracle(mu, 2, 3, y)).norm() < 1e-9, "y = {y}");
        }
    }

    #[test]
    fn sc_support_sign_and_normalization() {
        let spec = ReprSpec::supercuspidal_ramified(3, 5).unwrap();
        let c = ctx(&spec);
        let t = WhittakerTable::new(&spec, 4).unwrap();
        assert!(t.value(&c.from_parts(-1, 1)).unwrap().is_zero());
        let flipped = spec.with_flipped_pi_sign().unwrap();
        let tf = WhittakerTable::new(&flipped, 4).unwrap();
        for y in [1i64, 2, 4, 5, 7] {
            let a = t.value(&c.from_int(y)).unwrap().to_complex();
            let b = tf.value(&c.from_int(y)).unwrap().to_complex();
            assert!((a - b).norm() < 1e-12);
        }
        let tn = WhittakerTable::new(&spec, 5).unwrap();
        assert!((tn.value(&c.one()).unwrap().to_complex() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn sc_matches_p_adic_oracle() {
        // Evaluate the shell integral with extension arithmetic and floats.
        use crate::characters::{psi, psi_e};
        let spec = ReprSpec::supercuspidal_ramified(3, 5).unwrap();
        let Family::Supercuspidal { theta } = &spec.family else { unreachable!() };
        let ext = theta.ext();
        let base = ext.base();
        let shell = ShellGeometry::new(theta);
        let t = WhittakerTable::new(&spec, 4).unwrap();
        let x = base.from_int(1);
        let pi_c = {
            let pi = ext.uniformizer();
            let inv = ext.inv(&pi).unwrap();
            let mut acc = ext.from_base(base.one());
            for _ in 0..(-shell.c) {
                acc = ext.mul(&acc, &inv).unwrap();
            }
            acc
        };
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for u0 in shell.ring.units().into_iter().rev() {
            let u = ext.mul(&pi_c, &ext.element(base.from_int(u0.0 as i64), base.from_int(u0.1 as i64))).unwrap();
            let th = theta.value(u0).conj() * Complex64::from_polar(1.0, -TAU * (shell.c as f64) * theta.pi_exponent() as f64 / theta.order() as f64);
            let nrm = ext.norm(&u).unwrap();
            assert_eq!(nrm.valuation().unwrap(), -5);
            let arg = nrm.shift(4).checked_div(&x).unwrap().neg();
            let pe = psi_e(ext, &u).unwrap();
            num += th * psi(&arg).unwrap() * pe;
            den += th * pe;
        }
        let w = t.value(&base.from_int(1)).unwrap().to_complex();
        // Contexts differ in precision; compare numerically.
        assert!((w - num / den).norm() < 1e-9);
    }

    #[test]
    fn index_range() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        assert!(matches!(WhittakerTable::new(&spec, 3), Err(Error::RangeViolation { .. })));
        assert!(ReprSpec::principal_series(3, 5).is_err());
    }
}
