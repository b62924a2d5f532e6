//! The normalizing Gauss sums `C_0` of the Whittaker formulas, and the shell
//! `v_E(u) = -a(theta) - e_E + 1` on which the supercuspidal sums live.

use crate::arith::lcm;
use crate::characters::mult::MultChar;
use crate::characters::theta::ThetaChar;
use crate::cyclo::{CycloValue, Rational, RootSum};
use crate::error::{Error, Result};
use crate::residue::QuadResidueRing;

/// `C_0 = q^{-n0} sum_{u in (o/p^{n0})^x} mu(u) psi(-p^{-n0} u)` (additive
/// measure, `vol(o) = 1`).
pub fn gauss_c0_ps(mu: &MultChar, n0: u32) -> Result<CycloValue> {
    if mu.level() > n0 {
        return Err(Error::Invalid(format!("character level {} exceeds sum level {n0}", mu.level())));
    }
    let p = mu.p();
    let pn = p.pow(n0);
    let m = lcm(mu.order(), pn);
    let (sm, sp) = (m / mu.order(), m / pn);
    let mut s = RootSum::new(m)?;
    for u in (1..pn).filter(|u| u % p != 0) {
        let e = mu.exponent(u)? * sm + (pn - u) * sp;
        s.add_root(e, 1);
    }
    Ok(s.reduce().with_scale(Rational::new(1, pn as i128)))
}

/// Geometry of the shell `u = varpi_E^c u0`, `c = -a - e + 1`, `u0` a unit
/// residue modulo `p_E^a`.
#[derive(Clone, Debug)]
pub struct ShellGeometry {
    pub ring: QuadResidueRing,
    pub a: u32,
    pub c: i64,
    /// `n = a(pi)`; `v(N(u)) = -n` on the shell.
    pub n: u32,
    /// `psi_E(u) = e(trace_numerator(u0) / p^trace_depth)`.
    pub trace_depth: u32,
}

impl ShellGeometry {
    pub fn new(theta: &ThetaChar) -> Self {
        let ring = theta.ring().clone();
        let a = ring.k;
        let e = ring.e;
        let c = -(a as i64) - e as i64 + 1;
        let (n, trace_depth) = if e == 1 { (2 * a, a) } else { (a + 1, a / 2) };
        Self { ring, a, c, n, trace_depth }
    }

    pub fn trace_modulus(&self) -> u64 {
        self.ring.p.pow(self.trace_depth)
    }

    /// Numerator of `tr(u)` over `p^trace_depth`: `2x` when unramified
    /// (`u = p^{-a} u0`), `2y` when ramified (`u = p^{-a/2} y + p^{-a/2-1} x sqrt D`).
    pub fn trace_numerator(&self, (x, y): (u64, u64)) -> u64 {
        let m = self.trace_modulus();
        if self.ring.e == 1 {
            (2 * (x % m)) % m
        } else {
            (2 * (y % m)) % m
        }
    }

    /// `N(u) = sign * p^{-n} N(u0)`: returns `(sign, N(u0) mod p^kx)`.
    pub fn norm_unit(&self, u0: (u64, u64)) -> (i8, u64) {
        let sign = if self.ring.e == 1 { 1 } else { -1 };
        (sign, self.ring.norm(u0))
    }

    /// Precision (in p-digits) to which `N(u0)` is determined by `u0`.
    pub fn norm_precision(&self) -> u32 {
        self.ring.kx
    }

    /// `d^x u` mass of one residue class of the shell: `d^x u = du / |u|_E`
    /// with `vol(o_E) = 1`, so `vol(o_E^x) = 1 - q^{-f}` is split evenly.
    pub fn class_measure(&self) -> Rational {
        let qf = self.ring.p.pow(2 / self.ring.e) as i128;
        Rational::new(qf - 1, qf * self.ring.unit_count() as i128)
    }

    /// Exponent of `theta^{-1}(u)` modulo `theta.order()`.
    pub fn theta_inv_exponent(&self, theta: &ThetaChar, u0: (u64, u64)) -> u64 {
        let e = theta.exponent_shifted(self.c, u0);
        (theta.order() - e) % theta.order()
    }
}

/// `C_0 = int theta^{-1}(u) psi_E(u) d^x u` over the shell, as a sum over
/// residue classes weighted by `class_measure`.
pub fn gauss_c0_sc(theta: &ThetaChar) -> Result<CycloValue> {
    let shell = ShellGeometry::new(theta);
    let tm = shell.trace_modulus();
    let m = lcm(theta.order(), tm);
    let (st, sp) = (m / theta.order(), m / tm);
    let mut s = RootSum::new(m)?;
    let units = shell.ring.units();
    for &u0 in &units {
        s.add_root(shell.theta_inv_exponent(theta, u0) * st + shell.trace_numerator(u0) * sp, 1);
    }
    let value = s.reduce().with_scale(shell.class_measure());
    if value.to_complex().norm() < 1e-12 {
        return Err(Error::Internal("supercuspidal Gauss sum vanishes; theta is not primitive".into()));
    }
    Ok(value)
}
