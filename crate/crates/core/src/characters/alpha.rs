//! The linearizing constants `alpha` with `chi(1 + x) = psi(alpha x)` on the
//! half-level ball, found by search and re-verified exhaustively.

use crate::arith::mul_mod;
use crate::characters::additive::psi_exponent;
use crate::characters::mult::MultChar;
use crate::characters::theta::ThetaChar;
use crate::error::{Error, Result};
use crate::residue::{PAdicContext, PAdicScalar, QuadExtContext, QuadExtElement};

/// Outcome of an exhaustive check over a ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallCheck {
    pub checked: u64,
    pub failures: u64,
}

impl BallCheck {
    pub fn holds(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

/// Compare `e1 / d1` and `e2 / d2` modulo 1.
fn same_phase(e1: u64, d1: u64, e2: u64, d2: u64) -> bool {
    (e1 as u128 * d2 as u128) % (d1 as u128 * d2 as u128) == (e2 as u128 * d1 as u128) % (d1 as u128 * d2 as u128)
}

/// `alpha = p^{-a} w` with `v(alpha) = -a(chi)`.
pub fn alpha_of_chi(chi: &MultChar) -> Result<PAdicScalar> {
    let a = chi.level();
    if a < 2 {
        return Err(Error::ConductorTooSmall(a));
    }
    let p = chi.p();
    let (hc, hf) = (a.div_ceil(2), a / 2);
    let m = p.pow(hf);
    let ctx = PAdicContext::new(p, a + 2)?;
    for w in (1..m).filter(|w| w % p != 0) {
        // psi(p^{-a} w p^{hc} t) = e(w t / p^{hf}); chi(1 + p^{hc} t).
        let ok = (0..m).all(|t| {
            let e = chi.exponent(1 + p.pow(hc) * t).expect("unit");
            same_phase(e, chi.order(), mul_mod(w, t, m), m)
        });
        if ok {
            let alpha = ctx.from_parts(-(a as i32), w);
            debug_assert!(verify_alpha_chi(chi, &alpha)?.holds());
            return Ok(alpha);
        }
    }
    Err(Error::Internal(format!("no alpha for character of level {a}")))
}

/// Checks `chi(1 + dx) = psi(alpha dx)` for every `dx in p^{ceil(a/2)} / p^a`,
/// evaluating the right side by p-adic multiplication.
pub fn verify_alpha_chi(chi: &MultChar, alpha: &PAdicScalar) -> Result<BallCheck> {
    let a = chi.level();
    let p = chi.p();
    let hc = a.div_ceil(2);
    let ctx = PAdicContext::new(p, alpha.precision_tag())?;
    let pa = p.pow(a);
    let mut out = BallCheck { checked: 0, failures: 0 };
    for t in 0..p.pow(a - hc) {
        let dx = p.pow(hc) * t;
        let lhs = chi.exponent(1 + dx)?;
        let prod = alpha.checked_mul(&ctx.from_int(dx as i64))?;
        let rhs = psi_exponent(&prod, a)?;
        out.checked += 1;
        if !same_phase(lhs, chi.order(), rhs, pa) {
            out.failures += 1;
        }
    }
    Ok(out)
}

/// Unit-part depth of `beta` in `alpha = sqrt(D) beta`: `v(beta)`.
fn theta_beta_valuation(ext: &QuadExtContext, a: u32) -> i32 {
    if ext.e() == 1 {
        -(a as i32)
    } else {
        -(a as i32) / 2 - 1
    }
}

/// Ball `p_E^{ceil(a/2)} / p_E^a` in ring coordinates.
fn theta_ball(theta: &ThetaChar) -> Vec<(u64, u64)> {
    let ring = theta.ring();
    let h = ring.k.div_ceil(2);
    let (sx, sy) = if ring.e == 1 { (h, h) } else { (h.div_ceil(2), (h.saturating_sub(1)).div_ceil(2)) };
    let mut out = Vec::new();
    let my = ring.my.max(1);
    for ty in (0..my).step_by(ring.p.pow(sy).min(my) as usize) {
        for tx in (0..ring.mx).step_by(ring.p.pow(sx).min(ring.mx) as usize) {
            out.push((tx, ty));
        }
    }
    out
}

/// Purely imaginary `alpha = sqrt(D) beta` with `v_E(alpha) = -a - e + 1` and
/// `theta(1 + du) = psi_E(alpha du)` on `p_E^{ceil(a/2)}`.
pub fn alpha_of_theta(theta: &ThetaChar) -> Result<QuadExtElement> {
    let a = theta.level();
    if a < 2 {
        return Err(Error::ConductorTooSmall(a));
    }
    let ext = theta.ext();
    let p = ext.p();
    let v = theta_beta_valuation(ext, a);
    let depth = (-v) as u32;
    let md = p.pow(depth);
    let ball = theta_ball(theta);
    let two_d = 2 * ext.d_int();
    for w in (1..md).filter(|w| w % p != 0) {
        // psi(tr(sqrt D beta (da + db sqrt D))) = psi(2 D beta db) = e(2 D w db / p^depth).
        let ok = ball.iter().all(|&(da, db)| {
            let lhs = theta.exponent(((1 + da) % theta.ring().mx, db));
            let r = mul_mod(mul_mod(two_d % md, w, md), db % md, md);
            same_phase(lhs, theta.order(), r, md)
        });
        if ok {
            let ctx = ext.base();
            let alpha = ext.element(ctx.zero(), ctx.from_parts(v, w));
            return Ok(alpha);
        }
    }
    Err(Error::Internal(format!("no alpha for theta of level {a}")))
}

/// Exhaustive check of `theta(1 + du) = psi_E(alpha du)` over the ball,
/// evaluating the right side with extension arithmetic.
pub fn verify_alpha_theta(theta: &ThetaChar, alpha: &QuadExtElement) -> Result<BallCheck> {
    let ext = theta.ext();
    let ctx = ext.base();
    let a = theta.level();
    let depth = a + 2;
    let p = ext.p();
    let mut out = BallCheck { checked: 0, failures: 0 };
    for (da, db) in theta_ball(theta) {
        let lhs = theta.exponent(((1 + da) % theta.ring().mx, db));
        let du = ext.element(ctx.from_int(da as i64), ctx.from_int(db as i64));
        let prod = ext.mul(alpha, &du)?;
        let tr = ext.trace(&prod);
        let rhs = psi_exponent(&tr, depth)?;
        out.checked += 1;
        if !same_phase(lhs, theta.order(), rhs, p.pow(depth)) {
            out.failures += 1;
        }
    }
    Ok(out)
}

/// `v_E(alpha)` expected for a theta of level `a`.
pub fn expected_alpha_theta_valuation(ext: &QuadExtContext, a: u32) -> i32 {
    -(a as i32) - ext.e() as i32 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_chi_levels() {
        for p in [3u64, 5] {
            for a in 2..=4u32 {
                for chi in MultChar::all_primitive(p, a).unwrap().into_iter().take(12) {
                    let alpha = alpha_of_chi(&chi).unwrap();
                    assert_eq!(alpha.valuation().unwrap(), -(a as i32));
                    assert!(verify_alpha_chi(&chi, &alpha).unwrap().holds());
                    // chi^{-1} has alpha -alpha modulo p^{floor(a/2)}.
                    let inv = alpha_of_chi(&chi.inverse()).unwrap();
                    let m = p.pow(a / 2);
                    assert_eq!((inv.unit() + alpha.unit()) % m, 0);
                }
            }
        }
    }

    #[test]
    fn alpha_chi_rejects_level_one() {
        let chi = MultChar::new(5, 1, 1).unwrap();
        assert_eq!(alpha_of_chi(&chi), Err(Error::ConductorTooSmall(1)));
    }

    #[test]
    fn alpha_theta_levels() {
        let ctx = PAdicContext::new(3, 10).unwrap();
        for (ram, a) in [(false, 2), (false, 3), (false, 4), (true, 2), (true, 4)] {
            let ext = if ram { QuadExtContext::ramified(ctx.clone()) } else { QuadExtContext::unramified(ctx.clone()) };
            let th = ThetaChar::build(&ext, a).unwrap();
            let alpha = alpha_of_theta(&th).unwrap();
            assert!(alpha.is_purely_imaginary());
            assert_eq!(ext.valuation(&alpha).unwrap(), expected_alpha_theta_valuation(&ext, a));
            assert!(verify_alpha_theta(&th, &alpha).unwrap().holds());
            let conj = alpha_of_theta(&th.conjugate()).unwrap();
            let depth = (-alpha.b.valuation().unwrap()) as u32;
            let m = 3u64.pow(depth);
            // Only the class of w modulo the tested depth is determined.
            let ball_depth = if ram { a / 2 - (a / 2 - 1).div_ceil(2) } else { a / 2 };
            let mm = 3u64.pow(ball_depth).min(m);
            assert_eq!((conj.b.unit() + alpha.b.unit()) % mm, 0);
        }
    }
}
