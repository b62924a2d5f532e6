//! The additive character `psi(x) = exp(2 pi i {x})` of conductor exponent 0,
//! and `psi_E = psi o tr`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::Result;
use crate::residue::{PAdicScalar, QuadExtContext, QuadExtElement};

/// `psi(x)` as `r / p^t`, i.e. `psi(x) = e^{2 pi i r / p^t}`. Requires `v(x) >= -t`.
pub fn psi_exponent(x: &PAdicScalar, t: u32) -> Result<u64> {
    x.fractional_numerator(t)
}

/// `psi(x)` in floating point.
pub fn psi(x: &PAdicScalar) -> Result<Complex64> {
    if x.is_zero() || x.valuation()? >= 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let t = (-x.valuation()?) as u32;
    let r = psi_exponent(x, t)?;
    Ok(Complex64::from_polar(1.0, TAU * r as f64 / x.p().pow(t) as f64))
}

/// `psi_E(u) = psi(tr u)`.
pub fn psi_e(ext: &QuadExtContext, u: &QuadExtElement) -> Result<Complex64> {
    psi(&ext.trace(u))
}

/// Exponent of `psi(r / p^t)` for an integer residue `r`: the value itself,
/// reduced. Convenience for sums written directly over residues.
pub fn psi_residue(r: i128, t: u32, p: u64) -> u64 {
    crate::arith::reduce_signed(r, p.pow(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::PAdicContext;
    use proptest::prelude::*;

    #[test]
    fn conductor_zero() {
        let c = PAdicContext::new(3, 6).unwrap();
        for v in 0..3 {
            for u in [1u64, 2, 4, 5] {
                assert!((psi(&c.from_parts(v, u)).unwrap() - 1.0).norm() < 1e-15);
            }
        }
        // Nontrivial on p^{-1} o.
        assert!((psi(&c.from_parts(-1, 1)).unwrap() - 1.0).norm() > 0.5);
    }

    #[test]
    fn psi_e_has_conductor_one_minus_e() {
        let c = PAdicContext::new(3, 6).unwrap();
        // Unramified: trivial on o_E, nontrivial on p_E^{-1} = p^{-1} o_E.
        let unr = QuadExtContext::unramified(c.clone());
        let x = unr.element(c.from_parts(0, 2), c.from_parts(0, 1));
        assert!((psi_e(&unr, &x).unwrap() - 1.0).norm() < 1e-15);
        let y = unr.element(c.from_parts(-1, 1), c.zero());
        assert!((psi_e(&unr, &y).unwrap() - 1.0).norm() > 0.5);
        // Ramified: trivial on p_E^{-1} = (1/sqrt D) o_E, nontrivial on p_E^{-2}.
        let ram = QuadExtContext::ramified(c.clone());
        let inv_pi = ram.inv(&ram.sqrt_d()).unwrap();
        assert!((psi_e(&ram, &inv_pi).unwrap() - 1.0).norm() < 1e-15);
        let deeper = ram.element(c.from_parts(-1, 1), c.zero());
        assert!((psi_e(&ram, &deeper).unwrap() - 1.0).norm() > 0.5);
    }

    proptest! {
        #[test]
        fn psi_additive(v1 in -4i32..2, u1 in 1u64..729, v2 in -4i32..2, u2 in 1u64..729) {
            prop_assume!(u1 % 3 != 0 && u2 % 3 != 0);
            let c = PAdicContext::new(3, 8).unwrap();
            let x = c.from_parts(v1, u1);
            let y = c.from_parts(v2, u2);
            let s = x.checked_add(&y).unwrap();
            let lhs = psi(&s).unwrap();
            let rhs = psi(&x).unwrap() * psi(&y).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((psi(&x).unwrap() * psi(&x.neg()).unwrap() - 1.0).norm() < 1e-12);
        }
    }
}
