//! Characters of `Z_p^x` of finite conductor, given by their value on a
//! fixed primitive root.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::{gcd, totient};
use crate::error::{Error, Result};
use crate::residue::PAdicContext;

/// `chi(g^t) = zeta^{c t}` with `zeta = exp(2 pi i / phi(p^k))` and `g` the
/// context generator; the table modulus is `p^k`, the conductor `a(chi) <= k`
/// is computed. `chi(p) = 1`.
#[derive(Clone, Debug)]
pub struct MultChar {
    ctx: Arc<PAdicContext>,
    c: u64,
    level: u32,
}

impl MultChar {
    /// Character mod `p^k` with generator exponent `c`.
    pub fn with_modulus(p: u64, k: u32, c: u64) -> Result<Self> {
        let ctx = PAdicContext::new(p, k.max(1))?;
        let order = ctx.unit_count();
        let mut ch = Self { ctx, c: c % order, level: 0 };
        ch.level = ch.compute_conductor()?;
        Ok(ch)
    }

    /// Character of exact conductor `a`; errors when `c` does not give that level.
    pub fn new(p: u64, a: u32, c: u64) -> Result<Self> {
        let ch = Self::with_modulus(p, a, c)?;
        if ch.level != a {
            return Err(Error::Invalid(format!("exponent {c} gives conductor {} not {a}", ch.level)));
        }
        Ok(ch)
    }

    /// The primitive character of level `a` with `c = 1`.
    pub fn primitive(p: u64, a: u32) -> Result<Self> {
        Self::new(p, a, 1)
    }

    /// All primitive characters of level `a` (`p` does not divide `c`).
    pub fn all_primitive(p: u64, a: u32) -> Result<Vec<Self>> {
        let order = totient(p.pow(a));
        (1..order).filter(|c| c % p != 0).map(|c| Self::new(p, a, c)).collect()
    }

    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn context(&self) -> &Arc<PAdicContext> {
        &self.ctx
    }

    /// Conductor exponent `a(chi)`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Exponent `k` of the table modulus.
    pub fn table_exp(&self) -> u32 {
        self.ctx.precision()
    }

    pub fn generator_exponent(&self) -> u64 {
        self.c
    }

    /// `phi(p^k)`: values are powers of `exp(2 pi i / order)`.
    pub fn order(&self) -> u64 {
        self.ctx.unit_count()
    }

    /// Exact order of the character.
    pub fn char_order(&self) -> u64 {
        self.order() / gcd(self.order(), self.c)
    }

    /// `chi(u) = exp(2 pi i e / order)`; `u` any integer prime to `p`.
    pub fn exponent(&self, u: u64) -> Result<u64> {
        let l = self.ctx.discrete_log(u % self.ctx.modulus())?;
        Ok(((l as u128 * self.c as u128) % self.order() as u128) as u64)
    }

    pub fn value(&self, u: u64) -> Result<Complex64> {
        let e = self.exponent(u)?;
        Ok(Complex64::from_polar(1.0, TAU * e as f64 / self.order() as f64))
    }

    pub fn inverse(&self) -> Self {
        let order = self.order();
        Self { ctx: self.ctx.clone(), c: (order - self.c) % order, level: self.level }
    }

    /// Recompute `a(chi)` from the values on `1 + p^j`.
    pub fn compute_conductor(&self) -> Result<u32> {
        let order = self.order();
        if self.c.is_multiple_of(order) {
            return Ok(0);
        }
        let k = self.table_exp();
        let mut level = 1;
        for j in (1..k).rev() {
            // 1 + p^j generates U_j / U_k for odd p.
            if self.exponent(1 + self.p().pow(j))? != 0 {
                level = j + 1;
                break;
            }
        }
        Ok(level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conductors() {
        assert_eq!(MultChar::with_modulus(3, 3, 0).unwrap().level(), 0);
        assert_eq!(MultChar::with_modulus(3, 3, 9).unwrap().level(), 1);
        assert_eq!(MultChar::with_modulus(3, 3, 3).unwrap().level(), 2);
        assert_eq!(MultChar::with_modulus(3, 3, 1).unwrap().level(), 3);
        assert!(MultChar::new(3, 3, 3).is_err());
    }

    #[test]
    fn multiplicative_exhaustive() {
        for ch in MultChar::all_primitive(5, 2).unwrap() {
            for u in (1..25u64).filter(|u| u % 5 != 0) {
                for v in (1..25u64).filter(|v| v % 5 != 0) {
                    let lhs = ch.exponent(u * v % 25).unwrap();
                    let rhs = (ch.exponent(u).unwrap() + ch.exponent(v).unwrap()) % ch.order();
                    assert_eq!(lhs, rhs);
                }
                assert!((ch.value(u).unwrap().norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn character_sum_orthogonality() {
        use crate::cyclo::RootSum;
        let ch = MultChar::with_modulus(3, 4, 6).unwrap();
        let mut s = RootSum::new(ch.order()).unwrap();
        for u in 1..81u64 {
            if u % 3 != 0 {
                s.add_root(ch.exponent(u).unwrap(), 1);
            }
        }
        assert!(s.reduce().is_zero());
    }
}
