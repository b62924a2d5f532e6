//! Exponent bookkeeping for the sup-norm bound: local control parameters
//! `(eta1, delta, eta2)` to the exponent of the conductor, and the per-prime
//! filtration schedule of the amplifier.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Exponent = Ratio<i64>;

fn check(eta1: Exponent, eta2: Exponent) -> Result<()> {
    if eta1 < Exponent::from_integer(0) || eta1 > eta2 {
        return Err(Error::Invalid(format!("need 0 <= eta1 <= eta2, got eta1 = {eta1}, eta2 = {eta2}")));
    }
    Ok(())
}

/// `delta / 2 + eta1 / 2 - eta2 / 6`, the exponent of `C1(pi)`.
pub fn supnorm_exponent(eta1: Exponent, delta: Exponent, eta2: Exponent) -> Result<Exponent> {
    check(eta1, eta2)?;
    Ok(delta / 2 + eta1 / 2 - eta2 / 6)
}

/// Exponent of `p^n` in the depth aspect, where `C1 ~ p^{n/2}`.
pub fn depth_exponent(eta1: Exponent, delta: Exponent, eta2: Exponent) -> Result<Exponent> {
    Ok(supnorm_exponent(eta1, delta, eta2)? / 2)
}

/// Per-prime schedules `eta_{p,i} = eta1 + (i - 1)(eta2 - eta1) / a1`,
/// `i = 1..=a1 + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    pub schedules: BTreeMap<u64, Vec<Exponent>>,
    /// Amplifier length `Lambda = C1^{eta2 / 3}`.
    pub amplifier_exponent: Exponent,
}

impl Filtration {
    /// Number of tuples `(i_p)_p`, i.e. `prod r_p`.
    pub fn tuple_count(&self) -> usize {
        self.schedules.values().map(Vec::len).product()
    }
}

pub fn filtration_schedule(a1: &BTreeMap<u64, u32>, eta1: Exponent, eta2: Exponent) -> Result<Filtration> {
    check(eta1, eta2)?;
    let mut schedules = BTreeMap::new();
    for (&p, &a) in a1 {
        if a == 0 {
            return Err(Error::Invalid(format!("a1 at p = {p} must be at least 1")));
        }
        let step = (eta2 - eta1) / i64::from(a);
        schedules.insert(p, (0..=i64::from(a)).map(|i| eta1 + step * i).collect());
    }
    Ok(Filtration { schedules, amplifier_exponent: eta2 / 3 })
}
