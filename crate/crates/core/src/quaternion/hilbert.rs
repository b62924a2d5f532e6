//! Local Hilbert symbols over `Q` and the discriminant of `(a, b)_Q`.

use crate::arith::{int_valuation, is_prime, legendre, prime_factors};
use crate::error::{Error, Result};

/// A place of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    Finite(u64),
    Infinite,
}

fn split(n: i128, p: u64) -> (u32, i128) {
    let v = int_valuation(n, p);
    (v, n / (p as i128).pow(v))
}

/// `(a, b)_v` in `{+1, -1}`.
pub fn local_hilbert_symbol(a: i128, b: i128, v: Place) -> Result<i32> {
    if a == 0 || b == 0 {
        return Err(Error::Invalid("Hilbert symbol of zero".into()));
    }
    match v {
        Place::Infinite => Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Finite(2) => {
            let (al, u) = split(a, 2);
            let (be, w) = split(b, 2);
            let eps = |x: i128| ((x - 1) / 2).rem_euclid(2);
            let omega = |x: i128| ((x * x - 1) / 8).rem_euclid(2);
            let e = eps(u) * eps(w) + al as i128 * omega(w) + be as i128 * omega(u);
            Ok(if e % 2 == 0 { 1 } else { -1 })
        }
        Place::Finite(p) => {
            if !is_prime(p) {
                return Err(Error::Invalid(format!("{p} is not prime")));
            }
            let (al, u) = split(a, p);
            let (be, w) = split(b, p);
            let mut s = if (al as u64 * be as u64) % 2 == 1 && (p - 1) / 2 % 2 == 1 { -1 } else { 1 };
            if be % 2 == 1 {
                s *= legendre(u, p);
            }
            if al % 2 == 1 {
                s *= legendre(w, p);
            }
            Ok(s)
        }
    }
}

/// Primes at which `(a, b)_Q` ramifies, in increasing order.
pub fn ramified_primes(a: i128, b: i128) -> Result<Vec<u64>> {
    let mut cands: Vec<u64> = vec![2];
    for x in [a, b] {
        let m = u64::try_from(x.unsigned_abs()).map_err(|_| Error::Invalid("Hilbert pair too large".into()))?;
        if m > 1 {
            cands.extend(prime_factors(m));
        }
    }
    cands.sort_unstable();
    cands.dedup();
    let mut out = Vec::new();
    for p in cands {
        if local_hilbert_symbol(a, b, Place::Finite(p))? == -1 {
            out.push(p);
        }
    }
    Ok(out)
}

/// Product of the ramified finite primes.
pub fn discriminant(a: i128, b: i128) -> Result<u64> {
    Ok(ramified_primes(a, b)?.into_iter().product())
}
