//! The algebra `(a, b)_Q` with `i^2 = a`, `j^2 = b`, `k = ij = -ji`, and
//! orders given by rational bases.

use num_integer::Roots;
use num_traits::{One, Signed, Zero};

use super::hilbert::discriminant;
use crate::cyclo::Rational;
use crate::error::{Error, Result};

pub type Quat = [Rational; 4];

pub fn quat_from_ints(x: [i128; 4]) -> Quat {
    x.map(Rational::from_integer)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuaternionAlgebra {
    pub a: i128,
    pub b: i128,
    /// Product of the ramified primes.
    pub d: u64,
}

impl QuaternionAlgebra {
    /// Requires `a > 0` so that the real splitting exists.
    pub fn new(a: i128, b: i128) -> Result<Self> {
        if a <= 0 || b == 0 {
            return Err(Error::Invalid(format!("need a > 0 and b != 0, got ({a}, {b})")));
        }
        Ok(Self { a, b, d: discriminant(a, b)? })
    }

    pub fn is_division(&self) -> bool {
        self.d != 1
    }

    pub fn one(&self) -> Quat {
        quat_from_ints([1, 0, 0, 0])
    }

    pub fn mul(&self, x: &Quat, y: &Quat) -> Quat {
        let (a, b) = (Rational::from_integer(self.a), Rational::from_integer(self.b));
        let ab = a * b;
        [
            x[0] * y[0] + a * x[1] * y[1] + b * x[2] * y[2] - ab * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b * x[2] * y[3] + b * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a * x[1] * y[3] - a * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
        ]
    }

    pub fn conj(&self, x: &Quat) -> Quat {
        [x[0], -x[1], -x[2], -x[3]]
    }

    /// Reduced norm `x0^2 - a x1^2 - b x2^2 + a b x3^2`.
    pub fn nr(&self, x: &Quat) -> Rational {
        let (a, b) = (Rational::from_integer(self.a), Rational::from_integer(self.b));
        x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + a * b * x[3] * x[3]
    }

    /// Reduced trace `2 x0`.
    pub fn trd(&self, x: &Quat) -> Rational {
        x[0] * Rational::from_integer(2)
    }
}

/// Inverse of a 4x4 rational matrix, `None` if singular.
fn invert4(m: &[Quat; 4]) -> Option<[Quat; 4]> {
    let mut a: Vec<Vec<Rational>> = m.iter().map(|r| r.to_vec()).collect();
    let mut inv: Vec<Vec<Rational>> = (0..4).map(|i| (0..4).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
    for c in 0..4 {
        let piv = (c..4).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        inv.swap(c, piv);
        let s = a[c][c].recip();
        for j in 0..4 {
            a[c][j] *= s;
            inv[c][j] *= s;
        }
        for r in 0..4 {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c];
                for j in 0..4 {
                    let (x, y) = (a[c][j], inv[c][j]);
                    a[r][j] -= f * x;
                    inv[r][j] -= f * y;
                }
            }
        }
    }
    let mut out = [[Rational::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = inv[i][j];
        }
    }
    Some(out)
}

/// A full-rank lattice in the algebra, closed under multiplication and
/// containing 1. Rows of `basis` are coordinates in the frame `1, i, j, k`.
#[derive(Clone, Debug)]
pub struct RationalOrder {
    pub alg: QuaternionAlgebra,
    pub basis: [Quat; 4],
    inv: [Quat; 4],
}

impl RationalOrder {
    pub fn new(alg: QuaternionAlgebra, basis: [Quat; 4]) -> Result<Self> {
        let inv = invert4(&basis).ok_or_else(|| Error::NotAnOrder("basis is singular".into()))?;
        let o = Self { alg, basis, inv };
        if o.coords(&o.alg.one()).is_none() {
            return Err(Error::NotAnOrder("1 is not in the lattice".into()));
        }
        for x in &o.basis {
            for y in &o.basis {
                if o.coords(&o.alg.mul(x, y)).is_none() {
                    return Err(Error::NotAnOrder("not closed under multiplication".into()));
                }
            }
        }
        Ok(o)
    }

    /// Integral basis rows, scaled by `1 / den`.
    pub fn from_scaled(alg: QuaternionAlgebra, rows: [[i128; 4]; 4], den: i128) -> Result<Self> {
        let basis = rows.map(|r| r.map(|x| Rational::new(x, den)));
        Self::new(alg, basis)
    }

    /// The order `Z + Zi + Zj + Zk`.
    pub fn standard(alg: QuaternionAlgebra) -> Result<Self> {
        Self::from_scaled(alg, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], 1)
    }

    /// Integer coordinates of `x` in the basis, if it lies in the lattice.
    pub fn coords(&self, x: &Quat) -> Option<[i128; 4]> {
        let mut out = [0i128; 4];
        for (j, o) in out.iter_mut().enumerate() {
            let c: Rational = (0..4).map(|i| x[i] * self.inv[i][j]).sum();
            if !c.is_integer() {
                return None;
            }
            *o = c.to_integer();
        }
        Some(out)
    }

    /// Element with the given integer coordinates.
    pub fn element(&self, c: &[i128; 4]) -> Quat {
        let mut x = [Rational::zero(); 4];
        for (k, &ck) in c.iter().enumerate() {
            for (t, xt) in x.iter_mut().enumerate() {
                *xt += self.basis[k][t] * Rational::from_integer(ck);
            }
        }
        x
    }

    /// `det(trd(b_s b_t))` of the basis.
    pub fn trace_form_det(&self) -> Rational {
        let m = std::array::from_fn(|s| std::array::from_fn(|t| self.alg.trd(&self.alg.mul(&self.basis[s], &self.basis[t]))));
        det4(&m)
    }

    /// Reduced discriminant `sqrt |det trd(b_s b_t)|`.
    pub fn reduced_discriminant(&self) -> Result<u64> {
        let d = self.trace_form_det().abs();
        if !d.is_integer() {
            return Err(Error::Internal("trace form determinant is not integral".into()));
        }
        let n = d.to_integer();
        let r = n.sqrt();
        if r * r != n {
            return Err(Error::Internal(format!("trace form determinant {n} is not a square")));
        }
        u64::try_from(r).map_err(|_| Error::Internal("discriminant overflow".into()))
    }
}

fn det4(m: &[Quat; 4]) -> Rational {
    let mut a: Vec<Vec<Rational>> = m.iter().map(|r| r.to_vec()).collect();
    let mut det = Rational::one();
    for c in 0..4 {
        let Some(piv) = (c..4).find(|&r| !a[r][c].is_zero()) else { return Rational::zero() };
        if piv != c {
            a.swap(c, piv);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (dst, &x) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                *dst -= f * x;
            }
        }
    }
    det
}

/// Whether the order is maximal: its reduced discriminant equals `d`.
pub fn verify_maximal_order(order: &RationalOrder) -> Result<bool> {
    Ok(order.reduced_discriminant()? == order.alg.d)
}

/// The algebra `(3, -1)_Q` (discriminant 6) with the maximal order
/// `Z<1, i, j, (1 + i + j + k)/2>`.
pub fn disc6_fixture() -> Result<RationalOrder> {
    let alg = QuaternionAlgebra::new(3, -1)?;
    RationalOrder::from_scaled(alg, [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [1, 1, 1, 1]], 2)
}

/// The algebra `(7, -1)_Q` (discriminant 14), in which 3 and 5 split.
pub fn disc14_fixture() -> Result<RationalOrder> {
    let alg = QuaternionAlgebra::new(7, -1)?;
    RationalOrder::from_scaled(alg, [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [1, 1, 1, 1]], 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixtures_are_maximal() {
        for o in [disc6_fixture().unwrap(), disc14_fixture().unwrap()] {
            assert!(verify_maximal_order(&o).unwrap());
        }
        assert_eq!(disc6_fixture().unwrap().alg.d, 6);
        assert_eq!(disc14_fixture().unwrap().alg.d, 14);
    }

    #[test]
    fn standard_order_is_not_maximal() {
        let o = RationalOrder::standard(QuaternionAlgebra::new(3, -1).unwrap()).unwrap();
        assert_eq!(o.reduced_discriminant().unwrap(), 12);
        assert!(!verify_maximal_order(&o).unwrap());
    }

    #[test]
    fn non_closed_basis_rejected() {
        let alg = QuaternionAlgebra::new(3, -1).unwrap();
        let r = RationalOrder::from_scaled(alg.clone(), [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]], 2);
        assert!(matches!(r, Err(Error::NotAnOrder(_))));
        let r = RationalOrder::from_scaled(alg, [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], 1);
        assert!(matches!(r, Err(Error::NotAnOrder(_))));
    }

    #[test]
    fn division_and_units() {
        let alg = QuaternionAlgebra::new(3, -1).unwrap();
        assert!(alg.is_division());
        assert!(!QuaternionAlgebra::new(1, 5).unwrap().is_division());
        assert!(QuaternionAlgebra::new(-1, 3).is_err());
        let i = quat_from_ints([0, 1, 0, 0]);
        let j = quat_from_ints([0, 0, 1, 0]);
        assert_eq!(alg.mul(&i, &i), quat_from_ints([3, 0, 0, 0]));
        assert_eq!(alg.mul(&i, &j), quat_from_ints([0, 0, 0, 1]));
        assert_eq!(alg.mul(&j, &i), quat_from_ints([0, 0, 0, -1]));
    }

    /// The trace form of the discriminant agrees with `x conj(x) = nr(x)`.
    #[test]
    fn trace_form_consistent_with_norm() {
        let o = disc6_fixture().unwrap();
        for b in &o.basis {
            let n = o.alg.mul(b, &o.alg.conj(b));
            assert_eq!(n, [o.alg.nr(b), Rational::zero(), Rational::zero(), Rational::zero()]);
            assert_eq!(o.alg.trd(&o.alg.mul(b, b)), o.alg.trd(b) * o.alg.trd(b) - Rational::from_integer(2) * o.alg.nr(b));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn norm_is_multiplicative(x in prop::array::uniform4(-20i128..20), y in prop::array::uniform4(-20i128..20),
                                  ab in prop::sample::select(vec![(3i128, -1i128), (7, -1), (2, 5)])) {
            let alg = QuaternionAlgebra::new(ab.0, ab.1).unwrap();
            let (x, y) = (quat_from_ints(x), quat_from_ints(y));
            prop_assert_eq!(alg.nr(&alg.mul(&x, &y)), alg.nr(&x) * alg.nr(&y));
        }
    }
}
