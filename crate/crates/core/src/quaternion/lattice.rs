//! Sublattices of a maximal order containing 1, their Smith shapes and the
//! level-type lattices `Z + Z xi + M O`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::algebra::{Quat, RationalOrder};
use crate::arith::{int_valuation, ipow, legendre};
use crate::error::{Error, Result};
use crate::snf::{determinant, row_basis, smith, IMat};

#[derive(Clone, Debug)]
pub struct TidyLattice {
    pub parent: Arc<RationalOrder>,
    /// Rows: coordinates of a basis in the parent order's basis.
    pub coords: [[i128; 4]; 4],
    /// Index `[O : Lambda]`.
    pub index: u64,
    /// `O / Lambda = Z/M1 x Z/M2 x Z/M3`, `M1 | M2 | M3`.
    pub shape: (u64, u64, u64),
}

impl TidyLattice {
    pub fn maximal(parent: Arc<RationalOrder>) -> Self {
        let coords = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];
        Self { parent, coords, index: 1, shape: (1, 1, 1) }
    }

    /// Lattice spanned by the given rows (in parent coordinates); must contain 1.
    pub fn from_generators(parent: Arc<RationalOrder>, gens: &IMat) -> Result<Self> {
        let basis = row_basis(gens)?;
        if basis.len() != 4 {
            return Err(Error::Invalid("lattice is not of full rank".into()));
        }
        let mut coords = [[0i128; 4]; 4];
        for (r, row) in basis.iter().enumerate() {
            coords[r].copy_from_slice(row);
        }
        let index = u64::try_from(determinant(&basis)?.unsigned_abs()).map_err(|_| Error::Invalid("index overflow".into()))?;
        let mut diag = smith(&basis)?.diag;
        diag.sort_unstable();
        if diag[0] != 1 {
            return Err(Error::Invalid("lattice is contained in a proper multiple of the order".into()));
        }
        let shape = (diag[1] as u64, diag[2] as u64, diag[3] as u64);
        let lat = Self { parent, coords, index, shape };
        let one = lat.parent.coords(&lat.parent.alg.one()).expect("order contains 1");
        if !lat.contains_coords(&one) {
            return Err(Error::Invalid("lattice does not contain 1".into()));
        }
        Ok(lat)
    }

    /// `M3 | M1 M2`.
    pub fn is_tidy(&self) -> bool {
        is_tidy_shape(self.shape)
    }

    fn contains_coords(&self, c: &[i128; 4]) -> bool {
        // Solve c = t * coords over Q and test integrality, via the Smith form.
        let mut gens: IMat = self.coords.iter().map(|r| r.to_vec()).collect();
        gens.push(c.to_vec());
        match (row_basis(&gens), determinant(&self.coords.iter().map(|r| r.to_vec()).collect())) {
            (Ok(b), Ok(d)) => determinant(&b).map(|e| e.abs() == d.abs()).unwrap_or(false),
            _ => false,
        }
    }

    pub fn contains(&self, x: &Quat) -> bool {
        self.parent.coords(x).is_some_and(|c| self.contains_coords(&c))
    }

    /// Basis in the frame `1, i, j, k`.
    pub fn basis(&self) -> [Quat; 4] {
        self.coords.map(|c| self.parent.element(&c))
    }

    /// Whether `Lambda * Lambda` is contained in `Lambda`.
    pub fn is_ring(&self) -> bool {
        let b = self.basis();
        b.iter().all(|x| b.iter().all(|y| self.contains(&self.parent.alg.mul(x, y))))
    }

    /// Whether `self` is contained in `other` (same parent order).
    pub fn is_sublattice_of(&self, other: &TidyLattice) -> bool {
        self.coords.iter().all(|c| other.contains_coords(c))
    }
}

pub fn is_tidy_shape((m1, m2, m3): (u64, u64, u64)) -> bool {
    (m1 * m2) % m3 == 0
}

fn trd_nr(order: &RationalOrder, c: &[i128; 4]) -> (i128, i128) {
    let x = order.element(c);
    let (t, n) = (order.alg.trd(&x), order.alg.nr(&x));
    (t.to_integer(), n.to_integer())
}

/// Small elements of `O` in coordinate order, excluding `Z`.
fn small_elements(bound: i128) -> impl Iterator<Item = [i128; 4]> {
    let r = -bound..=bound;
    r.clone().flat_map(move |a| {
        let r = -bound..=bound;
        r.clone().flat_map(move |b| (-bound..=bound).flat_map(move |c| (-bound..=bound).map(move |d| [a, b, c, d])))
    })
}

/// An element whose characteristic polynomial has distinct roots mod `p`,
/// so that `Z_p[xi]` is the diagonal torus under any splitting at `p`.
fn split_generator(order: &RationalOrder, p: u64) -> Result<[i128; 4]> {
    for c in small_elements(2) {
        let (t, n) = trd_nr(order, &c);
        if legendre(t * t - 4 * n, p) == 1 && !in_z_plus_p_o(order, &c, p) {
            return Ok(c);
        }
    }
    Err(Error::Invalid(format!("no split generator found at p = {p}")))
}

/// An element with `v_p(nr) = 1`, a uniformizer of the local division order.
fn ramified_generator(order: &RationalOrder, p: u64) -> Result<[i128; 4]> {
    for c in small_elements(2) {
        let (_, n) = trd_nr(order, &c);
        if n != 0 && int_valuation(n, p) == 1 {
            return Ok(c);
        }
    }
    Err(Error::Invalid(format!("no uniformizer found at p = {p}")))
}

/// Whether `c` lies in `Z + pO` (then `Z + Z xi + p^r O` is too large).
fn in_z_plus_p_o(order: &RationalOrder, c: &[i128; 4], p: u64) -> bool {
    let one = order.coords(&order.alg.one()).expect("order contains 1");
    (0..p as i128).any(|s| (0..4).all(|t| (c[t] - s * one[t]).rem_euclid(p as i128) == 0))
}

/// `Z + Z xi + M O` from the coordinates of `xi`.
fn level_lattice(order: Arc<RationalOrder>, xi: [i128; 4], m: i128) -> Result<TidyLattice> {
    let one = order.coords(&order.alg.one()).expect("order contains 1");
    let mut gens: IMat = vec![one.to_vec(), xi.to_vec()];
    for t in 0..4 {
        let mut row = vec![0i128; 4];
        row[t] = m;
        gens.push(row);
    }
    TidyLattice::from_generators(order, &gens)
}

/// The lattice whose completion at each planned prime `p` is the local order
/// of matrices congruent to diagonal mod `p^r` (under a splitting), and the
/// maximal order elsewhere. Shape `(1, M, M)` with `M = prod p^r`.
pub fn build_tidy_lattice(order: Arc<RationalOrder>, plan: &BTreeMap<u64, u32>) -> Result<TidyLattice> {
    let mut modulus: i128 = 1;
    let mut xi = [0i128; 4];
    for (&p, &r) in plan.iter().filter(|(_, &r)| r > 0) {
        crate::arith::check_odd_prime(p)?;
        if order.alg.d.is_multiple_of(p) {
            return Err(Error::Invalid(format!("p = {p} ramifies in the algebra")));
        }
        let pr = ipow(p, r) as i128;
        let g = split_generator(&order, p)?;
        // CRT per coordinate: xi = g mod p^r, unchanged mod the previous modulus.
        let inv = crate::arith::inv_mod((modulus.rem_euclid(pr)) as u64, pr as u64).expect("coprime moduli") as i128;
        for t in 0..4 {
            let k = ((g[t] - xi[t]).rem_euclid(pr) * inv).rem_euclid(pr);
            xi[t] += modulus * k;
        }
        modulus = modulus.checked_mul(pr).ok_or_else(|| Error::Invalid("plan modulus overflow".into()))?;
    }
    if modulus == 1 {
        return Ok(TidyLattice::maximal(order));
    }
    level_lattice(order, xi, modulus)
}

/// `Z + Z Pi + p^r O` at a ramified prime `p`, `Pi` a local uniformizer.
/// Also of shape `(1, p^r, p^r)`.
pub fn ramified_level_lattice(order: Arc<RationalOrder>, p: u64, r: u32) -> Result<TidyLattice> {
    crate::arith::check_odd_prime(p)?;
    if !order.alg.d.is_multiple_of(p) {
        return Err(Error::Invalid(format!("p = {p} does not ramify in the algebra")));
    }
    if r == 0 {
        return Ok(TidyLattice::maximal(order));
    }
    let pi = ramified_generator(&order, p)?;
    level_lattice(order, pi, ipow(p, r) as i128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::algebra::{disc14_fixture, disc6_fixture};

    #[test]
    fn empty_plan_is_the_maximal_order() {
        let o = Arc::new(disc14_fixture().unwrap());
        let l = build_tidy_lattice(o, &BTreeMap::new()).unwrap();
        assert_eq!((l.index, l.shape), (1, (1, 1, 1)));
        assert!(l.is_tidy());
    }

    #[test]
    fn split_plans_have_square_shapes() {
        let o = Arc::new(disc14_fixture().unwrap());
        for (plan, n, shape) in [
            (vec![(3u64, 1u32)], 9u64, (1u64, 3u64, 3u64)),
            (vec![(3, 2)], 81, (1, 9, 9)),
            (vec![(3, 1), (5, 1)], 225, (1, 15, 15)),
        ] {
            let plan: BTreeMap<u64, u32> = plan.into_iter().collect();
            let l = build_tidy_lattice(o.clone(), &plan).unwrap();
            assert_eq!(l.index, n);
            assert_eq!(l.shape, shape);
            assert_eq!(l.shape.0 * l.shape.1 * l.shape.2, l.index);
            assert!(l.is_tidy());
            assert!(l.is_ring());
            assert!(l.is_sublattice_of(&TidyLattice::maximal(o.clone())));
        }
    }

    #[test]
    fn ramified_primes_rejected_by_split_plans() {
        let o = Arc::new(disc6_fixture().unwrap());
        assert!(build_tidy_lattice(o.clone(), &[(3u64, 1u32)].into_iter().collect()).is_err());
        assert!(ramified_level_lattice(o.clone(), 5, 1).is_err());
    }

    #[test]
    fn ramified_level_lattices_are_nested() {
        let o = Arc::new(disc6_fixture().unwrap());
        let l1 = ramified_level_lattice(o.clone(), 3, 1).unwrap();
        let l2 = ramified_level_lattice(o.clone(), 3, 2).unwrap();
        assert_eq!((l1.index, l1.shape), (9, (1, 3, 3)));
        assert_eq!((l2.index, l2.shape), (81, (1, 9, 9)));
        assert!(l1.is_ring() && l2.is_ring());
        assert!(l2.is_sublattice_of(&l1));
        assert!(!l1.is_sublattice_of(&l2));
    }

    #[test]
    fn hand_built_lattice_is_not_tidy() {
        let o = Arc::new(disc6_fixture().unwrap());
        let gens = vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 3]];
        let l = TidyLattice::from_generators(o, &gens).unwrap();
        assert_eq!(l.shape, (1, 1, 3));
        assert!(!l.is_tidy());
    }

    #[test]
    fn lattice_without_one_rejected() {
        let o = Arc::new(disc6_fixture().unwrap());
        let gens = vec![vec![3, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]];
        assert!(TidyLattice::from_generators(o, &gens).is_err());
    }
}
