//! Characters of `E^x` trivial on `F^x`, built from the structure of the
//! finite abelian group `(o_E / p_E^a)^x`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::arith::{lcm, primitive_root_prime_power};
use crate::error::{Error, Result};
use crate::residue::{QuadExtContext, QuadResidueRing};
use crate::snf::smith;

/// Decomposition `U = prod Z / d_j` with coordinates of every unit.
#[derive(Clone, Debug)]
pub struct UnitGroupStructure {
    pub ring: QuadResidueRing,
    pub invariants: Vec<u64>,
    coords: Vec<Option<Vec<u64>>>,
}

impl UnitGroupStructure {
    /// Builds the structure by adjoining units one at a time to a subgroup
    /// `H` kept in Smith form: for a new `g` of order `k` modulo `H` with
    /// `g^k = prod h_j^{t_j}`, the relation lattice gains the row `(-t, k)`.
    pub fn compute(ring: &QuadResidueRing) -> Result<Self> {
        let size = ring.size() as usize;
        let mut coords: Vec<Option<Vec<u64>>> = vec![None; size];
        let one = ring.index((1, 0));
        coords[one] = Some(Vec::new());
        let mut members = vec![one];
        let mut invariants: Vec<u64> = Vec::new();
        let total = ring.unit_count() as usize;
        for idx in 0..size {
            if members.len() == total {
                break;
            }
            let g = ring.from_index(idx);
            if !ring.is_unit(g.0, g.1) || coords[idx].is_some() {
                continue;
            }
            // Order of g modulo H.
            let mut k = 1u64;
            let mut gk = g;
            let t = loop {
                gk = ring.mul(gk, g);
                k += 1;
                if let Some(c) = &coords[ring.index(gk)] {
                    break c.clone();
                }
            };
            let r = invariants.len();
            let mut rel = vec![vec![0i128; r + 1]; r + 1];
            for j in 0..r {
                rel[j][j] = invariants[j] as i128;
                rel[r][j] = -(t[j] as i128);
            }
            rel[r][r] = k as i128;
            let s = smith(&rel)?;
            let keep: Vec<usize> = (0..=r).filter(|&j| s.diag[j] != 1).collect();
            let new_inv: Vec<u64> = keep.iter().map(|&j| s.diag[j] as u64).collect();
            let transform = |x: &[u64], step: u64| -> Vec<u64> {
                keep.iter()
                    .map(|&col| {
                        let d = s.diag[col];
                        let mut acc: i128 = 0;
                        for (row, &xi) in x.iter().enumerate() {
                            acc = (acc + xi as i128 * s.v[row][col].rem_euclid(d)) % d;
                        }
                        acc = (acc + step as i128 * s.v[r][col].rem_euclid(d)) % d;
                        acc as u64
                    })
                    .collect()
            };
            let mut new_members = Vec::with_capacity(members.len() * k as usize);
            let mut new_coords: Vec<(usize, Vec<u64>)> = Vec::with_capacity(members.len() * k as usize);
            for &h in &members {
                let hx = coords[h].clone().expect("member has coordinates");
                let mut el = ring.from_index(h);
                for step in 0..k {
                    let e = ring.index(el);
                    new_coords.push((e, transform(&hx, step)));
                    new_members.push(e);
                    el = ring.mul(el, g);
                }
            }
            for (e, c) in new_coords {
                coords[e] = Some(c);
            }
            members = new_members;
            invariants = new_inv;
        }
        let prod: u64 = invariants.iter().product();
        if prod as usize != total || members.len() != total {
            return Err(Error::Internal(format!("group order {prod} != {total}")));
        }
        Ok(Self { ring: ring.clone(), invariants, coords })
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().product()
    }

    /// Exponent of the group.
    pub fn exponent(&self) -> u64 {
        self.invariants.iter().fold(1, |acc, &d| lcm(acc, d))
    }

    pub fn coords(&self, u: (u64, u64)) -> Option<&[u64]> {
        self.coords[self.ring.index(u)].as_deref()
    }

    /// Pairing of a dual vector with a unit, as an exponent modulo `exponent()`.
    fn pair(&self, c: &[u64], u: (u64, u64)) -> u64 {
        let e = self.exponent();
        let y = self.coords(u).expect("unit");
        let mut acc = 0u128;
        for ((&cj, &yj), &dj) in c.iter().zip(y).zip(&self.invariants) {
            acc += (cj as u128 * yj as u128 % dj as u128) * (e / dj) as u128;
        }
        (acc % e as u128) as u64
    }
}

/// Two residues `(x, y)` of the quadratic ring.
pub type ResiduePair = ((u64, u64), (u64, u64));

/// A character of `E^x` trivial on `F^x` with conductor `a(theta)`, tabulated on
/// `(o_E / p_E^a)^x`. Values are powers of `exp(2 pi i / order)`.
#[derive(Clone, Debug)]
pub struct ThetaChar {
    ext: QuadExtContext,
    ring: QuadResidueRing,
    order: u64,
    table: Vec<u64>,
    pi_exp: u64,
}

const NON_UNIT: u64 = u64::MAX;

/// Generators of `(1 + p_E^{a-1}) / (1 + p_E^a)`.
fn top_layer_generators(ring: &QuadResidueRing) -> Vec<(u64, u64)> {
    let (p, a) = (ring.p, ring.k);
    if ring.e == 1 {
        let t = p.pow(a - 1);
        vec![((1 + t) % ring.mx, 0), (1, t % ring.my)]
    } else if (a - 1) % 2 == 0 {
        vec![((1 + p.pow((a - 1) / 2)) % ring.mx, 0)]
    } else {
        vec![(1, p.pow((a - 2) / 2) % ring.my)]
    }
}

impl ThetaChar {
    /// All characters of exact conductor `level` trivial on `F^x`, in
    /// lexicographic order of their dual coordinates, at most `limit` of them.
    pub fn enumerate(ext: &QuadExtContext, level: u32, limit: usize) -> Result<Vec<Self>> {
        if level < 2 {
            return Err(Error::Invalid(format!("theta level must be at least 2, got {level}")));
        }
        let ring = ext.residue_ring(level);
        if ring.unit_count() > crate::residue::SHELL_BUDGET {
            return Err(Error::Budget { what: "theta unit group", size: ring.unit_count(), budget: crate::residue::SHELL_BUDGET });
        }
        let group = UnitGroupStructure::compute(&ring)?;
        let exp = group.exponent();
        let g_f = ring.from_int(primitive_root_prime_power(ring.p, ring.kx.min(2)));
        let minus_one = ring.from_int(ring.mx - 1);
        let layer = top_layer_generators(&ring);
        let mut out = Vec::new();
        let mut c = vec![0u64; group.invariants.len()];
        loop {
            let ok = group.pair(&c, g_f) == 0
                && group.pair(&c, minus_one) == 0
                && layer.iter().any(|&u| group.pair(&c, u) != 0);
            if ok {
                out.push(Self::tabulate(ext, &group, &c, exp));
                if out.len() >= limit {
                    break;
                }
            }
            // Mixed-radix increment, first coordinate fastest.
            let mut j = 0;
            while j < c.len() {
                c[j] += 1;
                if c[j] < group.invariants[j] {
                    break;
                }
                c[j] = 0;
                j += 1;
            }
            if j == c.len() {
                break;
            }
        }
        Ok(out)
    }

    /// The first character of the enumeration.
    pub fn build(ext: &QuadExtContext, level: u32) -> Result<Self> {
        Self::enumerate(ext, level, 1)?
            .pop()
            .ok_or_else(|| Error::Internal(format!("no character of conductor {level} trivial on F^x")))
    }

    fn tabulate(ext: &QuadExtContext, group: &UnitGroupStructure, c: &[u64], exp: u64) -> Self {
        let ring = group.ring.clone();
        // Even order so that theta(varpi_E) = -1 is representable.
        let order = lcm(exp, 2);
        let scale = order / exp;
        let mut table = vec![NON_UNIT; ring.size() as usize];
        for (idx, slot) in table.iter_mut().enumerate() {
            let u = ring.from_index(idx);
            if ring.is_unit(u.0, u.1) {
                *slot = group.pair(c, u) * scale;
            }
        }
        Self { ext: ext.clone(), ring, order, table, pi_exp: 0 }
    }

    pub fn ext(&self) -> &QuadExtContext {
        &self.ext
    }

    pub fn ring(&self) -> &QuadResidueRing {
        &self.ring
    }

    /// Conductor exponent `a(theta)` (the tabulation level).
    pub fn level(&self) -> u32 {
        self.ring.k
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Exponent of `theta(varpi_E)`.
    pub fn pi_exponent(&self) -> u64 {
        self.pi_exp
    }

    /// Same character with `theta(varpi_E)` negated (ramified case only).
    pub fn with_flipped_pi_sign(&self) -> Result<Self> {
        if self.ext.e() != 2 {
            return Err(Error::Invalid("theta(varpi) is forced to 1 for unramified E".into()));
        }
        let mut t = self.clone();
        t.pi_exp = (t.pi_exp + t.order / 2) % t.order;
        Ok(t)
    }

    /// `theta o conj`, which equals `theta^{-1}`.
    pub fn conjugate(&self) -> Self {
        let mut t = self.clone();
        for idx in 0..t.table.len() {
            let u = self.ring.from_index(idx);
            if self.ring.is_unit(u.0, u.1) {
                t.table[idx] = self.table[self.ring.index(self.ring.conj(u))];
            }
        }
        t
    }

    /// `theta(u)` exponent for a unit given in coordinates `(x, y)` at any level `>= a`.
    pub fn exponent(&self, u: (u64, u64)) -> u64 {
        let v = self.table[self.ring.index((u.0 % self.ring.mx, u.1 % self.ring.my.max(1)))];
        debug_assert!(v != NON_UNIT, "theta evaluated on a non-unit");
        v
    }

    /// `theta(varpi_E^c u)` exponent.
    pub fn exponent_shifted(&self, c: i64, u: (u64, u64)) -> u64 {
        let pi = ((c.rem_euclid(self.order as i64) as u128 * self.pi_exp as u128) % self.order as u128) as u64;
        (self.exponent(u) + pi) % self.order
    }

    pub fn value(&self, u: (u64, u64)) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.exponent(u) as f64 / self.order as f64)
    }

    /// Conductor recomputed from the table.
    pub fn compute_conductor(&self) -> u32 {
        let ring = &self.ring;
        let in_layer = |(x, y): (u64, u64), j: u32| -> bool {
            let xm = (x + ring.mx - 1) % ring.mx;
            let vx = if xm == 0 { u32::MAX } else { crate::arith::int_valuation(xm as i128, ring.p) };
            let vy = if y == 0 { u32::MAX } else { crate::arith::int_valuation(y as i128, ring.p) };
            if ring.e == 1 {
                vx.min(vy) >= j
            } else {
                vx.saturating_mul(2).min(vy.saturating_mul(2).saturating_add(1)) >= j
            }
        };
        let units = ring.units();
        let mut level = 0;
        for j in (0..ring.k).rev() {
            if units.iter().any(|&u| in_layer(u, j) && self.exponent(u) != 0) {
                level = j + 1;
                break;
            }
        }
        level
    }

    /// Exhaustive check that `theta` is trivial on `F^x`.
    pub fn is_trivial_on_base(&self) -> bool {
        let ring = &self.ring;
        let pi_sq_ok = if self.ext.e() == 1 { self.pi_exp == 0 } else { (2 * self.pi_exp).is_multiple_of(self.order) };
        pi_sq_ok && (1..ring.mx).filter(|x| x % ring.p != 0).all(|x| self.exponent((x, 0)) == 0)
    }

    /// Checks `theta(uv) = theta(u) theta(v)` on the given pairs.
    pub fn is_multiplicative_on(&self, pairs: &[ResiduePair]) -> bool {
        pairs.iter().all(|&(u, v)| {
            self.exponent(self.ring.mul(u, v)) == (self.exponent(u) + self.exponent(v)) % self.order
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::PAdicContext;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ext(p: u64, ram: bool) -> QuadExtContext {
        let c = PAdicContext::new(p, 8).unwrap();
        if ram {
            QuadExtContext::ramified(c)
        } else {
            QuadExtContext::unramified(c)
        }
    }

    #[test]
    fn group_structure_orders() {
        // (o_E / 3^2)^x for unramified E: order 72 = 8 * 9, F_9^x x (Z/3)^2.
        let g = UnitGroupStructure::compute(&ext(3, false).residue_ring(2)).unwrap();
        assert_eq!(g.order(), 72);
        let mut inv = g.invariants.clone();
        inv.sort();
        assert_eq!(inv, vec![3, 24]);
        let g = UnitGroupStructure::compute(&ext(5, true).residue_ring(4)).unwrap();
        assert_eq!(g.order(), 4 * 125);
    }

    #[test]
    fn coordinates_are_a_homomorphism() {
        let g = UnitGroupStructure::compute(&ext(3, false).residue_ring(3)).unwrap();
        let units = g.ring.units();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let u = units[rng.gen_range(0..units.len())];
            let v = units[rng.gen_range(0..units.len())];
            let w = g.ring.mul(u, v);
            let (cu, cv, cw) = (g.coords(u).unwrap(), g.coords(v).unwrap(), g.coords(w).unwrap());
            for j in 0..g.invariants.len() {
                assert_eq!((cu[j] + cv[j]) % g.invariants[j], cw[j]);
            }
        }
    }

    #[test]
    fn built_theta_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, ram, level) in [(3, false, 2), (3, false, 3), (3, true, 2), (3, true, 4), (5, false, 2), (5, true, 4)] {
            let e = ext(p, ram);
            let th = ThetaChar::build(&e, level).unwrap();
            assert_eq!(th.compute_conductor(), level);
            assert!(th.is_trivial_on_base());
            let units = th.ring().units();
            let pairs: Vec<_> = (0..10_000)
                .map(|_| (units[rng.gen_range(0..units.len())], units[rng.gen_range(0..units.len())]))
                .collect();
            assert!(th.is_multiplicative_on(&pairs));
            // theta o conj = theta^{-1}
            let conj = th.conjugate();
            for &u in units.iter().take(200) {
                assert_eq!((conj.exponent(u) + th.exponent(u)) % th.order(), 0);
            }
        }
    }

    #[test]
    fn odd_ramified_level_has_no_character() {
        assert!(ThetaChar::build(&ext(3, true), 3).is_err());
    }
}
