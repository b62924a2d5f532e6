//! Smith normal form over `Z` with unimodular transforms.

use crate::error::{Error, Result};

pub type IMat = Vec<Vec<i128>>;

/// `U * A * V = D` with `D` diagonal, `d_1 | d_2 | ...`, all `d_i >= 0`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IMat,
    pub v: IMat,
    pub diag: Vec<i128>,
    pub rank: usize,
}

fn identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect()
}

fn chk(x: Option<i128>) -> Result<i128> {
    x.ok_or_else(|| Error::Internal("integer overflow in Smith form".into()))
}

struct Work {
    a: IMat,
    u: IMat,
    v: IMat,
}

impl Work {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        self.u.swap(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for r in self.a.iter_mut() {
            r.swap(i, j);
        }
        for r in self.v.iter_mut() {
            r.swap(i, j);
        }
    }

    /// row_i <- row_i - f * row_j
    fn row_sub(&mut self, i: usize, j: usize, f: i128) -> Result<()> {
        if f == 0 {
            return Ok(());
        }
        for m in [&mut self.a, &mut self.u] {
            for c in 0..m[0].len() {
                let t = chk(m[j][c].checked_mul(f))?;
                m[i][c] = chk(m[i][c].checked_sub(t))?;
            }
        }
        Ok(())
    }

    /// col_i <- col_i - f * col_j
    fn col_sub(&mut self, i: usize, j: usize, f: i128) -> Result<()> {
        if f == 0 {
            return Ok(());
        }
        for m in [&mut self.a, &mut self.v] {
            for r in m.iter_mut() {
                let t = chk(r[j].checked_mul(f))?;
                r[i] = chk(r[i].checked_sub(t))?;
            }
        }
        Ok(())
    }

    fn neg_row(&mut self, i: usize) {
        for x in self.a[i].iter_mut() {
            *x = -*x;
        }
        for x in self.u[i].iter_mut() {
            *x = -*x;
        }
    }
}

/// Smith normal form of an `m x n` integer matrix.
pub fn smith(a: &IMat) -> Result<Smith> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("ragged matrix".into()));
    }
    let mut w = Work { a: a.clone(), u: identity(m), v: identity(n) };
    let mut t = 0;
    while t < m.min(n) {
        // Pivot: smallest nonzero absolute value in the remaining block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if w.a[i][j] != 0 && best.is_none_or(|(bi, bj)| w.a[i][j].abs() < w.a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.swap_rows(t, pi);
        w.swap_cols(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..m {
                let q = w.a[i][t].div_euclid(w.a[t][t]);
                w.row_sub(i, t, q)?;
                if w.a[i][t] != 0 {
                    clean = false;
                    if w.a[i][t].abs() < w.a[t][t].abs() {
                        w.swap_rows(t, i);
                    }
                }
            }
            for j in t + 1..n {
                let q = w.a[t][j].div_euclid(w.a[t][t]);
                w.col_sub(j, t, q)?;
                if w.a[t][j] != 0 {
                    clean = false;
                    if w.a[t][j].abs() < w.a[t][t].abs() {
                        w.swap_cols(t, j);
                    }
                }
            }
            if clean {
                // Divisibility: fold in any entry the pivot does not divide.
                let p = w.a[t][t];
                let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| w.a[i][j] % p != 0));
                match bad {
                    Some(i) => {
                        // row_t <- row_t + row_i
                        w.row_sub(t, i, -1)?;
                    }
                    None => break,
                }
            }
        }
        if w.a[t][t] < 0 {
            w.neg_row(t);
        }
        t += 1;
    }
    let diag: Vec<i128> = (0..m.min(n)).map(|i| w.a[i][i]).collect();
    let rank = diag.iter().filter(|&&d| d != 0).count();
    Ok(Smith { u: w.u, v: w.v, diag, rank })
}

pub fn mat_mul(a: &IMat, b: &IMat) -> Result<IMat> {
    let n = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0i128; n]; a.len()];
    for (i, row) in a.iter().enumerate() {
        for (k, &x) in row.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = chk(out[i][j].checked_add(chk(x.checked_mul(b[k][j]))?))?;
            }
        }
    }
    Ok(out)
}

/// Integer basis (as columns, returned row-wise per basis vector) of `{z : A z = 0}`.
pub fn integer_kernel(a: &IMat) -> Result<Vec<Vec<i128>>> {
    let s = smith(a)?;
    let n = s.v.len();
    Ok((s.rank..n).map(|j| (0..n).map(|i| s.v[i][j]).collect()).collect())
}

/// Determinant by fraction-free elimination (Bareiss).
pub fn determinant(a: &IMat) -> Result<i128> {
    let n = a.len();
    if n == 0 {
        return Ok(1);
    }
    let mut m = a.clone();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let x = chk(chk(m[i][j].checked_mul(m[k][k]))?.checked_sub(chk(m[i][k].checked_mul(m[k][j]))?))?;
                m[i][j] = x / prev;
            }
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}

/// Hermite-style reduction of a lattice given by generating rows: returns a
/// basis of the row span (rank many rows).
pub fn row_basis(gens: &IMat) -> Result<IMat> {
    let s = smith(gens)?;
    // Row span of A equals row span of D V^{-1}; equivalently U A = D V^{-1}.
    let ua = mat_mul(&s.u, gens)?;
    Ok(ua.into_iter().take(s.rank).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(a: &IMat) {
        let s = smith(a).unwrap();
        let d = mat_mul(&mat_mul(&s.u, a).unwrap(), &s.v).unwrap();
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if i == j {
                    assert_eq!(x, s.diag[i]);
                } else {
                    assert_eq!(x, 0);
                }
            }
        }
        for w in s.diag.windows(2) {
            if w[1] != 0 {
                assert_eq!(w[1] % w[0], 0, "{:?}", s.diag);
            }
        }
        assert_eq!(determinant(&s.u).unwrap().abs(), 1);
        assert_eq!(determinant(&s.v).unwrap().abs(), 1);
    }

    #[test]
    fn known_form() {
        let a = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let s = smith(&a).unwrap();
        assert_eq!(s.diag, vec![2, 6, 12]);
        check(&a);
    }

    #[test]
    fn kernel_of_congruence_system() {
        // z1 + 2 z2 ≡ 0 mod 5 lifted as [1 2 -5]
        let k = integer_kernel(&vec![vec![1, 2, -5]]).unwrap();
        assert_eq!(k.len(), 2);
        for z in k {
            assert_eq!(z[0] + 2 * z[1] - 5 * z[2], 0);
        }
    }

    proptest! {
        #[test]
        fn smith_invariants(rows in 1usize..4, cols in 1usize..4, seed in proptest::collection::vec(-20i128..20, 16)) {
            let a: IMat = (0..rows).map(|i| (0..cols).map(|j| seed[i * 4 + j]).collect()).collect();
            check(&a);
            if rows == cols {
                let s = smith(&a).unwrap();
                let prod: i128 = s.diag.iter().product();
                prop_assert_eq!(prod, determinant(&a).unwrap().abs());
            }
        }
    }
}
