//! Evaluation of `Phi^(i)(a, m)` by stationary phase: the double sum is split
//! into half-level balls, the inner ball sums are evaluated in closed form
//! (they vanish unless a linearized phase is integral), and only the
//! surviving critical residue pairs `(x0, u0)` are summed.

use std::time::Instant;

use crate::arith::{inv_mod, ipow, lcm, mul_mod, reduce_signed, sqrt_mod_prime, sub_mod, totient};
use crate::characters::gauss::ShellGeometry;
use crate::characters::{alpha_of_chi, alpha_of_theta, MultChar, ThetaChar};
use crate::cyclo::{Rational, RootSum};
use crate::error::{Error, Result};
use crate::matcoef::{psi_depth, MatCoefQuery, PhiEvaluator, PhiValue};
use crate::residue::PAdicScalar;
use crate::whittaker::{Family, ReprSpec};

fn vp(x: u64, p: u64) -> u32 {
    if x == 0 {
        u32::MAX
    } else {
        crate::arith::int_valuation(x as i128, p)
    }
}

/// All square roots of `d` modulo `p^e`.
pub fn sqrt_mod_prime_power(d: u64, p: u64, e: u32) -> Vec<u64> {
    if e == 0 {
        return vec![0];
    }
    let m = ipow(p, e);
    let d = d % m;
    if d == 0 {
        let step = ipow(p, e.div_ceil(2));
        return (0..m / step).map(|k| k * step).collect();
    }
    let v = vp(d, p);
    if v % 2 == 1 {
        return Vec::new();
    }
    let t = v / 2;
    let unit = d / ipow(p, v);
    let e2 = e - v;
    let m2 = ipow(p, e2);
    let Some(r0) = sqrt_mod_prime(unit % p, p) else { return Vec::new() };
    // Hensel lift r^2 = unit mod p^{e2}.
    let mut r = r0;
    let mut mk = p;
    while mk < m2 {
        let next = (mk * p).min(m2);
        let f = sub_mod(mul_mod(r, r, next), unit % next, next);
        let inv2r = inv_mod(mul_mod(2, r, next), next).expect("unit derivative");
        r = sub_mod(r, mul_mod(f, inv2r, next), next);
        mk = next;
    }
    // s = p^t s', s'^2 = unit mod p^{e2}, s' determined mod p^{e2}, free mod p^{e - t}.
    let pt = ipow(p, t);
    let free = ipow(p, e - t) / m2;
    let mut out = Vec::new();
    for base in [r, (m2 - r) % m2] {
        for k in 0..free {
            let s = mul_mod(pt, base + k * m2, m);
            out.push(s);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All `u mod p^e` with `a u^2 + b u + c = 0 mod p^e`.
pub fn solve_quadratic_mod(a: i128, b: i128, c: i128, p: u64, e: u32) -> Result<Vec<u64>> {
    if p == 2 {
        return Err(Error::NotOddPrime(2));
    }
    crate::arith::check_odd_prime(p)?;
    if e == 0 {
        return Ok(vec![0]);
    }
    let m = ipow(p, e);
    let (ar, br, cr) = (reduce_signed(a, m), reduce_signed(b, m), reduce_signed(c, m));
    let g = vp(ar, p).min(vp(br, p)).min(vp(cr, p));
    if g >= e {
        return Ok((0..m).collect());
    }
    let pg = ipow(p, g);
    let e1 = e - g;
    let m1 = ipow(p, e1);
    let (a1, b1, c1) = ((ar / pg) % m1, (br / pg) % m1, (cr / pg) % m1);
    let base: Vec<u64> = if a1 % p != 0 {
        // (2 a u + b)^2 = b^2 - 4 a c.
        let disc = sub_mod(mul_mod(b1, b1, m1), mul_mod(4 % m1, mul_mod(a1, c1, m1), m1), m1);
        let inv2a = inv_mod(mul_mod(2, a1, m1), m1).expect("unit");
        let mut sols: Vec<u64> = sqrt_mod_prime_power(disc, p, e1)
            .into_iter()
            .map(|s| mul_mod(sub_mod(s, b1, m1), inv2a, m1))
            .collect();
        sols.sort_unstable();
        sols.dedup();
        sols
    } else if b1 % p != 0 {
        // Simple root: Newton iteration from the root mod p.
        let mut u = mul_mod(sub_mod(0, c1 % p, p), inv_mod(b1 % p, p).expect("unit"), p);
        let mut mk = p;
        while mk < m1 {
            let next = (mk * p).min(m1);
            let f = (mul_mod(a1 % next, mul_mod(u, u, next), next) + mul_mod(b1 % next, u, next) + c1 % next) % next;
            let df = (mul_mod(2 * a1 % next, u, next) + b1 % next) % next;
            u = sub_mod(u, mul_mod(f, inv_mod(df, next).expect("unit derivative"), next), next);
            mk = next;
        }
        vec![u]
    } else {
        Vec::new()
    };
    // Lift solutions mod p^{e1} to mod p^e.
    let mut out = Vec::with_capacity(base.len() * pg as usize);
    for u in base {
        for k in 0..pg {
            out.push(u + k * m1);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Solutions of `A u^2 + B u + C = 0 mod p^e` for integral p-adic coefficients.
pub fn solve_quadratic_congruence(a: &PAdicScalar, b: &PAdicScalar, c: &PAdicScalar, e: u32) -> Result<Vec<u64>> {
    let p = a.p();
    let r = |x: &PAdicScalar| -> Result<i128> { Ok(x.residue(e)? as i128) };
    solve_quadratic_mod(r(a)?, r(b)?, r(c)?, p, e)
}

/// All lifts modulo `p^to` of a residue known modulo `p^from`.
fn lifts(r: u64, p: u64, from: u32, to: u32) -> impl Iterator<Item = u64> {
    let (mf, mt) = (ipow(p, from.min(to)), ipow(p, to));
    let r = r % mf;
    (0..mt / mf).map(move |k| r + k * mf)
}

/// A surviving pair with its phase `exp(2 pi i phase / modulus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CriticalPair {
    pub x0: u64,
    pub u0: (u64, u64),
    pub phase: u64,
}

/// Ball sizes and congruence exponents of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceSystem {
    pub family: &'static str,
    /// `x = x0 (1 + dx)`, `dx in p^kx`.
    pub kx: u32,
    /// `u = u0 (1 + du)` with `du` in `p^ku` (resp. `p_E^ku`).
    pub ku: u32,
    /// Exponent of the linear congruence on `x0`.
    pub x_condition: i64,
    /// Exponent of the congruence on `u0`.
    pub u_condition: i64,
}

#[derive(Clone, Debug)]
pub struct FastValue {
    pub value: PhiValue,
    pub pairs: Vec<CriticalPair>,
    /// Candidate pairs produced by the congruence solver (all checked exactly).
    pub candidates: usize,
    pub system: CongruenceSystem,
}

enum Kind {
    Ps { mu: MultChar, w: u64 },
    Sc { theta: ThetaChar, shell: ShellGeometry, w_beta: u64 },
    Delegate(Box<PhiEvaluator>),
}

/// Fast evaluator at fixed `(spec, i)`.
pub struct FastEvaluator {
    pub spec: ReprSpec,
    pub i: u32,
    kind: Kind,
    c0: crate::cyclo::CycloValue,
    w_modulus: u64,
    w_scale: Rational,
    /// Extra refinement of both ball levels (0 = half level).
    pub refine: u32,
}

impl FastEvaluator {
    pub fn new(spec: &ReprSpec, i: u32) -> Result<Self> {
        Self::with_refinement(spec, i, 0)
    }

    pub fn with_refinement(spec: &ReprSpec, i: u32, refine: u32) -> Result<Self> {
        spec.check_index(i)?;
        if i + 1 >= spec.n {
            let ev = PhiEvaluator::new(spec, i)?;
            let t = ev.table.clone();
            return Ok(Self { spec: spec.clone(), i, c0: t.c0.clone(), w_modulus: t.modulus, w_scale: t.scale, kind: Kind::Delegate(Box::new(ev)), refine });
        }
        // Only the normalizer and moduli are taken from the table construction.
        let (c0, w_modulus, w_scale) = normalizer(spec, i)?;
        let kind = match &spec.family {
            Family::PrincipalSeries { mu } => {
                let alpha = alpha_of_chi(mu)?;
                Kind::Ps { mu: mu.clone(), w: alpha.unit() }
            }
            Family::Supercuspidal { theta } => {
                let alpha = alpha_of_theta(theta)?;
                Kind::Sc { theta: theta.clone(), shell: ShellGeometry::new(theta), w_beta: alpha.b.unit() }
            }
        };
        Ok(Self { spec: spec.clone(), i, kind, c0, w_modulus, w_scale, refine })
    }

    pub fn eval(&self, a: &PAdicScalar, m: &PAdicScalar) -> Result<FastValue> {
        match &self.kind {
            Kind::Delegate(ev) => {
                let value = ev.eval(a, m)?;
                let system = CongruenceSystem { family: "delegated", kx: 0, ku: 0, x_condition: 0, u_condition: 0 };
                Ok(FastValue { value, pairs: Vec::new(), candidates: 0, system })
            }
            Kind::Ps { mu, w } => self.eval_ps(mu, *w, a, m),
            Kind::Sc { theta, shell, w_beta } => self.eval_sc(theta, shell, *w_beta, a, m),
        }
    }

    /// Modulus of the exact sums for a supported query (`k = ` outer level).
    fn modulus(&self, k: u32) -> u64 {
        lcm(self.w_modulus, ipow(self.spec.p, k))
    }

    fn zero_value(&self, k: u32, system: CongruenceSystem) -> Result<FastValue> {
        let numerator = crate::cyclo::CycloValue::zero(self.modulus(k))?;
        Ok(FastValue { value: PhiValue { numerator, c0: self.c0.clone(), terms: 0 }, pairs: Vec::new(), candidates: 0, system })
    }

    /// Off-support queries vanish: `v(a) = 0` and `v(m) = i - n` are required.
    fn supported(&self, a: &PAdicScalar, m: &PAdicScalar) -> bool {
        !a.is_zero() && a.valuation_or_max() == 0 && !m.is_zero() && m.valuation_or_max() == self.i as i32 - self.spec.n as i32
    }

    fn finish(&self, k: u32, pairs: Vec<CriticalPair>, candidates: usize, weight: Rational, system: CongruenceSystem) -> Result<FastValue> {
        let modulus = self.modulus(k);
        let mut s = RootSum::new(modulus)?;
        for pr in &pairs {
            s.add_root(pr.phase, 1);
        }
        let units = totient(ipow(self.spec.p, k));
        let numerator = s.reduce().with_scale(weight * self.w_scale * Rational::new(1, units as i128));
        Ok(FastValue { value: PhiValue { numerator, c0: self.c0.clone(), terms: candidates as u64 }, pairs, candidates, system })
    }

    fn eval_ps(&self, mu: &MultChar, w: u64, a: &PAdicScalar, m: &PAdicScalar) -> Result<FastValue> {
        let (p, n, n0, i) = (self.spec.p, self.spec.n, self.spec.n0, self.i);
        let l = i - n0;
        let kx = (n0.div_ceil(2) + self.refine).min(n0);
        let ku = ((n - i).div_ceil(2) + self.refine).min(n0);
        let e_a = n0 as i64 - kx as i64;
        let e_b = n0 as i64 - ku as i64 - l as i64;
        let system = CongruenceSystem { family: "ps", kx, ku, x_condition: e_a, u_condition: e_b };
        let k = n0;
        if !self.supported(a, m) {
            return self.zero_value(k.max(psi_depth(m)).max(1), system);
        }
        let pn0 = ipow(p, n0);
        let ar = a.residue(n0)?;
        let m1 = m.unit() % pn0;
        let pl = ipow(p, l);
        let pn_i = ipow(p, n - i);
        let modulus = self.modulus(k);
        let (s_mu, s_n0, s_ni) = (modulus / mu.order(), modulus / pn0, modulus / pn_i);
        // u0 from m1 u^2 + 2 p^l m1 u - a = 0 mod p^{e_b}.
        let r = e_b.max(0) as u32;
        let u_roots = solve_quadratic_mod(m1 as i128, 2 * (pl as i128) * m1 as i128, -(ar as i128), p, r)?;
        let mut candidates = 0;
        let mut pairs = Vec::new();
        let ea = e_a.max(0) as u32;
        let mea = ipow(p, ea);
        for &u_r in &u_roots {
            for u0 in lifts(u_r, p, r, ku).filter(|u| u % p != 0) {
                // x0 = w / (a - m1 p^l u0) mod p^{e_a}.
                let den = sub_mod(ar % mea, mul_mod(mul_mod(m1, pl, mea), u0 % mea, mea), mea);
                let x_r = if ea == 0 { 0 } else { mul_mod(w % mea, inv_mod(den, mea).ok_or_else(|| Error::Internal("non-unit denominator".into()))?, mea) };
                for x0 in lifts(x_r, p, ea, kx).filter(|x| x % p != 0) {
                    candidates += 1;
                    if !ps_critical(p, l, e_a, e_b, ar, m1, w, x0, u0) {
                        continue;
                    }
                    // psi(m x0 u0) mu(1 + u0^{-1} p^l) mu(a x0) psi(-p^{-n0} a x0)
                    let uinv = inv_mod(u0 % pn0, pn0).expect("unit");
                    let ph1 = mul_mod(mul_mod(m1 % pn_i, x0 % pn_i, pn_i), u0 % pn_i, pn_i) * s_ni;
                    let tw = (1 + mul_mod(uinv, pl % pn0, pn0)) % pn0;
                    let ax = mul_mod(ar, x0 % pn0, pn0);
                    let ph2 = ((mu.exponent(tw)? + mu.exponent(ax)?) % mu.order()) * s_mu;
                    let ph3 = ((pn0 - ax) % pn0) * s_n0;
                    pairs.push(CriticalPair { x0, u0: (u0, 0), phase: (ph1 + ph2 + ph3) % modulus });
                }
            }
        }
        let weight = Rational::from_integer(ipow(p, (n0 - kx) + (n0 - ku)) as i128);
        self.finish(k, pairs, candidates, weight, system)
    }

    fn eval_sc(&self, theta: &ThetaChar, shell: &ShellGeometry, w_beta: u64, a: &PAdicScalar, m: &PAdicScalar) -> Result<FastValue> {
        let (p, n, i) = (self.spec.p, self.spec.n, self.i);
        let e = shell.ring.e;
        let at = shell.a;
        let k = n - i;
        let kx = ((n - i).div_ceil(2) + self.refine).min(k);
        let ku = (at.div_ceil(2) + self.refine).min(at);
        let e_i = k as i64 - kx as i64;
        let t = 1 - e as i64 - ku as i64;
        let system = CongruenceSystem { family: if e == 1 { "sc-unramified" } else { "sc-ramified" }, kx, ku, x_condition: e_i, u_condition: t };
        if !self.supported(a, m) {
            return self.zero_value(k.max(psi_depth(m)).max(1), system);
        }
        let geo = ScGeometry::new(shell, ku, t, i as i64 - n as i64);
        let big = ipow(p, at + 2);
        let ar = a.residue(at + 2)?;
        let m1 = m.unit() % big;
        let pk = ipow(p, k);
        let modulus = self.modulus(k);
        let tm = shell.trace_modulus();
        let (s_th, s_tr, s_k) = (modulus / theta.order(), modulus / tm, modulus / pk);
        let sign: i64 = if e == 1 { 1 } else { -1 };
        let mut candidates = 0;
        let mut pairs = Vec::new();
        let b_coords: Vec<u64> = if geo.s_b > 0 { lifts(w_beta, p, geo.s_b as u32, geo.level_b).collect() } else { (0..ipow(p, geo.level_b)).collect() };
        let d_unit = shell.ring.d / ipow(p, e - 1);
        let ei = e_i.max(0) as u32;
        let mei = ipow(p, ei);
        for &cb in &b_coords {
            let a_coords: Vec<u64> = if geo.branch_a {
                if geo.s_a > 0 {
                    lifts(0, p, geo.s_a as u32, geo.level_a).collect()
                } else {
                    (0..ipow(p, geo.level_a)).collect()
                }
            } else {
                // w^2 (1 + p^{2i-n} m1 / a) = m1 a^{-1} D' cb^2 mod p^r with A' = p^{i-n} w.
                let r = geo.r.max(0) as u32;
                let roots = if r == 0 {
                    vec![0]
                } else {
                    let mr = ipow(p, r);
                    let ainv = inv_mod(ar % mr, mr).expect("unit");
                    let ratio = mul_mod(m1 % mr, ainv, mr);
                    let rhs = mul_mod(mul_mod(ratio, d_unit % mr, mr), mul_mod(cb % mr, cb % mr, mr), mr);
                    let corr = (1 + mul_mod(ipow(p, 2 * i - n) % mr, ratio, mr)) % mr;
                    sqrt_mod_prime_power(mul_mod(rhs, inv_mod(corr, mr).expect("unit"), mr), p, r)
                };
                let shift = (geo.o_a + i as i64 - n as i64) as u32;
                let prec = shift + r;
                let mut v = Vec::new();
                let top = prec.min(geo.level_a);
                for wr in roots {
                    let base = if shift >= top { 0 } else { mul_mod(ipow(p, shift), wr, ipow(p, top)) };
                    v.extend(lifts(base, p, top, geo.level_a));
                }
                v.sort_unstable();
                v.dedup();
                v
            };
            for &ca in &a_coords {
                let u0 = geo.to_ring(ca, cb);
                let ring = &geo.ring;
                if !ring.is_unit(u0.0, u0.1) {
                    continue;
                }
                let nu = shell.ring.norm(u0);
                // x0^2 sign N(u0) = -m1 a mod p^{e_i}.
                let x_roots: Vec<u64> = if ei == 0 {
                    vec![0]
                } else {
                    let sn = if sign > 0 { nu % mei } else { (mei - nu % mei) % mei };
                    let rhs = mul_mod(sub_mod(0, mul_mod(m1 % mei, ar % mei, mei), mei), inv_mod(sn, mei).expect("unit norm"), mei);
                    sqrt_mod_prime_power(rhs, p, ei)
                };
                for xr in x_roots {
                    for x0 in lifts(xr, p, ei, kx).filter(|x| x % p != 0) {
                        candidates += 1;
                        if !geo.critical(p, e_i, ar, m1, w_beta, x0, u0, nu, sign) {
                            continue;
                        }
                        // psi(m / x0) theta^{-1}(u') psi(-C) psi_E(u').
                        let xinv = inv_mod(x0 % pk, pk).expect("unit");
                        let ph1 = mul_mod(m1 % pk, xinv, pk);
                        let ainv = inv_mod(ar % pk, pk).expect("unit");
                        let c_num = mul_mod(mul_mod(x0 % pk, nu % pk, pk), ainv, pk);
                        let ph2 = if sign > 0 { (pk - c_num) % pk } else { c_num };
                        let phase = ((ph1 + ph2) % pk) * s_k
                            + shell.theta_inv_exponent(theta, u0) * s_th
                            + shell.trace_numerator(u0) * s_tr;
                        pairs.push(CriticalPair { x0, u0, phase: phase % modulus });
                    }
                }
            }
        }
        let f = 2 / e;
        let weight = Rational::from_integer(ipow(p, (k - kx) + f * (at - ku)) as i128);
        self.finish(k, pairs, candidates, weight, system)
    }

    /// Every candidate pair and its criticality, by scanning all `(x0, u0)`.
    /// Used to cross-check the congruence solver.
    pub fn brute_critical(&self, a: &PAdicScalar, m: &PAdicScalar) -> Result<Vec<(u64, (u64, u64))>> {
        let mut out = Vec::new();
        if !self.supported(a, m) {
            return Ok(out);
        }
        match &self.kind {
            Kind::Ps { w, .. } => {
                let (p, n, n0, i) = (self.spec.p, self.spec.n, self.spec.n0, self.i);
                let l = i - n0;
                let kx = (n0.div_ceil(2) + self.refine).min(n0);
                let ku = ((n - i).div_ceil(2) + self.refine).min(n0);
                let e_a = n0 as i64 - kx as i64;
                let e_b = n0 as i64 - ku as i64 - l as i64;
                let ar = a.residue(n0)?;
                let m1 = m.unit() % ipow(p, n0);
                for u0 in (1..ipow(p, ku)).filter(|u| u % p != 0) {
                    for x0 in (1..ipow(p, kx)).filter(|x| x % p != 0) {
                        if ps_critical(p, l, e_a, e_b, ar, m1, *w, x0, u0) {
                            out.push((x0, (u0, 0)));
                        }
                    }
                }
            }
            Kind::Sc { shell, w_beta, .. } => {
                let (p, n, i) = (self.spec.p, self.spec.n, self.i);
                let e = shell.ring.e;
                let k = n - i;
                let kx = ((n - i).div_ceil(2) + self.refine).min(k);
                let ku = (shell.a.div_ceil(2) + self.refine).min(shell.a);
                let e_i = k as i64 - kx as i64;
                let t = 1 - e as i64 - ku as i64;
                let geo = ScGeometry::new(shell, ku, t, i as i64 - n as i64);
                let ar = a.residue(shell.a + 2)?;
                let m1 = m.unit() % ipow(p, shell.a + 2);
                let sign = if e == 1 { 1 } else { -1 };
                for u0 in geo.ring.units() {
                    let nu = shell.ring.norm(u0);
                    for x0 in (1..ipow(p, kx)).filter(|x| x % p != 0) {
                        if geo.critical(p, e_i, ar, m1, *w_beta, x0, u0, nu, sign) {
                            out.push((x0, u0));
                        }
                    }
                }
            }
            Kind::Delegate(_) => {}
        }
        out.sort_unstable();
        Ok(out)
    }
}

fn normalizer(spec: &ReprSpec, i: u32) -> Result<(crate::cyclo::CycloValue, u64, Rational)> {
    // The Gauss sum and root-of-unity order of the Whittaker numerators,
    // without tabulating W.
    let p = spec.p;
    match &spec.family {
        Family::PrincipalSeries { mu } => {
            let pn0 = ipow(p, spec.n0);
            Ok((crate::characters::gauss_c0_ps(mu, spec.n0)?, lcm(mu.order(), pn0), Rational::new(1, pn0 as i128)))
        }
        Family::Supercuspidal { theta } => {
            let shell = ShellGeometry::new(theta);
            let modulus = lcm(lcm(theta.order(), shell.trace_modulus()), ipow(p, spec.n - i));
            Ok((crate::characters::gauss_c0_sc(theta)?, modulus, shell.class_measure()))
        }
    }
}

/// Exact criticality test for a principal-series pair.
#[allow(clippy::too_many_arguments)]
fn ps_critical(p: u64, l: u32, e_a: i64, e_b: i64, a: u64, m1: u64, w: u64, x0: u64, u0: u64) -> bool {
    // x-ball: m1 p^l x0 u0 + w - a x0 = 0 mod p^{e_a}.
    if e_a > 0 {
        let md = ipow(p, e_a as u32);
        let lhs = (mul_mod(mul_mod(m1 % md, ipow(p, l) % md, md), mul_mod(x0 % md, u0 % md, md), md) + w % md + md - mul_mod(a % md, x0 % md, md)) % md;
        if lhs != 0 {
            return false;
        }
    }
    // u-ball: m1 x0 u0 (u0 + p^l) = w mod p^{e_b}.
    if e_b > 0 {
        let md = ipow(p, e_b as u32);
        let lhs = mul_mod(mul_mod(m1 % md, x0 % md, md), mul_mod(u0 % md, (u0 + ipow(p, l)) % md, md), md);
        if lhs != w % md {
            return false;
        }
    }
    true
}

/// Coordinates of the shell decomposition: `u' = varpi_E^c u0` has rational
/// part `p^{-o_a} coord_a` and `sqrt D` part `p^{-o_b} coord_b`.
struct ScGeometry {
    ring: crate::residue::QuadResidueRing,
    ramified: bool,
    o_a: i64,
    o_b: i64,
    level_a: u32,
    level_b: u32,
    /// Constraint exponent on `coord_b`.
    s_b: i64,
    /// Constraint exponent on `coord_a` in the branch `v(C) >= t_a`.
    s_a: i64,
    t_a: i64,
    t_b: i64,
    branch_a: bool,
    r: i64,
    v_c: i64,
}

impl ScGeometry {
    fn new(shell: &ShellGeometry, ku: u32, t: i64, v_c: i64) -> Self {
        let e = shell.ring.e as i64;
        let ring = crate::residue::QuadResidueRing::new(shell.ring.p, shell.ring.d, shell.ring.e, ku);
        let a = shell.a as i64;
        let ramified = e == 2;
        let (o_a, o_b, level_a, level_b) = if ramified { (a / 2, a / 2 + 1, ring.ky, ring.kx) } else { (a, a, ring.kx, ring.ky) };
        let t_a = t.div_euclid(e) + i64::from(t.rem_euclid(e) != 0);
        let tb_num = t - e + 1;
        let t_b = tb_num.div_euclid(e) + i64::from(tb_num.rem_euclid(e) != 0);
        let s_b = (t_b + o_b).min(level_b as i64);
        let s_a = (t_a + o_a).min(level_a as i64);
        let branch_a = v_c >= t_a;
        // Precision of the a0 congruence: relative precision of the x0 relation and of A' = C.
        let n_minus_i = -v_c;
        let kx = (n_minus_i + 1) / 2;
        let e_i = n_minus_i - kx;
        let r = e_i.min(t_a - v_c);
        Self { ring, ramified, o_a, o_b, level_a, level_b, s_b, s_a, t_a, t_b, branch_a, r, v_c }
    }

    fn to_ring(&self, ca: u64, cb: u64) -> (u64, u64) {
        if self.ramified {
            (cb, ca)
        } else {
            (ca, cb)
        }
    }

    fn coords_of_residue(&self, u0: (u64, u64)) -> (u64, u64) {
        if self.ramified {
            (u0.1, u0.0)
        } else {
            (u0.0, u0.1)
        }
    }

    /// Both ball conditions, evaluated exactly for the given integer lifts.
    #[allow(clippy::too_many_arguments)]
    fn critical(&self, p: u64, e_i: i64, a: u64, m1: u64, w_beta: u64, x0: u64, u0: (u64, u64), nu: u64, sign: i64) -> bool {
        // (I): m1 a + sign x0^2 N(u0) = 0 mod p^{e_i}.
        if e_i > 0 {
            let md = ipow(p, e_i as u32);
            let x2n = mul_mod(mul_mod(x0 % md, x0 % md, md), nu % md, md);
            let lhs = if sign > 0 { (mul_mod(m1 % md, a % md, md) + x2n) % md } else { sub_mod(mul_mod(m1 % md, a % md, md), x2n, md) };
            if lhs != 0 {
                return false;
            }
        }
        let (ca, cb) = self.coords_of_residue(u0);
        // (II, b): coord_b = w_beta mod p^{t_b + o_b}.
        let sb = self.t_b + self.o_b;
        if sb > 0 {
            let md = ipow(p, sb as u32);
            if cb % md != w_beta % md {
                return false;
            }
        }
        // (II, a): coord_a - sign p^{o_a + i - n} x0 N(u0) / a = 0 mod p^{t_a + o_a}.
        let sa = self.t_a + self.o_a;
        if sa > 0 {
            let md = ipow(p, sa as u32);
            let shift = self.o_a + self.v_c;
            let c = if shift as u32 >= sa as u32 {
                0
            } else {
                let ainv = inv_mod(a % md, md).expect("unit");
                let v = mul_mod(mul_mod(x0 % md, nu % md, md), ainv, md);
                let v = mul_mod(v, ipow(p, shift as u32) % md, md);
                if sign > 0 {
                    v
                } else {
                    (md - v) % md
                }
            };
            if !(ca % md + md - c).is_multiple_of(md) {
                return false;
            }
        }
        true
    }

}

/// Fast value for a principal-series query.
pub fn phi_fast_ps(q: &MatCoefQuery) -> Result<FastValue> {
    if !q.spec.is_principal_series() {
        return Err(Error::Invalid("phi_fast_ps needs a principal series".into()));
    }
    FastEvaluator::new(&q.spec, q.i)?.eval(&q.a, &q.m)
}

/// Fast value for a supercuspidal query.
pub fn phi_fast_sc(q: &MatCoefQuery) -> Result<FastValue> {
    if q.spec.is_principal_series() {
        return Err(Error::Invalid("phi_fast_sc needs a supercuspidal".into()));
    }
    FastEvaluator::new(&q.spec, q.i)?.eval(&q.a, &q.m)
}

/// Per-query comparison of both engines.
#[derive(Clone, Debug)]
pub struct SpeedupRow {
    pub va: i32,
    pub vm: i32,
    pub naive_terms: u64,
    pub fast_candidates: usize,
    pub critical_pairs: usize,
    pub naive_secs: f64,
    pub fast_secs: f64,
    pub deviation: f64,
    pub exact_match: bool,
}

#[derive(Clone, Debug)]
pub struct SpeedupReport {
    pub i: u32,
    pub rows: Vec<SpeedupRow>,
    /// Setup time of the naive Whittaker table (shared by all queries).
    pub naive_setup_secs: f64,
    pub fast_setup_secs: f64,
}

impl SpeedupReport {
    pub fn naive_total(&self) -> f64 {
        self.naive_setup_secs + self.rows.iter().map(|r| r.naive_secs).sum::<f64>()
    }

    pub fn fast_total(&self) -> f64 {
        self.fast_setup_secs + self.rows.iter().map(|r| r.fast_secs).sum::<f64>()
    }

    pub fn speedup(&self) -> f64 {
        self.naive_total() / self.fast_total().max(1e-9)
    }

    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }

    pub fn max_pairs(&self) -> usize {
        self.rows.iter().map(|r| r.critical_pairs).max().unwrap_or(0)
    }

    pub fn all_exact(&self) -> bool {
        self.rows.iter().all(|r| r.exact_match)
    }
}

/// Relative deviation `|x - y| / max(|x|, |y|, floor)`.
pub fn relative_deviation(x: num_complex::Complex64, y: num_complex::Complex64, floor: f64) -> f64 {
    (x - y).norm() / x.norm().max(y.norm()).max(floor)
}

/// Runs both engines over the grid. The naive engine recomputes its double
/// sum for every query; the fast engine's one-off setup (Gauss sum and
/// linearization constants) is timed separately and charged once.
pub fn speedup_report(spec: &ReprSpec, i: u32, grid: &[(PAdicScalar, PAdicScalar)]) -> Result<SpeedupReport> {
    let t = Instant::now();
    let fast = FastEvaluator::new(spec, i)?;
    let fast_setup_secs = t.elapsed().as_secs_f64();
    let naive_setup_secs = 0.0;
    let mut rows = Vec::with_capacity(grid.len());
    for (a, m) in grid {
        let t = Instant::now();
        let nv = PhiEvaluator::new(spec, i)?.eval(a, m)?;
        let naive_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let fv = fast.eval(a, m)?;
        let fast_secs = t.elapsed().as_secs_f64();
        let exact_match = nv.numerator.sub(&fv.value.numerator)?.is_zero();
        rows.push(SpeedupRow {
            va: a.valuation_or_max(),
            vm: m.valuation_or_max(),
            naive_terms: nv.terms,
            fast_candidates: fv.candidates,
            critical_pairs: fv.pairs.len(),
            naive_secs,
            fast_secs,
            deviation: relative_deviation(nv.to_complex(), fv.value.to_complex(), 1e-12),
            exact_match,
        });
    }
    Ok(SpeedupReport { i, rows, naive_setup_secs, fast_setup_secs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_quadratic(a: i128, b: i128, c: i128, p: u64, e: u32) -> Vec<u64> {
        let m = ipow(p, e) as i128;
        (0..m).filter(|&u| (a * u * u + b * u + c).rem_euclid(m) == 0).map(|u| u as u64).collect()
    }

    #[test]
    fn unit_square_roots_mod_81() {
        assert_eq!(solve_quadratic_mod(1, 0, -1, 3, 4).unwrap(), vec![1, 80]);
    }

    #[test]
    fn non_residue_has_no_roots() {
        for p in [3u64, 5, 7, 11] {
            let nr = crate::arith::smallest_nonresidue(p) as i128;
            for e in 1..4 {
                assert!(solve_quadratic_mod(1, 0, -nr, p, e).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn even_prime_rejected() {
        assert!(solve_quadratic_mod(1, 0, -1, 2, 3).is_err());
    }

    proptest! {
        #[test]
        fn quadratic_matches_scan(p in prop::sample::select(vec![3u64, 5, 7]), e in 1u32..5,
                                  a in -200i128..200, b in -200i128..200, c in -200i128..200) {
            prop_assume!(ipow(p, e) <= 2401);
            prop_assert_eq!(solve_quadratic_mod(a, b, c, p, e).unwrap(), brute_quadratic(a, b, c, p, e));
        }

        #[test]
        fn square_roots_match_scan(p in prop::sample::select(vec![3u64, 5, 7]), e in 1u32..5, d in 0u64..2401) {
            prop_assume!(ipow(p, e) <= 2401);
            let m = ipow(p, e);
            let brute: Vec<u64> = (0..m).filter(|s| mul_mod(*s, *s, m) == d % m).collect();
            prop_assert_eq!(sqrt_mod_prime_power(d, p, e), brute);
        }
    }

    /// Every supported `(a, m)` residue class at index `i`.
    fn supported_grid(spec: &ReprSpec, i: u32) -> Vec<(PAdicScalar, PAdicScalar)> {
        let ctx = spec.context().unwrap();
        let p = spec.p;
        let la = spec.n0.max(spec.n - i) + 1;
        let lm = spec.n - i;
        let mut out = Vec::new();
        for a in (1..ipow(p, la)).filter(|x| x % p != 0) {
            for m1 in (1..ipow(p, lm)).filter(|x| x % p != 0) {
                out.push((ctx.from_parts(0, a), ctx.from_parts(i as i32 - spec.n as i32, m1)));
            }
        }
        out
    }

    fn check_grid(spec: &ReprSpec, i: u32, bound: usize, stride: usize) {
        let naive = PhiEvaluator::new(spec, i).unwrap();
        let fast = FastEvaluator::new(spec, i).unwrap();
        let grid = supported_grid(spec, i);
        let mut nonzero = 0;
        for (a, m) in grid.iter().step_by(stride) {
            let nv = naive.eval(a, m).unwrap();
            nonzero += usize::from(!nv.is_zero());
            let fv = fast.eval(a, m).unwrap();
            assert!(nv.numerator.sub(&fv.value.numerator).unwrap().is_zero(), "p={} n={} i={i} a={} m={}", spec.p, spec.n, a.unit(), m.unit());
            assert!(fv.pairs.len() <= bound);
            let mut got: Vec<_> = fv.pairs.iter().map(|c| (c.x0, c.u0)).collect();
            got.sort_unstable();
            assert_eq!(got, fast.brute_critical(a, m).unwrap());
        }
        assert!(nonzero > 0, "grid has no nonzero values");
    }

    #[test]
    fn ps_p3_n6_matches_naive() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        check_grid(&spec, 4, 18, 1);
    }

    #[test]
    fn ps_p3_n8_matches_naive() {
        let spec = ReprSpec::principal_series(3, 8).unwrap();
        for i in 5..7 {
            check_grid(&spec, i, 18, 7);
        }
    }

    #[test]
    fn ps_p5_n6_matches_naive() {
        let spec = ReprSpec::principal_series(5, 6).unwrap();
        check_grid(&spec, 4, 50, 11);
    }

    #[test]
    fn sc_unramified_matches_naive() {
        let spec = ReprSpec::supercuspidal_unramified(3, 6).unwrap();
        check_grid(&spec, 4, 27, 1);
        let spec = ReprSpec::supercuspidal_unramified(3, 8).unwrap();
        for i in 5..7 {
            check_grid(&spec, i, 27, 5);
        }
    }

    #[test]
    fn sc_ramified_matches_naive() {
        let spec = ReprSpec::supercuspidal_ramified(3, 5).unwrap();
        check_grid(&spec, 3, 27, 1);
        let spec = ReprSpec::supercuspidal_ramified(5, 5).unwrap();
        check_grid(&spec, 3, 125, 7);
        let spec = ReprSpec::supercuspidal_ramified(3, 7).unwrap();
        for i in 4..6 {
            check_grid(&spec, i, 27, 5);
        }
    }

    #[test]
    fn off_support_is_zero() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let ctx = spec.context().unwrap();
        let fast = FastEvaluator::new(&spec, 4).unwrap();
        for (va, vm) in [(1, -2), (0, -1), (0, -3), (-1, -2)] {
            let v = fast.eval(&ctx.from_parts(va, 2), &ctx.from_parts(vm, 1)).unwrap();
            assert!(v.value.is_zero());
            assert!(v.pairs.is_empty());
        }
        assert!(fast.eval(&ctx.one(), &ctx.zero()).unwrap().value.is_zero());
    }

    #[test]
    fn refinement_leaves_values_unchanged() {
        for spec in [ReprSpec::principal_series(3, 8).unwrap(), ReprSpec::supercuspidal_unramified(3, 8).unwrap(), ReprSpec::supercuspidal_ramified(3, 7).unwrap()] {
            let i = spec.n0 + 1;
            let half = FastEvaluator::new(&spec, i).unwrap();
            let finer = FastEvaluator::with_refinement(&spec, i, 1).unwrap();
            for (a, m) in supported_grid(&spec, i).iter().step_by(13) {
                let x = half.eval(a, m).unwrap().value.numerator;
                let y = finer.eval(a, m).unwrap().value.numerator;
                assert!(x.sub(&y).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn boundary_indices_delegate() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let ctx = spec.context().unwrap();
        for i in [5, 6] {
            let fast = FastEvaluator::new(&spec, i).unwrap();
            let naive = PhiEvaluator::new(&spec, i).unwrap();
            let (a, m) = (ctx.from_parts(0, 2), ctx.from_parts(-1, 1));
            assert!(fast.eval(&a, &m).unwrap().value.numerator.sub(&naive.eval(&a, &m).unwrap().numerator).unwrap().is_zero());
        }
    }

    #[test]
    fn speedup_report_counts_terms() {
        let spec = ReprSpec::principal_series(3, 6).unwrap();
        let grid = supported_grid(&spec, 4);
        let r = speedup_report(&spec, 4, &grid[..4]).unwrap();
        assert!(r.all_exact());
        assert!(r.rows.iter().all(|row| row.naive_terms == 18 * 18));
        assert!(r.max_pairs() <= 18);
    }
}
