//! Task runners. Each returns a CSV table, report lines and the list of failed
//! assertions; nothing here touches the filesystem.

use std::collections::BTreeMap;
use std::fmt;

use gl2_newform::characters::gauss::{gauss_c0_ps, gauss_c0_sc, ShellGeometry};
use gl2_newform::characters::mult::MultChar;
use gl2_newform::characters::theta::ThetaChar;
use gl2_newform::exponents::{depth_exponent, filtration_schedule, supnorm_exponent};
use gl2_newform::matcoef::{
    gram_dimension_estimate, support_grid, verify_decay, verify_filtration, verify_support, PhiPrimeEngine,
};
use gl2_newform::quaternion::{count_by_norm, counting_bound_report, Enumerator};
use gl2_newform::residue::PAdicScalar;
use gl2_newform::statphase::speedup_report;
use gl2_newform::whittaker::{Family, ReprSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{rational, repr_spec, ConfigError, ExperimentConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Compute(gl2_newform::Error),
    Csv(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Compute(e) => write!(f, "computation failed: {e}"),
            RunError::Csv(e) => write!(f, "csv: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<gl2_newform::Error> for RunError {
    fn from(e: gl2_newform::Error) -> Self {
        RunError::Compute(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub csv_name: String,
    pub csv: Vec<u8>,
    pub report: Vec<String>,
    pub failures: Vec<String>,
}

impl TaskOutput {
    fn new(name: &str) -> Self {
        Self { csv_name: format!("{name}.csv"), ..Default::default() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.report.push(format!("{} {what}", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            self.failures.push(what);
        }
    }
}

/// Serializes rows with a header even when there are none.
fn write_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| RunError::Csv(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| RunError::Csv(e.to_string()))?;
    }
    w.into_inner().map_err(|e| RunError::Csv(e.to_string()))
}

/// Independent stream per `(seed, stream)` so results do not depend on
/// scheduling.
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn interior_and_boundary(spec: &ReprSpec) -> (u32, u32) {
    (spec.n0 + 1, spec.n)
}

fn scalar_parts(x: &PAdicScalar) -> (Option<i32>, Option<u64>) {
    if x.is_zero() {
        (None, None)
    } else {
        (Some(x.valuation_or_max()), Some(x.unit()))
    }
}

fn normalizer(spec: &ReprSpec, i: u32) -> f64 {
    (spec.q() as f64).powf((spec.n - i) as f64 / 2.0)
}

pub fn run(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    match cfg.task()? {
        "verify-support" => verify_support_task(cfg),
        "decay" => decay_task(cfg),
        "exponent" => exponent_task(cfg),
        "counting" => counting_task(cfg),
        "speedup" => speedup_task(cfg),
        "filtration" => filtration_task(cfg),
        "dimension" => dimension_task(cfg),
        "gauss" => gauss_task(cfg),
        "sweep" => sweep_task(cfg),
        other => unreachable!("task {other} passed validation"),
    }
}

const SUPPORT_HEADER: &[&str] = &[
    "p", "n", "family", "i", "v_a", "a_unit", "v_m", "m_unit", "re", "im", "abs", "ratio_normalized", "expected_zero", "exact_zero", "violation",
];

#[derive(Serialize)]
struct SupportCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    i: u32,
    v_a: Option<i32>,
    a_unit: Option<u64>,
    v_m: Option<i32>,
    m_unit: Option<u64>,
    re: f64,
    im: f64,
    abs: f64,
    ratio_normalized: f64,
    expected_zero: bool,
    exact_zero: bool,
    violation: bool,
}

struct SupportSummary {
    i: u32,
    points: usize,
    off_support: usize,
    violations: usize,
    rows: Vec<SupportCsvRow>,
}

fn support_for(spec: &ReprSpec, i: u32, per_cell: usize, seed: u64) -> Result<SupportSummary> {
    let ctx = spec.context()?;
    let grid = support_grid(spec, i, &ctx, per_cell, &mut rng(seed, u64::from(i)));
    let rep = verify_support(spec, i, &grid)?;
    let norm = normalizer(spec, i);
    let rows = rep
        .rows
        .iter()
        .zip(&grid)
        .map(|(r, (a, m))| {
            let (v_a, a_unit) = scalar_parts(a);
            let (v_m, m_unit) = scalar_parts(m);
            SupportCsvRow {
                p: spec.p,
                n: spec.n,
                family: spec.family_tag(),
                i,
                v_a,
                a_unit,
                v_m,
                m_unit,
                re: r.value.re,
                im: r.value.im,
                abs: r.value.norm(),
                ratio_normalized: r.value.norm() * norm,
                expected_zero: r.expected_zero,
                exact_zero: r.exact_zero,
                violation: r.violation(),
            }
        })
        .collect();
    Ok(SupportSummary { i, points: rep.rows.len(), off_support: rep.off_support(), violations: rep.violations(), rows })
}

fn verify_support_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    let (lo, hi) = interior_and_boundary(&spec);
    let indices = cfg.indices(&spec, lo, hi)?;
    let results: Vec<SupportSummary> = indices
        .par_iter()
        .map(|&i| support_for(&spec, i, cfg.per_cell, cfg.seed))
        .collect::<Result<_>>()?;
    let mut out = TaskOutput::new("support");
    let mut rows = Vec::new();
    for s in results {
        out.check(
            s.violations == 0,
            format!(
                "support {} p={} n={} i={}: {} points, {} off-support, {} violations",
                spec.family_tag(),
                spec.p,
                spec.n,
                s.i,
                s.points,
                s.off_support,
                s.violations
            ),
        );
        rows.extend(s.rows);
    }
    out.csv = write_csv(SUPPORT_HEADER, &rows)?;
    Ok(out)
}

const DECAY_HEADER: &[&str] = &["p", "n", "family", "i", "v_a", "a_unit", "v_m", "m_unit", "re", "im", "abs", "ratio_normalized"];

#[derive(Serialize)]
struct DecayCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    i: u32,
    v_a: i32,
    a_unit: u64,
    v_m: i32,
    m_unit: u64,
    re: f64,
    im: f64,
    abs: f64,
    ratio_normalized: f64,
}

fn decay_bound(spec: &ReprSpec) -> f64 {
    let q = spec.q() as f64;
    if spec.is_principal_series() {
        2.0 * q * q
    } else {
        q * q * q
    }
}

struct DecaySummary {
    i: u32,
    max_ratio: f64,
    rows: Vec<DecayCsvRow>,
}

fn decay_for(spec: &ReprSpec, i: u32, samples: usize, seed: u64) -> Result<DecaySummary> {
    let rep = verify_decay(spec, i, samples, &mut rng(seed, u64::from(i)))?;
    let rows = rep
        .rows
        .iter()
        .map(|r| DecayCsvRow {
            p: spec.p,
            n: spec.n,
            family: spec.family_tag(),
            i,
            v_a: 0,
            a_unit: r.a_unit,
            v_m: r.vm,
            m_unit: r.m_unit,
            re: r.value.re,
            im: r.value.im,
            abs: r.value.norm(),
            ratio_normalized: r.ratio,
        })
        .collect();
    Ok(DecaySummary { i, max_ratio: rep.max_ratio, rows })
}

fn decay_indices(cfg: &ExperimentConfig, spec: &ReprSpec) -> Result<Vec<u32>> {
    if spec.n0 + 2 >= spec.n {
        return Ok(Vec::new());
    }
    Ok(cfg.indices(spec, spec.n0 + 1, spec.n - 2)?)
}

fn decay_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    let indices = decay_indices(cfg, &spec)?;
    let results: Vec<DecaySummary> = indices
        .par_iter()
        .map(|&i| decay_for(&spec, i, cfg.samples, cfg.seed))
        .collect::<Result<_>>()?;
    let bound = decay_bound(&spec);
    let mut out = TaskOutput::new("decay");
    let mut rows = Vec::new();
    for s in results {
        out.check(
            s.max_ratio <= bound * (1.0 + 1e-9),
            format!(
                "decay {} p={} n={} i={}: max |Phi| q^((n-i)/2) = {:.6} over {} points (bound {bound})",
                spec.family_tag(),
                spec.p,
                spec.n,
                s.i,
                s.max_ratio,
                s.rows.len()
            ),
        );
        rows.extend(s.rows);
    }
    if indices.is_empty() {
        out.report.push(format!("no interior indices for n = {}", spec.n));
    }
    out.csv = write_csv(DECAY_HEADER, &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct ExponentCsvRow {
    eta1: String,
    delta: String,
    eta2: String,
    supnorm_exponent: String,
    depth_exponent: String,
}

fn exponent_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let e = &cfg.exponent;
    let eta1 = rational(&e.eta1, "exponent.eta1")?;
    let delta = rational(&e.delta, "exponent.delta")?;
    let eta2 = rational(&e.eta2, "exponent.eta2")?;
    let bad_order = |err: gl2_newform::Error| ConfigError::new("exponent", err.to_string());
    let s = supnorm_exponent(eta1, delta, eta2).map_err(bad_order)?;
    let d = depth_exponent(eta1, delta, eta2).map_err(bad_order)?;
    let mut out = TaskOutput::new("exponent");
    out.report.push(format!("C₁-exponent = {s}, depth exponent = {d}"));
    if !e.a1.is_empty() {
        let mut a1 = BTreeMap::new();
        for (k, &v) in &e.a1 {
            let p: u64 = k.parse().map_err(|_| ConfigError::new(format!("exponent.a1.{k}"), "key must be a prime"))?;
            a1.insert(p, v);
        }
        let f = filtration_schedule(&a1, eta1, eta2).map_err(|err| ConfigError::new("exponent.a1", err.to_string()))?;
        for (p, sched) in &f.schedules {
            let shown: Vec<String> = sched.iter().map(ToString::to_string).collect();
            out.report.push(format!("schedule p={p}: [{}]", shown.join(", ")));
        }
        out.report.push(format!("amplifier exponent = {}, tuples = {}", f.amplifier_exponent, f.tuple_count()));
    }
    let row = ExponentCsvRow {
        eta1: eta1.to_string(),
        delta: delta.to_string(),
        eta2: eta2.to_string(),
        supnorm_exponent: s.to_string(),
        depth_exponent: d.to_string(),
    };
    out.csv = write_csv(&["eta1", "delta", "eta2", "supnorm_exponent", "depth_exponent"], &[row])?;
    Ok(out)
}

#[derive(Serialize)]
struct CountingCsvRow {
    p_plan: String,
    #[serde(rename = "N")]
    big_n: u64,
    #[serde(rename = "L")]
    l: u64,
    m: u64,
    count: u64,
    ratio_bd1: f64,
    ratio_bd2: f64,
}

fn counting_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let c = &cfg.counting;
    let order = cfg.order()?;
    let z = cfg.point()?;
    let delta = rational(&c.delta, "counting.delta")?;
    if delta < num_rational::Ratio::from_integer(0) {
        return Err(ConfigError::new("counting.delta", "must be nonnegative").into());
    }
    let delta = num_rational::Ratio::new(i128::from(*delta.numer()), i128::from(*delta.denom()));
    let lats = cfg.lattices(&order)?;
    let rep = counting_bound_report(&lats, &z, delta, &c.lengths, c.window)?;
    let mut out = TaskOutput::new("counting");
    let mut rows = Vec::new();
    for r in &rep.rows {
        out.report.push(format!(
            "plan {} (N={}) L={}: sum counts {} (ratio {:.4}), sum square-norm counts {} (ratio {:.4})",
            r.plan, r.index, r.l, r.sum_linear, r.sum_square, r.ratio_bd1, r.ratio_bd2
        ));
        for m in 1..=r.l {
            rows.push(CountingCsvRow {
                p_plan: r.plan.clone(),
                big_n: r.index,
                l: r.l,
                m,
                count: r.by_norm[&m],
                ratio_bd1: r.ratio_bd1,
                ratio_bd2: r.ratio_bd2,
            });
        }
    }
    let lmax = c.lengths.iter().copied().max().unwrap_or(0);
    let norms: Vec<u64> = (1..=lmax).collect();
    let mut per_lattice = Vec::new();
    for (label, lat) in &lats {
        let fp = count_by_norm(lat, &z, delta, &norms, Enumerator::FinckePohst)?;
        let bb = count_by_norm(lat, &z, delta, &norms, Enumerator::BoundingBox)?;
        out.check(fp == bb, format!("plan {label}: Fincke-Pohst and bounding-box enumerators agree for m <= {lmax}"));
        out.check(fp.values().all(|v| v % 2 == 0), format!("plan {label}: all counts even"));
        if lmax >= 1 {
            out.check(fp[&1] >= 2, format!("plan {label}: count(m=1) = {} >= 2", fp[&1]));
        }
        per_lattice.push(fp);
    }
    for (a, (la, lat_a)) in lats.iter().enumerate() {
        for (b, (lb, lat_b)) in lats.iter().enumerate() {
            if a != b && lat_a.is_sublattice_of(lat_b) && lat_a.index > lat_b.index {
                let mono = norms.iter().all(|m| per_lattice[a][m] <= per_lattice[b][m]);
                out.check(mono, format!("plan {la} inside plan {lb}: counts pointwise smaller"));
            }
        }
    }
    if !rep.rows.is_empty() {
        out.check(
            rep.within_window(),
            format!("ratio spreads {:.3} and {:.3} within the x{} window", rep.spread_bd1(), rep.spread_bd2(), c.window),
        );
    }
    out.csv = write_csv(&["p_plan", "N", "L", "m", "count", "ratio_bd1", "ratio_bd2"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct SpeedupCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    i: u32,
    v_a: i32,
    a_unit: u64,
    v_m: i32,
    m_unit: u64,
    naive_terms: u64,
    fast_candidates: usize,
    critical_pairs: usize,
    deviation: f64,
    exact_match: bool,
}

fn random_unit(p: u64, modulus: u64, r: &mut ChaCha8Rng) -> u64 {
    loop {
        let u = r.gen_range(1..modulus);
        if u % p != 0 {
            return u;
        }
    }
}

/// Timings go to the report only, keeping the CSV reproducible.
fn speedup_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    let indices = decay_indices(cfg, &spec)?;
    let ctx = spec.context()?;
    let q = spec.q() as f64;
    let cap = if spec.is_principal_series() { 2.0 * q * q } else { q * q * q } as usize;
    let modulus = spec.p.pow(spec.n + 2);
    let mut out = TaskOutput::new("speedup");
    let mut rows = Vec::new();
    let (mut naive, mut fast) = (0.0, 0.0);
    for &i in &indices {
        let mut r = rng(cfg.seed, u64::from(i));
        let vm = i as i32 - spec.n as i32;
        let grid: Vec<(PAdicScalar, PAdicScalar)> = (0..cfg.speedup_queries)
            .map(|_| {
                let a = ctx.from_parts(0, random_unit(spec.p, modulus, &mut r));
                (a, ctx.from_parts(vm, random_unit(spec.p, modulus, &mut r)))
            })
            .collect();
        let rep = speedup_report(&spec, i, &grid)?;
        naive += rep.naive_total();
        fast += rep.fast_total();
        for (row, (a, m)) in rep.rows.iter().zip(&grid) {
            rows.push(SpeedupCsvRow {
                p: spec.p,
                n: spec.n,
                family: spec.family_tag(),
                i,
                v_a: row.va,
                a_unit: a.unit(),
                v_m: row.vm,
                m_unit: m.unit(),
                naive_terms: row.naive_terms,
                fast_candidates: row.fast_candidates,
                critical_pairs: row.critical_pairs,
                deviation: row.deviation,
                exact_match: row.exact_match,
            });
        }
        out.check(
            rep.all_exact() && rep.max_deviation() <= 1e-8,
            format!("i={i}: fast equals naive on {} queries (max relative deviation {:.2e})", rep.rows.len(), rep.max_deviation()),
        );
        out.check(rep.max_pairs() <= cap, format!("i={i}: at most {} critical pairs (bound {cap})", rep.max_pairs()));
        out.report.push(format!("i={i}: naive {:.4}s, fast {:.4}s, speedup {:.1}x", rep.naive_total(), rep.fast_total(), rep.speedup()));
    }
    if !indices.is_empty() {
        out.report.push(format!("overall speedup {:.1}x", naive / fast.max(1e-9)));
    }
    out.csv = write_csv(
        &["p", "n", "family", "i", "v_a", "a_unit", "v_m", "m_unit", "naive_terms", "fast_candidates", "critical_pairs", "deviation", "exact_match"],
        &rows,
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct FiltrationCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    j: u32,
    samples: usize,
    max_abs: f64,
    bound: f64,
    exceptions: usize,
}

fn filtration_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    let mut engine = PhiPrimeEngine::new(&spec)?;
    let mut out = TaskOutput::new("filtration");
    let mut rows = Vec::new();
    for j in 1..spec.n0.saturating_sub(1) {
        let rep = verify_filtration(&mut engine, j, cfg.filtration_samples, &mut rng(cfg.seed, u64::from(j)))?;
        out.check(
            rep.exceptions == 0,
            format!("j={j}: max |Phi'| = {:.6} <= {:.6} on {} samples, {} exceptions", rep.max_abs, rep.bound, rep.samples, rep.exceptions),
        );
        rows.push(FiltrationCsvRow {
            p: spec.p,
            n: spec.n,
            family: spec.family_tag(),
            j,
            samples: rep.samples,
            max_abs: rep.max_abs,
            bound: rep.bound,
            exceptions: rep.exceptions,
        });
    }
    if rows.is_empty() {
        out.report.push(format!("no filtration levels for n0 = {}", spec.n0));
    }
    out.csv = write_csv(&["p", "n", "family", "j", "samples", "max_abs", "bound", "exceptions"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct GramCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    samples: usize,
    rank: usize,
    cap: u64,
    hermitian_defect: f64,
    min_eigenvalue: f64,
    psd: bool,
}

fn dimension_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    if cfg.gram_samples.len() < 2 || cfg.gram_samples.contains(&0) {
        return Err(ConfigError::new("gram_samples", "need at least two positive sample sizes").into());
    }
    let cap = 4 * spec.q().pow(spec.n0);
    let reports = cfg
        .gram_samples
        .par_iter()
        .enumerate()
        .map(|(k, &s)| gram_dimension_estimate(&spec, s, 1e-6, &mut rng(cfg.seed, k as u64)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out = TaskOutput::new("dimension");
    let mut rows = Vec::new();
    for r in &reports {
        out.check(r.is_psd(1e-6), format!("{} samples: Hermitian PSD within 1e-6 (defect {:.2e}, min eigenvalue {:.2e})", r.samples, r.hermitian_defect, r.min_eigenvalue));
        out.check(r.rank as u64 <= cap, format!("{} samples: rank {} <= 4 q^n0 = {cap}", r.samples, r.rank));
        rows.push(GramCsvRow {
            p: spec.p,
            n: spec.n,
            family: spec.family_tag(),
            samples: r.samples,
            rank: r.rank,
            cap,
            hermitian_defect: r.hermitian_defect,
            min_eigenvalue: r.min_eigenvalue,
            psd: r.is_psd(1e-6),
        });
    }
    let last = &reports[reports.len() - 2..];
    out.check(last[0].rank == last[1].rank, format!("rank stable from {} to {} samples", last[0].samples, last[1].samples));
    out.csv = write_csv(&["p", "n", "family", "samples", "rank", "cap", "hermitian_defect", "min_eigenvalue", "psd"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct GaussCsvRow {
    p: u64,
    n: u32,
    family: &'static str,
    character: usize,
    abs_c0: f64,
    expected_low: f64,
    expected_high: f64,
}

fn gauss_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let spec = cfg.spec()?;
    let q = spec.q() as f64;
    let mut out = TaskOutput::new("gauss");
    let mut rows = Vec::new();
    let mut push = |k: usize, abs: f64, lo: f64, hi: f64, out: &mut TaskOutput| {
        let ok = abs >= lo * (1.0 - 1e-12) && abs <= hi * (1.0 + 1e-12);
        if !ok {
            out.failures.push(format!("character {k}: |C0| = {abs} outside [{lo}, {hi}]"));
        }
        rows.push(GaussCsvRow { p: spec.p, n: spec.n, family: spec.family_tag(), character: k, abs_c0: abs, expected_low: lo, expected_high: hi });
    };
    match &spec.family {
        Family::PrincipalSeries { .. } => {
            let target = q.powf(-(spec.n0 as f64) / 2.0);
            let chars = MultChar::all_primitive(spec.p, spec.n0)?;
            for (k, mu) in chars.iter().take(cfg.gauss_limit).enumerate() {
                push(k, gauss_c0_ps(mu, spec.n0)?.to_complex().norm(), target, target, &mut out);
            }
        }
        Family::Supercuspidal { theta } => {
            let thetas = ThetaChar::enumerate(theta.ext(), theta.level(), cfg.gauss_limit)?;
            for (k, th) in thetas.iter().enumerate() {
                let n = ShellGeometry::new(th).n as f64;
                push(k, gauss_c0_sc(th)?.to_complex().norm(), q.powf(-(n + 1.0) / 2.0), q.powf(-(n - 1.0) / 2.0), &mut out);
            }
        }
    }
    let failed = out.failures.len();
    out.report.push(format!(
        "{} {} p={} n={}: {} characters, {failed} outside the expected range",
        if failed == 0 { "PASS" } else { "FAIL" },
        spec.family_tag(),
        spec.p,
        spec.n,
        rows.len()
    ));
    out.csv = write_csv(&["p", "n", "family", "character", "abs_c0", "expected_low", "expected_high"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct SweepCsvRow {
    p: u64,
    n: u32,
    family: String,
    i: u32,
    points: usize,
    max_ratio_normalized: f64,
    bound: f64,
    violations: usize,
}

/// Runs the sub-task over `p x n x family` (skipping combinations of the
/// wrong parity) on the worker pool, merging rows in grid order.
fn sweep_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let sw = &cfg.sweep;
    if sw.task != "decay" && sw.task != "verify-support" {
        return Err(ConfigError::new("sweep.task", format!("{:?} cannot be swept; use \"decay\" or \"verify-support\"", sw.task)).into());
    }
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for &p in &sw.p {
        for &n in &sw.n {
            for fam in &sw.family {
                let parity = if fam == "sc-ramified" { n % 2 == 1 } else { n % 2 == 0 };
                if !parity {
                    skipped.push(format!("{fam} n={n}"));
                    continue;
                }
                let spec = repr_spec(fam, p, n, "sweep")?;
                let indices = if sw.task == "decay" {
                    decay_indices(cfg, &spec)?
                } else {
                    let (lo, hi) = interior_and_boundary(&spec);
                    cfg.indices(&spec, lo, hi)?
                };
                for i in indices {
                    jobs.push((spec.clone(), i));
                }
            }
        }
    }
    let rows: Vec<SweepCsvRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, (spec, i))| {
            let seed = cfg.seed.wrapping_add(k as u64);
            let bound = decay_bound(spec);
            if sw.task == "decay" {
                let s = decay_for(spec, *i, cfg.samples, seed)?;
                Ok(SweepCsvRow {
                    p: spec.p,
                    n: spec.n,
                    family: spec.family_tag().into(),
                    i: *i,
                    points: s.rows.len(),
                    max_ratio_normalized: s.max_ratio,
                    bound,
                    violations: usize::from(s.max_ratio > bound * (1.0 + 1e-9)),
                })
            } else {
                let s = support_for(spec, *i, cfg.per_cell, seed)?;
                let max = s.rows.iter().filter(|r| !r.expected_zero).map(|r| r.ratio_normalized).fold(0.0, f64::max);
                Ok(SweepCsvRow {
                    p: spec.p,
                    n: spec.n,
                    family: spec.family_tag().into(),
                    i: *i,
                    points: s.points,
                    max_ratio_normalized: max,
                    bound,
                    violations: s.violations,
                })
            }
        })
        .collect::<Result<_>>()?;
    let mut out = TaskOutput::new(&format!("sweep-{}", sw.task));
    for r in &rows {
        out.check(
            r.violations == 0,
            format!("{} {} p={} n={} i={}: {} points, max ratio {:.6}, {} violations", sw.task, r.family, r.p, r.n, r.i, r.points, r.max_ratio_normalized, r.violations),
        );
    }
    if !skipped.is_empty() {
        out.report.push(format!("skipped (wrong parity): {}", skipped.join(", ")));
    }
    out.report.push(format!("{} sub-tasks", rows.len()));
    out.csv = write_csv(&["p", "n", "family", "i", "points", "max_ratio_normalized", "bound", "violations"], &rows)?;
    Ok(out)
}
