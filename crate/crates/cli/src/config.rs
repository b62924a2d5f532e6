//! JSON experiment configuration and its validation. Every rejection names
//! the offending field path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use gl2_newform::quaternion::{
    build_tidy_lattice, disc6_fixture, ramified_level_lattice, verify_maximal_order, QuaternionAlgebra, RationalOrder,
    TidyLattice, UpperHalfPoint,
};
use gl2_newform::whittaker::ReprSpec;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub const TASKS: &[&str] = &["verify-support", "decay", "exponent", "counting", "speedup", "filtration", "dimension", "gauss", "sweep"];
pub const FAMILIES: &[&str] = &["ps", "sc-unramified", "sc-ramified"];

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Self { path: path.into(), msg: msg.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.msg)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.msg)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<String>,
    pub p: u64,
    pub n: u32,
    pub family: String,
    /// Inclusive `[lo, hi]`; defaults to every index the task supports.
    pub i_range: Option<[u32; 2]>,
    /// Random unit parts per valuation cell of the support grid.
    pub per_cell: usize,
    /// Cap on supported points per index for the decay table.
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the number of cores.
    pub threads: usize,
    pub out: String,
    pub filtration_samples: usize,
    /// Gram sample sizes, each compared with the next for stability.
    pub gram_samples: Vec<usize>,
    /// Random supported queries per index for the speedup table.
    pub speedup_queries: usize,
    /// Characters enumerated per level in the Gauss task.
    pub gauss_limit: usize,
    pub exponent: ExponentConfig,
    pub counting: CountingConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: None,
            p: 3,
            n: 6,
            family: "ps".into(),
            i_range: None,
            per_cell: 10,
            samples: 2000,
            seed: 0,
            threads: 0,
            out: "out".into(),
            filtration_samples: 100,
            gram_samples: vec![30, 60, 120],
            speedup_queries: 40,
            gauss_limit: 16,
            exponent: ExponentConfig::default(),
            counting: CountingConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentConfig {
    pub eta1: String,
    pub delta: String,
    pub eta2: String,
    /// `a1` per prime for the filtration schedule (may be empty).
    pub a1: BTreeMap<String, u32>,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        Self { eta1: "0".into(), delta: "1".into(), eta2: "1/2".into(), a1: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    pub a: i64,
    pub b: i64,
    /// Basis rows in `1, i, j, k` coordinates, divided by `den`.
    pub rows: [[i64; 4]; 4],
    pub den: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingConfig {
    /// Maximal order; the discriminant-6 fixture when absent.
    pub order: Option<OrderConfig>,
    pub z: [f64; 2],
    pub delta: String,
    pub lengths: Vec<u64>,
    /// Each plan maps a prime to its level `r`; `{}` is the maximal order.
    pub plans: Vec<BTreeMap<String, u32>>,
    pub window: f64,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            order: None,
            z: [0.1, 1.2],
            delta: "1".into(),
            lengths: vec![5, 10, 20],
            plans: vec![BTreeMap::new(), BTreeMap::from([("3".into(), 1)]), BTreeMap::from([("3".into(), 2)])],
            window: 64.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `decay` or `verify-support`.
    pub task: String,
    pub p: Vec<u64>,
    pub n: Vec<u32>,
    pub family: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { task: "decay".into(), p: vec![3, 5], n: vec![6, 8], family: vec!["ps".into()] }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

fn is_odd_prime(p: u64) -> bool {
    p >= 3 && p % 2 == 1 && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Builds the representation for `(family, p, n)`, checking each field in turn.
pub fn repr_spec(family: &str, p: u64, n: u32, at: &str) -> Result<ReprSpec, ConfigError> {
    let field = |f: &str| if at.is_empty() { f.to_string() } else { format!("{at}.{f}") };
    if !FAMILIES.contains(&family) {
        return Err(ConfigError::new(field("family"), format!("unknown family {family:?}; expected one of {FAMILIES:?}")));
    }
    if !is_odd_prime(p) {
        return Err(ConfigError::new(field("p"), format!("{p} is not an odd prime")));
    }
    let parity_ok = match family {
        "sc-ramified" => n >= 3 && n % 2 == 1,
        _ => n >= 2 && n.is_multiple_of(2),
    };
    if !parity_ok {
        let need = if family == "sc-ramified" { "odd n >= 3" } else { "even n >= 2" };
        return Err(ConfigError::new(field("n"), format!("family {family} needs {need}, got {n}")));
    }
    ReprSpec::from_tag(family, p, n).map_err(|e| ConfigError::new(field("n"), e.to_string()))
}

pub fn rational(s: &str, path: &str) -> Result<Ratio<i64>, ConfigError> {
    s.trim().parse::<Ratio<i64>>().map_err(|_| ConfigError::new(path, format!("{s:?} is not a rational like \"1/2\"")))
}

impl ExperimentConfig {
    pub fn task(&self) -> Result<&str, ConfigError> {
        let t = self.task.as_deref().ok_or_else(|| ConfigError::new("task", "no task given (use --task or the `task` key)"))?;
        if !TASKS.contains(&t) {
            return Err(ConfigError::new("task", format!("unknown task {t:?}; expected one of {TASKS:?}")));
        }
        Ok(t)
    }

    pub fn spec(&self) -> Result<ReprSpec, ConfigError> {
        repr_spec(&self.family, self.p, self.n, "")
    }

    /// Indices in `[lo, hi]`, clipped to what the task supports.
    pub fn indices(&self, spec: &ReprSpec, lo: u32, hi: u32) -> Result<Vec<u32>, ConfigError> {
        match self.i_range {
            None => Ok((lo..=hi).collect()),
            Some([a, b]) if a <= b && a >= lo && b <= hi => Ok((a..=b).collect()),
            Some([a, b]) => Err(ConfigError::new(
                "i_range",
                format!("[{a}, {b}] must be an increasing range inside [{lo}, {hi}] for n = {}", spec.n),
            )),
        }
    }

    pub fn order(&self) -> Result<Arc<RationalOrder>, ConfigError> {
        let order = match &self.counting.order {
            None => disc6_fixture().map_err(|e| ConfigError::new("counting.order", e.to_string()))?,
            Some(o) => {
                let alg = QuaternionAlgebra::new(o.a.into(), o.b.into()).map_err(|e| ConfigError::new("counting.order", e.to_string()))?;
                let rows = o.rows.map(|r| r.map(i128::from));
                RationalOrder::from_scaled(alg, rows, o.den.into()).map_err(|e| ConfigError::new("counting.order.rows", e.to_string()))?
            }
        };
        let maximal = verify_maximal_order(&order).map_err(|e| ConfigError::new("counting.order", e.to_string()))?;
        if !maximal {
            return Err(ConfigError::new("counting.order", format!("order is not maximal (discriminant {} expected)", order.alg.d)));
        }
        Ok(Arc::new(order))
    }

    pub fn point(&self) -> Result<UpperHalfPoint, ConfigError> {
        let [x, y] = self.counting.z;
        UpperHalfPoint::new(x, y).map_err(|e| ConfigError::new("counting.z", e.to_string()))
    }

    /// `(label, lattice)` per plan: split primes use the tidy construction, a
    /// single ramified prime uses the uniformizer lattice.
    pub fn lattices(&self, order: &Arc<RationalOrder>) -> Result<Vec<(String, TidyLattice)>, ConfigError> {
        let d = order.alg.d;
        let mut out = Vec::new();
        for (k, plan) in self.counting.plans.iter().enumerate() {
            let path = format!("counting.plans[{k}]");
            let mut parsed = BTreeMap::new();
            for (key, &r) in plan {
                let p: u64 = key.parse().ok().filter(|&p| is_odd_prime(p)).ok_or_else(|| ConfigError::new(format!("{path}.{key}"), "key must be an odd prime"))?;
                parsed.insert(p, r);
            }
            let label = if parsed.is_empty() {
                "1".to_string()
            } else {
                parsed.iter().map(|(p, r)| format!("{p}^{r}")).collect::<Vec<_>>().join("*")
            };
            let ramified: Vec<u64> = parsed.keys().copied().filter(|p| d.is_multiple_of(*p)).collect();
            let lat = match (ramified.as_slice(), parsed.len()) {
                ([], _) => build_tidy_lattice(order.clone(), &parsed),
                ([p], 1) => ramified_level_lattice(order.clone(), *p, parsed[p]),
                _ => return Err(ConfigError::new(path, "a ramified prime must be the only prime of its plan")),
            }
            .map_err(|e| ConfigError::new(path.clone(), e.to_string()))?;
            out.push((label, lat));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_reports_path() {
        let e = parse(r#"{"counting": {"zz": [0, 1]}}"#).unwrap_err();
        assert_eq!(e.path, "counting.zz");
        assert!(e.msg.contains("zz"));
    }

    #[test]
    fn wrong_type_reports_nested_path() {
        let e = parse(r#"{"sweep": {"p": [3, "five"]}}"#).unwrap_err();
        assert_eq!(e.path, "sweep.p[1]");
    }

    #[test]
    fn odd_principal_series_is_a_field_error() {
        let e = repr_spec("ps", 3, 5, "").unwrap_err();
        assert_eq!(e.path, "n");
        assert!(repr_spec("sc-ramified", 3, 6, "sweep").unwrap_err().path == "sweep.n");
        assert_eq!(repr_spec("ps", 9, 6, "").unwrap_err().path, "p");
    }

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = parse(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.gram_samples, c.gram_samples);
        assert_eq!(back.counting.plans, c.counting.plans);
    }

    #[test]
    fn default_plans_build_nested_lattices() {
        let c = ExperimentConfig::default();
        let lats = c.lattices(&c.order().unwrap()).unwrap();
        let idx: Vec<u64> = lats.iter().map(|(_, l)| l.index).collect();
        assert_eq!(idx, vec![1, 9, 81]);
        assert_eq!(lats[2].0, "3^2");
    }

    #[test]
    fn rationals() {
        assert_eq!(rational(" 1/2", "x").unwrap(), Ratio::new(1, 2));
        assert_eq!(rational("one", "exponent.eta2").unwrap_err().path, "exponent.eta2");
    }

    #[test]
    fn bundled_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.task().unwrap();
            cfg.spec().unwrap();
            if cfg.task().unwrap() == "counting" {
                let order = cfg.order().unwrap();
                assert!(!cfg.lattices(&order).unwrap().is_empty());
            }
            seen += 1;
        }
        assert!(seen >= 5);
    }
}
