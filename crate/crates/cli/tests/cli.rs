use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gl2nf"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(&path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn support_task_passes_with_no_violation_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"task": "verify-support", "p": 3, "n": 6, "family": "ps", "i_range": [4, 4], "seed": 7}"#;
    let o = run(dir.path(), Some(cfg), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = read(dir.path(), "support.csv");
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["p", "n", "family", "i", "v_a", "a_unit", "v_m", "m_unit", "re", "im", "abs", "ratio_normalized", "expected_zero", "exact_zero", "violation"]
    );
    let col = headers.iter().position(|h| h == "violation").unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 200);
    assert!(rows.iter().all(|r| &r[col] == "false"));
    assert!(rows.iter().all(|r| &r[3] == "4"));
}

#[test]
fn exponent_report_line() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"exponent": {"eta1": "0", "delta": "1", "eta2": "1/2"}}"#;
    let o = run(dir.path(), Some(cfg), &["--task", "exponent"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "C₁-exponent = 5/12, depth exponent = 5/24"), "{}", stdout(&o));
    assert!(read(dir.path(), "report.txt").contains("C₁-exponent = 5/12, depth exponent = 5/24"));
}

#[test]
fn odd_conductor_principal_series_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), Some(r#"{"task": "decay", "p": 3, "n": 5, "family": "ps"}"#), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`n`"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn schema_errors_name_the_field_path() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), Some(r#"{"task": "counting", "counting": {"lengths": [5, "ten"]}}"#), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("counting.lengths[1]"), "{}", stderr(&o));
    let o = run(dir.path(), Some(r#"{"task": "decay", "prime": 3}"#), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prime"));
    let o = run(dir.path(), None, &["--task", "no-such-task"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`task`"));
    let o = run(dir.path(), Some(r#"{"task": "decay", "i_range": [2, 9]}"#), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`i_range`"));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"task": "counting", "counting": {"lengths": [5, 20], "window": 1.0}}"#;
    let o = run(dir.path(), Some(cfg), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL ratio spreads"));
    assert!(read(dir.path(), "counting.csv").starts_with("p_plan,N,L,m,count,ratio_bd1,ratio_bd2\n"));
}

#[test]
fn counting_defaults_pass() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), None, &["--task", "counting"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = read(dir.path(), "counting.csv");
    // 3 lattices x (5 + 10 + 20) norms
    assert_eq!(csv.lines().count(), 1 + 3 * 35);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(4).unwrap().parse::<u64>().unwrap() % 2 == 0));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), Some(r#"{"task": "sweep", "sweep": {"task": "decay", "p": [], "n": [6], "family": ["ps"]}}"#), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(dir.path(), "sweep-decay.csv"), "p,n,family,i,points,max_ratio_normalized,bound,violations\n");
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let cfg = r#"{"task": "sweep", "samples": 200, "sweep": {"task": "decay", "p": [3, 5], "n": [5, 6], "family": ["ps", "sc-ramified"]}}"#;
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let oa = run(a.path(), Some(cfg), &["--seed", "11", "--threads", "1"]);
    let ob = run(b.path(), Some(cfg), &["--seed", "11", "--threads", "4"]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0));
    let (ca, cb) = (read(a.path(), "sweep-decay.csv"), read(b.path(), "sweep-decay.csv"));
    assert_eq!(ca, cb);
    let families: Vec<&str> = ca.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(families, ["sc-ramified", "ps", "sc-ramified", "ps"]);
    assert!(stdout(&oa).contains("skipped (wrong parity)"));
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let cfg = r#"{"task": "decay", "p": 5, "n": 6, "family": "sc-unramified", "samples": 300}"#;
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    run(a.path(), Some(cfg), &["--seed", "3"]);
    run(b.path(), Some(cfg), &["--seed", "3"]);
    run(c.path(), Some(cfg), &["--seed", "4"]);
    let (da, db, dc) = (read(a.path(), "decay.csv"), read(b.path(), "decay.csv"), read(c.path(), "decay.csv"));
    assert_eq!(da, db);
    assert_ne!(da, dc);
    assert!(da.starts_with("p,n,family,i,v_a,a_unit,v_m,m_unit,re,im,abs,ratio_normalized\n"));
}

#[test]
fn flags_override_config_keys() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), Some(r#"{"task": "decay", "p": 3, "n": 6}"#), &["--task", "gauss"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/gauss.csv").exists());
    assert!(!dir.path().join("out/decay.csv").exists());
}

#[test]
fn speedup_filtration_and_dimension_pass() {
    for (task, csv) in [("speedup", "speedup.csv"), ("filtration", "filtration.csv"), ("dimension", "dimension.csv")] {
        let dir = TempDir::new().unwrap();
        let o = run(dir.path(), Some(r#"{"p": 3, "n": 6, "family": "sc-unramified", "speedup_queries": 5, "gram_samples": [20, 40]}"#), &["--task", task]);
        assert_eq!(o.status.code(), Some(0), "{task}: {}", stdout(&o));
        assert!(read(dir.path(), csv).lines().count() > 1, "{task}");
    }
}
