use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sublin::report::Table;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sublin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sublin"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn config_arg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn sweep_writes_csv_with_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("sweep.json");
    let o = sublin(&["lln-sweep", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("lln_sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,dp_value,limit_value,abs_error"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [16.0, 32.0, 64.0, 128.0, 256.0]);
    assert!(rows.iter().all(|r| r[2] == 1.0));
    assert!(rows.last().unwrap()[3] <= 0.1);

    let mirror = Table::from_json(&read(dir.path().join("lln_sweep.json"))).unwrap();
    assert_eq!(mirror.to_csv(), csv);
}

#[test]
fn reruns_are_byte_identical() {
    for (cmd, cfg, file) in [
        ("simulate", "simulate.json", "simulate"),
        ("conditions", "conditions_heavy.json", "conditions"),
        ("ottaviani", "ottaviani.json", "ottaviani"),
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = config_arg(cfg);
        for d in [&a, &b] {
            let o = sublin(&[cmd, "--config", &cfg, "--quiet"], d.path());
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(o.stdout.is_empty());
        }
        for ext in ["csv", "json"] {
            let name = format!("{file}.{ext}");
            assert_eq!(read(a.path().join(&name)), read(b.path().join(&name)), "{name}");
        }
    }
}

#[test]
fn every_shipped_config_runs() {
    let pairs = [
        ("eval", "eval.json"),
        ("capacity", "capacity.json"),
        ("lln-sweep", "sweep.json"),
        ("conditions", "conditions_heavy.json"),
        ("conditions", "conditions_exm3.json"),
        ("ottaviani", "ottaviani.json"),
        ("product-identity", "product_identity.json"),
        ("chebyshev", "chebyshev.json"),
        ("simulate", "simulate.json"),
        ("oracle", "oracle.json"),
    ];
    for (cmd, cfg) in pairs {
        let dir = tempfile::tempdir().unwrap();
        let o = sublin(&[cmd, "--config", &config_arg(cfg)], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd} {cfg}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn heavy_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = sublin(&["counterexample", "heavy", "--K", "200", "--n", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = read(dir.path().join("heavy.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("K,n,value,lower_bound,limit_value"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&row[..2], &[200.0, 20.0]);
    assert!((row[2] - 0.995f64.powi(20)).abs() < 1e-12);
    assert!(row[2] >= row[3] - 1e-12);
    assert_eq!(row[4], 0.0);
}

#[test]
fn exm3_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = sublin(&["counterexample", "exm3", "--K", "10000"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let excess = read(dir.path().join("exm3_excess.csv"));
    assert!(excess.starts_with("lambda,value\n100,"));
    let psi = read(dir.path().join("exm3_psi.csv"));
    assert_eq!(psi.lines().count(), 5);
    assert!(psi.starts_with("m,psi_expect,m_V_tail\n"));
}

#[test]
fn validation_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"generators": [[[0, 0.5], [1, 0.49]]], "function": {"kind": "abs"}, "horizons": [1]}"#, "generators:"),
        (r#"{"generators": [[[0, 1.0]]], "horizon": [1]}"#, "horizon"),
        (r#"{"generators": [[[0, 1.0]]], "function": {"kind": "abs"}, "horizons": [1]}"#, "function:"),
        (r#"{"generators": [[[0, 1.0]]], "function": {"kind": "tent", "params": {"center": 0, "halfwidth": 1}}, "horizons": [0]}"#, "horizons:"),
        (r#"{"lattice": {"step": 0.3}, "generators": [[[0.5, 1.0]]], "function": {"kind": "tent", "params": {"center": 0, "halfwidth": 1}}, "horizons": [1]}"#, "generators:"),
    ];
    for (body, key) in cases {
        let cfg = write_config(dir.path(), body);
        let o = sublin(&["eval", "--config", &cfg], &dir.path().join("out"));
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(1), "{body}: {err}");
        assert!(err.contains(key), "{body}: {err}");
    }
    let o = sublin(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"generators": [[[-1, 0.5], [1, 0.5]], [[0, 1.0]]],
            "function": {"kind": "tent", "params": {"center": 0, "halfwidth": 1}},
            "horizons": [6], "budgets": {"enumeration": 10}}"#,
    );
    let o = sublin(&["oracle", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = write_config(
        dir.path(),
        r#"{"generators": [[[-1, 0.5], [1, 0.5]]],
            "function": {"kind": "tent", "params": {"center": 0, "halfwidth": 1}},
            "horizons": [200], "budgets": {"states": 100}}"#,
    );
    let o = sublin(&["eval", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seed_flag_overrides_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config_arg("simulate.json");
    sublin(&["simulate", "--config", &cfg, "--seed", "1", "--n", "8"], a.path());
    sublin(&["simulate", "--config", &cfg, "--seed", "2", "--n", "8"], b.path());
    let (x, y) = (read(a.path().join("simulate.csv")), read(b.path().join("simulate.csv")));
    assert_ne!(x, y);
    assert!(x.lines().nth(1).unwrap().ends_with(",true") && y.lines().nth(1).unwrap().ends_with(",true"));
}
