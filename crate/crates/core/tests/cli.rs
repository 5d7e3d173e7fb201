mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use markov_markowitz::export::read_metrics;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_markov-markowitz"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(String::from).collect()
}

#[test]
fn coefficients_for_two_months() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 2, 1);
    let out = dir.path().join("out");
    let o = bin(&["coefficients", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = out.join("coefficients.csv");
    let text = fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("year,month,A,B,C,r_mvp,sigma_mvp,u\n"));
    assert_eq!(data_rows(&file).len(), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 rows"));
}

#[test]
fn missing_risk_free_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, _) = common::write_fixture(dir.path(), 3, 2, 1);
    let missing = dir.path().join("nope.csv");
    let o = bin(&["coefficients", "--prices", s(&prices), "--rf", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(s(&missing)));
}

#[test]
fn short_month_warns_but_writes() {
    let dir = tempfile::tempdir().unwrap();
    // 4 assets; the first month keeps only its last 3 trading days
    let prices = dir.path().join("prices.csv");
    let rf = dir.path().join("rf.csv");
    let mut p = "date,A,B,C,D\n".to_string();
    let mut r = "date,rf\n".to_string();
    let days: Vec<String> = ["2001-01-29", "2001-01-30", "2001-01-31"]
        .iter()
        .map(|d| d.to_string())
        .chain((1..=28).filter(|d| ![3, 4, 10, 11, 17, 18, 24, 25].contains(d)).map(|d| format!("2001-02-{d:02}")))
        .collect();
    for (i, d) in days.iter().enumerate() {
        let x = i as f64;
        p += &format!(
            "{d},{},{},{},{}\n",
            100.0 + (x * 0.7).sin(),
            50.0 + (x * 1.3).cos(),
            80.0 + 0.1 * x + (x * 0.4).sin(),
            60.0 - 0.05 * x + (x * 2.1).cos()
        );
        r += &format!("{d},0.01\n");
    }
    fs::write(&prices, p).unwrap();
    fs::write(&rf, r).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["coefficients", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&out.join("coefficients.csv")).len(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2001-01"));
}

fn labels(path: &Path) -> Vec<String> {
    data_rows(path).iter().map(|l| l.split(',').nth(2).unwrap().to_string()).collect()
}

#[test]
fn cluster_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 4, 12, 2);
    let out = dir.path().join("k4");
    let o = bin(&["cluster", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out), "--k", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let states = labels(&out.join("states.csv"));
    assert_eq!(states.len(), 12);
    assert_eq!(states.iter().collect::<BTreeSet<_>>().len(), 4);
    assert_eq!(data_rows(&out.join("dendrogram.csv")).len(), 11);
    assert_eq!(data_rows(&out.join("transition_matrix.csv")).len(), 4);
    assert_eq!(data_rows(&out.join("steady_state.csv")).len(), 1);
    assert!(fs::read_to_string(out.join("dendrogram.txt")).unwrap().starts_with('('));

    let all = dir.path().join("k12");
    let o = bin(&["cluster", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&all), "--k", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let states = labels(&all.join("states.csv"));
    assert_eq!(states.iter().collect::<BTreeSet<_>>().len(), 12);

    let o = bin(&["cluster", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out), "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cluster_joins_recession_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 6, 3);
    let rec = dir.path().join("rec.csv");
    fs::write(&rec, "date,indicator\n2000-01-01,0\n2000-02-01,1\n2000-03-01,1\n").unwrap();
    let out = dir.path().join("out");
    let o = bin(&[
        "cluster", "--prices", s(&prices), "--rf", s(&rf), "--recession", s(&rec), "--out", s(&out), "--k", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("states.csv"));
    assert!(rows[1].ends_with(",1"));
    assert!(rows[5].ends_with(','));
}

#[test]
fn backtest_sensitivity_runs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 4, 30, 4);
    for k in ["3", "4", "5"] {
        let out = dir.path().join(format!("k{k}"));
        let o = bin(&[
            "backtest", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out), "--k", k, "--test-start", "2002-01",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["daily_returns.csv", "wealth.csv", "weights.csv", "states.csv", "transition_matrix.csv", "metrics.json"] {
            assert!(out.join(f).exists(), "k={k}: {f}");
        }
        let m = read_metrics(&out.join("metrics.json")).unwrap();
        assert_eq!(m.config.k.to_string(), k);
        assert_eq!(data_rows(&out.join("weights.csv")).len(), 6);

        let report = bin(&["report", "--out", s(&out)]);
        assert_eq!(report.status.code(), Some(0));
        assert_eq!(report.stdout, o.stdout, "report re-renders the stored metrics");
    }
}

#[test]
fn seed_without_random_path_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 27, 5);
    let config = dir.path().join("run.toml");
    fs::write(&config, "[model]\nrandom_starts = 0\nk = 2\ntest_start = \"2002-01\"\n").unwrap();
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = bin(&[
            "backtest", "--config", s(&config), "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out), "--seed", seed,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("1", "a"), run("2", "b"));
    for f in ["daily_returns.csv", "weights.csv", "wealth.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(read_metrics(&b.join("metrics.json")).unwrap().seed, 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 26, 6);
    let config = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(
        &config,
        format!(
            "prices = {:?}\nrf = {:?}\nout = {:?}\n[model]\nk = 3\nfee_rate = 0.002\ntest_start = \"2002-01\"\n",
            s(&prices),
            s(&rf),
            s(&out)
        ),
    )
    .unwrap();
    let o = bin(&["backtest", "--config", s(&config), "--k", "2", "--linkage", "complete"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_metrics(&out.join("metrics.json")).unwrap();
    assert_eq!(m.config.k, 2);
    assert_eq!(m.config.fee_rate, 0.002);
    assert_eq!(m.config.linkage.to_string(), "complete");
}

#[test]
fn early_test_start_and_bad_config_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 26, 7);
    let o = bin(&["backtest", "--prices", s(&prices), "--rf", s(&rf), "--test-start", "2001-01"]);
    assert_eq!(o.status.code(), Some(2));
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[model]\nclusters = 3\n").unwrap();
    let o = bin(&["backtest", "--config", s(&config), "--prices", s(&prices), "--rf", s(&rf)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn failed_export_leaves_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let (prices, rf) = common::write_fixture(dir.path(), 3, 26, 8);
    let out = dir.path().join("out");
    // a directory where wealth.csv should go makes the final move fail
    fs::create_dir_all(out.join("wealth.csv").join("blocker")).unwrap();
    let o = bin(&["backtest", "--prices", s(&prices), "--rf", s(&rf), "--out", s(&out), "--test-start", "2002-01"]);
    assert_eq!(o.status.code(), Some(1));
    let left: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("wealth.csv")]);
}

#[test]
fn malformed_price_row_is_a_runtime_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    let rf = dir.path().join("rf.csv");
    fs::write(&prices, "date,A,B\n2001-01-02,1,2\n2001-01-03,x,2\n").unwrap();
    fs::write(&rf, "date,rf\n2001-01-02,0.01\n").unwrap();
    let o = bin(&["coefficients", "--prices", s(&prices), "--rf", s(&rf)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
