use std::fs;
use std::path::Path;
use std::process::Command;

use chrono::NaiveDate;
use termfit::{DayCount, ModelKind};
use termfit_cli::{cmd_curve, cmd_fit, cmd_price, cmd_synth, CliError, FitRequest, OptimizerKind, TenorGrid};

fn fixture(dir: &Path, model: ModelKind) -> NaiveDate {
    cmd_synth(model, 42, 0.05, dir).unwrap()
}

fn request(data: &Path, out: &Path, model: ModelKind, optimizers: &str, starts: usize) -> FitRequest {
    FitRequest {
        model,
        optimizers: OptimizerKind::parse_list(optimizers).unwrap(),
        n_starts: starts,
        master_seed: 7,
        valuation_date: "2015-03-17".parse().unwrap(),
        operations: data.join("closed_operations.csv"),
        offers: data.join("offers.csv"),
        config: None,
        out: out.to_path_buf(),
        weight_cap: None,
    }
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn fit_writes_every_artifact() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fixture(data.path(), ModelKind::NelsonSiegel);
    let summary = cmd_fit(&request(data.path(), out.path(), ModelKind::NelsonSiegel, "pso", 10)).unwrap();
    assert_eq!(summary.reports.len(), 1);
    assert_eq!(summary.excluded, 0);
    let a = &summary.artifacts;
    for p in [
        a.report("pso"),
        a.comparison(),
        a.best_params(),
        a.curve_samples(),
        a.exclusions(),
        a.failures(),
    ] {
        assert!(p.exists(), "{}", p.display());
    }
    let samples = fs::read_to_string(a.curve_samples()).unwrap();
    let lines: Vec<&str> = samples.lines().collect();
    assert_eq!(lines[0], "tenor_years,spot_rate,forward_rate");
    assert_eq!(lines.len(), 401);
    assert!(lines[1].starts_with("0.05,") && lines[400].starts_with("20,"));
    assert_eq!(fs::read_to_string(a.failures()).unwrap().trim(), "[]");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.report("pso")).unwrap()).unwrap();
    assert_eq!(report["n_starts"], 10);
    assert_eq!(report["runs"].as_array().unwrap().len(), 10);
}

#[test]
fn comparison_orders_by_statistic() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fixture(data.path(), ModelKind::Svensson);
    let cfg = data.path().join("config.json");
    write(
        &cfg,
        r#"{"ga": {"max_iterations": 40}, "aco": {"max_iterations": 400}, "pso": {"max_iterations": 40},
            "sa": {"max_iterations": 4000}, "bfgs": {"barrier_stages": 6}}"#,
    );
    let mut req = request(data.path(), out.path(), ModelKind::Svensson, "pso,sa,ga,aco,bfgs", 4);
    req.config = Some(cfg);
    let summary = cmd_fit(&req).unwrap();
    let table = fs::read_to_string(summary.artifacts.comparison()).unwrap();
    let mut rdr = csv::Reader::from_reader(table.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let values: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
    for r in &rows {
        let expected = if &r[0] == "bfgs" { "min" } else { "mean" };
        assert_eq!(&r[1], expected);
        let col = if expected == "min" { &r[7] } else { &r[6] };
        assert_eq!(&r[2], col);
    }
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(summary.artifacts.best_params()).unwrap()).unwrap();
    let min = summary
        .reports
        .iter()
        .map(|r| r.min_value)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best["objective_value"].as_f64().unwrap(), min);
    assert_eq!(best["model"], "svensson");
}

#[test]
fn input_errors_exit_with_two() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fixture(data.path(), ModelKind::NelsonSiegel);

    let mut req = request(data.path(), out.path(), ModelKind::NelsonSiegel, "pso", 2);
    req.operations = data.path().join("nope.csv");
    let err = cmd_fit(&req).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("nope.csv"), "{err}");

    let cfg = data.path().join("bad.json");
    write(&cfg, r#"{"pso": {"swarm": 3}}"#);
    let mut req = request(data.path(), out.path(), ModelKind::NelsonSiegel, "pso", 2);
    req.config = Some(cfg);
    assert_eq!(cmd_fit(&req).unwrap_err().exit_code(), 2);

    let mut req = request(data.path(), out.path(), ModelKind::NelsonSiegel, "pso", 0);
    req.n_starts = 0;
    assert_eq!(cmd_fit(&req).unwrap_err().exit_code(), 2);

    assert!(OptimizerKind::parse_list("pso,newton").is_err());
    assert_eq!(CliError::AllFailed(5).exit_code(), 1);
}

#[test]
fn too_few_bonds_after_exclusion_is_an_input_error() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fixture(data.path(), ModelKind::Svensson);
    // keep only the buy side of every offer book
    let offers = fs::read_to_string(data.path().join("offers.csv")).unwrap();
    let kept: Vec<&str> = offers.lines().filter(|l| !l.contains(",sell,")).collect();
    write(&data.path().join("offers.csv"), &(kept.join("\n") + "\n"));
    let err = cmd_fit(&request(data.path(), out.path(), ModelKind::Svensson, "pso", 2)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let log = fs::read_to_string(out.path().join("exclusions.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 25);
    assert!(log.lines().all(|l| l.contains("no sell offers")));
}

#[test]
fn binary_reports_missing_file() {
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_termfit"))
        .args([
            "fit",
            "--model",
            "ns",
            "--optimizer",
            "pso",
            "--starts",
            "2",
            "--valuation-date",
            "2015-03-17",
        ])
        .arg("--operations")
        .arg(out.path().join("missing_ops.csv"))
        .arg("--offers")
        .arg(out.path().join("missing_offers.csv"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("missing_ops.csv"));
}

const BONDS_HEADER: &str = "id,issue_date,maturity_date,coupon_rate,periodicity,face\n";

#[test]
fn price_zero_coupons_against_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    write(
        &params,
        r#"{"model": "ns", "beta0": 0.05, "beta1": 0.0, "beta2": 0.0, "lambda1": 0.7}"#,
    );
    let bonds = dir.path().join("b.csv");
    write(
        &bonds,
        &format!("{BONDS_HEADER}Z1,2014-01-01,2016-03-17,0,0,100\nZ2,2014-01-01,2020-09-30,0,0,1000\nOLD,2010-01-01,2015-01-01,0,0,100\n"),
    );
    let mut buf = Vec::new();
    let valuation: NaiveDate = "2015-03-17".parse().unwrap();
    let out = cmd_price(&params, &bonds, valuation, DayCount::Actual365Fixed, &mut buf).unwrap();
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].0, "OLD");
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    for (row, days, face) in [(rows[1], 366.0, 100.0), (rows[2], 2024.0, 1000.0)] {
        let cells: Vec<&str> = row.split(',').collect();
        let t: f64 = days / 365.0;
        let want = face * (-0.05 * t).exp();
        let got: f64 = cells[2].parse().unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    let empty = dir.path().join("empty.csv");
    write(&empty, BONDS_HEADER);
    let mut buf = Vec::new();
    cmd_price(&params, &empty, valuation, DayCount::Actual365Fixed, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "id,maturity_years,dirty_price\n");
}

fn curve_csv(params: &Path, grid: &str) -> String {
    let mut buf = Vec::new();
    cmd_curve(params, &grid.parse::<TenorGrid>().unwrap(), &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn curve_output() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.json");
    write(
        &flat,
        r#"{"model": "ns", "beta0": 0.07, "beta1": 0.0, "beta2": 0.0, "lambda1": 0.5}"#,
    );
    let text = curve_csv(&flat, "1:3:1");
    assert_eq!(
        text,
        "tenor_years,spot_rate,forward_rate\n1,0.07,0.07\n2,0.07,0.07\n3,0.07,0.07\n"
    );

    let ns = dir.path().join("ns.json");
    write(
        &ns,
        r#"{"model": "ns", "beta0": 0.08, "beta1": -0.03, "beta2": 0.04, "lambda1": 0.6}"#,
    );
    let sv = dir.path().join("sv.json");
    write(
        &sv,
        r#"{"params": {"model": "svensson", "beta0": 0.08, "beta1": -0.03, "beta2": 0.04, "lambda1": 0.6, "beta3": 0.0, "lambda2": 0.2}}"#,
    );
    assert_eq!(curve_csv(&ns, "0.25:15:0.25"), curve_csv(&sv, "0.25:15:0.25"));
    assert!("3:1:1".parse::<TenorGrid>().is_err());
}
