use std::fs;
use std::process::{Command, Output};

fn grandlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grandlp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, row: usize, col: usize) -> f64 {
    let line = csv.lines().nth(row + 1).unwrap();
    line.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn lpnorm_matches_closed_form() {
    let out = grandlp(&["lpnorm", "--form", "g_delta:0", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("p,norm,rel_error,closed_form\n"));
    let norm = column(&text, 0, 1);
    assert!((norm - (-0.5f64).exp()).abs() < 1e-12 * norm);
    assert!((column(&text, 0, 3) - norm).abs() < 1e-12 * norm);
}

#[test]
fn transform_writes_one_row_per_grid_point() {
    let out = grandlp(&[
        "transform",
        "--psi",
        "power:a=1,b=2,beta=0,gamma=1",
        "--kind",
        "riesz_zeta",
        "--alpha",
        "0.5",
        "--grid",
        "uniform:2.1:10:5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("q,value"));
    assert_eq!(text.lines().count(), 6);
    for row in 0..5 {
        let v = column(&text, row, 1);
        assert!(v.is_finite() && v > 0.0);
    }
}

#[test]
fn potential_of_indicator() {
    let out = grandlp(&[
        "potential",
        "--form",
        "indicator:0:1",
        "--kernel",
        "riesz:alpha=0.5",
        "--grid",
        "uniform:0:0.5:2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!((column(&text, 0, 1) - 2.0).abs() < 1e-10);
    assert!((column(&text, 1, 1) - 2.0 * 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(grandlp(&["bogus"]).status.code(), Some(2));
    assert_eq!(grandlp(&["lpnorm", "--form", "g_delta:0", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(grandlp(&["lpnorm", "--form", "nope:1", "--p", "2"]).status.code(), Some(2));
    assert_eq!(
        grandlp(&["lpnorm", "--form", "g_delta:0", "--p", "2", "--quad", "{\"bad\": 1}"]).status.code(),
        Some(2)
    );
}

#[test]
fn divergent_norm_exits_3() {
    let out = grandlp(&["lpnorm", "--form", "f_delta:0.5:0", "--p", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divergent"));
}

#[test]
fn grand_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = grandlp(&[
        "grand",
        "--form",
        "g_delta:0",
        "--psi",
        "power:a=1,b=4,beta=1,gamma=0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("grand.csv")).unwrap();
    assert!(table.starts_with("p,norm,psi,ratio\n"));
    let summary = fs::read_to_string(dir.path().join("grand.summary.txt")).unwrap();
    let value: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("VALUE="))
        .unwrap()
        .parse()
        .unwrap();
    let max_ratio = table
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(3)?.parse::<f64>().ok())
        .fold(0.0, f64::max);
    assert!(value >= max_ratio);
}

#[test]
fn verify_writes_artifacts_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = grandlp(&[
            "verify",
            "E8_bessel_sanity",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout(&out).trim(), "E8_bessel_sanity: PASS");
    }
    for file in ["E8_bessel_sanity.csv", "E8_bessel_sanity.summary.txt", "E8_bessel_sanity.plot"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
}

#[test]
fn verify_rejects_mismatched_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"name": "E2_lower_p_to_1"}"#).unwrap();
    let out = grandlp(&["verify", "E8_bessel_sanity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
