use std::path::PathBuf;
use std::process::{Command, Output};

use emaclaurin::analysis::read_report_csv;
use emaclaurin::expansion::Coefficient;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emaclaurin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn table_value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap_or("").to_string())
        })
        .unwrap_or_else(|| panic!("no `{key}` line in\n{out}"))
}

fn coefficient_column(out: &str) -> Vec<String> {
    out.lines()
        .skip_while(|l| !l.starts_with("q "))
        .skip(1)
        .take_while(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().nth(1).unwrap().to_string())
        .collect()
}

#[test]
fn sum_prints_exact_values() {
    let tri = data("triangle.poly");
    let o = run(&["sum", tri.to_str().unwrap(), "--f", "x1", "--N", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(table_value(&out, "S_N"), "1/2");
    assert_eq!(table_value(&out, "points"), "6");
    let o = run(&["sum", tri.to_str().unwrap(), "--f", "x1", "--N", "1"]);
    assert_eq!(table_value(&stdout(&o), "S_N"), "1");
}

#[test]
fn header_records_defaults() {
    let o = run(&[
        "sum",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "x1",
        "--N",
        "3",
    ]);
    let out = stdout(&o);
    for key in [
        "# command = sum",
        "# abs_tol = 1e-12",
        "# budget = 1000000000",
        "# seed = 0",
        "# delta = auto",
    ] {
        assert!(out.contains(key), "missing `{key}` in\n{out}");
    }
}

#[test]
fn float_sum_prints_seventeen_digits() {
    let o = run(&[
        "sum",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "exp(x1)",
        "--N",
        "4",
    ]);
    let v = table_value(&stdout(&o), "S_N");
    let mantissa = v.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{v}");
}

#[test]
fn expand_triangle_examples() {
    let tri = data("triangle.poly");
    let o = run(&["expand", tri.to_str().unwrap(), "--f", "x1", "--Q", "4"]);
    assert!(o.status.success());
    assert_eq!(
        coefficient_column(&stdout(&o)),
        ["1/6", "1/2", "1/3", "0", "0"]
    );

    let o = run(&[
        "expand",
        tri.to_str().unwrap(),
        "--f",
        "1/(1+x1+x2)",
        "--Q",
        "2",
    ]);
    let vals: Vec<f64> = coefficient_column(&stdout(&o))
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let ln2 = 2f64.ln();
    for (a, b) in vals.iter().zip([1.0 - ln2, 0.25 + ln2, 33.0 / 48.0]) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert!(stdout(&o).contains("per-face breakdown"));
}

#[test]
fn expand_square_constant() {
    let o = run(&[
        "expand",
        data("square.poly").to_str().unwrap(),
        "--f",
        "1",
        "--Q",
        "2",
    ]);
    assert_eq!(coefficient_column(&stdout(&o)), ["1", "2", "1"]);
}

#[test]
fn unimodular_flag_preserves_results() {
    let tri = data("triangle.poly");
    let base = coefficient_column(&stdout(&run(&[
        "expand",
        tri.to_str().unwrap(),
        "--f",
        "x1*x2 + x1",
        "--Q",
        "4",
    ])));
    assert_eq!(base[0], "5/24");
    for seed in ["1", "7"] {
        let o = run(&[
            "expand",
            tri.to_str().unwrap(),
            "--f",
            "x1*x2 + x1",
            "--Q",
            "4",
            "--unimodular",
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        assert_eq!(coefficient_column(&stdout(&o)), base);
    }
}

#[test]
fn converge_writes_round_trippable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let o = run(&[
        "converge",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "1/(1+x1+x2)",
        "--Q",
        "2",
        "--N-list",
        "10,25,50,100,250",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("N,S_N,P_N,R_N,log10N,log10R\n"));
    let parsed = read_report_csv(text.as_bytes()).unwrap();
    assert_eq!(parsed.rows.len(), 5);
    let slope = parsed.fit.unwrap().slope;
    assert!((-3.15..=-2.85).contains(&slope), "slope {slope}");
    // stdout shows the same slope
    assert!(stdout(&o).contains(&format!("slope  {slope:.6}")));
}

#[test]
fn converge_exact_triangle_has_zero_remainders() {
    let o = run(&[
        "converge",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "x1",
        "--Q",
        "2",
        "--N-list",
        "1,5,10,50",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("all remainders are exactly zero"), "{out}");
}

#[test]
fn converge_csv_parses_exact_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exact.csv");
    let o = run(&[
        "converge",
        data("square.poly").to_str().unwrap(),
        "--f",
        "x1*x2",
        "--Q",
        "1",
        "--N-list",
        "1,2,5,10",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let parsed = read_report_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert!(parsed
        .rows
        .iter()
        .all(|r| matches!(r.s, Coefficient::Exact(_))));
}

#[test]
fn malformed_file_exits_two_with_line_number() {
    let o = run(&[
        "sum",
        data("malformed.poly").to_str().unwrap(),
        "--f",
        "x1",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn bad_expression_exits_two() {
    let o = run(&[
        "sum",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "x1 +* 2",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "sum",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "x3",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_two() {
    let o = run(&["validate", "/nonexistent/file.poly"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_exceeded_exits_three() {
    let o = run(&[
        "sum",
        data("square.poly").to_str().unwrap(),
        "--f",
        "1",
        "--N",
        "1000",
        "--budget",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tolerance_failure_exits_four() {
    let o = run(&[
        "expand",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "sin(40*x1)*exp(x2)",
        "--Q",
        "2",
        "--abs-tol",
        "1e-15",
        "--rel-tol",
        "1e-15",
        "--max-subdivisions",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn validate_accepts_and_rejects() {
    let o = run(&["validate", data("simplex3.poly").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("dimension 3, 4 facets, 4 vertices"));
    let o = run(&["validate", data("not_delzant.poly").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threads_flag_is_accepted() {
    let o = run(&[
        "sum",
        data("triangle.poly").to_str().unwrap(),
        "--f",
        "x2",
        "--N",
        "10",
        "--threads",
        "2",
    ]);
    assert!(o.status.success());
}
