//! End-to-end tests of the `pasep` binary: output shapes, determinism and
//! exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn pasep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = pasep(args);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("pasep-cli-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn correlations_formula_matches_known_entry() {
    let csv = stdout_of(&[
        "correlations",
        "--n",
        "3",
        "--q",
        "1/2",
        "--method",
        "formula",
    ]);
    assert!(csv.starts_with("i,j,exact,decimal\n"));
    assert!(csv.contains("2,1,4/27,"), "missing entry in:\n{csv}");
}

#[test]
fn correlations_methods_agree() {
    let formula = stdout_of(&[
        "correlations",
        "--n",
        "3",
        "--q",
        "1/2",
        "--method",
        "formula",
    ]);
    let pie = stdout_of(&["correlations", "--n", "3", "--q", "1/2", "--method", "pie"]);
    let ctmc = stdout_of(&["correlations", "--n", "3", "--q", "1/2", "--method", "ctmc"]);
    let mlq = stdout_of(&["correlations", "--n", "3", "--q", "1/2", "--method", "mlq"]);
    assert_eq!(formula, pie);
    assert_eq!(formula, ctmc);
    assert_eq!(formula, mlq);
}

#[test]
fn correlations_q0_formula_entry() {
    let csv = stdout_of(&[
        "correlations",
        "--n",
        "4",
        "--q",
        "0",
        "--method",
        "formula",
    ]);
    assert!(csv.contains("1,3,1/16,"), "missing entry in:\n{csv}");
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let args = [
        "correlations",
        "--n",
        "4",
        "--q",
        "1/3",
        "--method",
        "formula",
        "--format",
        "json",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
    let sample_args = [
        "sample",
        "--type",
        "1,1,1",
        "--q",
        "0.3",
        "--samples",
        "500",
        "--seed",
        "42",
    ];
    assert_eq!(stdout_of(&sample_args), stdout_of(&sample_args));
}

#[test]
fn stationary_probabilities_sum_to_one() {
    let json = stdout_of(&[
        "stationary",
        "--type",
        "1,1,1",
        "--q",
        "1/3",
        "--format",
        "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let probs = value["probs"].as_object().unwrap();
    assert_eq!(probs.len(), 6);
    // exact rational sum
    let mut num = 0i64;
    let mut den = 1i64;
    for p in probs.values() {
        let s = p.as_str().unwrap();
        let (a, b) = match s.split_once('/') {
            Some((a, b)) => (a.parse::<i64>().unwrap(), b.parse::<i64>().unwrap()),
            None => (s.parse::<i64>().unwrap(), 1),
        };
        num = num * b + a * den;
        den *= b;
        let g = gcd(num.abs(), den.abs());
        num /= g;
        den /= g;
    }
    assert_eq!((num, den), (1, 1), "probabilities must sum to exactly 1");
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn stationary_methods_agree() {
    let ctmc = stdout_of(&[
        "stationary",
        "--type",
        "1,2",
        "--q",
        "2/5",
        "--method",
        "ctmc",
    ]);
    let mlq = stdout_of(&[
        "stationary",
        "--type",
        "1,2",
        "--q",
        "2/5",
        "--method",
        "mlq",
    ]);
    let a: serde_json::Value = serde_json::from_str(&ctmc).unwrap();
    let b: serde_json::Value = serde_json::from_str(&mlq).unwrap();
    assert_eq!(a["probs"], b["probs"]);
}

#[test]
fn enumerate_filter_keeps_only_matching_words() {
    let lines = stdout_of(&[
        "enumerate",
        "--type",
        "1,2,1",
        "--q",
        "1/2",
        "--filter",
        "word-prefix=2,3",
    ]);
    assert!(!lines.is_empty());
    for line in lines.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let word = record["word"].as_array().unwrap();
        assert_eq!(word[0], 2);
        assert_eq!(word[1], 3);
        assert!(record["weight"].is_string());
        assert!(record["mlq"].is_array());
    }
    let unfiltered = stdout_of(&["enumerate", "--type", "1,2,1", "--q", "1/2"]);
    assert!(unfiltered.lines().count() > lines.lines().count());
}

#[test]
fn malformed_q_is_a_usage_error() {
    let out = pasep(&["verify", "--q-list", "2/0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pasep(&["correlations", "--n", "3", "--q", "2/0"]);
    assert_eq!(out.status.code(), Some(2));
    // exact commands refuse the decimal form
    let out = pasep(&["correlations", "--n", "3", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // q outside [0, 1]
    let out = pasep(&["correlations", "--n", "3", "--q", "3/2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_required_flags_exit_2() {
    let out = pasep(&["sample", "--type", "1,1,1", "--q", "0.3"]);
    assert_eq!(out.status.code(), Some(2), "sample requires --seed");
    let out = pasep(&["correlations", "--q", "1/2"]);
    assert_eq!(out.status.code(), Some(2), "correlations requires --n");
}

#[test]
fn cap_overrun_exits_3() {
    let out = pasep(&[
        "stationary",
        "--type",
        "4,4,4",
        "--q",
        "1/2",
        "--state-cap",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = pasep(&[
        "enumerate",
        "--type",
        "2,2,2",
        "--q",
        "1/2",
        "--enumeration-cap",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_writes_report_and_exits_zero() {
    let report_path = tmp_path("report.json");
    let out = pasep(&[
        "verify",
        "--max-sites",
        "3",
        "--q-list",
        "0,1/2",
        "--families",
        "eta,q0_reduction,q1_uniformity",
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&report_path).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["summary"]["pass"], serde_json::Value::Bool(true));
    assert!(report["checks"].as_array().unwrap().len() > 5);
    assert_eq!(report["config"]["max_sites"], serde_json::json!(3));
    let families = report["summary"]["families"].as_object().unwrap();
    assert!(families.contains_key("eta"));
    std::fs::remove_file(&report_path).ok();
}

#[test]
fn verify_report_is_byte_identical_across_runs() {
    let args = [
        "verify",
        "--max-sites",
        "3",
        "--q-list",
        "1/2",
        "--families",
        "eta,tau_W",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn verify_unknown_family_exits_2() {
    let out = pasep(&["verify", "--families", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let config_path = tmp_path("config.json");
    std::fs::write(&config_path, r#"{"n": 3, "q": "1/2", "method": "formula"}"#).unwrap();
    let from_config = stdout_of(&["--config", config_path.to_str().unwrap(), "correlations"]);
    assert!(from_config.contains("2,1,4/27,"));
    // an explicit flag overrides the config value
    let overridden = stdout_of(&[
        "--config",
        config_path.to_str().unwrap(),
        "correlations",
        "--q",
        "0",
    ]);
    assert!(overridden.contains("2,1,1/9,"), "{overridden}");
    std::fs::remove_file(&config_path).ok();
}

#[test]
fn gillespie_runs_and_reports_estimates() {
    let csv = stdout_of(&[
        "gillespie",
        "--type",
        "1,1,0",
        "--q",
        "0.5",
        "--horizon",
        "5000",
        "--burn-in",
        "100",
        "--seed",
        "7",
    ]);
    assert!(csv.starts_with("i,j,estimate\n"));
    let row = csv
        .lines()
        .find(|l| l.starts_with("1,2,"))
        .expect("entry (1,2)");
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(
        (value - 0.5).abs() < 0.05,
        "estimate {value} too far from 1/2"
    );
}

#[test]
fn sample_respects_multiplicities() {
    let json = stdout_of(&[
        "sample",
        "--type",
        "2,0,1",
        "--q",
        "1/2",
        "--samples",
        "200",
        "--seed",
        "3",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let freq = value["freq"].as_object().unwrap();
    let total: u64 = freq.values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 200);
    for word in freq.keys() {
        let ones = word.split(',').filter(|&l| l == "1").count();
        let threes = word.split(',').filter(|&l| l == "3").count();
        assert_eq!((ones, threes), (2, 1), "word {word}");
    }
}
