use std::process::{Command, Output};

fn cclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cclab"))
        .args(args)
        .env("CCLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn rate_csv_header_and_values() {
    let out = cclab(&["rate", "-K", "3", "-N", "3", "-M", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(!text.contains('\r'));
    let rows = csv_rows(&text);
    assert_eq!(rows[0].join(","), "K,N,M,R_U,R_C,R_D,ratio,piecewise_case");
    let r = &rows[1];
    assert_eq!(r[4].parse::<f64>().unwrap(), 1.0);
    assert!((r[5].parse::<f64>().unwrap() - 38.0 / 27.0).abs() < 1e-12);
    assert!((r[6].parse::<f64>().unwrap() - 1.40741).abs() < 1e-5);
}

#[test]
fn rate_json_fields() {
    let out = cclab(&["rate", "-K", "2", "-N", "2", "-M", "1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &v[0];
    for key in ["K", "N", "M", "R_U", "R_C", "R_D", "ratio", "piecewise_case"] {
        assert!(row.get(key).is_some(), "{key}");
    }
    assert_eq!(row["ratio"].as_f64().unwrap(), 1.5);
}

#[test]
fn rate_ranges_expand() {
    let out = cclab(&["rate", "-K", "2:4:1", "-N", "2", "-M", "0.5:1.5:0.5"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&stdout(&out)).len(), 1 + 3 * 3);
}

#[test]
fn full_memory_ratio_is_an_error() {
    let out = cclab(&["rate", "-K", "2", "-N", "2", "-M", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn centralized_simulation_matches_closed_form() {
    let out = cclab(&["simulate", "--scheme", "centralized", "-K", "3", "-N", "3", "-M", "1", "-F", "300"]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert_eq!(
        rows[0].join(","),
        "scheme,K,N,M,F,seed,demand_policy,measured_rate,analytic_rate,rel_error,decode_ok"
    );
    assert_eq!(rows[1][7].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[1][10], "true");

    let rate = cclab(&["rate", "-K", "3", "-N", "3", "-M", "1"]);
    let r_c = csv_rows(&stdout(&rate))[1][4].clone();
    assert_eq!(rows[1][8], r_c);
}

#[test]
fn centralized_pads_file_size_with_a_warning() {
    let out = cclab(&["simulate", "--scheme", "centralized", "-K", "3", "-N", "3", "-M", "1", "-F", "301"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("padded from 301 to 303"));
    assert_eq!(csv_rows(&stdout(&out))[1][4], "303");
}

#[test]
fn non_corner_memory_needs_sharing() {
    let args = ["simulate", "--scheme", "centralized", "-K", "3", "-N", "3", "-M", "1.5", "-F", "300"];
    assert_eq!(cclab(&args).status.code(), Some(2));
    let mut shared = args.to_vec();
    shared.push("--memory-sharing");
    let out = cclab(&shared);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert!((rows[1][7].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn decentralized_full_memory_sends_nothing() {
    let out = cclab(&[
        "simulate", "--scheme", "decentralized", "-K", "3", "-N", "2", "-M", "2", "-F", "256", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["measured_rate"].as_f64().unwrap(), 0.0);
    assert_eq!(v[0]["decode_ok"], true);
}

#[test]
fn exhaustive_and_custom_demands() {
    let out = cclab(&[
        "simulate", "--scheme", "decentralized", "-K", "2", "-N", "2", "-M", "1", "-F", "128", "--demands",
        "exhaustive", "--seeds", "2",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    // 2^2 demand vectors, two seeds each
    assert_eq!(rows.len(), 1 + 8);
    assert!(rows[1..].iter().all(|r| r[10] == "true"));

    let out = cclab(&[
        "simulate", "--scheme", "centralized", "-K", "3", "-N", "3", "-M", "1", "-F", "60", "--demands",
        "custom=2,2,3",
    ]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&stdout(&out))[1][10], "true");
}

#[test]
fn verify_default_summary() {
    let out = cclab(&["verify", "--max-users", "30", "--max-files", "8", "--memory-steps", "20", "--theta-steps", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("max ratio 1.500000 at K=2 N=2 M=1.0; min ratio 1.000000"), "{text}");
    assert!(text.trim_end().ends_with("verify: PASS"));
}

#[test]
fn verify_appendix_and_limit() {
    let out = cclab(&["verify", "--appendix"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("appendix")).all(|l| l.ends_with("PASS")));

    let out = cclab(&["verify", "--limit", "N=4 M=2 Kmax=100000 eps=0.001"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn out_file_receives_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let out = cclab(&["rate", "-K", "3", "-N", "3", "-M", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&cclab(&["rate", "-K", "3", "-N", "3", "-M", "1"])));
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert!(!cclab(&["rate", "-K", "0", "-N", "2", "-M", "1"]).status.success());
    assert!(!cclab(&["rate", "-K", "2", "-N", "2", "-M", "3"]).status.success());
    assert!(!cclab(&["verify", "--limit", "N=4"]).status.success());
}
