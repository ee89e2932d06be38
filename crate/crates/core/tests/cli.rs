use std::path::PathBuf;
use std::process::{Command, Output};

use hullstate::bench::Report;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn hullstate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullstate"))
        .args(args)
        .env("HULLSTATE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn six_bus_args() -> Vec<String> {
    vec![
        "run".into(),
        "--net".into(),
        data("six_bus.json").display().to_string(),
        "--placement".into(),
        data("six_bus_placement.json").display().to_string(),
    ]
}

fn run_with(extra: &[&str]) -> Output {
    let mut args = six_bus_args();
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    hullstate(&refs)
}

#[test]
fn compare_csv_has_one_row_per_bus_part_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run_with(&[
        "--trials",
        "5",
        "--seed",
        "3",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().next(), Some("bus,part,method,error"));
    assert_eq!(csv.lines().count(), 1 + 6 * 2 * 2);
}

#[test]
fn json_to_stdout_parses() {
    let o = run_with(&["--method", "interval", "--seed", "4"]);
    assert!(o.status.success());
    let rep = Report::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let Report::Estimate(r) = rep else {
        panic!("single-method report expected")
    };
    assert_eq!(r.seeds, vec![4]);
    assert!(r.enclosure.unwrap().beta < 1.0);
}

#[test]
fn zero_noise_wls_recovers_truth() {
    let o = run_with(&[
        "--method",
        "wls",
        "--noise-scada",
        "0",
        "--noise-pseudo",
        "0",
    ]);
    assert!(o.status.success());
    let Report::Estimate(r) = Report::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap()
    else {
        panic!("single-method report expected")
    };
    assert!(r.mae.real <= 1e-8 && r.mae.imag <= 1e-8);
}

#[test]
fn bundled_case_flag() {
    let o = hullstate(&[
        "run", "--case", "two_bus", "--method", "wls", "--trials", "3",
    ]);
    assert!(o.status.success());
}

fn assert_failure(o: &Output, code: i32, category: &str) {
    assert_eq!(o.status.code(), Some(code));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("error[{category}]")), "{err}");
}

#[test]
fn failures_carry_category_and_code() {
    assert_failure(&run_with(&["--trials", "0"]), 14, "bench.invalid_scenario");
    assert_failure(
        &run_with(&["--noise-scada", "1.5"]),
        14,
        "bench.invalid_scenario",
    );
    assert_failure(
        &run_with(&["--wls-max-iter", "0"]),
        14,
        "bench.invalid_scenario",
    );
    assert_failure(
        &run_with(&[
            "--method",
            "wls",
            "--wls-max-iter",
            "1",
            "--wls-tol",
            "1e-14",
        ]),
        12,
        "wls.non_convergence",
    );
    assert_failure(
        &hullstate(&[
            "run",
            "--net",
            "/no/such/file",
            "--placement",
            "/no/such/file",
        ]),
        15,
        "bench.io_failure",
    );
    assert_failure(
        &hullstate(&["run", "--case", "nowhere"]),
        14,
        "bench.invalid_scenario",
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"buses\": 3}").unwrap();
    let placement = data("six_bus_placement.json");
    let o = hullstate(&[
        "run",
        "--net",
        bad.to_str().unwrap(),
        "--placement",
        placement.to_str().unwrap(),
    ]);
    assert_failure(&o, 10, "network.malformed");
}

#[test]
fn missing_placement_is_a_usage_error() {
    let net = data("six_bus.json");
    let o = hullstate(&["run", "--net", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
