//! End-to-end tests of the `mcprice` binary: exit codes, report shape,
//! determinism, and flag/environment handling.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcprice"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    // Keep ambient MCPRICE_* values from leaking into assertions.
    for (key, _) in std::env::vars() {
        if key.starts_with("MCPRICE_") {
            cmd.env_remove(key);
        }
    }
    cmd.args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "expected success, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new()
        .suffix(".json")
        .tempfile()
        .unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

/// Blank out the only run-dependent report field.
fn mask_wall_time(bytes: &[u8]) -> String {
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let mut out = String::new();
    for line in text.lines() {
        if line.trim_start().starts_with("\"wall_time_ms\"") || line.starts_with("wall time") {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[test]
fn single_product_solves_to_inverse_e() {
    let out = run(&["solve", fixture("single_product.json").to_str().unwrap()]);
    let report = stdout_json(&out);
    let objective = report["objective"].as_f64().unwrap();
    assert!((objective - (-1.0f64).exp()).abs() < 1e-6);
    let price = report["prices"][0].as_f64().unwrap();
    assert!((price - 1.0).abs() < 1e-3);
    assert_eq!(report["status"], "optimal");
    assert_eq!(report["mixture"].as_array().unwrap().len(), 1);
    assert!(report["instance_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let path = fixture("two_products.json");
    let args = ["solve", path.to_str().unwrap(), "--seed", "7"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(
        mask_wall_time(&first.stdout),
        mask_wall_time(&second.stdout)
    );
}

#[test]
fn static_mode_equals_network_mode_without_resources() {
    let path = fixture("empty_resources.json");
    let network = run(&["solve", path.to_str().unwrap(), "--mode", "network"]);
    let fixed = run(&["solve", path.to_str().unwrap(), "--mode", "static"]);
    // Identical up to the echoed mode label: same compile, same numbers.
    let strip = |out: &Output| {
        mask_wall_time(&out.stdout)
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"mode\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&network), strip(&fixed));
    let report = stdout_json(&network);
    assert_eq!(report["mode"], "network");
}

#[test]
fn capacity_fixture_binds_its_resource() {
    let out = run(&["solve", fixture("remark_two_price.json").to_str().unwrap()]);
    let report = stdout_json(&out);
    let objective = report["objective"].as_f64().unwrap();
    let expected = 0.5 * (1.0 + 2.0f64.ln());
    assert!((objective - expected).abs() < 1e-6);
    let usage = report["resources"][0]["usage"].as_f64().unwrap();
    let cap = report["resources"][0]["capacity"].as_f64().unwrap();
    assert!(usage <= cap + 1e-6);
    assert!((usage - cap).abs() < 1e-6, "capacity should bind");
}

#[test]
fn unreadable_file_exits_2() {
    let out = run(&["solve", "/nonexistent/inst.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_exits_2() {
    let f = write_temp("{ not json");
    let out = run(&["solve", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid instance file"));
}

#[test]
fn unknown_field_exits_2() {
    let good = std::fs::read_to_string(fixture("single_product.json")).unwrap();
    let bad = good.replace("\"psi\"", "\"cost\"");
    let f = write_temp(&bad);
    let out = run(&["solve", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_schema_version_exits_2() {
    let good = std::fs::read_to_string(fixture("single_product.json")).unwrap();
    let bad = good.replace("\"version\": 1", "\"version\": 3");
    let f = write_temp(&bad);
    let out = run(&["solve", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}

#[test]
fn unnormalized_theta_exits_3_and_names_the_rule() {
    let good = std::fs::read_to_string(fixture("two_products.json")).unwrap();
    let bad = good.replace("\"theta\": 0.6", "\"theta\": 0.5");
    let f = write_temp(&bad);
    let out = run(&["solve", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta normalization"));
}

#[test]
fn fixed_price_mode_rejects_open_boxes() {
    let out = run(&[
        "solve",
        fixture("single_product.json").to_str().unwrap(),
        "--mode",
        "fixed-price",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x_lower == x_upper"));
}

#[test]
fn starved_iteration_budget_exits_4() {
    let out = run(&[
        "solve",
        fixture("two_products.json").to_str().unwrap(),
        "--max-iters",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("IterLimit"));
}

#[test]
fn dump_program_prints_the_compiled_program() {
    let out = run(&[
        "solve",
        fixture("single_product.json").to_str().unwrap(),
        "--dump-program",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("conic-program v1"));
    assert!(text.contains("kind network"));
    assert!(text.contains("cone exp"));
}

#[test]
fn env_variables_override_defaults() {
    let mut cmd = bin();
    cmd.args(["solve", fixture("single_product.json").to_str().unwrap()])
        .env("MCPRICE_OUT", "text")
        .env("MCPRICE_MODE", "static");
    let out = cmd.output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("status       optimal"));
    assert!(text.contains("mode         static"));
}

#[test]
fn text_report_includes_schedule_and_digest() {
    let out = run(&[
        "solve",
        fixture("remark_two_price.json").to_str().unwrap(),
        "--out",
        "text",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("schedule"));
    assert!(text.contains("digest       sha256:"));
}

#[test]
fn verify_passes_on_the_single_product_fixture() {
    let out = run(&[
        "verify",
        fixture("single_product.json").to_str().unwrap(),
        "--checks",
        "integrality,special-cases",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3, "integrality + two special cases");
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_refuses_oversized_instances() {
    // Five products exceeds the dominance cap of four.
    let products: Vec<String> = (0..5)
        .map(|_| {
            format!(
                r#"{{"theta": 0.2, "rho": [0.0, 0.0, 0.0, 0.0, 0.0],
                     "alpha": 0.0, "beta": 1.0, "psi": 0.0,
                     "x_lower": 0.1, "x_upper": 2.0}}"#
            )
        })
        .collect();
    let file = format!(
        r#"{{"version": 1, "products": [{}]}}"#,
        products.join(",")
    );
    let f = write_temp(&file);
    let out = run(&[
        "verify",
        f.path().to_str().unwrap(),
        "--checks",
        "dominance",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("capped at 4 products"));
    assert!(err.contains("has 5"));
}

#[test]
fn verify_runs_every_check_on_the_bundled_fixture() {
    let out = run(&[
        "verify",
        fixture("two_products.json").to_str().unwrap(),
        "--grid-step",
        "0.1",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["integrality", "dominance", "fixed-price", "pricing-only", "sandwich"]
    );
}
