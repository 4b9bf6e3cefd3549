//! End-to-end tests of the `boxprod` binary.

use std::process::{Command, Output};

fn boxprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxprod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const S3: &str = "3; (1 2); (1 2 3)";
const S2: &str = "2; (1 2)";
const C3: &str = "3; (1 2 3)";
const C2: &str = "2; (1 2)";
const C4: &str = "4; (1 2 3 4)";

#[test]
fn analyze_s3_s2_exits_zero_and_reports_verdicts() {
    let out = boxprod(&[
        "analyze", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1", "--battery",
        "5", "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["report"]["transitive"]["value"], true);
    assert_eq!(doc["report"]["primitive"]["value"], true);
    assert_eq!(doc["report"]["discrete"]["value"], false);
    assert_eq!(doc["report"]["simple"]["status"], "out_of_hypothesis");
    assert_eq!(doc["report"]["cardinality"]["value"], "continuum");
    let verifications = doc["verifications"].as_array().unwrap();
    assert!(verifications.iter().all(|v| v["passed"] == true));
}

#[test]
fn analyze_c3_c2_is_discrete_and_countable() {
    let out = boxprod(&[
        "analyze", "--m-spec", C3, "--n-spec", C2, "--depth", "4", "--margin", "1", "--battery",
        "5",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["report"]["discrete"]["value"], true);
    assert_eq!(doc["report"]["cardinality"]["value"], "at_most_countable");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "analyze", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1", "--battery",
        "5", "--seed", "7",
    ];
    let a = stdout(&boxprod(&args));
    let b = stdout(&boxprod(&args));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn parse_errors_carry_positions_and_exit_nonzero() {
    let out = boxprod(&["quotient", "--m-spec", "3; (1 4)", "--n-spec", S2]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte 6"), "{err}");
    assert!(err.contains("out of range"), "{err}");
}

#[test]
fn rejects_margin_wider_than_half_the_depth() {
    let out = boxprod(&[
        "quotient", "--m-spec", S3, "--n-spec", S2, "--depth", "3", "--margin", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quotient_of_transitive_factors_is_k11() {
    let out = boxprod(&["quotient", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["x_orbits"], 1);
    assert_eq!(doc["y_orbits"], 1);
    assert_eq!(doc["edges"], 1);
    assert_eq!(doc["coherent"], true);
}

#[test]
fn suborbits_for_s3_s2() {
    let out = boxprod(&[
        "suborbits", "--m-spec", S3, "--n-spec", S2, "--depth", "6", "--margin", "2", "--max-k",
        "2",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = doc["suborbits"].as_array().unwrap();
    assert_eq!(rows[0]["sizes"], serde_json::json!([4]));
    let sum: u64 = rows[1]["sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_u64().unwrap())
        .sum();
    assert_eq!(sum, 8);
}

#[test]
fn witness_for_imprimitive_first_factor() {
    let out = boxprod(&["witness", "--m-spec", C4, "--n-spec", S2, "--depth", "5", "--margin", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["kind"], "block-system");
    assert_eq!(doc["check"]["invariant"], true);
}

#[test]
fn certificates_for_primitive_pair() {
    let out = boxprod(&[
        "certificate", "--m-spec", S3, "--n-spec", S2, "--depth", "5", "--margin", "2", "--pairs",
        "3",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for cert in doc["certificates"].as_array().unwrap() {
        assert_eq!(cert["verified"], true);
    }
}

#[test]
fn orbits_match_oracle() {
    let out = boxprod(&["orbits", "--m-spec", C3, "--n-spec", S2, "--depth", "4", "--margin", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["oracle_coherent"], true);
    assert_eq!(doc["x_orbits"], 1);
    assert_eq!(doc["y_orbits"], 1);
}

#[test]
fn export_dot_targets() {
    for target in ["tree", "quotient", "orbital", "wreath-orbital"] {
        let out = boxprod(&[
            "export-dot", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1",
            "--target", target,
        ]);
        assert!(out.status.success(), "target {target}");
        let text = stdout(&out);
        assert!(text.starts_with("graph "), "target {target}: {text}");
        assert!(text.trim_end().ends_with('}'));
        // deterministic
        let again = stdout(&boxprod(&[
            "export-dot", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1",
            "--target", target,
        ]));
        assert_eq!(text, again);
    }
}

#[test]
fn compare_wreath_reports_order_72() {
    let out = boxprod(&["compare-wreath", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["wreath_product_action"]["order"], "72");
    assert_eq!(doc["wreath_product_action"]["degree"], 9);
    assert_eq!(doc["wreath_product_action"]["primitive"], true);
    assert_eq!(doc["box_product"]["primitive"]["value"], true);
}

#[test]
fn text_format_renders_the_report() {
    let out = boxprod(&[
        "analyze", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1", "--battery",
        "5", "--format", "text",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("transitive: true"));
    assert!(text.contains("verifications:"));
    assert!(text.contains("[pass]"));
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join(format!("boxprod-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = boxprod(&[
        "quotient", "--m-spec", S3, "--n-spec", S2, "--depth", "4", "--margin", "1", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["edges"], 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
