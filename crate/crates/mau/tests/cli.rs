use std::fs;
use std::path::PathBuf;
use std::process::Command;

use mau::format::{parse_utility, Utility};
use mau::run;
use mau_core::UtilityFunction;
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn mau(args: &[&str]) -> (i32, Value) {
    let outcome = run(std::iter::once("mau").chain(args.iter().copied()));
    assert!(outcome.stderr.is_empty(), "{}", outcome.stderr);
    let value = serde_json::from_str(&outcome.stdout).expect("JSON output");
    (outcome.code, value)
}

fn code(args: &[&str]) -> i32 {
    run(std::iter::once("mau").chain(args.iter().copied())).code
}

#[test]
fn additive_independence_fails_for_health_and_wealth() {
    let (status, out) = mau(&[
        "check",
        "ai",
        &data("healthwealth.json"),
        "--partition",
        "health|wealth",
    ]);
    assert_eq!(status, 0);
    assert_eq!(out["holds"], Value::Bool(false));
    assert_eq!(out["tolerance"]["epsilon"].as_f64(), Some(1e-9));
}

#[test]
fn utility_independence_holds_for_each_attribute() {
    for x in ["health", "wealth"] {
        let (_, out) = mau(&["check", "ui", &data("healthwealth.json"), "--x", x]);
        assert_eq!(out["holds"], Value::Bool(true), "{x}");
    }
}

#[test]
fn both_methods_agree_on_uniform_network() {
    let (status, out) = mau(&[
        "eu",
        &data("healthwealth.json"),
        &data("uniform_bn.json"),
        "--method",
        "both",
    ]);
    assert_eq!(status, 0);
    assert_eq!(out["brute"].as_f64(), Some(2.0));
    assert_eq!(out["factored"].as_f64(), Some(2.0));
    assert_eq!(out["agree"], Value::Bool(true));
}

#[test]
fn correlated_distribution_gives_two_and_a_half() {
    let (_, out) = mau(&["eu", &data("healthwealth.json"), &data("correlated.json")]);
    assert_eq!(out["expected_utility"].as_f64(), Some(2.5));
    let (_, out) = mau(&[
        "eu",
        &data("healthwealth.json"),
        &data("correlated_bn.json"),
    ]);
    assert_eq!(out["expected_utility"].as_f64(), Some(2.5));
}

#[test]
fn evidence_conditions_the_expectation() {
    let (_, out) = mau(&[
        "eu",
        &data("healthwealth.json"),
        &data("uniform_bn.json"),
        "--evidence",
        "health=Hbar",
        "--method",
        "both",
    ]);
    assert_eq!(out["brute"].as_f64(), Some(0.5));
    assert_eq!(out["evidence"]["health"], Value::from("Hbar"));
}

#[test]
fn chain_graph_in_dot() {
    let outcome = run(["mau", "graph", &data("chain.json"), "--format", "dot"]);
    assert_eq!(outcome.code, 0);
    assert_eq!(
        outcome.stdout,
        "graph U {\n  \"x\";\n  \"y\";\n  \"z\";\n  \"x\" -- \"y\";\n  \"y\" -- \"z\";\n}\n"
    );
    let (_, out) = mau(&["graph", &data("chain.json"), "--format", "json"]);
    assert_eq!(out["edges"], serde_json::json!([["x", "y"], ["y", "z"]]));
}

#[test]
fn chain_cliques_and_separation() {
    let (_, out) = mau(&["cliques", &data("chain.json")]);
    assert_eq!(out["cliques"], serde_json::json!([["x", "y"], ["y", "z"]]));
    let (_, out) = mau(&[
        "check",
        "cai",
        &data("chain.json"),
        "--x",
        "x",
        "--z",
        "y",
        "--y",
        "z",
    ]);
    assert_eq!(out["holds"], Value::Bool(true));
    let (_, out) = mau(&["check", "cai", &data("chain.json"), "--x", "x", "--y", "z"]);
    assert_eq!(out["holds"], Value::Bool(false));
    let (_, out) = mau(&["check", "gai", &data("chain.json"), "--scopes", "x,y|y,z"]);
    assert_eq!(out["holds"], Value::Bool(true));
}

#[test]
fn decompose_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("factored.json");
    for reference in ["x=0", "x=1,y=1,z=1"] {
        let (status, report) = mau(&[
            "decompose",
            &data("chain.json"),
            "--reference",
            reference,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(status, 0);
        assert!(report["max_residual"].as_f64().unwrap() <= 4e-9);

        let Utility::Dense(dense) =
            parse_utility(&fs::read_to_string(data("chain.json")).unwrap(), false).unwrap()
        else {
            panic!("dense input");
        };
        let written = fs::read_to_string(&out).unwrap();
        let embedded = serde_json::to_string(&report["utility"]).unwrap();
        for text in [written.as_str(), embedded.as_str()] {
            let Utility::Factored(d) = parse_utility(text, false).unwrap() else {
                panic!("factored output");
            };
            for i in 0..dense.values().len() {
                let state = dense.space().decode(i);
                assert!((d.value_of_state(&state) - dense.values()[i]).abs() <= 4e-9);
            }
        }
    }
}

#[test]
fn choose_prefers_higher_expected_utility() {
    let (status, out) = mau(&[
        "choose",
        &data("healthwealth.json"),
        &data("uniform_bn.json"),
        &data("actions.json"),
    ]);
    assert_eq!(status, 0);
    assert_eq!(out["best"], Value::from("invest"));
    assert_eq!(out["actions"][1]["expected_utility"].as_f64(), Some(1.0));
}

#[test]
fn axioms_report_no_violations_on_chain() {
    let (status, out) = mau(&["axioms", &data("chain.json")]);
    assert_eq!(status, 0);
    assert_eq!(out["total_violations"].as_u64(), Some(0));
    assert!(
        out["conditions"]["intersection"]["checked"]
            .as_u64()
            .unwrap()
            > 0
    );
}

#[test]
fn output_is_byte_identical_across_runs() {
    let cases: Vec<Vec<String>> = vec![
        vec!["graph".into(), data("chain.json")],
        vec!["decompose".into(), data("chain.json")],
        vec!["axioms".into(), data("chain.json")],
        vec![
            "eu".into(),
            data("chain.json"),
            data("chain_bn.json"),
            "--method".into(),
            "both".into(),
        ],
    ];
    for args in cases {
        let first = run(std::iter::once("mau".to_string()).chain(args.clone()));
        let second = run(std::iter::once("mau".to_string()).chain(args));
        assert_eq!(first, second);
    }
}

#[test]
fn factored_and_brute_agree_on_chain_network() {
    let (status, out) = mau(&[
        "eu",
        &data("chain.json"),
        &data("chain_bn.json"),
        "--method",
        "both",
    ]);
    assert_eq!(status, 0);
    assert_eq!(out["agree"], Value::Bool(true));
    assert_eq!(out["containment"]["uncovered"].as_u64(), Some(0));
}

#[test]
fn malformed_input_exits_two() {
    let hw = data("healthwealth.json");
    assert_eq!(
        code(&["check", "ai", &hw, "--partition", "health,health"]),
        2
    );
    assert_eq!(code(&["check", "ai", &hw, "--partition", "health"]), 2);
    assert_eq!(code(&["check", "ui", &hw, "--x", "age"]), 2);
    assert_eq!(code(&["graph", "/nonexistent/u.json"]), 2);
    assert_eq!(code(&["graph", &data("uniform_bn.json")]), 2);
    assert_eq!(
        code(&["eu", &hw, &data("correlated.json"), "--method", "factored"]),
        2
    );
    assert_eq!(code(&["eu", &hw, &data("chain_bn.json")]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["graph", &hw, "--epsilon", "-1"]), 2);
}

#[test]
fn guards_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let vars: Vec<String> = (0..27)
        .map(|i| format!(r#"{{"name": "v{i}", "domain": ["0", "1"]}}"#))
        .collect();
    let big = dir.path().join("big.json");
    fs::write(
        &big,
        format!(
            r#"{{"variables": [{}], "utility": {{"type": "factored", "factors": [{{"scope": ["v0"], "values": [0, 1]}}]}}}}"#,
            vars.join(",")
        ),
    )
    .unwrap();
    assert_eq!(code(&["graph", big.to_str().unwrap()]), 3);

    let six: Vec<String> = (0..6)
        .map(|i| format!(r#"{{"name": "v{i}", "domain": ["0", "1"]}}"#))
        .collect();
    let wide = dir.path().join("six.json");
    fs::write(
        &wide,
        format!(
            r#"{{"variables": [{}], "utility": {{"type": "dense", "order": ["v0","v1","v2","v3","v4","v5"], "values": [{}]}}}}"#,
            six.join(","),
            vec!["0"; 64].join(",")
        ),
    )
    .unwrap();
    assert_eq!(code(&["axioms", wide.to_str().unwrap()]), 3);
}

#[test]
fn binary_prints_and_exits() {
    let out = Command::new(env!("CARGO_BIN_EXE_mau"))
        .args([
            "check",
            "ai",
            &data("healthwealth.json"),
            "--partition",
            "health|wealth",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["holds"], Value::Bool(false));

    let out = Command::new(env!("CARGO_BIN_EXE_mau"))
        .args(["graph", "/nonexistent/u.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
