mod common;

use common::*;
use serde_json::{json, Value};

const SCHEMAS: [&str; 8] = [
    "common.schema.json",
    "problem.schema.json",
    "solve_result.schema.json",
    "error.schema.json",
    "fmatrix_request.schema.json",
    "fmatrix_result.schema.json",
    "scene.schema.json",
    "health.schema.json",
];

#[test]
fn all_schemas_compile() {
    for s in SCHEMAS {
        load_schema(s);
    }
}

#[test]
fn well_formed_inputs_match_their_schema() {
    for path in fixtures() {
        let (endpoint, expect) = classify(&path);
        if expect == Expect::Malformed {
            continue;
        }
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let errs = schema_errors(&load_schema(input_schema(endpoint)), &v);
        assert!(errs.is_empty(), "{}: {errs:?}", path.display());
    }
}

#[test]
fn problem_schema_rejects_what_the_parser_rejects() {
    let v = load_schema("problem.schema.json");
    for name in [
        "malformed_missing_epipole.json",
        "malformed_both_priors.json",
        "malformed_too_few.json",
        "malformed_bad_number.json",
    ] {
        let inst: Value = serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
        assert!(!v.is_valid(&inst), "{name} should be invalid");
    }
    // Six points need a line, not a point.
    let mut six: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("s1_n6.json")).unwrap()).unwrap();
    six["epipole1"] = json!([320.0, 240.0]);
    six.as_object_mut().unwrap().remove("epiline1");
    assert!(!v.is_valid(&six));
}

#[test]
fn result_schemas_are_strict() {
    let v = load_schema("solve_result.schema.json");
    assert!(!v.is_valid(&json!({"method": "five_cremona", "epipole": [1, 2, 1]})));
    assert!(!v.is_valid(&json!({"method": "four_conic", "conic": [1, 2, 3]})));
    let five = json!({
        "method": "five_cremona",
        "epipole": [1.0, 2.0, 1.0],
        "residual_rms": 0.0,
        "residual_rms_px": 0.0,
        "alternates": []
    });
    assert!(v.is_valid(&five));
    let mut extra = five.clone();
    extra["surprise"] = json!(1);
    assert!(!v.is_valid(&extra));

    let e = load_schema("error.schema.json");
    assert!(e.is_valid(&json!({"error": "malformed_input", "kind": "invalid_input", "message": "x"})));
    assert!(!e.is_valid(&json!({"error": "oops", "kind": "k", "message": "x"})));
}

#[test]
fn every_fixture_output_matches_its_schema() {
    for path in fixtures() {
        let (endpoint, expect) = classify(&path);
        for with_f in fmatrix_variants(endpoint, expect, &path) {
            let (code, out) = cli_run(endpoint, &path, with_f);
            assert_eq!(code, exit_for(expect), "{}: {out}", path.display());
            let v: Value = serde_json::from_str(&out).unwrap();
            let errs = schema_errors(&load_schema(result_schema(endpoint, expect)), &v);
            assert!(errs.is_empty(), "{} (fmatrix={with_f}): {errs:?}", path.display());
        }
    }
}
