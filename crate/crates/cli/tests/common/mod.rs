//! Shared helpers: fixture discovery, schema validation, and running a
//! request through the binary or the in-process router.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use jsonschema::{Resource, Validator};
use serde_json::Value;
use tower::ServiceExt;

use epipole_cli::server::{router, ServerConfig};

const SCHEMA_BASE: &str = "https://epipole.local/schemas/";

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("tests/fixtures").join(name)
}

/// Every fixture file, sorted by name.
pub fn fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(crate_dir().join("tests/fixtures"))
        .expect("fixtures dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

pub fn stem(p: &Path) -> String {
    p.file_stem().unwrap().to_string_lossy().into_owned()
}

/// What a fixture is for, from its file name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    /// Solves; exit 0 / 200.
    Solve,
    /// Solver degeneracy; exit 3 / 422.
    Degenerate,
    /// Rejected input; exit 2 / 400.
    Malformed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Solve,
    Fmatrix,
}

pub fn classify(p: &Path) -> (Endpoint, Expect) {
    let s = stem(p);
    let endpoint = if s.starts_with("fmatrix") { Endpoint::Fmatrix } else { Endpoint::Solve };
    let expect = if s.contains("malformed") {
        Expect::Malformed
    } else if s.contains("degenerate") {
        Expect::Degenerate
    } else {
        Expect::Solve
    };
    (endpoint, expect)
}

pub fn load_schema(name: &str) -> Validator {
    let read = |n: &str| -> Value {
        let path = crate_dir().join("schemas").join(n);
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
    };
    let common = Resource::from_contents(read("common.schema.json")).unwrap();
    jsonschema::options()
        .with_resource(format!("{SCHEMA_BASE}common.schema.json"), common)
        .build(&read(name))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Validation errors as strings; empty when valid.
pub fn schema_errors(v: &Validator, instance: &Value) -> Vec<String> {
    v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

pub fn assert_valid(schema: &str, instance: &Value) {
    let errs = schema_errors(&load_schema(schema), instance);
    assert!(errs.is_empty(), "{schema}: {errs:#?}\n{instance}");
}

pub fn epipole<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_epipole"))
        .args(args)
        .output()
        .expect("run epipole")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Runs the CLI on a fixture; `(exit code, stdout or stderr, trimmed)`.
pub fn cli_run(endpoint: Endpoint, path: &Path, fmatrix: bool) -> (i32, String) {
    let mut args: Vec<std::ffi::OsString> = vec![match endpoint {
        Endpoint::Solve => "solve".into(),
        Endpoint::Fmatrix => "fmatrix".into(),
    }];
    args.push(path.into());
    if fmatrix {
        args.push("--fmatrix".into());
    }
    let o = epipole(args);
    let code = o.status.code().expect("exit code");
    let text = if code == 0 { stdout(&o) } else { stderr(&o) };
    (code, text.trim_end().to_string())
}

pub async fn http(method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, String) {
    http_with(&ServerConfig::default(), method, uri, body).await
}

pub async fn http_with(
    config: &ServerConfig,
    method: &str,
    uri: &str,
    body: impl Into<Body>,
) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let resp = router(config).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub fn http_path(endpoint: Endpoint, fmatrix: bool) -> &'static str {
    match (endpoint, fmatrix) {
        (Endpoint::Solve, false) => "/api/solve",
        (Endpoint::Solve, true) => "/api/solve?fmatrix=true",
        (Endpoint::Fmatrix, _) => "/api/fmatrix",
    }
}

pub fn exit_for(expect: Expect) -> i32 {
    match expect {
        Expect::Solve => 0,
        Expect::Malformed => 2,
        Expect::Degenerate => 3,
    }
}

pub fn status_for(expect: Expect) -> StatusCode {
    match expect {
        Expect::Solve => StatusCode::OK,
        Expect::Malformed => StatusCode::BAD_REQUEST,
        Expect::Degenerate => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

pub fn result_schema(endpoint: Endpoint, expect: Expect) -> &'static str {
    match (endpoint, expect) {
        (_, Expect::Malformed | Expect::Degenerate) => "error.schema.json",
        (Endpoint::Solve, Expect::Solve) => "solve_result.schema.json",
        (Endpoint::Fmatrix, Expect::Solve) => "fmatrix_result.schema.json",
    }
}

pub fn input_schema(endpoint: Endpoint) -> &'static str {
    match endpoint {
        Endpoint::Solve => "problem.schema.json",
        Endpoint::Fmatrix => "fmatrix_request.schema.json",
    }
}

/// Whether `--fmatrix` applies: only to 5- and 6-point solve fixtures.
pub fn fmatrix_variants(endpoint: Endpoint, expect: Expect, path: &Path) -> Vec<bool> {
    let s = stem(path);
    if endpoint == Endpoint::Solve && expect == Expect::Solve && !s.ends_with("n4") {
        vec![false, true]
    } else {
        vec![false]
    }
}
