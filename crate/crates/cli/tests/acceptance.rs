//! Acceptance run for the service layer: every fixture through the binary
//! and through the router, outputs compared byte for byte and validated
//! against the shipped schemas. Prints one PASS/FAIL line.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use serde_json::Value;

fn check_fixture(rt: &tokio::runtime::Runtime, path: &std::path::Path, with_f: bool) -> Result<(), String> {
    let (endpoint, expect) = classify(path);
    let name = format!("{}{}", stem(path), if with_f { " --fmatrix" } else { "" });
    let body = std::fs::read_to_string(path).map_err(|e| format!("{name}: {e}"))?;

    if expect != Expect::Malformed {
        let input: Value = serde_json::from_str(&body).map_err(|e| format!("{name}: {e}"))?;
        let errs = schema_errors(&load_schema(input_schema(endpoint)), &input);
        if !errs.is_empty() {
            return Err(format!("{name}: input schema: {errs:?}"));
        }
    }

    let (code, cli) = cli_run(endpoint, path, with_f);
    if code != exit_for(expect) {
        return Err(format!("{name}: exit {code}, expected {}: {cli}", exit_for(expect)));
    }
    let (status, http) = rt.block_on(common::http("POST", http_path(endpoint, with_f), body));
    if status != status_for(expect) {
        return Err(format!("{name}: HTTP {status}, expected {}", status_for(expect)));
    }
    if cli != http {
        return Err(format!("{name}: CLI and HTTP differ\n  cli:  {cli}\n  http: {http}"));
    }
    let out: Value = serde_json::from_str(&cli).map_err(|e| format!("{name}: output: {e}"))?;
    let errs = schema_errors(&load_schema(result_schema(endpoint, expect)), &out);
    if !errs.is_empty() {
        return Err(format!("{name}: output schema: {errs:?}"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mut runs = 0;
    let mut failures = Vec::new();
    for path in fixtures() {
        let (endpoint, expect) = classify(&path);
        for with_f in fmatrix_variants(endpoint, expect, &path) {
            runs += 1;
            if let Err(e) = check_fixture(&rt, &path, with_f) {
                failures.push(e);
            }
        }
    }
    // Health is part of the published surface too.
    let (status, text) = rt.block_on(common::http("GET", "/api/health", ""));
    let health_ok = status.is_success()
        && serde_json::from_str::<Value>(&text)
            .map(|v| load_schema("health.schema.json").is_valid(&v))
            .unwrap_or(false);
    if !health_ok {
        failures.push(format!("health: {status} {text}"));
    }

    for f in &failures {
        eprintln!("  {f}");
    }
    let verdict = if failures.is_empty() && runs > 0 { "PASS" } else { "FAIL" };
    println!(
        "{verdict} CLI/HTTP parity and schema validity: {} of {runs} fixture runs identical and schema-valid, health {} ({:.2} s)",
        runs - failures.iter().filter(|f| !f.starts_with("health")).count(),
        if health_ok { "ok" } else { "bad" },
        t0.elapsed().as_secs_f64()
    );
    if verdict == "PASS" {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
