//! Stateless JSON service backing the annotator UI.

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::RawQuery;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::problem::{parse_json, FmatrixRequest, ProblemFile};
use crate::solve::{fmatrix, solve_problem, to_json};

/// Placeholder page served at `/` when no UI build directory is configured.
const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Clone, Debug, Default)]
pub struct ServerConfig {
    /// Directory with the built UI; served at `/` when set.
    pub static_dir: Option<PathBuf>,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(err: &ServiceError) -> Response {
    let status = match err {
        ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
        ServiceError::Degenerate(_) => StatusCode::UNPROCESSABLE_ENTITY,
    };
    json_response(status, to_json(&err.body()))
}

/// Runs `job` off the async executor; solver calls are CPU-bound.
async fn blocking(job: impl FnOnce() -> Result<String, ServiceError> + Send + 'static) -> Response {
    match tokio::task::spawn_blocking(job).await {
        Ok(Ok(body)) => json_response(StatusCode::OK, body),
        Ok(Err(err)) => error_response(&err),
        Err(_) => json_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            r#"{"error":"internal","kind":"panic","message":"solver task failed"}"#.into(),
        ),
    }
}

/// `fmatrix=true|1` switches on the F computation, like `--fmatrix`.
fn wants_fmatrix(query: Option<&str>) -> Result<bool, ServiceError> {
    let Some(q) = query else { return Ok(false) };
    let mut on = false;
    for pair in q.split('&').filter(|p| !p.is_empty()) {
        match pair.split_once('=').unwrap_or((pair, "true")) {
            ("fmatrix", "true" | "1") => on = true,
            ("fmatrix", "false" | "0") => on = false,
            (k, v) => {
                return Err(ServiceError::Malformed(format!("unsupported query parameter {k}={v}")))
            }
        }
    }
    Ok(on)
}

async fn health() -> Response {
    json_response(StatusCode::OK, r#"{"status":"ok"}"#.into())
}

async fn api_solve(RawQuery(query): RawQuery, body: Bytes) -> Response {
    blocking(move || {
        let with_f = wants_fmatrix(query.as_deref())?;
        let pf: ProblemFile = parse_json(&body)?;
        Ok(to_json(&solve_problem(&pf, with_f)?))
    })
    .await
}

async fn api_fmatrix(body: Bytes) -> Response {
    blocking(move || {
        let req: FmatrixRequest = parse_json(&body)?;
        Ok(to_json(&fmatrix(&req)?))
    })
    .await
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

pub fn router(config: &ServerConfig) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/solve", post(api_solve))
        .route("/api/fmatrix", post(api_fmatrix));
    match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(&config)).await
}
