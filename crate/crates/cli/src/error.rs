use epipole_core::GeometryError;
use serde::Serialize;

/// Exit code for unreadable or invalid input.
pub const EXIT_MALFORMED: i32 = 2;
/// Exit code for a well-formed problem the solvers cannot resolve.
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Degenerate(GeometryError),
}

impl From<GeometryError> for ServiceError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::InvalidInput(msg) => ServiceError::Malformed(msg),
            other => ServiceError::Degenerate(other),
        }
    }
}

/// Error payload shared by stderr (CLI) and HTTP error responses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBody {
    /// `malformed_input` or `degenerate_configuration`.
    pub error: &'static str,
    /// Machine-readable reason.
    pub kind: String,
    pub message: String,
    /// Correspondence indices involved, when known.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<&'static str>,
}

impl ServiceError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Malformed(_) => EXIT_MALFORMED,
            ServiceError::Degenerate(_) => EXIT_DEGENERATE,
        }
    }

    pub fn body(&self) -> ErrorBody {
        match self {
            ServiceError::Malformed(msg) => ErrorBody {
                error: "malformed_input",
                kind: "invalid_input".into(),
                message: msg.clone(),
                indices: Vec::new(),
                hint: None,
            },
            ServiceError::Degenerate(e) => {
                let (indices, hint) = match e {
                    GeometryError::RedundantConfiguration { pair } => (
                        pair.to_vec(),
                        Some("two points lie on one line through the epipole; pick a different point"),
                    ),
                    GeometryError::IllConditioned { triple } => (
                        triple.to_vec(),
                        Some("three image-2 points are nearly collinear; pick a different point"),
                    ),
                    GeometryError::CoincidentSolution | GeometryError::Underdetermined(_) => {
                        (Vec::new(), Some("the points do not isolate the epipole; add or move a point"))
                    }
                    GeometryError::NoSolution { .. } => {
                        (Vec::new(), Some("no epipole on the given line; check the line or the points"))
                    }
                    _ => (Vec::new(), None),
                };
                ErrorBody {
                    error: "degenerate_configuration",
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                    indices,
                    hint,
                }
            }
        }
    }
}
