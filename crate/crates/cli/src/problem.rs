//! Input files: the solve problem and the F-matrix request.

use epipole_core::{CorrSet, Correspondence, HomPoint2, Line2};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// A solve request as written by the annotator or by `simulate --problem`.
/// Unknown fields are ignored so session files can carry UI metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub points1: Vec<[f64; 2]>,
    pub points2: Vec<[f64; 2]>,
    /// `[x, y]` pixels or homogeneous `[x, y, z]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epipole1: Option<Vec<f64>>,
    /// Image-1 line `[a, b, c]` through the epipole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epiline1: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image1_size: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image2_size: Option<[f64; 2]>,
}

/// A validated problem, dispatched by correspondence count.
#[derive(Clone, Debug)]
pub enum Problem {
    Four { e: HomPoint2, corr: CorrSet },
    Five { e: HomPoint2, corr: CorrSet },
    Six { line: Line2, corr: CorrSet },
}

fn malformed(msg: impl Into<String>) -> ServiceError {
    ServiceError::Malformed(msg.into())
}

/// `[x, y]` becomes `(x, y, 1)`; `[x, y, z]` is taken as is.
pub fn parse_point(v: &[f64], what: &str) -> Result<HomPoint2, ServiceError> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(malformed(format!("{what} has a non-finite coordinate")));
    }
    match *v {
        [x, y] => Ok(HomPoint2::pixel(x, y)),
        [x, y, z] if x != 0.0 || y != 0.0 || z != 0.0 => Ok(HomPoint2::new(x, y, z)),
        [_, _, _] => Err(malformed(format!("{what} is the zero vector"))),
        _ => Err(malformed(format!("{what} must have 2 or 3 coordinates, got {}", v.len()))),
    }
}

pub fn parse_size(size: Option<[f64; 2]>, what: &str) -> Result<Option<[f64; 2]>, ServiceError> {
    match size {
        Some([w, h]) if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) => {
            Err(malformed(format!("{what} must be two positive numbers")))
        }
        s => Ok(s),
    }
}

pub fn correspondences(
    points1: &[[f64; 2]],
    points2: &[[f64; 2]],
) -> Result<CorrSet, ServiceError> {
    if points1.len() != points2.len() {
        return Err(malformed(format!(
            "points1 has {} entries but points2 has {}",
            points1.len(),
            points2.len()
        )));
    }
    if points1.iter().chain(points2).flatten().any(|c| !c.is_finite()) {
        return Err(malformed("point coordinates must be finite"));
    }
    Ok(CorrSet::new(
        points1
            .iter()
            .zip(points2)
            .map(|(p, q)| Correspondence::pixels(*p, *q))
            .collect(),
    ))
}

impl ProblemFile {
    pub fn validate(&self) -> Result<Problem, ServiceError> {
        let corr = correspondences(&self.points1, &self.points2)?;
        parse_size(self.image1_size, "image1_size")?;
        parse_size(self.image2_size, "image2_size")?;
        let n = corr.len();
        match (n, &self.epipole1, &self.epiline1) {
            (4 | 5, Some(e), None) => {
                let e = parse_point(e, "epipole1")?;
                let corr = corr.with_epipole(e);
                Ok(if n == 4 {
                    Problem::Four { e, corr }
                } else {
                    Problem::Five { e, corr }
                })
            }
            (4 | 5, _, _) => Err(malformed(format!(
                "{n} correspondences need epipole1 and no epiline1"
            ))),
            (6, None, Some(l)) => {
                if l.iter().any(|c| !c.is_finite()) || l[0] == 0.0 && l[1] == 0.0 {
                    return Err(malformed("epiline1 must be a finite line with (a, b) != 0"));
                }
                let line = Line2::new(l[0], l[1], l[2]);
                Ok(Problem::Six {
                    line,
                    corr: corr.with_epiline(line),
                })
            }
            (6, _, _) => Err(malformed("6 correspondences need epiline1 and no epipole1")),
            _ => Err(malformed(format!("expected 4 to 6 correspondences, got {n}"))),
        }
    }
}

/// Body of `/api/fmatrix` and input of `epipole fmatrix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmatrixRequest {
    pub points1: Vec<[f64; 2]>,
    pub points2: Vec<[f64; 2]>,
    pub epipole1: Vec<f64>,
    pub epipole2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image1_size: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image2_size: Option<[f64; 2]>,
}

pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| malformed(format!("invalid JSON: {e}")))
}
