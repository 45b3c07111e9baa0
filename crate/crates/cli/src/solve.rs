//! Problem dispatch and the result documents shared by the CLI and the
//! HTTP service.

use epipole_core::fundamental::epipolar_transfer;
use epipole_core::solvers::default_viewport;
use epipole_core::{
    f_from_epipoles_and_corr, residual_rms_pixel, solve_five, solve_six, solvers, Conic,
    ConicClass, CorrSet, EpipoleEstimate, FundMatrix, HomPoint2, Line2, LineParam, Method,
    Viewport,
};
use serde::Serialize;

use crate::error::ServiceError;
use crate::problem::{correspondences, parse_point, parse_size, FmatrixRequest, Problem, ProblemFile};

/// Points per sampled conic.
pub const CONIC_SAMPLES: usize = 256;

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum SolveOutput {
    Four(FourOutput),
    Five(FiveOutput),
    Six(SixOutput),
}

#[derive(Clone, Debug, Serialize)]
pub struct FourOutput {
    pub method: Method,
    /// Canonical coefficients in image-2 pixels.
    pub conic: Conic,
    /// Canonical coefficients in the conditioned image-2 frame.
    pub conic_normalized: Conic,
    pub classification: ConicClass,
    pub viewport: Viewport,
    /// Visible arcs, each an ordered list of pixel positions.
    pub polyline: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiveOutput {
    #[serde(flatten)]
    pub estimate: EpipoleEstimate,
    /// Same residual on raw pixel coordinates, for display.
    pub residual_rms_px: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmatrix: Option<FmatrixSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub epipole1: HomPoint2,
    pub epipole2: HomPoint2,
    pub residual_rms: f64,
    pub residual_rms_px: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SixOutput {
    pub method: Method,
    /// Best first.
    pub candidates: Vec<Candidate>,
    /// Computed from the best candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmatrix: Option<FmatrixSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FmatrixSummary {
    /// Row-major, Frobenius norm 1.
    #[serde(rename = "F")]
    pub f: [f64; 9],
    pub epipole1: HomPoint2,
    pub epipole2: HomPoint2,
}

impl From<&FundMatrix> for FmatrixSummary {
    fn from(f: &FundMatrix) -> Self {
        FmatrixSummary {
            f: f.to_row_major(),
            epipole1: f.e,
            epipole2: f.e_prime,
        }
    }
}

fn pixels(p: &HomPoint2) -> Option<[f64; 2]> {
    p.to_pixel()
}

pub fn solve_problem(pf: &ProblemFile, with_fmatrix: bool) -> Result<SolveOutput, ServiceError> {
    match pf.validate()? {
        Problem::Four { e, corr } => {
            if with_fmatrix {
                return Err(ServiceError::Malformed(
                    "the fundamental matrix needs both epipoles; give 5 or 6 correspondences".into(),
                ));
            }
            let viewport = match pf.image2_size {
                Some([w, h]) => Viewport::image(w, h),
                None => default_viewport(&corr),
            };
            let sol = solvers::solve_four_with(&e, &corr, &viewport, CONIC_SAMPLES)?;
            Ok(SolveOutput::Four(FourOutput {
                method: Method::FourConic,
                conic: *sol.conic.pixel(),
                conic_normalized: *sol.conic.normalized(),
                classification: sol.class,
                viewport,
                polyline: sol
                    .polyline
                    .iter()
                    .map(|arc| arc.iter().filter_map(pixels).collect())
                    .collect(),
            }))
        }
        Problem::Five { e, corr } => {
            let estimate = solve_five(&e, &corr)?;
            let fmatrix = if with_fmatrix {
                let f = f_from_epipoles_and_corr(&e, &estimate.e_prime, &corr)?;
                Some(FmatrixSummary::from(&f))
            } else {
                None
            };
            Ok(SolveOutput::Five(FiveOutput {
                residual_rms_px: residual_rms_pixel(&e, &estimate.e_prime, &corr),
                estimate,
                fmatrix,
            }))
        }
        Problem::Six { line, corr } => {
            let lp = search_line(line, &corr, pf.image1_size)?;
            let roots = solve_six(&lp, &corr)?;
            let fmatrix = match (with_fmatrix, roots.first()) {
                (true, Some(r)) => Some(FmatrixSummary::from(&f_from_epipoles_and_corr(
                    &r.e, &r.e_prime, &corr,
                )?)),
                _ => None,
            };
            Ok(SolveOutput::Six(SixOutput {
                method: Method::SixLinesearch,
                candidates: roots
                    .iter()
                    .map(|r| Candidate {
                        epipole1: r.e,
                        epipole2: r.e_prime,
                        residual_rms: r.residual_rms,
                        residual_rms_px: residual_rms_pixel(&r.e, &r.e_prime, &corr),
                    })
                    .collect(),
                fmatrix,
            }))
        }
    }
}

/// Anchors around the foot of the image centre (or the image-1 point
/// centroid) on `line`, half an image width apart on each side.
fn search_line(
    line: Line2,
    corr: &CorrSet,
    image1_size: Option<[f64; 2]>,
) -> Result<LineParam, ServiceError> {
    let (reference, half) = match image1_size {
        Some([w, h]) => ([0.5 * w, 0.5 * h], 0.5 * w),
        None => {
            let v = Viewport::bounding(&corr.points1()).unwrap_or(Viewport::image(1.0, 1.0));
            (v.center(), 0.5 * (v.x_max - v.x_min).max(v.y_max - v.y_min).max(1.0))
        }
    };
    Ok(LineParam::from_line(line, reference, half)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EpipolarLine {
    /// Index of the correspondence whose partner generated the line.
    pub index: usize,
    pub line: Line2,
    /// Endpoints of the part inside the viewport, if any.
    pub segment: Option<[[f64; 2]; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FmatrixOutput {
    #[serde(rename = "F")]
    pub f: [f64; 9],
    pub epipole1: HomPoint2,
    pub epipole2: HomPoint2,
    pub viewport1: Viewport,
    pub viewport2: Viewport,
    /// `Fᵀ p'_s` in image 1.
    pub lines1: Vec<EpipolarLine>,
    /// `F p_s` in image 2.
    pub lines2: Vec<EpipolarLine>,
}

/// Part of `line` inside `v`, as two endpoints.
pub fn clip_line(line: &Line2, v: &Viewport) -> Option<[[f64; 2]; 2]> {
    let [a, b, c] = line.to_array();
    let mut hits: Vec<[f64; 2]> = Vec::with_capacity(4);
    let eps = 1e-9 * (v.x_max - v.x_min).abs().max(v.y_max - v.y_min).max(1.0);
    if b != 0.0 {
        for x in [v.x_min, v.x_max] {
            let y = -(a * x + c) / b;
            if y >= v.y_min - eps && y <= v.y_max + eps {
                hits.push([x, y.clamp(v.y_min, v.y_max)]);
            }
        }
    }
    if a != 0.0 {
        for y in [v.y_min, v.y_max] {
            let x = -(b * y + c) / a;
            if x >= v.x_min - eps && x <= v.x_max + eps {
                hits.push([x.clamp(v.x_min, v.x_max), y]);
            }
        }
    }
    let mut best: Option<([[f64; 2]; 2], f64)> = None;
    for i in 0..hits.len() {
        for j in i + 1..hits.len() {
            let d = (hits[i][0] - hits[j][0]).hypot(hits[i][1] - hits[j][1]);
            if best.is_none_or(|b| d > b.1) {
                best = Some(([hits[i], hits[j]], d));
            }
        }
    }
    best.map(|b| b.0)
}

fn viewport_for(size: Option<[f64; 2]>, points: &[HomPoint2], epipole: &HomPoint2) -> Viewport {
    if let Some([w, h]) = size {
        return Viewport::image(w, h);
    }
    let mut pts = points.to_vec();
    pts.push(*epipole);
    Viewport::bounding(&pts)
        .map(|v| v.expanded(0.1))
        .unwrap_or(Viewport::new(-1.0, -1.0, 1.0, 1.0))
}

pub fn fmatrix(req: &FmatrixRequest) -> Result<FmatrixOutput, ServiceError> {
    let corr = correspondences(&req.points1, &req.points2)?;
    let size1 = parse_size(req.image1_size, "image1_size")?;
    let size2 = parse_size(req.image2_size, "image2_size")?;
    let e = parse_point(&req.epipole1, "epipole1")?;
    let ep = parse_point(&req.epipole2, "epipole2")?;
    let f = f_from_epipoles_and_corr(&e, &ep, &corr)?;
    let viewport1 = viewport_for(size1, &corr.points1(), &f.e);
    let viewport2 = viewport_for(size2, &corr.points2(), &f.e_prime);
    let ft = f.transposed();
    let mut lines1 = Vec::with_capacity(corr.len());
    let mut lines2 = Vec::with_capacity(corr.len());
    for (index, c) in corr.pairs.iter().enumerate() {
        let l2 = epipolar_transfer(&f, &c.p)?;
        let l1 = epipolar_transfer(&ft, &c.p_prime)?;
        lines2.push(EpipolarLine {
            index,
            segment: clip_line(&l2, &viewport2),
            line: l2,
        });
        lines1.push(EpipolarLine {
            index,
            segment: clip_line(&l1, &viewport1),
            line: l1,
        });
    }
    Ok(FmatrixOutput {
        f: f.to_row_major(),
        epipole1: f.e,
        epipole2: f.e_prime,
        viewport1,
        viewport2,
        lines1,
        lines2,
    })
}

/// Compact JSON, the exact bytes both front ends emit.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("result types serialize")
}
