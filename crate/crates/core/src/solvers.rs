//! Epipole localization from 4, 5 or 6 correspondences.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{Conic, ConicClass, Viewport};
use crate::constraints::{conic_from_normalized, CorrSet, EpipoleConic, NormalizedCorr, QuadIndex};
use crate::error::{GeometryError, Result};
use crate::projective::{
    det3_normalized, homography_to_standard_triangle, join, projective_distance, HomPoint2, Line2,
};

/// Square coefficients of a triangle-frame conic above this (canonical
/// scale) mean the shared points are not on it.
const TRIANGLE_COEFF_TOL: f64 = 1e-8;
/// Meet coordinates below this fraction of the largest one count as zero.
const EDGE_TOL: f64 = 1e-9;
/// Unit-normalized cross product norm below which two lines are the same.
const SAME_LINE_TOL: f64 = 1e-10;
/// Roots closer than this to a structural degeneracy are spurious.
const SPURIOUS_TOL: f64 = 1e-6;
/// Roots closer than this (conditioned frame) are merged.
const DUPLICATE_TOL: f64 = 1e-7;
/// Candidates whose residuals differ by less than this are tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FourConic,
    FiveCremona,
    SixLinesearch,
}

/// A located image-2 epipole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpipoleEstimate {
    /// Pixel frame, `z = 1` when finite.
    #[serde(rename = "epipole")]
    pub e_prime: HomPoint2,
    /// RMS of all quad residuals in the conditioned frames.
    pub residual_rms: f64,
    pub method: Method,
    pub alternates: Vec<HomPoint2>,
}

/// Result of the four-point configuration: the conic `e'` lies on.
#[derive(Clone, Debug, PartialEq)]
pub struct FourPointSolution {
    pub conic: EpipoleConic,
    pub class: ConicClass,
    /// Pixel polylines of the visible conic arcs.
    pub polyline: Vec<Vec<HomPoint2>>,
    pub viewport: Viewport,
}

/// Default display region: bounding box of the image-2 points grown by half
/// its size on every side.
pub fn default_viewport(corr: &CorrSet) -> Viewport {
    Viewport::bounding(&corr.points2())
        .map(|v| v.expanded(0.5))
        .unwrap_or(Viewport::new(-1.0, -1.0, 1.0, 1.0))
}

pub fn solve_four(e: &HomPoint2, corr: &CorrSet) -> Result<FourPointSolution> {
    solve_four_with(e, corr, &default_viewport(corr), 256)
}

/// Conic of the unique quad, classified and sampled inside `viewport`.
pub fn solve_four_with(
    e: &HomPoint2,
    corr: &CorrSet,
    viewport: &Viewport,
    samples: usize,
) -> Result<FourPointSolution> {
    expect_len(corr, 4)?;
    let n = corr.normalized()?;
    let quad = QuadIndex::new(0, 1, 2, 3)?;
    let conic = conic_from_normalized(&n, &n.to_frame1(e), &quad)?;
    let class = conic.normalized().classify();
    let polyline = if class == ConicClass::Nondegenerate {
        conic.sample(viewport, samples)?
    } else {
        Vec::new()
    };
    Ok(FourPointSolution {
        conic,
        class,
        polyline,
        viewport: *viewport,
    })
}

fn expect_len(corr: &CorrSet, n: usize) -> Result<()> {
    if corr.len() != n {
        return Err(GeometryError::InvalidInput(format!(
            "expected {n} correspondences, got {}",
            corr.len()
        )));
    }
    Ok(())
}

/// Two quads sharing three correspondences. The first extra point is the
/// unit point of the triangle-normalizing homography.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadSplit {
    pub shared: [usize; 3],
    pub extra: [usize; 2],
}

impl QuadSplit {
    /// `{0,1,2,3} / {0,1,2,4}` first, then the other nine shared triples in
    /// lexicographic order.
    pub fn all() -> Vec<QuadSplit> {
        let mut out = Vec::with_capacity(10);
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    let mut rest = (0..5).filter(|i| ![a, b, c].contains(i));
                    let extra = [rest.next().unwrap(), rest.next().unwrap()];
                    out.push(QuadSplit {
                        shared: [a, b, c],
                        extra,
                    });
                }
            }
        }
        out
    }

    fn quads(&self) -> [QuadIndex; 2] {
        let [a, b, c] = self.shared;
        [
            QuadIndex::new(a, b, c, self.extra[0]).unwrap(),
            QuadIndex::new(a, b, c, self.extra[1]).unwrap(),
        ]
    }
}

/// Intermediate values of one five-point solve.
#[derive(Clone, Debug, PartialEq)]
pub struct FiveDiagnostics {
    pub split: QuadSplit,
    /// The two quad conics in the conditioned image-2 frame.
    pub conics: [Conic; 2],
    /// The same conics after mapping the shared points to the coordinate
    /// triangle; their square coefficients vanish.
    pub triangle_conics: [Conic; 2],
    /// `e'` in the conditioned image-2 frame, unit norm.
    pub e_prime_normalized: Vector3<f64>,
}

/// The fourth intersection of the two quad conics of `split`, found by
/// sending the three shared points to the coordinate triangle, where the
/// reciprocal map turns both conics into lines.
pub(crate) fn five_core(
    n: &NormalizedCorr,
    e: &Vector3<f64>,
    split: &QuadSplit,
) -> Result<FiveDiagnostics> {
    let quads = split.quads();
    let mut conics = [Conic::from_coefficients([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])?; 2];
    for (c, q) in conics.iter_mut().zip(&quads) {
        *c = *conic_from_normalized(n, e, q)?.normalized();
    }
    let pt = |i: usize| HomPoint2(n.q[i]);
    let [a, b, c] = split.shared;
    let (qa, qb, qc, qu) = (pt(a), pt(b), pt(c), pt(split.extra[0]));
    let idx = [a, b, c, split.extra[0]];
    let h = homography_to_standard_triangle([&qa, &qb, &qc, &qu]).map_err(|e| match e {
        // Report correspondence indices rather than quadruple positions.
        GeometryError::IllConditioned { triple } => GeometryError::IllConditioned {
            triple: triple.map(|t| idx[t]),
        },
        other => other,
    })?;

    let mut triangle_conics = conics;
    let mut lines = [Vector3::zeros(); 2];
    for k in 0..2 {
        let t = conics[k].transformed(&h)?;
        let [ca, cb, cc, cd, ce, cf] = t.coefficients();
        if ca.abs().max(cc.abs()).max(cf.abs()) > TRIANGLE_COEFF_TOL {
            return Err(GeometryError::Numerical(format!(
                "shared points off the transported conic (|a|,|c|,|f| = {:e}, {:e}, {:e})",
                ca, cc, cf
            )));
        }
        // b xy + d xz + e yz = 0 is sent by (x,y,z) -> (yz,zx,xy) onto the
        // line (e, d, b).
        lines[k] = Vector3::new(ce, cd, cb);
        triangle_conics[k] = t;
    }

    let (l1, l2) = (lines[0].normalize(), lines[1].normalize());
    let m = l1.cross(&l2);
    if m.norm() < SAME_LINE_TOL {
        return Err(GeometryError::Underdetermined(
            "the two quad conics coincide".into(),
        ));
    }
    let max = m.amax();
    if m.iter().any(|c| c.abs() <= EDGE_TOL * max) {
        return Err(GeometryError::CoincidentSolution);
    }
    let tri = Vector3::new(m.y * m.z, m.z * m.x, m.x * m.y);
    let e_prime = (h.inverse_matrix() * tri).normalize();
    Ok(FiveDiagnostics {
        split: *split,
        conics,
        triangle_conics,
        e_prime_normalized: e_prime,
    })
}

fn retryable(err: &GeometryError) -> bool {
    !matches!(err, GeometryError::InvalidInput(_))
}

/// Image-2 epipole from the image-1 epipole and five correspondences.
pub fn solve_five(e: &HomPoint2, corr: &CorrSet) -> Result<EpipoleEstimate> {
    solve_five_detailed(e, corr).map(|(est, _)| est)
}

/// [`solve_five`] together with the intermediate conics. The primary quad
/// split is tried first; on a degeneracy the other nine are tried in order
/// and the primary error is returned if all fail.
pub fn solve_five_detailed(
    e: &HomPoint2,
    corr: &CorrSet,
) -> Result<(EpipoleEstimate, FiveDiagnostics)> {
    expect_len(corr, 5)?;
    let n = corr.normalized()?;
    let en = n.to_frame1(e);
    let mut first_err = None;
    for split in QuadSplit::all() {
        match five_core(&n, &en, &split) {
            Ok(diag) => {
                let est = EpipoleEstimate {
                    e_prime: n.from_frame2(&diag.e_prime_normalized).dehomogenized(),
                    residual_rms: n.residual_rms(&en, &diag.e_prime_normalized),
                    method: Method::FiveCremona,
                    alternates: Vec::new(),
                };
                return Ok((est, diag));
            }
            Err(err) if retryable(&err) => {
                first_err.get_or_insert(err);
            }
            Err(err) => return Err(err),
        }
    }
    Err(first_err.unwrap())
}

/// Picks the candidate `e'` with the smallest residual RMS over all quads.
/// Candidates within `1e-12` of each other keep the lower index.
pub fn rank_candidates(
    cands: &[HomPoint2],
    e: &HomPoint2,
    corr: &CorrSet,
    method: Method,
) -> Result<EpipoleEstimate> {
    if cands.is_empty() {
        return Err(GeometryError::InvalidInput("no candidates to rank".into()));
    }
    let n = corr.normalized()?;
    let en = n.to_frame1(e);
    let scores: Vec<f64> = cands
        .iter()
        .map(|c| n.residual_rms(&en, &n.to_frame2(c)))
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s < scores[best] - TIE_TOL {
            best = i;
        }
    }
    Ok(EpipoleEstimate {
        e_prime: cands[best],
        residual_rms: scores[best],
        method,
        alternates: cands
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, c)| *c)
            .collect(),
    })
}

/// A line of image 1 known to contain the epipole, with two anchor points
/// spanning it. The anchors' homogeneous scales fix the parametrization
/// `a + t b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub line: Line2,
    pub anchor_a: HomPoint2,
    pub anchor_b: HomPoint2,
}

impl LineParam {
    pub fn new(line: Line2, anchor_a: HomPoint2, anchor_b: HomPoint2) -> Result<Self> {
        for p in [&anchor_a, &anchor_b] {
            if line.incident(p).abs() >= 1e-9 {
                return Err(GeometryError::InvalidInput(
                    "anchor is not on the line".into(),
                ));
            }
        }
        if projective_distance(&anchor_a, &anchor_b) < 1e-9 {
            return Err(GeometryError::InvalidInput("anchors coincide".into()));
        }
        Ok(LineParam {
            line,
            anchor_a,
            anchor_b,
        })
    }

    pub fn from_anchors(anchor_a: HomPoint2, anchor_b: HomPoint2) -> Result<Self> {
        let line = join(&anchor_a, &anchor_b)?;
        Ok(LineParam {
            line,
            anchor_a,
            anchor_b,
        })
    }

    /// Anchors at `foot ± half_span * direction`, where `foot` is the point
    /// of the line closest to `reference`.
    pub fn from_line(line: Line2, reference: [f64; 2], half_span: f64) -> Result<Self> {
        let [a, b, c] = line.to_array();
        let nn = a * a + b * b;
        if nn == 0.0 {
            return Err(GeometryError::InvalidInput(
                "the line at infinity cannot carry a finite epipole search".into(),
            ));
        }
        let s = (a * reference[0] + b * reference[1] + c) / nn;
        let foot = [reference[0] - a * s, reference[1] - b * s];
        let len = nn.sqrt();
        let dir = [-b / len, a / len];
        let pa = HomPoint2::pixel(foot[0] - half_span * dir[0], foot[1] - half_span * dir[1]);
        let pb = HomPoint2::pixel(foot[0] + half_span * dir[0], foot[1] + half_span * dir[1]);
        LineParam::new(line, pa, pb)
    }

    /// Chart 0: `a + t b`; chart 1: `t a + b`. Together the charts over
    /// `t in [-1, 1]` cover the whole line.
    pub fn point(&self, chart: u8, t: f64) -> HomPoint2 {
        match chart {
            0 => HomPoint2(self.anchor_a.0 + self.anchor_b.0 * t),
            _ => HomPoint2(self.anchor_a.0 * t + self.anchor_b.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SixPointOptions {
    pub samples_per_chart: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub t_tol: f64,
}

impl Default for SixPointOptions {
    fn default() -> Self {
        SixPointOptions {
            samples_per_chart: 2048,
            t_tol: 1e-12,
        }
    }
}

/// One epipole pair found along the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SixPointRoot {
    /// Image 1, pixels.
    pub e: HomPoint2,
    /// Image 2, pixels.
    pub e_prime: HomPoint2,
    /// RMS over all 15 quads, conditioned frames.
    pub residual_rms: f64,
    pub chart: u8,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SixPointReport {
    /// Ranked by `residual_rms`, best first.
    pub roots: Vec<SixPointRoot>,
    /// Grid samples where the five-point step was degenerate.
    pub skipped_samples: usize,
    /// Sign changes refined onto a structural degeneracy and discarded.
    pub rejected_roots: usize,
}

/// Both epipoles from six correspondences and a line through `e`.
pub fn solve_six(lp: &LineParam, corr: &CorrSet) -> Result<Vec<SixPointRoot>> {
    solve_six_detailed(lp, corr, &SixPointOptions::default()).map(|r| r.roots)
}

struct SixProblem {
    n: NormalizedCorr,
    a: Vector3<f64>,
    b: Vector3<f64>,
    check: QuadIndex,
    split: QuadSplit,
}

impl SixProblem {
    fn e_at(&self, chart: u8, t: f64) -> Vector3<f64> {
        match chart {
            0 => self.a + self.b * t,
            _ => self.a * t + self.b,
        }
        .normalize()
    }

    /// `(g(t), e, e')` where `g` is the residual of the sixth-point quad at
    /// the five-point epipole for `e(t)`.
    fn g(&self, chart: u8, t: f64) -> Result<(f64, Vector3<f64>, Vector3<f64>)> {
        let e = self.e_at(chart, t);
        self.n.check_quad(&e, &self.check)?;
        let ep = five_core(&self.n, &e, &self.split)?.e_prime_normalized;
        Ok((self.n.residual_raw(&e, &ep, &self.check), e, ep))
    }

    fn spurious(&self, e: &Vector3<f64>, ep: &Vector3<f64>) -> bool {
        let eh = HomPoint2(*e);
        let m = self.n.len();
        for i in 0..m {
            for j in i + 1..m {
                let d = det3_normalized(&eh, &HomPoint2(self.n.p[i]), &HomPoint2(self.n.p[j]));
                if d.abs() < SPURIOUS_TOL {
                    return true;
                }
            }
        }
        let eph = HomPoint2(*ep);
        self.n
            .q
            .iter()
            .any(|q| projective_distance(&eph, &HomPoint2(*q)) < SPURIOUS_TOL)
    }

    fn bisect(&self, chart: u8, mut lo: f64, mut hi: f64, mut glo: f64, tol: f64) -> Option<f64> {
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let gm = self.g(chart, mid).ok()?.0;
            if gm == 0.0 {
                return Some(mid);
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Grid scan with bisection over both charts of the line, keeping sign
/// changes of the sixth-point residual that are not structural
/// degeneracies. Degenerate grid samples are treated as missing and never
/// bracketed across.
pub fn solve_six_detailed(
    lp: &LineParam,
    corr: &CorrSet,
    opts: &SixPointOptions,
) -> Result<SixPointReport> {
    expect_len(corr, 6)?;
    if opts.samples_per_chart < 2 {
        return Err(GeometryError::InvalidInput(
            "need at least two samples per chart".into(),
        ));
    }
    let n = corr.normalized()?;
    let h = n.t1.homography().matrix();
    let prob = SixProblem {
        a: h * lp.anchor_a.0,
        b: h * lp.anchor_b.0,
        check: QuadIndex::new(1, 2, 3, 5)?,
        split: QuadSplit::all()[0],
        n,
    };

    let m = opts.samples_per_chart;
    let mut candidates: Vec<(u8, f64)> = Vec::new();
    let mut skipped = 0;
    let mut rejected = 0;
    let mut min_abs = f64::INFINITY;
    for chart in 0..2u8 {
        let ts: Vec<f64> = (0..m)
            .map(|k| -1.0 + 2.0 * k as f64 / (m - 1) as f64)
            .collect();
        let gs: Vec<Option<f64>> = ts
            .par_iter()
            .map(|&t| prob.g(chart, t).ok().map(|r| r.0))
            .collect();
        skipped += gs.iter().filter(|g| g.is_none()).count();
        for g in gs.iter().flatten() {
            min_abs = min_abs.min(g.abs());
        }
        for k in 0..m {
            if gs[k] == Some(0.0) {
                candidates.push((chart, ts[k]));
            }
            if k + 1 == m {
                break;
            }
            let (Some(g0), Some(g1)) = (gs[k], gs[k + 1]) else {
                continue;
            };
            if g0 != 0.0 && g1 != 0.0 && g0.signum() != g1.signum() {
                match prob.bisect(chart, ts[k], ts[k + 1], g0, opts.t_tol) {
                    Some(t) => candidates.push((chart, t)),
                    None => skipped += 1,
                }
            }
        }
    }

    let mut roots: Vec<(SixPointRoot, Vector3<f64>)> = Vec::new();
    for (chart, t) in candidates {
        let Ok((_, e, ep)) = prob.g(chart, t) else {
            rejected += 1;
            continue;
        };
        if prob.spurious(&e, &ep) {
            rejected += 1;
            continue;
        }
        let root = SixPointRoot {
            e: prob.n.from_frame1(&e).dehomogenized(),
            e_prime: prob.n.from_frame2(&ep).dehomogenized(),
            residual_rms: prob.n.residual_rms(&e, &ep),
            chart,
            t,
        };
        roots.push((root, e));
    }
    roots.sort_by(|a, b| a.0.residual_rms.total_cmp(&b.0.residual_rms));
    let mut kept: Vec<(SixPointRoot, Vector3<f64>)> = Vec::new();
    for r in roots {
        if kept
            .iter()
            .all(|k| projective_distance(&HomPoint2(k.1), &HomPoint2(r.1)) > DUPLICATE_TOL)
        {
            kept.push(r);
        }
    }
    if kept.is_empty() {
        return Err(GeometryError::NoSolution { min_abs });
    }
    Ok(SixPointReport {
        roots: kept.into_iter().map(|r| r.0).collect(),
        skipped_samples: skipped,
        rejected_roots: rejected,
    })
}
