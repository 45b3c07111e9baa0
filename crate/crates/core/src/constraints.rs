//! Cross-ratio constraints between the epipolar pencils of two views.
//!
//! Four correspondences `p_s <-> p'_s` give four epipolar lines through each
//! epipole, and corresponding lines have equal cross-ratios. Written with
//! point brackets `|a b c| = det3(a, b, c)` and cleared of denominators this
//! is
//!
//! ```text
//! |e p_i p_j| |e p_k p_l| |e' p'_i p'_k| |e' p'_j p'_l|
//!     = |e' p'_i p'_j| |e' p'_k p'_l| |e p_i p_k| |e p_j p_l|
//! ```
//!
//! which, for a known `e`, is a conic in the unknown `e'`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::conic::{Conic, Viewport};
use crate::error::{GeometryError, Result};
use crate::projective::{det3, det3_normalized, Conditioner, HomPoint2, Homogeneous, Line2, COLLINEAR_TOL};

/// A point in image 1 and its match in image 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub p: HomPoint2,
    pub p_prime: HomPoint2,
}

impl Correspondence {
    pub fn new(p: HomPoint2, p_prime: HomPoint2) -> Self {
        Correspondence { p, p_prime }
    }

    pub fn pixels(p: [f64; 2], p_prime: [f64; 2]) -> Self {
        Correspondence {
            p: HomPoint2::pixel(p[0], p[1]),
            p_prime: HomPoint2::pixel(p_prime[0], p_prime[1]),
        }
    }

    pub fn swapped(&self) -> Self {
        Correspondence {
            p: self.p_prime,
            p_prime: self.p,
        }
    }
}

/// Ordered correspondences, optionally with what is known in image 1: the
/// epipole itself or one epipolar line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrSet {
    pub pairs: Vec<Correspondence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epipole: Option<HomPoint2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epiline: Option<Line2>,
}

impl CorrSet {
    pub fn new(pairs: Vec<Correspondence>) -> Self {
        CorrSet {
            pairs,
            epipole: None,
            epiline: None,
        }
    }

    pub fn with_epipole(mut self, e: HomPoint2) -> Self {
        self.epipole = Some(e);
        self
    }

    pub fn with_epiline(mut self, l: Line2) -> Self {
        self.epiline = Some(l);
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn points1(&self) -> Vec<HomPoint2> {
        self.pairs.iter().map(|c| c.p).collect()
    }

    pub fn points2(&self) -> Vec<HomPoint2> {
        self.pairs.iter().map(|c| c.p_prime).collect()
    }

    /// The first `n` correspondences, keeping the known image-1 data.
    pub fn prefix(&self, n: usize) -> CorrSet {
        CorrSet {
            pairs: self.pairs[..n.min(self.pairs.len())].to_vec(),
            epipole: self.epipole,
            epiline: self.epiline,
        }
    }

    /// Correspondences picked by index, keeping the known image-1 data.
    pub fn select(&self, idx: &[usize]) -> CorrSet {
        CorrSet {
            pairs: idx.iter().map(|&i| self.pairs[i]).collect(),
            epipole: self.epipole,
            epiline: self.epiline,
        }
    }

    /// Images exchanged. The known image-1 data is dropped since it no
    /// longer refers to image 1.
    pub fn swapped(&self) -> CorrSet {
        CorrSet::new(self.pairs.iter().map(Correspondence::swapped).collect())
    }

    /// Normalizing similarities for image 1 and image 2, computed from the
    /// correspondence points only.
    pub fn conditioners(&self) -> Result<(Conditioner, Conditioner)> {
        Ok((
            Conditioner::from_points(&self.points1())?,
            Conditioner::from_points(&self.points2())?,
        ))
    }

    pub fn normalized(&self) -> Result<NormalizedCorr> {
        NormalizedCorr::new(self)
    }
}

/// Correspondences in the conditioned frames, each point at unit norm.
#[derive(Clone, Debug)]
pub struct NormalizedCorr {
    pub p: Vec<Vector3<f64>>,
    pub q: Vec<Vector3<f64>>,
    pub t1: Conditioner,
    pub t2: Conditioner,
}

impl NormalizedCorr {
    pub fn new(corr: &CorrSet) -> Result<Self> {
        let (t1, t2) = corr.conditioners()?;
        Ok(Self::with_conditioners(corr, t1, t2))
    }

    pub fn with_conditioners(corr: &CorrSet, t1: Conditioner, t2: Conditioner) -> Self {
        NormalizedCorr {
            p: corr.pairs.iter().map(|c| t1.forward(&c.p).unit().0).collect(),
            q: corr.pairs.iter().map(|c| t2.forward(&c.p_prime).unit().0).collect(),
            t1,
            t2,
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Image-1 point to the conditioned frame at unit norm.
    pub fn to_frame1(&self, e: &HomPoint2) -> Vector3<f64> {
        self.t1.forward(e).unit().0
    }

    pub fn to_frame2(&self, e: &HomPoint2) -> Vector3<f64> {
        self.t2.forward(e).unit().0
    }

    pub fn from_frame1(&self, v: &Vector3<f64>) -> HomPoint2 {
        self.t1.backward(&HomPoint2(*v))
    }

    pub fn from_frame2(&self, v: &Vector3<f64>) -> HomPoint2 {
        self.t2.backward(&HomPoint2(*v))
    }

    /// Checks that `e` is not collinear with any two of the quad's image-1
    /// points, which would make two epipolar lines coincide.
    pub fn check_quad(&self, e: &Vector3<f64>, quad: &QuadIndex) -> Result<()> {
        let idx = quad.indices();
        let eh = HomPoint2(*e);
        for a in 0..4 {
            for b in a + 1..4 {
                let (i, j) = (idx[a], idx[b]);
                let d = det3_normalized(&eh, &HomPoint2(self.p[i]), &HomPoint2(self.p[j]));
                if d.abs() < COLLINEAR_TOL {
                    return Err(GeometryError::RedundantConfiguration { pair: [i, j] });
                }
            }
        }
        Ok(())
    }

    /// The cleared cross-ratio residual for one quad, on the stored
    /// conditioned points and the given vectors as they are (no rescaling).
    pub fn residual_raw(&self, e: &Vector3<f64>, e_prime: &Vector3<f64>, quad: &QuadIndex) -> f64 {
        let [i, j, k, l] = quad.indices();
        let b1 = |a: usize, b: usize| bracket(e, &self.p[a], &self.p[b]);
        let b2 = |a: usize, b: usize| bracket(e_prime, &self.q[a], &self.q[b]);
        b1(i, j) * b1(k, l) * b2(i, k) * b2(j, l) - b2(i, j) * b2(k, l) * b1(i, k) * b1(j, l)
    }

    /// The conic in `e'` for a fixed `e`, read off the quadratic form by
    /// evaluating it at six probe points.
    pub fn conic_raw(&self, e: &Vector3<f64>, quad: &QuadIndex) -> [f64; 6] {
        let q = |x: f64, y: f64, z: f64| self.residual_raw(e, &Vector3::new(x, y, z), quad);
        let a = q(1.0, 0.0, 0.0);
        let c = q(0.0, 1.0, 0.0);
        let f = q(0.0, 0.0, 1.0);
        let b = q(1.0, 1.0, 0.0) - a - c;
        let d = q(1.0, 0.0, 1.0) - a - f;
        let ee = q(0.0, 1.0, 1.0) - c - f;
        [a, b, c, d, ee, f]
    }

    /// RMS of the residuals of all sorted quads, with `e` and `e'` at unit
    /// norm in the conditioned frames.
    pub fn residual_rms(&self, e: &Vector3<f64>, e_prime: &Vector3<f64>) -> f64 {
        let e = e.normalize();
        let ep = e_prime.normalize();
        let quads = QuadIndex::all(self.len());
        if quads.is_empty() {
            return 0.0;
        }
        let ss: f64 = quads
            .iter()
            .map(|q| self.residual_raw(&e, &ep, q).powi(2))
            .sum();
        (ss / quads.len() as f64).sqrt()
    }
}

fn bracket(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    det3(&HomPoint2(*a), &HomPoint2(*b), &HomPoint2(*c))
}

/// Four distinct correspondence indices. The order selects the pairing used
/// by the residual: lines `(i, j), (k, l)` against `(i, k), (j, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadIndex {
    idx: [usize; 4],
}

impl QuadIndex {
    pub fn new(i: usize, j: usize, k: usize, l: usize) -> Result<Self> {
        let idx = [i, j, k, l];
        for a in 0..4 {
            for b in a + 1..4 {
                if idx[a] == idx[b] {
                    return Err(GeometryError::InvalidInput(format!(
                        "quad indices must be distinct, got {idx:?}"
                    )));
                }
            }
        }
        Ok(QuadIndex { idx })
    }

    pub fn indices(&self) -> [usize; 4] {
        self.idx
    }

    /// Same four indices in increasing order.
    pub fn sorted(&self) -> QuadIndex {
        let mut idx = self.idx;
        idx.sort_unstable();
        QuadIndex { idx }
    }

    /// The three orderings of these indices that give inequivalent pairings.
    pub fn repairings(&self) -> [QuadIndex; 3] {
        let [i, j, k, l] = self.idx;
        [
            QuadIndex { idx: [i, j, k, l] },
            QuadIndex { idx: [i, j, l, k] },
            QuadIndex { idx: [i, k, l, j] },
        ]
    }

    pub fn max_index(&self) -> usize {
        *self.idx.iter().max().unwrap()
    }

    /// Every sorted quad of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<QuadIndex> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        out.push(QuadIndex { idx: [i, j, k, l] });
                    }
                }
            }
        }
        out
    }
}

fn check_bounds(quad: &QuadIndex, corr: &CorrSet) -> Result<()> {
    if quad.max_index() >= corr.len() {
        return Err(GeometryError::InvalidInput(format!(
            "quad {:?} out of range for {} correspondences",
            quad.indices(),
            corr.len()
        )));
    }
    Ok(())
}

/// Cross-ratio of the pencil of lines joining `e` to four points, in point
/// bracket form `|e p1 p2| |e p3 p4| / (|e p1 p3| |e p2 p4|)`.
pub fn pencil_cross_ratio(e: &HomPoint2, p: [&HomPoint2; 4]) -> Result<f64> {
    let e = e.unit();
    let p = p.map(|x| x.unit());
    let den = det3(&e, &p[0], &p[2]) * det3(&e, &p[1], &p[3]);
    if den.abs() < COLLINEAR_TOL * COLLINEAR_TOL {
        return Err(GeometryError::DegeneratePencil);
    }
    Ok(det3(&e, &p[0], &p[1]) * det3(&e, &p[2], &p[3]) / den)
}

/// Residual of the cleared cross-ratio equality for one quad, evaluated in
/// the conditioned frames with `e` and `e'` at unit norm. Zero for a true
/// epipole pair.
pub fn constraint_residual(
    e: &HomPoint2,
    e_prime: &HomPoint2,
    quad: &QuadIndex,
    corr: &CorrSet,
) -> Result<f64> {
    check_bounds(quad, corr)?;
    let n = corr.normalized()?;
    let e = n.to_frame1(e);
    n.check_quad(&e, quad)?;
    Ok(n.residual_raw(&e, &n.to_frame2(e_prime), quad))
}

/// RMS of all quad residuals on raw pixel coordinates (`z = 1` for finite
/// points). Scale-dependent; meant for display next to the conditioned
/// `residual_rms`.
pub fn residual_rms_pixel(e: &HomPoint2, e_prime: &HomPoint2, corr: &CorrSet) -> f64 {
    let px = |p: &HomPoint2| p.dehomogenized().0;
    let (e, ep) = (px(e), px(e_prime));
    let p: Vec<Vector3<f64>> = corr.pairs.iter().map(|c| px(&c.p)).collect();
    let q: Vec<Vector3<f64>> = corr.pairs.iter().map(|c| px(&c.p_prime)).collect();
    let quads = QuadIndex::all(corr.len());
    if quads.is_empty() {
        return 0.0;
    }
    let ss: f64 = quads
        .iter()
        .map(|quad| {
            let [i, j, k, l] = quad.indices();
            let b1 = |a: usize, b: usize| bracket(&e, &p[a], &p[b]);
            let b2 = |a: usize, b: usize| bracket(&ep, &q[a], &q[b]);
            let r = b1(i, j) * b1(k, l) * b2(i, k) * b2(j, l) - b2(i, j) * b2(k, l) * b1(i, k) * b1(j, l);
            r * r
        })
        .sum();
    (ss / quads.len() as f64).sqrt()
}

/// The conic of possible `e'` for a known `e` and one quad, in both the
/// conditioned image-2 frame and the pixel frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpipoleConic {
    normalized: Conic,
    pixel: Conic,
    conditioner: Conditioner,
}

impl EpipoleConic {
    fn new(normalized: Conic, conditioner: Conditioner) -> Result<Self> {
        let pixel = normalized.transformed(&conditioner.homography().inverse())?;
        Ok(EpipoleConic {
            normalized,
            pixel,
            conditioner,
        })
    }

    /// Canonical-scale conic in the conditioned frame of image 2.
    pub fn normalized(&self) -> &Conic {
        &self.normalized
    }

    /// Canonical-scale conic in image-2 pixels.
    pub fn pixel(&self) -> &Conic {
        &self.pixel
    }

    pub fn conditioner(&self) -> &Conditioner {
        &self.conditioner
    }

    /// Incidence of an image-2 pixel point, measured in the conditioned frame
    /// at unit norm.
    pub fn incidence(&self, p: &HomPoint2) -> f64 {
        self.normalized.eval(&self.conditioner.forward(p))
    }

    pub fn sample(&self, viewport: &Viewport, n: usize) -> Result<Vec<Vec<HomPoint2>>> {
        self.pixel.sample(viewport, n)
    }
}

/// Expands the residual of `quad` as a quadratic form in `e'`. All four
/// image-2 points of the quad lie on the result.
pub fn conic_from_4corr(e: &HomPoint2, quad: &QuadIndex, corr: &CorrSet) -> Result<EpipoleConic> {
    check_bounds(quad, corr)?;
    let n = corr.normalized()?;
    conic_from_normalized(&n, &n.to_frame1(e), quad)
}

pub(crate) fn conic_from_normalized(
    n: &NormalizedCorr,
    e: &Vector3<f64>,
    quad: &QuadIndex,
) -> Result<EpipoleConic> {
    n.check_quad(e, quad)?;
    let conic = Conic::from_coefficients(n.conic_raw(e, quad)).map_err(|_| {
        GeometryError::DegenerateInput("cross-ratio constraint vanishes identically".into())
    })?;
    EpipoleConic::new(conic, n.t2)
}
