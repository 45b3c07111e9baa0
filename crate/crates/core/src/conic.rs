//! Plane conics `a x² + b xy + c y² + d xz + e yz + f z² = 0`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::projective::{HomPoint2, Homogeneous, Homography2};

/// Relative eigenvalue threshold used for rank classification.
pub const CONIC_RANK_TOL: f64 = 1e-8;

/// Coefficients below this (after canonical scaling) are treated as zero when
/// choosing the canonical sign.
const SIGN_TOL: f64 = 1e-12;

/// A conic stored as its six coefficients `[a, b, c, d, e, f]` in canonical
/// scale: largest magnitude coefficient is 1 and the first nonzero one is
/// positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct Conic {
    coeffs: [f64; 6],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicClass {
    Nondegenerate,
    LinePair,
    DoubleLine,
}

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Viewport {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Viewport {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// `[0, width] x [0, height]`.
    pub fn image(width: f64, height: f64) -> Self {
        Viewport::new(0.0, 0.0, width, height)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }

    /// Grown by `factor` times its size on every side.
    pub fn expanded(&self, factor: f64) -> Self {
        let dx = (self.x_max - self.x_min) * factor;
        let dy = (self.y_max - self.y_min) * factor;
        Viewport::new(
            self.x_min - dx,
            self.y_min - dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }

    /// Bounding box of the finite points, or `None` if there are none.
    pub fn bounding(points: &[HomPoint2]) -> Option<Self> {
        let mut it = points.iter().filter_map(|p| p.to_pixel());
        let first = it.next()?;
        let mut v = Viewport::new(first[0], first[1], first[0], first[1]);
        for p in it {
            v.x_min = v.x_min.min(p[0]);
            v.y_min = v.y_min.min(p[1]);
            v.x_max = v.x_max.max(p[0]);
            v.y_max = v.y_max.max(p[1]);
        }
        Some(v)
    }
}

impl Conic {
    /// Canonicalizes the coefficients. All-zero input is rejected.
    pub fn from_coefficients(coeffs: [f64; 6]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidInput(
                "non-finite conic coefficient".into(),
            ));
        }
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return Err(GeometryError::DegenerateInput("zero conic".into()));
        }
        let mut out = coeffs.map(|c| c / max);
        let sign = out
            .iter()
            .find(|c| c.abs() > SIGN_TOL)
            .map_or(1.0, |c| c.signum());
        for c in &mut out {
            *c *= sign;
        }
        Ok(Conic { coeffs: out })
    }

    /// Built from any 3x3 matrix; only its symmetric part matters.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let s = (m + m.transpose()) * 0.5;
        Conic::from_coefficients([
            s[(0, 0)],
            2.0 * s[(0, 1)],
            s[(1, 1)],
            2.0 * s[(0, 2)],
            2.0 * s[(1, 2)],
            s[(2, 2)],
        ])
    }

    pub fn coefficients(&self) -> [f64; 6] {
        self.coeffs
    }

    /// The symmetric matrix `[[a, b/2, d/2], [b/2, c, e/2], [d/2, e/2, f]]`.
    pub fn matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e, f] = self.coeffs;
        Matrix3::new(
            a,
            0.5 * b,
            0.5 * d,
            0.5 * b,
            c,
            0.5 * e,
            0.5 * d,
            0.5 * e,
            f,
        )
    }

    /// `pᵀ C p` with `p` taken at unit norm.
    pub fn eval(&self, p: &HomPoint2) -> f64 {
        let v = p.unit().0;
        v.dot(&(self.matrix() * v))
    }

    pub fn classify(&self) -> ConicClass {
        let eig = self.matrix().symmetric_eigenvalues();
        let max = eig.amax();
        let rank = eig.iter().filter(|l| l.abs() > CONIC_RANK_TOL * max).count();
        match rank {
            3 => ConicClass::Nondegenerate,
            2 => ConicClass::LinePair,
            _ => ConicClass::DoubleLine,
        }
    }

    /// Classification after mapping `viewport` onto `[-1, 1]²`, so the rank
    /// test does not depend on the pixel scale.
    pub fn classify_in(&self, viewport: &Viewport) -> Result<ConicClass> {
        let [cx, cy] = viewport.center();
        let span = (viewport.x_max - viewport.x_min).max(viewport.y_max - viewport.y_min);
        if !(span > 0.0) {
            return Err(GeometryError::InvalidInput("empty viewport".into()));
        }
        let s = 2.0 / span;
        let h = Homography2::new(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))?;
        Ok(self.transformed(&h)?.classify())
    }

    /// The conic `{H p : p on self}`, i.e. `H^-T C H^-1`.
    pub fn transformed(&self, h: &Homography2) -> Result<Conic> {
        let inv = h.inverse_matrix();
        Conic::from_matrix(&(inv.transpose() * self.matrix() * inv))
    }

    /// Finite real points where the line `origin + s * dir` meets the conic.
    fn line_hits(&self, origin: [f64; 2], dir: [f64; 2]) -> Vec<[f64; 2]> {
        let c = self.matrix();
        let x = Vector3::new(origin[0], origin[1], 1.0);
        let d = Vector3::new(dir[0], dir[1], 0.0);
        let qa = d.dot(&(c * d));
        let qb = x.dot(&(c * d));
        let qc = x.dot(&(c * x));
        let at = |s: f64| [origin[0] + s * dir[0], origin[1] + s * dir[1]];
        let scale = qa.abs().max(qb.abs()).max(qc.abs());
        if scale == 0.0 {
            return Vec::new();
        }
        if qa.abs() <= 1e-14 * scale {
            if qb == 0.0 {
                return Vec::new();
            }
            return vec![at(-qc / (2.0 * qb))];
        }
        let disc = qb * qb - qa * qc;
        if disc < 0.0 {
            return Vec::new();
        }
        // Numerically stable pair of roots of qa s² + 2 qb s + qc.
        let q = -(qb + qb.signum() * disc.sqrt());
        let mut out = vec![at(q / qa)];
        if q != 0.0 {
            out.push(at(qc / q));
        }
        out
    }

    /// Some finite real point of the conic, preferring points close to
    /// `reference`. `None` if no line through `reference` meets the conic.
    pub fn point_near(&self, reference: [f64; 2]) -> Option<[f64; 2]> {
        const DIRECTIONS: usize = 720;
        let mut best: Option<([f64; 2], f64)> = None;
        for k in 0..DIRECTIONS {
            let th = PI * k as f64 / DIRECTIONS as f64;
            for p in self.line_hits(reference, [th.cos(), th.sin()]) {
                if !(p[0].is_finite() && p[1].is_finite()) {
                    continue;
                }
                let dist = (p[0] - reference[0]).hypot(p[1] - reference[1]);
                if best.is_none_or(|(_, bd)| dist < bd) {
                    best = Some((p, dist));
                }
            }
        }
        best.map(|(p, _)| p)
    }

    /// Rational parametrization through a conic point `base`: the line
    /// through `base` at angle `theta` meets the conic again at the returned
    /// point. `theta` over `[0, pi)` traverses the whole conic once.
    fn param(&self, base: &Vector3<f64>, theta: f64) -> Vector3<f64> {
        let c = self.matrix();
        let d = Vector3::new(theta.cos(), theta.sin(), 0.0);
        let a = d.dot(&(c * d));
        let b = base.dot(&(c * d));
        base * a - d * (2.0 * b)
    }

    /// Up to `n` points of the conic inside `viewport`, grouped into
    /// connected polylines (one per visible arc or branch) and spaced evenly
    /// by arc length. Empty when the conic has no real points there.
    pub fn sample(&self, viewport: &Viewport, n: usize) -> Result<Vec<Vec<HomPoint2>>> {
        if self.classify_in(viewport)? != ConicClass::Nondegenerate {
            return Err(GeometryError::DegenerateInput(
                "cannot sample a degenerate conic".into(),
            ));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let Some(base) = self.point_near(viewport.center()) else {
            return Ok(Vec::new());
        };
        let base = Vector3::new(base[0], base[1], 1.0);

        let dense = (64 * n).max(4096);
        struct Sample {
            xy: [f64; 2],
            w: f64,
        }
        let samples: Vec<Option<Sample>> = (0..dense)
            .map(|k| {
                let v = self.param(&base, PI * k as f64 / dense as f64);
                let scale = v.amax();
                if scale == 0.0 || v.z.abs() <= 1e-12 * scale {
                    return None;
                }
                let xy = [v.x / v.z, v.y / v.z];
                viewport.contains(xy).then_some(Sample { xy, w: v.z })
            })
            .collect();

        // Split into runs of consecutive visible samples that do not pass
        // through infinity (sign change of the homogeneous weight).
        let mut runs: Vec<Vec<usize>> = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        for (k, s) in samples.iter().enumerate() {
            match s {
                Some(s) => {
                    let breaks = current
                        .last()
                        .is_some_and(|&j| samples[j].as_ref().unwrap().w.signum() != s.w.signum());
                    if breaks {
                        runs.push(std::mem::take(&mut current));
                    }
                    current.push(k);
                }
                None => {
                    if !current.is_empty() {
                        runs.push(std::mem::take(&mut current));
                    }
                }
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
        let mut closed = false;
        if runs.len() >= 2 {
            let first = runs[0][0];
            let last = *runs.last().unwrap().last().unwrap();
            if first == 0 && last == dense - 1 {
                let wf = samples[first].as_ref().unwrap().w;
                let wl = samples[last].as_ref().unwrap().w;
                if wf.signum() == wl.signum() {
                    let head = runs.remove(0);
                    runs.last_mut().unwrap().extend(head);
                }
            }
        } else if runs.len() == 1 && runs[0].len() == dense {
            closed = true;
        }

        // Cumulative arc length over all runs.
        let seg = |a: usize, b: usize| {
            let (p, q) = (samples[a].as_ref().unwrap().xy, samples[b].as_ref().unwrap().xy);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        let mut run_lengths: Vec<Vec<f64>> = Vec::with_capacity(runs.len());
        let mut total = 0.0;
        for run in &runs {
            let mut acc = vec![0.0];
            for w in run.windows(2) {
                let l = acc.last().unwrap() + seg(w[0], w[1]);
                acc.push(l);
            }
            if closed {
                let l = acc.last().unwrap() + seg(*run.last().unwrap(), run[0]);
                acc.push(l);
            }
            total += *acc.last().unwrap();
            run_lengths.push(acc);
        }
        if total == 0.0 {
            return Ok(runs
                .iter()
                .map(|r| vec![to_point(samples[r[0]].as_ref().unwrap().xy)])
                .collect());
        }

        let mut out: Vec<Vec<HomPoint2>> = vec![Vec::new(); runs.len()];
        let mut offset = 0.0;
        let mut run_idx = 0;
        for i in 0..n {
            let target = total * (i as f64 + 0.5) / n as f64;
            while run_idx + 1 < runs.len()
                && target > offset + run_lengths[run_idx].last().copied().unwrap_or(0.0)
            {
                offset += run_lengths[run_idx].last().copied().unwrap_or(0.0);
                run_idx += 1;
            }
            let acc = &run_lengths[run_idx];
            let local = target - offset;
            let pos = acc.partition_point(|&l| l < local).min(runs[run_idx].len() - 1);
            let k = runs[run_idx][pos];
            let p = to_point(samples[k].as_ref().unwrap().xy);
            if out[run_idx].last() != Some(&p) {
                out[run_idx].push(p);
            }
        }
        out.retain(|r| !r.is_empty());
        Ok(out)
    }

    /// Euclidean distance from a finite point to the nearest finite point of
    /// the conic. `None` for points at infinity or conics without real points.
    pub fn distance_to(&self, p: &HomPoint2) -> Option<f64> {
        let target = p.to_pixel()?;
        let base = self.point_near(target)?;
        let base = Vector3::new(base[0], base[1], 1.0);
        let dist = |theta: f64| {
            let v = self.param(&base, theta);
            if v.z.abs() <= 1e-12 * v.amax() {
                return f64::INFINITY;
            }
            (v.x / v.z - target[0]).hypot(v.y / v.z - target[1])
        };
        const DENSE: usize = 8192;
        let step = PI / DENSE as f64;
        let (best_k, _) = (0..DENSE)
            .map(|k| (k, dist(k as f64 * step)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        // Golden-section refinement inside the bracketing cell pair.
        let (mut lo, mut hi) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (dist(x1), dist(x2));
        for _ in 0..100 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = dist(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = dist(x2);
            }
        }
        Some(f1.min(f2).min(dist(best_k as f64 * step)))
    }
}

fn to_point(xy: [f64; 2]) -> HomPoint2 {
    HomPoint2::pixel(xy[0], xy[1])
}

impl TryFrom<[f64; 6]> for Conic {
    type Error = GeometryError;

    fn try_from(c: [f64; 6]) -> Result<Self> {
        Conic::from_coefficients(c)
    }
}

impl From<Conic> for [f64; 6] {
    fn from(c: Conic) -> [f64; 6] {
        c.coeffs
    }
}

/// Conic transport `C -> H^-T C H^-1`.
pub fn transform_conic(c: &Conic, h: &Homography2) -> Result<Conic> {
    c.transformed(h)
}
