//! Small exact projective algebra in the plane.
//!
//! Points and lines are both homogeneous triples. Every routine here is
//! invariant under rescaling of its inputs up to a rescaling of its output.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Absolute tolerance for projective equality of unit-normalized triples.
pub const PROJECTIVE_EQ_TOL: f64 = 1e-9;

/// `|det3|` of unit-normalized triples below this counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-8;

/// Coordinates smaller than this (relative to the largest one) count as zero.
const ZERO_COORD_TOL: f64 = 1e-12;

/// Shared access to the coordinate triple of points and lines.
pub trait Homogeneous: Copy {
    fn vec(&self) -> Vector3<f64>;
    fn from_vec(v: Vector3<f64>) -> Self;

    /// Rescaled to unit Euclidean norm. Zero triples are returned unchanged.
    fn unit(&self) -> Self {
        let v = self.vec();
        let n = v.norm();
        if n == 0.0 {
            *self
        } else {
            Self::from_vec(v / n)
        }
    }

    /// Unit norm with the first nonzero coordinate positive.
    fn canonical(&self) -> Self {
        let v = self.unit().vec();
        let sign = v
            .iter()
            .find(|c| c.abs() > ZERO_COORD_TOL)
            .map_or(1.0, |c| c.signum());
        Self::from_vec(v * sign)
    }

    fn is_zero(&self) -> bool {
        self.vec().iter().all(|c| *c == 0.0)
    }
}

/// A point of the projective plane. Pixels embed as `(px, py, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct HomPoint2(pub Vector3<f64>);

/// A line `{p : a*px + b*py + c*pz = 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Line2(pub Vector3<f64>);

macro_rules! homogeneous_impl {
    ($t:ident) => {
        impl $t {
            pub const fn new(x: f64, y: f64, z: f64) -> Self {
                $t(Vector3::new(x, y, z))
            }

            pub fn x(&self) -> f64 {
                self.0.x
            }

            pub fn y(&self) -> f64 {
                self.0.y
            }

            pub fn z(&self) -> f64 {
                self.0.z
            }

            pub fn to_array(&self) -> [f64; 3] {
                [self.0.x, self.0.y, self.0.z]
            }
        }

        impl Homogeneous for $t {
            fn vec(&self) -> Vector3<f64> {
                self.0
            }

            fn from_vec(v: Vector3<f64>) -> Self {
                $t(v)
            }
        }

        impl TryFrom<[f64; 3]> for $t {
            type Error = GeometryError;

            fn try_from(a: [f64; 3]) -> Result<Self> {
                if a.iter().any(|c| !c.is_finite()) {
                    return Err(GeometryError::InvalidInput(format!(
                        "non-finite homogeneous coordinates {a:?}"
                    )));
                }
                if a.iter().all(|c| *c == 0.0) {
                    return Err(GeometryError::InvalidInput(
                        "homogeneous triple (0, 0, 0)".into(),
                    ));
                }
                Ok($t::new(a[0], a[1], a[2]))
            }
        }

        impl From<$t> for [f64; 3] {
            fn from(p: $t) -> [f64; 3] {
                p.to_array()
            }
        }
    };
}

homogeneous_impl!(HomPoint2);
homogeneous_impl!(Line2);

impl HomPoint2 {
    /// Embeds a pixel position.
    pub const fn pixel(px: f64, py: f64) -> Self {
        HomPoint2::new(px, py, 1.0)
    }

    /// Affine coordinates, or `None` for a point at (or numerically near) infinity.
    pub fn to_pixel(&self) -> Option<[f64; 2]> {
        let u = self.unit().0;
        if u.z.abs() < ZERO_COORD_TOL {
            None
        } else {
            Some([u.x / u.z, u.y / u.z])
        }
    }

    /// Scaled so that `z = 1` when finite, unit norm otherwise.
    pub fn dehomogenized(&self) -> HomPoint2 {
        let u = self.unit().0;
        if u.z.abs() < ZERO_COORD_TOL {
            self.canonical()
        } else {
            HomPoint2(u / u.z)
        }
    }
}

impl Line2 {
    /// Signed distance of a finite point from this line, in the point's units.
    pub fn distance_to(&self, p: &HomPoint2) -> Option<f64> {
        let [px, py] = p.to_pixel()?;
        let n = (self.0.x * self.0.x + self.0.y * self.0.y).sqrt();
        if n == 0.0 {
            return None;
        }
        Some((self.0.x * px + self.0.y * py + self.0.z) / n)
    }

    pub fn incident(&self, p: &HomPoint2) -> f64 {
        self.unit().0.dot(&p.unit().0)
    }
}

/// Distance between two projective points: `min(|u - v|, |u + v|)` over unit
/// representatives. Zero iff the points are projectively equal.
pub fn projective_distance<T: Homogeneous>(a: &T, b: &T) -> f64 {
    let u = a.unit().vec();
    let v = b.unit().vec();
    (u - v).norm().min((u + v).norm())
}

/// Scale-free equality within `tol` (maximum coordinate difference of the
/// sign-canonical unit representatives).
pub fn projectively_equal<T: Homogeneous>(a: &T, b: &T, tol: f64) -> bool {
    let u = a.unit().vec();
    let v = b.unit().vec();
    (u - v).amax().min((u + v).amax()) <= tol
}

/// `a_x b_y - a_y b_x`: the 2x2 determinant of the first two coordinates.
pub fn det2<T: Homogeneous>(a: &T, b: &T) -> f64 {
    let (a, b) = (a.vec(), b.vec());
    a.x * b.y - a.y * b.x
}

/// Signed 3x3 determinant with `a, b, c` as columns.
pub fn det3(a: &HomPoint2, b: &HomPoint2, c: &HomPoint2) -> f64 {
    a.0.dot(&b.0.cross(&c.0))
}

/// `det3` of the unit-normalized triples; the scale-free collinearity measure.
pub fn det3_normalized(a: &HomPoint2, b: &HomPoint2, c: &HomPoint2) -> f64 {
    det3(&a.unit(), &b.unit(), &c.unit())
}

/// The line through two distinct points.
pub fn join(p: &HomPoint2, q: &HomPoint2) -> Result<Line2> {
    let l = p.unit().0.cross(&q.unit().0);
    if l.norm() <= PROJECTIVE_EQ_TOL {
        return Err(GeometryError::DegenerateInput(
            "join of coincident points".into(),
        ));
    }
    Ok(Line2(p.0.cross(&q.0)))
}

/// The intersection point of two distinct lines.
pub fn meet(l: &Line2, m: &Line2) -> Result<HomPoint2> {
    let p = l.unit().0.cross(&m.unit().0);
    if p.norm() <= PROJECTIVE_EQ_TOL {
        return Err(GeometryError::DegenerateInput(
            "meet of coincident lines".into(),
        ));
    }
    Ok(HomPoint2(l.0.cross(&m.0)))
}

/// `(|l1 l2| |l3 l4|) / (|l1 l3| |l2 l4|)` with `|ab|` the [`det2`] bracket.
///
/// The lines are expected to be concurrent. Pencils that contain the line at
/// infinity `(0, 0, 1)` have a vanishing bracket and are rejected.
pub fn cross_ratio_lines(l1: &Line2, l2: &Line2, l3: &Line2, l4: &Line2) -> Result<f64> {
    let den = det2(l1, l3) * det2(l2, l4);
    let scale = [l1, l2, l3, l4]
        .iter()
        .map(|l| l.0.xy().norm())
        .product::<f64>();
    if den.abs() <= PROJECTIVE_EQ_TOL * scale || scale == 0.0 {
        return Err(GeometryError::DegeneratePencil);
    }
    Ok(det2(l1, l2) * det2(l3, l4) / den)
}

/// The standard quadratic Cremona map `(x, y, z) -> (yz, zx, xy)`.
///
/// Points with two or more zero coordinates have no image.
pub fn reciprocal(p: &HomPoint2) -> Result<HomPoint2> {
    let v = p.0;
    let max = v.amax();
    let zeros = v.iter().filter(|c| c.abs() <= ZERO_COORD_TOL * max).count();
    if max == 0.0 || zeros >= 2 {
        return Err(GeometryError::DegenerateInput(format!(
            "reciprocal of a triangle vertex {:?}",
            p.to_array()
        )));
    }
    Ok(HomPoint2::new(v.y * v.z, v.z * v.x, v.x * v.y))
}

/// An invertible plane projective map, acting on points by `p -> M p` and
/// on lines by `l -> M^-T l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography2 {
    m: Matrix3<f64>,
    inv: Matrix3<f64>,
}

impl Homography2 {
    /// Fails when the row-normalized determinant is below `1e-12`.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let mut scaled = m;
        for mut row in scaled.row_iter_mut() {
            let n = row.norm();
            if n == 0.0 {
                return Err(GeometryError::SingularHomography);
            }
            row /= n;
        }
        if scaled.determinant().abs() <= 1e-12 {
            return Err(GeometryError::SingularHomography);
        }
        let inv = m.try_inverse().ok_or(GeometryError::SingularHomography)?;
        Ok(Homography2 { m, inv })
    }

    pub fn identity() -> Self {
        Homography2 {
            m: Matrix3::identity(),
            inv: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn inverse_matrix(&self) -> &Matrix3<f64> {
        &self.inv
    }

    pub fn inverse(&self) -> Homography2 {
        Homography2 {
            m: self.inv,
            inv: self.m,
        }
    }

    pub fn apply(&self, p: &HomPoint2) -> HomPoint2 {
        HomPoint2(self.m * p.0)
    }

    pub fn apply_line(&self, l: &Line2) -> Line2 {
        Line2(self.inv.transpose() * l.0)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Homography2) -> Homography2 {
        Homography2 {
            m: self.m * other.m,
            inv: other.inv * self.inv,
        }
    }
}

/// Homography sending `q[0], q[1], q[2]` to the coordinate triangle
/// `(1,0,0), (0,1,0), (0,0,1)` and `q[3]` to the unit point `(1,1,1)`.
///
/// No three of the points may be collinear; the offending triple (as
/// indices into `q`) is reported otherwise.
pub fn homography_to_standard_triangle(q: [&HomPoint2; 4]) -> Result<Homography2> {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    for t in TRIPLES {
        if det3_normalized(q[t[0]], q[t[1]], q[t[2]]).abs() < COLLINEAR_TOL {
            return Err(GeometryError::IllConditioned { triple: t });
        }
    }
    let basis = Matrix3::from_columns(&[q[0].unit().0, q[1].unit().0, q[2].unit().0]);
    let lu = basis.lu();
    let weights = lu
        .solve(&q[3].unit().0)
        .ok_or(GeometryError::IllConditioned { triple: [0, 1, 2] })?;
    let to_points = Matrix3::from_columns(&[
        basis.column(0) * weights.x,
        basis.column(1) * weights.y,
        basis.column(2) * weights.z,
    ]);
    Ok(Homography2::new(to_points)?.inverse())
}

/// Isotropic normalizing similarity: centroid to the origin, RMS distance
/// from it equal to `sqrt(2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditioner {
    h: Homography2,
}

impl Conditioner {
    /// Built from the finite points of `points`. Fails when fewer than two
    /// finite points are given or they all coincide.
    pub fn from_points(points: &[HomPoint2]) -> Result<Self> {
        let finite: Vec<[f64; 2]> = points.iter().filter_map(|p| p.to_pixel()).collect();
        if finite.len() < 2 {
            return Err(GeometryError::DegenerateInput(
                "need at least two finite points to condition".into(),
            ));
        }
        let n = finite.len() as f64;
        let cx = finite.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = finite.iter().map(|p| p[1]).sum::<f64>() / n;
        let ms = finite
            .iter()
            .map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2))
            .sum::<f64>()
            / n;
        if ms <= 0.0 {
            return Err(GeometryError::DegenerateInput(
                "all points coincide".into(),
            ));
        }
        let s = (2.0 / ms).sqrt();
        let m = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
        Ok(Conditioner {
            h: Homography2::new(m)?,
        })
    }

    pub fn identity() -> Self {
        Conditioner {
            h: Homography2::identity(),
        }
    }

    pub fn homography(&self) -> &Homography2 {
        &self.h
    }

    /// Pixel frame to normalized frame.
    pub fn forward(&self, p: &HomPoint2) -> HomPoint2 {
        self.h.apply(p)
    }

    /// Normalized frame back to pixels.
    pub fn backward(&self, p: &HomPoint2) -> HomPoint2 {
        self.h.inverse().apply(p)
    }

    pub fn forward_line(&self, l: &Line2) -> Line2 {
        self.h.apply_line(l)
    }

    pub fn backward_line(&self, l: &Line2) -> Line2 {
        self.h.inverse().apply_line(l)
    }
}
