//! Fundamental matrix from both epipoles plus correspondences, and the
//! usual epipolar transfer and distance helpers.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constraints::{CorrSet, Correspondence};
use crate::error::{GeometryError, Result};
use crate::projective::{HomPoint2, Homogeneous, Line2};

/// `sigma_3 / sigma_1` above this means the matrix is not rank 2.
pub const RANK2_TOL: f64 = 1e-8;
/// Relative singular value below which a design matrix direction is null.
const SYSTEM_RANK_TOL: f64 = 1e-9;

/// A rank-2 fundamental matrix in pixel coordinates, `p'ᵀ F p = 0`, with its
/// epipoles: `F e = 0` and `Fᵀ e' = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundMatrix {
    /// Row-major, Frobenius norm 1, largest-magnitude entry positive.
    #[serde(with = "row_major")]
    pub m: Matrix3<f64>,
    pub e: HomPoint2,
    pub e_prime: HomPoint2,
}

mod row_major {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let a: [f64; 9] = std::array::from_fn(|i| m[(i / 3, i % 3)]);
        a.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let a = <[f64; 9]>::deserialize(d)?;
        Ok(Matrix3::from_row_slice(&a))
    }
}

/// Frobenius norm 1 and the largest-magnitude entry positive.
pub fn canonical_f(m: &Matrix3<f64>) -> Matrix3<f64> {
    let n = m.norm();
    if n == 0.0 {
        return *m;
    }
    let big = m.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    m * (big.signum() / n)
}

fn sorted_svd(m: &Matrix3<f64>) -> Result<(Matrix3<f64>, Vector3<f64>, Matrix3<f64>)> {
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| GeometryError::Numerical("svd failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| GeometryError::Numerical("svd failed".into()))?;
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = Matrix3::from_columns(&order.map(|i| u.column(i).into_owned()));
    let v_t = Matrix3::from_rows(&order.map(|i| v_t.row(i).into_owned()));
    Ok((u, Vector3::new(s[order[0]], s[order[1]], s[order[2]]), v_t))
}

/// Diagonal `(d_row, d_col)` that equilibrate row and column norms of `m`.
/// Pixel-frame matrices mix entries of order `1/f²` and `1`, which costs
/// the null vectors most of their precision unless balanced first.
fn balance(m: &Matrix3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let mut dr = Vector3::repeat(1.0);
    let mut dc = Vector3::repeat(1.0);
    for _ in 0..8 {
        let b = Matrix3::from_diagonal(&dr) * m * Matrix3::from_diagonal(&dc);
        for i in 0..3 {
            let n = b.row(i).norm();
            if n > 0.0 {
                dr[i] /= n.sqrt();
            }
        }
        let b = Matrix3::from_diagonal(&dr) * m * Matrix3::from_diagonal(&dc);
        for j in 0..3 {
            let n = b.column(j).norm();
            if n > 0.0 {
                dc[j] /= n.sqrt();
            }
        }
    }
    (dr, dc)
}

/// Right and left null directions `(e, e')` of a rank-2 matrix.
pub fn epipoles_from_matrix(m: &Matrix3<f64>) -> Result<(HomPoint2, HomPoint2)> {
    let (_, s, _) = sorted_svd(m)?;
    if s[0] == 0.0 || s[1] / s[0] < RANK2_TOL {
        return Err(GeometryError::RankDeficient { rank: usize::from(s[0] > 0.0), needed: 2 });
    }
    let (dr, dc) = balance(m);
    let b = Matrix3::from_diagonal(&dr) * m * Matrix3::from_diagonal(&dc);
    let (u, _, v_t) = sorted_svd(&b)?;
    let e = HomPoint2(dc.component_mul(&v_t.row(2).transpose())).dehomogenized();
    let e_prime = HomPoint2(dr.component_mul(&u.column(2))).dehomogenized();
    Ok((e, e_prime))
}

impl FundMatrix {
    /// Canonicalizes `m` and derives its epipoles. Fails unless `m` has rank
    /// exactly 2 at [`RANK2_TOL`].
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let m = canonical_f(m);
        let (_, s, _) = sorted_svd(&m)?;
        if s[2] / s[0] >= RANK2_TOL {
            return Err(GeometryError::InvalidInput(format!(
                "fundamental matrix must have rank 2 (sigma3/sigma1 = {:e})",
                s[2] / s[0]
            )));
        }
        let (e, e_prime) = epipoles_from_matrix(&m)?;
        Ok(FundMatrix { m, e, e_prime })
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        std::array::from_fn(|i| self.m[(i / 3, i % 3)])
    }

    /// `p'ᵀ F p` with both points at unit norm.
    pub fn epipolar_residual(&self, c: &Correspondence) -> f64 {
        c.p_prime.unit().0.dot(&(self.m * c.p.unit().0))
    }

    pub fn transposed(&self) -> FundMatrix {
        FundMatrix {
            m: canonical_f(&self.m.transpose()),
            e: self.e_prime,
            e_prime: self.e,
        }
    }
}

/// Right and left epipoles of `f`.
pub fn epipoles_from_f(f: &FundMatrix) -> Result<(HomPoint2, HomPoint2)> {
    epipoles_from_matrix(&f.m)
}

/// Fundamental matrix from both epipoles and at least three
/// correspondences.
///
/// Works in the conditioned frames: stacks `F e = 0`, `Fᵀ e' = 0` and
/// `p'ᵀ F p = 0` as a homogeneous system in the nine entries of `F` and
/// takes its smallest singular direction. The result is then projected so
/// that the given epipoles are exact null vectors, which also makes it
/// rank 2 on noisy input.
pub fn f_from_epipoles_and_corr(
    e: &HomPoint2,
    e_prime: &HomPoint2,
    corr: &CorrSet,
) -> Result<FundMatrix> {
    if corr.len() < 3 {
        return Err(GeometryError::InvalidInput(format!(
            "need at least 3 correspondences, got {}",
            corr.len()
        )));
    }
    let n = corr.normalized()?;
    let en = n.to_frame1(e);
    let epn = n.to_frame2(e_prime);

    let rows = 6 + n.len();
    let mut a = DMatrix::<f64>::zeros(rows.max(9), 9);
    for r in 0..3 {
        for c in 0..3 {
            // (F e)_r
            a[(r, 3 * r + c)] = en[c];
            // (Fᵀ e')_c
            a[(3 + c, 3 * r + c)] = epn[r];
        }
    }
    for (s, (p, q)) in n.p.iter().zip(&n.q).enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                a[(6 + s, 3 * r + c)] = q[r] * p[c];
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| GeometryError::Numerical("svd failed".into()))?;
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    let smax = s[order[0]];
    let rank = order.iter().filter(|&&i| s[i] > SYSTEM_RANK_TOL * smax).count();
    if rank < 8 {
        return Err(GeometryError::RankDeficient { rank, needed: 8 });
    }
    let f = v_t.row(order[8]);
    let fn_ = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);

    let pe = Matrix3::identity() - en * en.transpose();
    let pep = Matrix3::identity() - epn * epn.transpose();
    let fn_ = pep * fn_ * pe;

    let t1 = n.t1.homography().matrix();
    let t2 = n.t2.homography().matrix();
    let m = canonical_f(&(t2.transpose() * fn_ * t1));
    Ok(FundMatrix {
        m,
        e: e.dehomogenized(),
        e_prime: e_prime.dehomogenized(),
    })
}

/// The epipolar line `F p` in image 2.
pub fn epipolar_transfer(f: &FundMatrix, p: &HomPoint2) -> Result<Line2> {
    let l = f.m * p.unit().0;
    if l.norm() <= 1e-12 * f.m.norm() {
        return Err(GeometryError::DegenerateInput(
            "point is the epipole; its epipolar line is undefined".into(),
        ));
    }
    Ok(Line2(l))
}

/// Mean of the two point-to-epipolar-line distances, in pixels: `p'` from
/// `F p` and `p` from `Fᵀ p'`.
pub fn sym_epipolar_distance(f: &FundMatrix, c: &Correspondence) -> Result<f64> {
    let l2 = Line2(f.m * c.p.0);
    let l1 = Line2(f.m.transpose() * c.p_prime.0);
    let d2 = l2
        .distance_to(&c.p_prime)
        .ok_or_else(|| GeometryError::DegenerateInput("undefined epipolar line".into()))?;
    let d1 = l1
        .distance_to(&c.p)
        .ok_or_else(|| GeometryError::DegenerateInput("undefined epipolar line".into()))?;
    Ok(0.5 * (d1.abs() + d2.abs()))
}
