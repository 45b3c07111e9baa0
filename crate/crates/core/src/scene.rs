//! Synthetic two-camera scenes with exact ground truth, the normalized
//! 8-point baseline and pixel noise.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, so a
//! seed reproduces the same scene on every platform.

use nalgebra::{DMatrix, Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constraints::{CorrSet, Correspondence};
use crate::error::{GeometryError, Result};
use crate::fundamental::FundMatrix;
use crate::projective::HomPoint2;

const MAX_RETRIES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneMode {
    /// Camera 2 looks back at camera 1; both epipoles inside the images.
    Facing,
    /// Side-by-side pair; epipoles far outside the frames.
    Lateral,
}

impl std::str::FromStr for SceneMode {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facing" => Ok(SceneMode::Facing),
            "lateral" => Ok(SceneMode::Lateral),
            other => Err(GeometryError::InvalidInput(format!("unknown scene mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub mode: SceneMode,
    pub n_points: usize,
    /// Width, height in pixels.
    pub image_size: [f64; 2],
    pub focal: f64,
    pub seed: u64,
    /// Randomize the pose of camera 2 around its nominal placement.
    pub jitter: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            mode: SceneMode::Facing,
            n_points: 12,
            image_size: [640.0, 480.0],
            focal: 800.0,
            seed: 0,
            jitter: true,
        }
    }
}

impl SceneConfig {
    /// The reference fixture: facing cameras, camera 2 exactly at
    /// `(0, 0, 10)` turned half a revolution about `y`, twelve points,
    /// seed 42. Both epipoles sit at the principal point.
    pub fn s1() -> Self {
        SceneConfig {
            mode: SceneMode::Facing,
            n_points: 12,
            image_size: [640.0, 480.0],
            focal: 800.0,
            seed: 42,
            jitter: false,
        }
    }

    pub fn random(mode: SceneMode, seed: u64) -> Self {
        SceneConfig {
            mode,
            seed,
            ..SceneConfig::default()
        }
    }
}

/// Ground truth for two pinhole cameras `P1 = K1 [I | 0]` and
/// `P2 = K2 [R | t]`. Matrices are stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub mode: SceneMode,
    pub image_size: [f64; 2],
    pub k1: [[f64; 3]; 3],
    pub k2: [[f64; 3]; 3],
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
    pub points: Vec<[f64; 3]>,
    /// Exact projections, with `epipole` set to `e_true`.
    pub corr: CorrSet,
    pub f_true: FundMatrix,
    pub e_true: HomPoint2,
    pub e_prime_true: HomPoint2,
    pub seed: u64,
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

fn from_rows(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| a[r][c])
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl Scene {
    pub fn k1(&self) -> Matrix3<f64> {
        from_rows(&self.k1)
    }

    pub fn k2(&self) -> Matrix3<f64> {
        from_rows(&self.k2)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        from_rows(&self.r)
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.t)
    }

    /// Camera 2 center in world coordinates, `-Rᵀ t`.
    pub fn center2(&self) -> Vector3<f64> {
        -self.rotation().transpose() * self.translation()
    }

    pub fn project1(&self, x: &Vector3<f64>) -> HomPoint2 {
        HomPoint2(self.k1() * x)
    }

    pub fn project2(&self, x: &Vector3<f64>) -> HomPoint2 {
        HomPoint2(self.k2() * (self.rotation() * x + self.translation()))
    }

    /// `K2^-T [t]x R K1^-1`, unnormalized.
    pub fn f_matrix(&self) -> Matrix3<f64> {
        let k1i = self.k1().try_inverse().unwrap();
        let k2i = self.k2().try_inverse().unwrap();
        k2i.transpose() * skew(&self.translation()) * self.rotation() * k1i
    }
}

fn intrinsics(focal: f64, size: [f64; 2]) -> Matrix3<f64> {
    Matrix3::new(focal, 0.0, 0.5 * size[0], 0.0, focal, 0.5 * size[1], 0.0, 0.0, 1.0)
}

fn inside(p: &HomPoint2, size: [f64; 2]) -> bool {
    p.z() > 0.0
        && p.to_pixel()
            .is_some_and(|[x, y]| (0.0..=size[0]).contains(&x) && (0.0..=size[1]).contains(&y))
}

fn small_rotation(rng: &mut ChaCha8Rng, max_angle: f64) -> Matrix3<f64> {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(0.0..max_angle);
    match Unit::try_new(axis, 1e-9) {
        Some(axis) => Rotation3::from_axis_angle(&axis, angle).into_inner(),
        None => Matrix3::identity(),
    }
}

/// World-to-camera rotation of a camera looking along `forward` with image
/// `y` pointing down (world `+y`).
fn look_rotation(forward: &Vector3<f64>) -> Matrix3<f64> {
    let z = forward.normalize();
    let x = Vector3::y().cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

/// Deterministic synthetic scene for `config`.
///
/// Points are drawn from the box `x, y in [-2, 2], z in [3, 7]` and kept only
/// when they project inside both images with positive depth.
pub fn generate_scene(config: &SceneConfig) -> Result<Scene> {
    if config.n_points < 8 {
        return Err(GeometryError::InvalidInput(format!(
            "scenes need at least 8 points, got {}",
            config.n_points
        )));
    }
    let size = config.image_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = intrinsics(config.focal, size);
    let half_turn = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0));

    let (r, t) = match (config.mode, config.jitter) {
        (SceneMode::Facing, false) => {
            let c2 = Vector3::new(0.0, 0.0, 10.0);
            (half_turn, -half_turn * c2)
        }
        (SceneMode::Facing, true) => {
            let mut pose = None;
            for _ in 0..MAX_RETRIES {
                let c2 = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    10.0 + rng.random_range(-1.0..1.0),
                );
                let r = small_rotation(&mut rng, 5f64.to_radians()) * half_turn;
                let t = -r * c2;
                let e = HomPoint2(k * c2);
                let ep = HomPoint2(k * t);
                if inside(&e, size) && inside(&ep, size) {
                    pose = Some((r, t));
                    break;
                }
            }
            pose.ok_or_else(|| {
                GeometryError::GenerationFailure("could not place both epipoles in frame".into())
            })?
        }
        (SceneMode::Lateral, jitter) => {
            let j = if jitter { 1.0 } else { 0.0 };
            let c2 = Vector3::new(
                1.5 + j * rng.random_range(-0.2..0.2),
                j * rng.random_range(-0.2..0.2),
                j * rng.random_range(-0.2..0.2),
            );
            let base = look_rotation(&(Vector3::new(0.0, 0.0, 5.0) - c2));
            let r = if jitter {
                small_rotation(&mut rng, 2f64.to_radians()) * base
            } else {
                base
            };
            (r, -r * c2)
        }
    };

    let mut points = Vec::with_capacity(config.n_points);
    let mut pairs = Vec::with_capacity(config.n_points);
    while points.len() < config.n_points {
        let mut placed = false;
        for _ in 0..MAX_RETRIES {
            let x = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(3.0..7.0),
            );
            let p = HomPoint2(k * x);
            let q = HomPoint2(k * (r * x + t));
            if inside(&p, size) && inside(&q, size) {
                points.push([x.x, x.y, x.z]);
                pairs.push(Correspondence::new(p.dehomogenized(), q.dehomogenized()));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GeometryError::GenerationFailure(format!(
                "could not place point {} in both frusta",
                points.len()
            )));
        }
    }

    let c2 = -r.transpose() * t;
    let e_true = HomPoint2(k * c2).dehomogenized();
    let e_prime_true = HomPoint2(k * t).dehomogenized();
    let mut scene = Scene {
        mode: config.mode,
        image_size: size,
        k1: to_rows(&k),
        k2: to_rows(&k),
        r: to_rows(&r),
        t: [t.x, t.y, t.z],
        points,
        corr: CorrSet::new(pairs).with_epipole(e_true),
        f_true: FundMatrix {
            m: Matrix3::zeros(),
            e: e_true,
            e_prime: e_prime_true,
        },
        e_true,
        e_prime_true,
        seed: config.seed,
    };
    let mut f = FundMatrix::from_matrix(&scene.f_matrix())?;
    f.e = e_true;
    f.e_prime = e_prime_true;
    for c in &scene.corr.pairs {
        let res = f.epipolar_residual(c);
        if res.abs() > 1e-10 {
            return Err(GeometryError::Numerical(format!(
                "generated correspondence violates the epipolar constraint ({res:e})"
            )));
        }
    }
    scene.f_true = f;
    Ok(scene)
}

/// Normalized 8-point algorithm: condition both images, least-squares
/// `p'ᵀ F p = 0`, zero the smallest singular value, undo the conditioning.
pub fn eight_point(corr: &CorrSet) -> Result<FundMatrix> {
    if corr.len() < 8 {
        return Err(GeometryError::InvalidInput(format!(
            "the 8-point algorithm needs at least 8 correspondences, got {}",
            corr.len()
        )));
    }
    let (t1, t2) = corr.conditioners()?;
    let rows = corr.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, c) in corr.pairs.iter().enumerate() {
        let p = t1.forward(&c.p).dehomogenized().0;
        let q = t2.forward(&c.p_prime).dehomogenized().0;
        for r in 0..3 {
            for col in 0..3 {
                a[(i, 3 * r + col)] = q[r] * p[col];
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
    let rank = order.iter().filter(|&&i| s[i] > 1e-9 * s[order[0]]).count();
    if rank < 8 {
        return Err(GeometryError::RankDeficient { rank, needed: 8 });
    }
    let f = v_t.row(order[8]);
    let fn_ = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);

    let svd = fn_.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(GeometryError::Numerical("svd failed".into())),
    };
    let mut sv = svd.singular_values;
    let imin = sv.imin();
    sv[imin] = 0.0;
    let fn_ = u * Matrix3::from_diagonal(&sv) * v_t;

    let m = t2.homography().matrix().transpose() * fn_ * t1.homography().matrix();
    FundMatrix::from_matrix(&m)
}

/// Pixel noise model: iid `N(0, sigma²)` on every pixel coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    /// Also perturb the known image-1 epipole, when there is a finite one.
    pub perturb_epipole: bool,
}

fn jitter_point(p: &HomPoint2, rng: &mut ChaCha8Rng, dist: &Normal<f64>) -> HomPoint2 {
    match p.to_pixel() {
        Some([x, y]) => {
            let dx = dist.sample(rng);
            let dy = dist.sample(rng);
            HomPoint2::pixel(x + dx, y + dy)
        }
        None => *p,
    }
}

/// Adds Gaussian pixel noise to both images, deterministically per seed.
/// Draw order: `p_s.x, p_s.y, p'_s.x, p'_s.y` for each pair, then the
/// epipole.
pub fn add_noise(corr: &CorrSet, spec: &NoiseSpec) -> Result<CorrSet> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(GeometryError::InvalidInput(format!(
            "noise sigma must be finite and non-negative, got {}",
            spec.sigma
        )));
    }
    if spec.sigma == 0.0 {
        return Ok(corr.clone());
    }
    let dist = Normal::new(0.0, spec.sigma)
        .map_err(|e| GeometryError::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = corr.clone();
    for c in &mut out.pairs {
        c.p = jitter_point(&c.p, &mut rng, &dist);
        c.p_prime = jitter_point(&c.p_prime, &mut rng, &dist);
    }
    if spec.perturb_epipole {
        if let Some(e) = &out.epipole {
            out.epipole = Some(jitter_point(e, &mut rng, &dist));
        }
    }
    Ok(out)
}
