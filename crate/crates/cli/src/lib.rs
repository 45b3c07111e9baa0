//! Command-line and HTTP front ends for `epipole-core`.
//!
//! Both paths go through [`solve::solve_problem`] and [`solve::fmatrix`]
//! and serialize with [`solve::to_json`], so a given input produces the
//! same bytes either way.

pub mod error;
pub mod problem;
pub mod server;
pub mod solve;

use epipole_core::{join, Scene};

pub use error::{ErrorBody, ServiceError, EXIT_DEGENERATE, EXIT_MALFORMED};
pub use problem::{FmatrixRequest, Problem, ProblemFile};

/// A solve problem made of the first `n` correspondences of `scene`. For
/// `n = 6` the epipolar line through the next, held-out image-1 point is
/// given instead of the epipole.
pub fn problem_from_scene(scene: &Scene, n: usize) -> Result<ProblemFile, ServiceError> {
    if !(4..=6).contains(&n) || scene.corr.len() <= n {
        return Err(ServiceError::Malformed(format!(
            "cannot export {n} correspondences from a scene with {}",
            scene.corr.len()
        )));
    }
    let px = |p: &epipole_core::HomPoint2| {
        p.to_pixel()
            .ok_or_else(|| ServiceError::Malformed("point at infinity".into()))
    };
    let pairs = &scene.corr.pairs[..n];
    let points1 = pairs.iter().map(|c| px(&c.p)).collect::<Result<_, _>>()?;
    let points2 = pairs.iter().map(|c| px(&c.p_prime)).collect::<Result<_, _>>()?;
    let (epipole1, epiline1) = if n == 6 {
        let l = join(&scene.e_true, &scene.corr.pairs[n].p)?;
        (None, Some(l.to_array()))
    } else {
        (Some(scene.e_true.dehomogenized().to_array().to_vec()), None)
    };
    Ok(ProblemFile {
        points1,
        points2,
        epipole1,
        epiline1,
        image1_size: Some(scene.image_size),
        image2_size: Some(scene.image_size),
    })
}
