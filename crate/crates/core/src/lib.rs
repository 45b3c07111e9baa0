//! Two-view epipolar geometry from fewer than seven correspondences.
//!
//! When one epipole (or one epipolar line) is known, the cross-ratio of
//! corresponding epipolar lines ties the unknown epipole to the matched
//! points:
//!
//! - 4 correspondences + `e` confine `e'` to a conic ([`solvers::solve_four`]),
//! - 5 correspondences + `e` fix `e'` ([`solvers::solve_five`]),
//! - 6 correspondences + an epipolar line fix both epipoles up to three
//!   candidates ([`solvers::solve_six`]).
//!
//! Once both epipoles are known the fundamental matrix follows from the
//! pencil correspondence ([`fundamental::f_from_epipoles_and_corr`]).
//! [`scene`] generates synthetic ground truth and the normalized 8-point
//! baseline; [`bench`] measures noise sensitivity.

pub mod bench;
pub mod conic;
pub mod constraints;
pub mod error;
pub mod fundamental;
pub mod projective;
pub mod scene;
pub mod solvers;

pub use conic::{Conic, ConicClass, Viewport};
pub use constraints::{
    conic_from_4corr, constraint_residual, pencil_cross_ratio, residual_rms_pixel, CorrSet, Correspondence,
    EpipoleConic, QuadIndex,
};
pub use error::{GeometryError, Result};
pub use fundamental::{
    epipolar_transfer, epipoles_from_f, f_from_epipoles_and_corr, sym_epipolar_distance,
    FundMatrix,
};
pub use projective::{
    cross_ratio_lines, det2, det3, homography_to_standard_triangle, join, meet,
    projective_distance, projectively_equal, reciprocal, Conditioner, HomPoint2, Homogeneous,
    Homography2, Line2,
};
pub use scene::{add_noise, eight_point, generate_scene, NoiseSpec, Scene, SceneConfig, SceneMode};
pub use solvers::{
    rank_candidates, solve_five, solve_four, solve_six, EpipoleEstimate, FourPointSolution,
    LineParam, Method, SixPointOptions, SixPointRoot,
};
