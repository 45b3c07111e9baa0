use thiserror::Error;

/// Failures raised by the geometry routines.
///
/// Most of these are data-dependent outcomes (a point configuration that
/// carries no information) rather than programming errors, so callers are
/// expected to report them back to whoever picked the points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate pencil: two lines of the pencil coincide")]
    DegeneratePencil,

    #[error("ill-conditioned configuration: points {triple:?} are (nearly) collinear")]
    IllConditioned { triple: [usize; 3] },

    #[error(
        "redundant configuration: epipole is collinear with points {pair:?}, \
         so they share one epipolar line"
    )]
    RedundantConfiguration { pair: [usize; 2] },

    #[error("the fourth conic intersection coincides with a shared point; try a different quad split")]
    CoincidentSolution,

    #[error("underdetermined: {0}")]
    Underdetermined(String),

    #[error("rank deficient system: rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("no solution: no sign change found along the line (min |g| = {min_abs:e})")]
    NoSolution { min_abs: f64 },

    #[error("singular homography")]
    SingularHomography,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scene generation failed: {0}")]
    GenerationFailure(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl GeometryError {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            GeometryError::DegenerateInput(_) => "degenerate_input",
            GeometryError::DegeneratePencil => "degenerate_pencil",
            GeometryError::IllConditioned { .. } => "ill_conditioned",
            GeometryError::RedundantConfiguration { .. } => "redundant_configuration",
            GeometryError::CoincidentSolution => "coincident_solution",
            GeometryError::Underdetermined(_) => "underdetermined",
            GeometryError::RankDeficient { .. } => "rank_deficient",
            GeometryError::NoSolution { .. } => "no_solution",
            GeometryError::SingularHomography => "singular_homography",
            GeometryError::InvalidInput(_) => "invalid_input",
            GeometryError::GenerationFailure(_) => "generation_failure",
            GeometryError::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
