//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("size field produces more than {max} elements (reached {reached})")]
    TooManyElements { max: usize, reached: usize },

    #[error("refinement below minimum element size {floor}")]
    BelowMinimumSize { floor: f64 },

    #[error("element {element} has non-positive Jacobian {det_j}")]
    NonPositiveJacobian { element: usize, det_j: f64 },

    #[error("insufficient constraints: structure floats with null-space dimension {dim}")]
    InsufficientConstraints { dim: usize },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("contact active-set did not converge in {iterations} iterations \
             (max penetration {max_penetration:.3e}, max complementarity {max_complementarity:.3e}, \
             max cone violation {max_cone_violation:.3e})")]
    ContactNotConverged {
        iterations: usize,
        max_penetration: f64,
        max_complementarity: f64,
        max_cone_violation: f64,
    },

    #[error("SIF extraction failed: {0}")]
    Sif(String),

    #[error("kink angle undefined: both stress intensity factors are zero")]
    KinkUndefined,

    #[error("negative mode-I SIF {k1:.3e} exceeds tolerance (K_II = {k2:.3e}); \
             contact enforcement likely failed upstream")]
    NegativeModeI { k1: f64, k2: f64 },

    #[error("growth step degenerate: {0}")]
    Growth(String),

    #[error("scenario error in `{path}`: {message}")]
    Scenario { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn scenario(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            path: path.into(),
            message: message.into(),
        }
    }
}
