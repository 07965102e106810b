//! Error type shared by every stage.
//!
//! Variants are grouped by [`ErrorKind`] so the CLI can map them onto its
//! exit codes (validation error, numerical failure, missing artifact).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    MissingArtifact,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("CFL violated: dt = {dt:.3e} exceeds bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("solver instability at step {step}: {what}")]
    Instability { step: usize, what: String },

    #[error("degenerate Jacobian at node {node:?} (det = {det:.3e})")]
    Degenerate { node: Vec<usize>, det: f64 },

    #[error("caustic before requested depth: chart valid only to depth {achieved:.4} of {requested:.4}")]
    Caustic { achieved: f64, requested: f64 },

    #[error("coefficient validity: {0}")]
    Validity(String),

    #[error("probe support leaks outside the data patch by {overflow:.4}")]
    ProbeSupport { overflow: f64 },

    #[error("coercivity failure: Hermitian Gram eigenvalue floor {floor:.3e} (T too large or basis degenerate)")]
    Coercivity { floor: f64 },

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("extrapolation did not converge: residuals {residuals:?}")]
    Extrapolation { residuals: Vec<f64> },

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("assembly deficit: {0}")]
    Assembly(String),

    #[error("malformed container: {0}")]
    Container(String),

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Dimension(_) | Invalid(_) | Cfl { .. } | Validity(_) | Container(_)
            | Manifest(_) | Config(_) => ErrorKind::Validation,
            Instability { .. } | Degenerate { .. } | Caustic { .. } | ProbeSupport { .. }
            | Coercivity { .. } | RankDeficient(_) | Extrapolation { .. } | Coverage(_)
            | Assembly(_) => ErrorKind::Numerical,
            MissingArtifact(_) => ErrorKind::MissingArtifact,
            Stage { source, .. } => source.kind(),
            Io(_) => ErrorKind::Io,
        }
    }

    /// Wrap an error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
