use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report, tagged by the stage that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid mesh: {0}")]
    Validation(String),
    #[error("geodesic query with an empty source set")]
    EmptySourceSet,
    #[error("requested {requested} samples but mesh has {available} vertices")]
    CountTooLarge { requested: usize, available: usize },
    #[error("degenerate angle in face {face}: |cot| = {cot:e}")]
    DegenerateAngle { face: usize, cot: f64 },
    #[error("eigensolver did not converge: {0}")]
    SolverNoConvergence(String),
    #[error("requested {requested} eigenpairs from a mesh with {available} vertices")]
    KTooLarge { requested: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected a square functional map, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("stacked least-squares system is rank deficient")]
    SingularLeastSquares,
    #[error("constant eigenfunction sums to zero")]
    ZeroConstantSum,
    #[error("eigenvalue group of size {size} exceeds the limit {limit}")]
    GroupTooLarge { size: usize, limit: usize },
    #[error("no further eigenfunctions available at index {index}")]
    BasisExhausted { index: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("missing geodesic distances: {0}")]
    MissingDistances(String),
    #[error("all image triangles are degenerate")]
    AllFacesDegenerate,
    #[error("empty candidate set: {0}")]
    EmptyCandidates(String),
    #[error("distance matrix is not symmetric at ({row}, {col})")]
    NonSymmetric { row: usize, col: usize },
    #[error("unknown flag or option: {0}")]
    UnknownFlag(String),
    #[error("bad value for {flag}: {message}")]
    TypeError { flag: String, message: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this class of failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Parse { .. } | Error::Json(_) => 3,
            Error::Validation(_) => 4,
            Error::UnknownFlag(_) | Error::TypeError { .. } => 5,
            Error::DegenerateAngle { .. }
            | Error::SolverNoConvergence(_)
            | Error::KTooLarge { .. } => 6,
            Error::DimensionMismatch(_) | Error::NonSquare { .. } | Error::SingularLeastSquares => {
                7
            }
            Error::ZeroConstantSum
            | Error::GroupTooLarge { .. }
            | Error::BasisExhausted { .. }
            | Error::PreconditionViolated(_) => 8,
            Error::EmptySourceSet
            | Error::CountTooLarge { .. }
            | Error::MissingDistances(_)
            | Error::AllFacesDegenerate => 9,
            Error::EmptyCandidates(_) | Error::NonSymmetric { .. } => 10,
        }
    }

    /// Short name of the module that owns the failure, used in CLI reports.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::UnknownFlag(_) | Error::TypeError { .. } | Error::Json(_) => {
                "cli_io"
            }
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::EmptySourceSet
            | Error::CountTooLarge { .. } => "mesh_core",
            Error::DegenerateAngle { .. }
            | Error::SolverNoConvergence(_)
            | Error::KTooLarge { .. } => "spectral",
            Error::DimensionMismatch(_) | Error::NonSquare { .. } => "fmap",
            Error::SingularLeastSquares => "refine",
            Error::ZeroConstantSum
            | Error::GroupTooLarge { .. }
            | Error::BasisExhausted { .. }
            | Error::PreconditionViolated(_) => "maptree",
            Error::MissingDistances(_) | Error::AllFacesDegenerate => "metrics",
            Error::EmptyCandidates(_) => "select",
            Error::NonSymmetric { .. } => "analysis",
        }
    }
}
