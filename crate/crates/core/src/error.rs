use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: k = {k}, d = {d} (need 1 <= k <= d)")]
    InvalidDimension { k: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least 2 points, found {0}")]
    TooFewPoints(usize),

    #[error("points {i} and {j} coincide (squared distance {sq_dist:e}); distinct points required")]
    CoincidentPoints { i: usize, j: usize, sq_dist: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("ambient dimension d = {0} is unsupported here (need d >= 2)")]
    UnsupportedAmbientDimension(usize),

    #[error("least-squares fit undefined: Var(M) = {0:e} is below the degeneracy floor")]
    UndefinedFit(f64),

    #[error("epsilon = {0} must lie in (0, 1)")]
    EpsilonOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rows are not orthonormal: ||q q^T - I||_F = {deviation:e} exceeds {tolerance:e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error("matrix is not an orthogonal projector: {0}")]
    NotProjector(String),

    #[error("frame {index} is invalid: {source}")]
    InvalidFrame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("candidate set is empty")]
    EmptySet,

    #[error("no candidate inside the tolerance band ({0}); try a larger --m-tol")]
    BandEmpty(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("transform `{0}` needs 2-D image shape metadata")]
    MissingShape(String),

    #[error("transform `{0}` provides no adjoint")]
    MissingAdjoint(String),

    #[error("invalid loss specification: {0}")]
    InvalidSpec(String),

    #[error("parse error in {path} at line {line}{}: {message}", .column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension { .. } => "invalid-dimension",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::TooFewPoints(_) => "too-few-points",
            Error::CoincidentPoints { .. } => "distinct-points-required",
            Error::DegenerateData(_) => "degenerate-data",
            Error::UnsupportedAmbientDimension(_) => "unsupported-ambient-dimension",
            Error::UndefinedFit(_) => "undefined-fit",
            Error::EpsilonOutOfRange(_) => "epsilon-out-of-range",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NotOrthonormal { .. } => "not-orthonormal",
            Error::NotProjector(_) => "not-projector",
            Error::InvalidFrame { .. } => "invalid-frame",
            Error::EmptySet => "empty-set",
            Error::BandEmpty(_) => "band-empty",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::MissingShape(_) => "missing-shape",
            Error::MissingAdjoint(_) => "missing-adjoint",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
