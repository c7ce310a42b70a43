use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A chart point outside the model's coordinate domain.
    #[error("point {point:?} outside the domain of {model}: {reason}")]
    Domain {
        model: String,
        point: [f64; 3],
        reason: String,
    },

    #[error("Einstein data unavailable for {0}: declare an Einstein policy for custom data")]
    EinsteinUnavailable(String),

    #[error("size guard: {0}")]
    Size(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// The surface is outside the regime an operation is defined for
    /// (e.g. null or timelike mean curvature vector).
    #[error("regime error ({label}): {count} offending vertices, first {vertices:?}")]
    Regime {
        label: String,
        count: usize,
        vertices: Vec<usize>,
    },

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no root: {message} (scanned [{lo}, {hi}])")]
    Existence { message: String, lo: f64, hi: f64 },

    #[error("expression error in `{source_text}`: {message}")]
    Expression { source_text: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn regime(label: impl Into<String>, offending: &[usize]) -> Self {
        Error::Regime {
            label: label.into(),
            count: offending.len(),
            vertices: offending.iter().copied().take(8).collect(),
        }
    }
}
