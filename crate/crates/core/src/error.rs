use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite numeric input: {0}")]
    NonFinite(String),

    /// `y` lies on (or numerically at) the cut locus of `x`.
    #[error("cut locus: log map undefined from {x:?} to {y:?}")]
    CutLocus { x: Vec<f64>, y: Vec<f64> },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeRange { t: f64, horizon: f64 },

    /// Drift evaluated too close to the bridge horizon where it is singular.
    #[error("time {t} is within the clipped horizon (t must be < {limit})")]
    Horizon { t: f64, limit: f64 },

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("mesh quality: degenerate faces {faces:?}")]
    MeshQuality { faces: Vec<usize> },

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("eigensolver failed to converge (residual {residual:e})")]
    Solver { residual: f64 },

    #[error("drift failed at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("integration produced non-finite state at t = {t}")]
    Integration { t: f64 },

    #[error("likelihood: {0}")]
    Likelihood(String),

    #[error("model state: {0}")]
    ModelState(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("data: {0}")]
    Data(String),

    #[error("estimator undefined: {0}")]
    Estimator(String),

    #[error("training diverged at iteration {iter}")]
    Diverged { iter: usize },

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for configuration and input errors, 3 for
    /// failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidPoint(_)
            | Error::Unsupported(_)
            | Error::TimeRange { .. }
            | Error::Horizon { .. }
            | Error::MeshQuality { .. }
            | Error::Mesh(_)
            | Error::Usage(_)
            | Error::Config(_)
            | Error::Data(_)
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
