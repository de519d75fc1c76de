use thiserror::Error;

/// Errors raised across the simulation and verification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("particle configuration is not strictly increasing at index {index}")]
    NonOrderedConfiguration { index: usize },

    #[error("half-line configuration has non-positive particle {value}")]
    NonPositive { value: f64 },

    #[error("step failure at macro step {macro_step}: {halvings} halvings did not restore a valid configuration")]
    StepFailure { macro_step: usize, halvings: u32 },

    #[error("unsupported beta: matrix oracles exist only for kappa = 4, got {kappa}")]
    UnsupportedBeta { kappa: f64 },

    #[error("nu must be a nonnegative integer, got {nu}")]
    NegativeNu { nu: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("point {point} is within {distance:e} of a pole")]
    PoleHit { point: String, distance: f64 },

    #[error("requested time {t} exceeds driving horizon {horizon}")]
    GridExceeded { t: f64, horizon: f64 },

    #[error("probe {probe} was swallowed before t = {t}")]
    SwallowedProbe { probe: String, t: f64 },

    #[error("coincident points {point}")]
    CoincidentPoints { point: String },

    #[error("point {point} lies outside the open domain {domain}")]
    DomainViolation { point: String, domain: &'static str },

    #[error("mesh {mesh} too coarse: {nodes:.1} nodes across a feature of size {feature}, need at least 16")]
    MeshTooCoarse { mesh: f64, nodes: f64, feature: f64 },

    #[error("test-function support leaves the sampling box")]
    SupportOutsideBox,

    #[error("{dead} of {total} seeds died before the horizon")]
    InsufficientSurvivors { dead: usize, total: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("could not parse {path}: {reason}")]
    Parse { path: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
