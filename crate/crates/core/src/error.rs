use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),
    #[error("background equals the base measure; set degenerate_allowed to accept it")]
    DegenerateBackground,
    #[error("Green operator check failed: residual {residual:.3e} exceeds {tolerance:.1e}")]
    GreenResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("non-positive density: {0}")]
    NonPositiveDensity(String),
    #[error("operation not supported on this geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("field has nonzero mean {0:.3e}")]
    NonZeroMean(f64),
    #[error("points {0} and {1} collide")]
    Collision(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("Newton iteration diverged at beta = {beta}: {reason}")]
    NewtonDiverged { beta: f64, reason: String },
    #[error("density underflow at beta = {0}")]
    NegativeDensityUnderflow(f64),
    #[error("beta = {beta} is outside the admissible range: {reason}")]
    BetaOutOfRange { beta: f64, reason: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("value {value} outside sampled range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("entropy curve is not concave near e = {0}")]
    NonConcaveNeighborhood(f64),
    #[error("weights do not define a log Fano curve (sum = {0})")]
    NotLogFano(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("chain acceptance {0:.4} below 1%")]
    NonErgodic(f64),
    #[error("no configuration found inside the energy shell")]
    EmptyShell,
    #[error("shell chain stuck: {0}")]
    StuckChain(String),
    #[error("Wang-Landau did not converge: {0}")]
    NotConverged(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("vortices approached closer than the collision floor at t = {0}")]
    CollisionApproach(f64),
    #[error("step size underflow at t = {0}")]
    ToleranceUnreachable(f64),
    #[error("trajectory too short: {0}")]
    TooShort(String),
    #[error("positivity lost at t = {0}")]
    PositivityLoss(f64),
    #[error("CFL condition violated at t = {0}")]
    CflViolation(f64),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
