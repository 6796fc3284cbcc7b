use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface profile: {0}")]
    InvalidProfile(String),
    #[error("colatitude node at a pole (p2 = {0})")]
    PoleNode(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("inverse Laplacian needs zero global mean input (relative mean {0:e})")]
    GaugeViolation(f64),
    #[error("H^k norm of a vector field needs k >= 1 (got {0})")]
    BadOrder(i32),
    #[error("profile is not zonal (longitude variation {0:e})")]
    NotZonal(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("operator matrix of dimension {dim} exceeds the cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("blow-up detected at t = {t} ({reason})")]
    BlowupDetected { t: f64, reason: String },
    #[error("time average needs at least 3 snapshots (got {0})")]
    InsufficientData(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("config errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
