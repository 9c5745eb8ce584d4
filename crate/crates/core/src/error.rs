use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid size {0} must be even and within [16, 65536]")]
    InvalidGrid(usize),
    #[error("wavenumber {k} aliases on a grid of {points} points")]
    Aliasing { k: i64, points: usize },
    #[error("operands live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },
    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("wavefunction has zero norm")]
    ZeroNorm,
    #[error("norm drifted to {norm} at t = {time} (tolerance {tolerance})")]
    NormDrift { time: f64, norm: f64, tolerance: f64 },
    #[error("adiabatic tracking is ambiguous between {from} and {to} (best overlap {overlap})")]
    AmbiguousTracking { from: f64, to: f64, overlap: f64 },
    #[error("particle number {0} must be odd")]
    EvenParticleNumber(usize),
    #[error("brute-force overlap supports at most {max} particles, got {found}")]
    TooManyParticles { max: usize, found: usize },
    #[error("scaling function is non-positive (rho = {rho} at t = {time})")]
    UnphysicalScaling { time: f64, rho: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
