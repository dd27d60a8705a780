use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too narrow: {mass:e} of the packet's probability lies outside the grid")]
    GridTooNarrow { mass: f64 },

    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("packet support [{lo}, {hi}] contains no cell centre")]
    EmptySupport { lo: f64, hi: f64 },

    #[error("interval [{lo}, {hi}] is not inside the grid [{z_min}, {z_max}]")]
    OutsideGrid {
        lo: f64,
        hi: f64,
        z_min: f64,
        z_max: f64,
    },

    #[error("inverted interval: {lo} >= {hi}")]
    InvertedInterval { lo: f64, hi: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time step {dt} differs from cell width {dz}; the scheme requires dt = dz")]
    CflViolation { dt: f64, dz: f64 },

    #[error("probability {mass:e} reached the grid edge at step {step}")]
    BoundaryMass { step: usize, mass: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("cut point Q + t = {z} leaves the grid before the run ends")]
    RegionExitsGrid { z: f64 },

    #[error("history stride is {stride}; this operation needs stride 1")]
    StrideNotOne { stride: usize },

    #[error("barrier length {length} does not exceed t_max {t_max}")]
    HorizonTooLong { length: f64, t_max: f64 },

    #[error("grid of {cells} cells exceeds the basis enumeration cap of {cap}")]
    GridTooLarge { cells: usize, cap: usize },

    #[error("perturbation at step {step}, z = {z} lies inside the past lightcone of the observation region")]
    PastConeIntersection { step: usize, z: f64 },

    #[error("wavenumber {k} is unresolved at dz = {dz} (need |k| dz <= {limit})")]
    UnresolvedWavenumber { k: f64, dz: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
