use thiserror::Error;

pub type Result<T, E = LtError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtError {
    #[error("unsupported lattice: kind `{kind}` in dimension {dim}")]
    UnsupportedLattice { kind: String, dim: usize },

    #[error("unknown lattice kind `{0}` (expected line, square, triangular or honeycomb)")]
    UnknownLatticeKind(String),

    #[error("modulus k = {0} outside [0, 1)")]
    ModulusDomain(f64),

    #[error("energy {energy} sits on the band edge {edge}; the density of states is singular there")]
    BandEdge { energy: f64, edge: f64 },

    #[error("invalid exponent gamma = {gamma} for dimension {dim}: {reason}")]
    InvalidExponent { gamma: f64, dim: usize, reason: &'static str },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("plane-wave basis reaches index {needed} along an axis but a {grid}-point grid resolves only |z| <= {limit}")]
    BasisGridMismatch { needed: i64, grid: usize, limit: i64 },

    #[error("potential has {got} samples, grid expects {expected}")]
    GridSizeMismatch { got: usize, expected: usize },

    #[error("potential contains a non-finite value at grid index {0}")]
    NonFinitePotential(usize),

    #[error("requested {bands} bands but the plane-wave basis only has {basis} vectors")]
    TooManyBands { bands: usize, basis: usize },

    #[error("eigensolver failed at quasimomentum ({xi0}, {xi1})")]
    Eigensolver { xi0: f64, xi1: f64 },

    #[error("no negative spectrum: all {bands} retained bands are nonnegative")]
    NoNegativeSpectrum { bands: usize },

    #[error("objective decreased at iteration {iteration}: {previous:.15e} -> {current:.15e}")]
    NonMonotone { iteration: usize, previous: f64, current: f64, trace: Vec<f64> },

    #[error("shooting for the ground state did not converge: {0}")]
    Shooting(String),

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracket { what: &'static str, lo: f64, hi: f64 },
}
