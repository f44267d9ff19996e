//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter set lies outside the singularity-free domain of its family.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters are inconsistent with the requested operation.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: operands are sampled on different grids")]
    GridMismatch,

    /// A denominator or seed changes sign between two adjacent nodes.
    #[error("singular family: {what} vanishes between nodes {node} and {next} (x = {x:.6})")]
    SingularFamily {
        what: &'static str,
        node: usize,
        next: usize,
        x: f64,
    },

    /// A function that must be nonvanishing has a zero at a grid node.
    #[error("function vanishes at node {node} (x = {x:.6})")]
    NodeZero { node: usize, x: f64 },

    /// A Pochhammer factor vanished, i.e. a Gamma pole would have been hit.
    #[error("gamma pole: factor z + {index} = 0 for z = {z}")]
    GammaPole { z: f64, index: u32 },

    #[error("series for {0} did not converge")]
    NoConvergence(&'static str),

    #[error("eigenvalue map is degenerate: E - epsilon = {0:e}")]
    DegenerateMap(f64),

    #[error("eigenvalue map needs E > epsilon, got E - epsilon = {0}")]
    ImaginaryNormalization(f64),

    /// The operator annihilated its input (output norm below threshold).
    #[error("state annihilated: relative output norm {0:e}")]
    Annihilated(f64),

    #[error("chain step needs distinct energies, got {0} twice")]
    EqualEnergies(f64),

    #[error("chain step is singular at node {node} (x = {x:.6})")]
    ChainSingular { node: usize, x: f64 },

    #[error("Riccati residual gate failed: max residual {residual:e} > {tolerance:e}")]
    ResidualGate { residual: f64, tolerance: f64 },

    #[error("bracketing error: [{lo}, {hi}] contains {count} levels, expected exactly one")]
    Bracketing { lo: f64, hi: f64, count: i64 },

    #[error("requested {requested} levels but only {available} are available")]
    TooManyLevels { requested: usize, available: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by out-of-domain user parameters rather than
    /// numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Parameter(_) | Error::EqualEnergies(_))
    }
}
