use crate::params::Branch;

/// Errors raised by the evaluators, scanners and the oracle.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("omega must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("coupling g must be nonzero for G-function evaluation")]
    ZeroCoupling,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    /// `x` is within the pole guard of `x = nω ∓ ε` for the named series branch.
    #[error("x lies within the pole guard of pole n = {n} on the {branch:?} branch")]
    PoleProximity { n: usize, branch: Branch },
    #[error("series did not meet the tail criterion before n_max = {n_max}")]
    NonConvergence { n_max: usize },
    /// `2ε/ω` is (numerically) a nonzero integer, so poles of the two
    /// branches collide.
    #[error("2ε/ω = {ratio} is resonant: poles of the two branches collide")]
    ResonantParameters { ratio: f64 },
    #[error("found {found} of {requested} zeros below the window ceiling x = {ceiling}")]
    WindowExhausted {
        requested: usize,
        found: usize,
        ceiling: f64,
    },
    #[error("regularized G-function does not vanish at the baseline")]
    NotExceptional,
    #[error("Jacobi iteration hit the sweep cap ({sweeps})")]
    IterationCap { sweeps: usize },
    #[error("{flagged} of {total} grid cells failed to evaluate")]
    TooManyFlaggedCells { flagged: usize, total: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
