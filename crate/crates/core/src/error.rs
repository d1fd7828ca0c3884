use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension {d} outside the supported range {min}..={max}")]
    UnsupportedDimension { d: usize, min: usize, max: usize },

    #[error("expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not unitary: |U U^dagger - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("structure constant ({j}, {k}, {q}) has imaginary residue {residue:e}")]
    BrokenBasis {
        j: usize,
        k: usize,
        q: usize,
        residue: f64,
    },

    #[error("index {index} out of range {min}..={max}")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("invalid trace vector: {0}")]
    InvalidTraceVector(String),

    #[error("purity constants are inadmissible: {condition} violated")]
    Inadmissible { condition: String },

    #[error("rank {rank} does not correspond to a unitary orbit in dimension {d}")]
    OrbitNotTabulated { d: usize, rank: usize },

    #[error("constraint system needs {expected} free variables, found {found}")]
    WrongSurplusCount { expected: usize, found: usize },

    #[error("free index set does not complement a pivot basis: {0}")]
    InvalidFreeSet(String),

    #[error("solver found no solutions after {starts} starts; try more starts")]
    SolverExhausted { starts: usize },

    #[error("solver returned {found} solutions, more than the Bezout bound {bound}")]
    BezoutBoundExceeded { found: usize, bound: usize },

    #[error("operator is a multiple of the identity and carries no spectral information")]
    ScalarOperator,

    #[error("states do not commute: residual {residual:e}")]
    NonCommuting { residual: f64 },

    #[error("spectral recursion stalled with {found} of {needed} projectors")]
    SpectrumIncomplete {
        found: usize,
        needed: usize,
        partial: Box<crate::extremal::SpectralResult>,
    },

    #[error("Jacobi sweeps did not converge: off-diagonal norm {off_diagonal:e}")]
    NoConvergence { off_diagonal: f64 },

    #[error("not a probability vector: {0}")]
    InvalidProbabilityVector(String),
}
