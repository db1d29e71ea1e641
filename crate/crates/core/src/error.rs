use thiserror::Error;

/// Errors raised by the operations of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("band too wide for grid")]
    BandTooWide,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("degenerate K-matrix")]
    DegenerateK,
    #[error("trace obstruction: A₀B₁ ≠ −A₁B₀")]
    TraceObstruction,
    #[error("reality condition failed at k={0}")]
    Reality(usize),
    #[error("residue condition failed")]
    Residue,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("rank ill-conditioned, use rational mode")]
    RankIllConditioned,
    #[error("nullspace has no admissible residue direction")]
    NoAdmissibleDirection,
    #[error("input not K-symmetric")]
    NotKSymmetric,
    #[error("factorization core undefined for B=0")]
    FactorizationCoreUndefined,
    #[error("potential not off-diagonal")]
    NotOffDiagonal,
    #[error("degenerate determinant")]
    DegenerateDeterminant,
    #[error("inconsistent branching (clustering tolerance?)")]
    InconsistentBranching,
    #[error("Gram matrix not positive definite: increase N or grid")]
    NotPositiveDefinite,
    #[error("factorization normalization violated")]
    NormalizationViolated,
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("grid has no row at y={0}")]
    MissingRow(f64),
    #[error("M does not commute with ξ: second boundary condition not satisfied at y₁")]
    NotCommuting,
    #[error("frame field error at grid point ({ix}, {iy}): {source}")]
    AtGridPoint {
        ix: usize,
        iy: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
