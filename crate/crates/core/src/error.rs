use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} collapsed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("integrand is not finite at node {node}")]
    NonFiniteIntegrand { node: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("rank {rank} exceeds dimension {dim}")]
    RankExceedsDimension { rank: usize, dim: usize },
    #[error("kernel Gram matrix is singular even after jitter")]
    SingularGram,
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("noise variance must be positive for a scaled value")]
    ZeroNoiseVariance,
    #[error("feature dimension {q} needs {work} units of work, budget is {budget}")]
    FeatureDimensionOverflow { q: usize, work: usize, budget: usize },
    #[error("design matrix is rank deficient")]
    RankDeficientDesign,
    #[error("test partition is empty")]
    TestPartitionEmpty,
    #[error("training fold has {rows} rows but the model needs at least {needed}")]
    FoldTooSmall { rows: usize, needed: usize },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{col}`")]
    NonNumericCell { row: usize, col: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("rows mix several modes")]
    MixedModes,
}

pub type Result<T> = std::result::Result<T, Error>;
