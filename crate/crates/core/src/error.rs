use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order out of range: {0} (supported orders are 1..=4)")]
    OrderOutOfRange(u32),

    #[error("inactive spline index: shift {shift} outside {lo}..={hi} at level {level}")]
    InactiveSplineIndex { level: u32, shift: i64, lo: i64, hi: i64 },

    #[error("insufficient nodes for extension: level {level} has {nodes} nodes, order {order} needs {order}")]
    InsufficientNodes { level: u32, nodes: u64, order: usize },

    #[error("parity mismatch: order {order} is {actual}, this functional needs {expected} order")]
    ParityMismatch {
        order: usize,
        actual: &'static str,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluation point outside domain: {0:?}")]
    OutsideDomain(Vec<f64>),

    #[error("epsilon violates class-B constraint: need 0 < epsilon < {upper}, got {epsilon}")]
    EpsilonOutOfRange { epsilon: f64, upper: f64 },

    #[error("invalid smoothness parameters: {0}")]
    InvalidSpec(String),

    #[error("budget below minimal grid: n = {n}, smallest grid needs {minimal}")]
    BudgetTooSmall { n: u64, minimal: u64 },

    #[error("cannot fit log of nonpositive value at point {0}")]
    NonPositive(usize),

    #[error("rate fit needs at least 4 points with strictly increasing n, got {0}")]
    TooFewPoints(usize),

    #[error("reference level set must strictly contain the reconstruction levels")]
    ReferenceTooSmall,

    #[error("level {0:?} is not part of this reconstruction")]
    UnknownLevel(Vec<u32>),

    #[error("no sample value for point {0:?}")]
    MissingSample(Vec<f64>),

    #[error("malformed input: {0}")]
    Parse(String),
}
