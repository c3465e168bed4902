use thiserror::Error;

/// Errors produced by the sampling library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("edgelengths cannot close: r[{index}] = {length} is not smaller than half the total length {half_total}")]
    NotClosable { index: usize, length: f64, half_total: f64 },

    #[error("shift map denominator degenerates: |w|*|z| = {product} is too close to 1")]
    DegenerateDenominator { product: f64 },

    #[error("point of norm {norm} is not strictly inside the unit ball")]
    OutsideBall { norm: f64 },

    #[error("arm configuration is not stable with respect to the edgelengths")]
    Unstable,

    #[error("barycenter solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("gram matrix is singular (all directions collinear)")]
    SingularGram,

    #[error("polygon directions do not span the ambient space")]
    DegenerateSpan,

    #[error("sampler aborted after {redraws} consecutive failed draws")]
    AbortAfterRedraws { redraws: usize },

    #[error("sum of weights is not positive")]
    ZeroWeightSum,

    #[error("sample budget of {max_samples} exhausted before the confidence target was met")]
    BudgetExceeded {
        max_samples: u64,
        report: Box<crate::estimator::EstimateReport>,
    },

    #[error("vertex index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
