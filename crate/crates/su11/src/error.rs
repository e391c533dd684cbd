//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors raised by defining-representation group arithmetic.
#[derive(Debug, Clone, Error)]
pub enum GroupError {
    /// The pair (alpha, beta) does not satisfy |alpha|^2 - |beta|^2 = 1.
    #[error("unit-determinant constraint violated: |alpha|^2 - |beta|^2 - 1 = {residual:.3e} (tolerance {tol:.1e})")]
    ConstraintViolation { residual: f64, tol: f64 },
    /// The hyperboloid constraint t^2 + z^2 - x^2 - y^2 = 1 failed.
    #[error("hyperboloid constraint violated: t^2 + z^2 - x^2 - y^2 - 1 = {residual:.3e}")]
    HyperboloidViolation { residual: f64 },
    /// A measure density was requested outside its domain.
    #[error("invariant-measure density undefined: 1 + x^2 + y^2 - z^2 = {value:.3e} <= 0")]
    DomainError { value: f64 },
    /// A direction vector is not normalized to n.n in {+1, -1, 0}.
    #[error("direction not normalized: n.n = {norm:.6e} is not within {tol:.1e} of +1, -1 or 0")]
    UnnormalizedDirection { norm: f64, tol: f64 },
}

/// Errors raised by the elementary-gate synthesis machinery.
#[derive(Debug, Clone, Error)]
pub enum SynthError {
    /// The alphabet failed the rational-exclusion screen.
    #[error("gate alphabet fails irrationality screen: {ratio_name} is within {dist:.3e} of {p}/{q}")]
    DegenerateAlphabet {
        ratio_name: &'static str,
        p: i64,
        q: u64,
        dist: f64,
    },
    /// Alphabet parameters outside their admissible ranges.
    #[error("invalid alphabet parameter: {0}")]
    InvalidAlphabet(String),
    /// No repetition count below the cap satisfied the tolerance.
    #[error("no gate count <= {n_cap} reaches tolerance {tol:.3e} (best miss {best:.3e})")]
    SearchExhausted { n_cap: u64, tol: f64, best: f64 },
    /// First-order accuracy analysis is invalid for large parameter errors.
    #[error("accuracy bound requires |delta| <= 0.1, got {value:.3e}")]
    DeltaTooLarge { value: f64 },
    /// Tolerance must be strictly positive.
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
}

/// Errors raised by truncated Fock-space representations.
#[derive(Debug, Clone, Error)]
pub enum FockError {
    /// Matrix support leaked past the truncation boundary.
    #[error("truncation too small: trailing-row mass {mass:.3e} exceeds {limit:.1e}")]
    Truncation { mass: f64, limit: f64 },
    /// A group integral diverges for this sector.
    #[error("group integral diverges for this sector: {0}")]
    DivergenceDetected(String),
    /// Vector or matrix dimensions do not match the sector dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A state vector must be normalized.
    #[error("vector not normalized: ||v|| = {norm}")]
    NotNormalized { norm: f64 },
    /// Operator failed a positivity / trace precondition.
    #[error("invalid seed operator: {0}")]
    InvalidSeed(String),
}

/// Errors raised by the tomography pipeline.
#[derive(Debug, Clone, Error)]
pub enum TomoError {
    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    /// A frame coefficient came out non-positive (quadrature failure by positivity).
    #[error("frame positivity violated at (m, n) = ({m}, {n}): F = {value:.6e}")]
    PositivityViolation { m: usize, n: usize, value: f64 },
    /// Operator dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The processing-function variance gate failed.
    #[error("variance of the processing function is unbounded for this observable")]
    VarianceUnbounded,
    /// The job state has too much weight at the truncation boundary.
    #[error("state rejected: trailing diagonal mass {mass:.3e} exceeds {limit:.1e}")]
    TruncationRejected { mass: f64, limit: f64 },
    /// Numerical diagonalization of the measured axis operator failed.
    #[error("axis diagonalization failed for truncated K_{axis}")]
    AxisDiagonalizationFailure { axis: char },
    /// The requested regularizer id is not registered.
    #[error("unknown regularizer id: {0}")]
    UnknownRegularizer(String),
    /// The regularized measure is not normalizable.
    #[error("regularizer not normalizable: {0}")]
    NotNormalizable(String),
    /// Invalid job specification.
    #[error("invalid job: {0}")]
    InvalidJob(String),
    /// The sector integral diverges (propagated from the representation layer).
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Errors raised by the adjoint-representation machinery.
#[derive(Debug, Clone, Error)]
pub enum AdjointError {
    /// Null directions cannot be conjugated onto the z- or x-axis.
    #[error("null directions cannot be conjugated to a compact or boost axis")]
    NullDirection,
    /// Plus-class directions on the lower sheet (n_z <= -1) are not reachable.
    #[error("plus-class direction with n_z = {nz} lies on the lower sheet; only n_z >= 1 is conjugate to K_z")]
    LowerSheet { nz: f64 },
}
