use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("band bounds must satisfy 0 < band_lo < band_hi < 1 (got band_lo={lo}, band_hi={hi})")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("island bounds must satisfy 0 < island_lo < island_hi < 1 (got island_lo={lo}, island_hi={hi})")]
    InvalidIsland { lo: f64, hi: f64 },
    #[error("{name}={value} is not on a grid line of an {n}x{n} cell ({name}*n = {scaled})")]
    Misaligned { name: &'static str, value: f64, n: usize, scaled: f64 },
    #[error("reference cell needs at least 4 elements per axis (got {n})")]
    TooCoarse { n: usize },
    #[error("period eps={eps} must be 1/N for a positive integer N")]
    BadPeriod { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("conjugate gradients broke down at iteration {iteration} (p.Ap = {curvature:e}); operator is not positive on the search space")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("right-hand side is not orthogonal to constants (relative defect {defect:e})")]
    Incompatible { defect: f64 },
    #[error("dimension mismatch: operator {operator}, vector {vector}")]
    Dimension { operator: usize, vector: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("tensor is not symmetric: m12={m12}, m21={m21}")]
    NotSymmetric { m12: f64, m21: f64 },
    #[error("tensor eigenvalues [{min}, {max}] violate the ellipticity bound (min must be > {floor})")]
    NotElliptic { min: f64, max: f64, floor: f64 },
    #[error("coefficient field has {got} entries, grid has {expected} elements")]
    Length { expected: usize, got: usize },
}

/// Failure of a time step, tagged with where in the run it happened.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {step} (t = {t}): {source}")]
pub struct StepError {
    pub step: usize,
    pub t: f64,
    #[source]
    pub source: SolveError,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnfoldError {
    #[error("field has {got} values, tiled grid has {expected} nodes")]
    Resolution { expected: usize, got: usize },
    #[error("tiled grid with {n} elements per axis is not a multiple of {n_per_cell} per cell")]
    Tiling { n: usize, n_per_cell: usize },
    #[error("micro state at t={micro} but macro state at t={macro_t}")]
    TimeMismatch { micro: f64, macro_t: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Failure of a whole run: bad operators up front or a failed step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Step(#[from] StepError),
}
