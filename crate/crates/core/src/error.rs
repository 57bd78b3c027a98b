use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("convolution sum diverges for beta = {beta} with R = {r}")]
    DivergentSum { beta: f64, r: f64 },
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("finite-difference derivatives disagree for term {support:?} (relative gap {gap:.3e})")]
    NonSmooth { support: Vec<i64>, gap: f64 },
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("support tag {support:?} does not match the operator: site {site} acts trivially")]
    SupportMismatch { support: Vec<i64>, site: i64 },
    #[error("onsite dimension mismatch: expected {expected}, got {got}")]
    OnsiteDimMismatch { expected: usize, got: usize },
    #[error("support {support:?} is not contained in volume [{a}, {b}]")]
    SupportOutsideVolume { support: Vec<i64>, a: i64, b: i64 },
    #[error("volume dimension {dim} exceeds ceiling {ceiling}")]
    VolumeTooLarge { dim: usize, ceiling: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no spectral separation of at least {probe} found")]
    DegenerateSplit { probe: f64 },
    #[error("annulus requires 0 < m < n (got m = {m}, n = {n})")]
    BadOrder { m: i64, n: i64 },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("beta = {beta} is too small (need beta > {min})")]
    BetaTooSmall { beta: f64, min: f64 },
    #[error("bound violated: measured {measured:.6e} > bound {bound:.6e} ({context})")]
    BoundViolation { measured: f64, bound: f64, context: String },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("envelope series did not converge: {0}")]
    DivergentEnvelope(String),
    #[error("state is not invariant under time reversal (overlap {0:.3e})")]
    NotInvariant(f64),
    #[error("matrix product state is not injective: {0}")]
    NotInjective(String),
    #[error("ambiguous witness: V conj(V) is {0:.3e} away from +-1")]
    AmbiguousWitness(f64),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
