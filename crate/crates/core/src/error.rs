use thiserror::Error;

/// Errors raised by grid construction, discrete operators and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("no grid node satisfies rho < 0")]
    EmptyInterior,
    #[error("interior nodes split into {components} disconnected components; refine the grid")]
    ResolutionTooCoarse { components: usize },
    #[error("grid spacing {h} too coarse: must be below {limit}")]
    SpacingTooLarge { h: f64, limit: f64 },
    #[error("density is not positive ({value}) at node {node}")]
    NonPositiveDensity { node: usize, value: f64 },
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },
    #[error("field is not plurisubharmonic: min Hessian eigenvalue {min_eigenvalue:e} at node {node}")]
    NotPsh { node: usize, min_eigenvalue: f64 },
    #[error("comparison precondition violated at node {node}: {what}")]
    PreconditionViolated { node: usize, what: String },
    #[error("right-hand side evaluated at t = {t} > 0")]
    PositiveArgument { t: f64 },
    #[error("right-hand side is not monotone: {0}")]
    NotMonotone(String),
    #[error("Newton line search stalled after {halvings} halvings (residual {residual:e})")]
    NewtonStalled { halvings: usize, residual: f64 },
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("monotone iteration decreased by {drop:e} at node {node} (iteration {iteration})")]
    MonotonicityViolated { iteration: usize, node: usize, drop: f64 },
    #[error("branch infeasible at lambda = {lambda}: {reason}")]
    BranchInfeasible { lambda: f64, reason: String },
    #[error("no blow-up before lambda cap {cap}; lambda1 >= {lower_bound}")]
    ScheduleExhausted { cap: f64, lower_bound: f64 },
    #[error("declared lambda0 = {lambda0} is not below the eigenvalue estimate {lambda1}")]
    EigenvalueBoundViolated { lambda0: f64, lambda1: f64 },
    #[error("initializations disagree: pairwise sup distance {distance:e} exceeds {limit:e}")]
    InitializationsDisagree { distance: f64, limit: f64 },
    #[error("Rayleigh quotient undefined: mass is zero")]
    ZeroMass,
    #[error("degenerate iterate: mass {mass:e} below threshold")]
    DegenerateIterate { mass: f64 },
    #[error("radial integration lost monotonicity (phi' = {derivative:e} at t = {t})")]
    VanishingGradient { t: f64, derivative: f64 },
    #[error("bisection bracket [{lo}, {hi}] does not enclose a sign change")]
    BracketFailed { lo: f64, hi: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("malformed binary data: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
