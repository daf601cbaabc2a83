use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("finite-difference step {h:e} is below the machine-epsilon scale {floor:e}")]
    StepUnderflow { h: f64, floor: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("singular Jacobian at ({x}, {y})")]
    SingularJacobian { x: f64, y: f64 },

    #[error("non-symmetric spectrum: trace {trace:e} exceeds tolerance")]
    NonSymmetricSpectrum { trace: f64 },

    #[error("complex eigenvalues at the equilibrium (discriminant {discriminant:e})")]
    ComplexEigenvalues { discriminant: f64 },

    #[error("orbit escapes the working box at t = {t}")]
    OrbitEscapes { t: f64 },

    #[error("return-matching residual {residual:e} above tolerance {tol:e}")]
    MatchResidual { residual: f64, tol: f64 },

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("degenerate frame: Wronskian vanishes near t = {t}")]
    DegenerateFrame { t: f64 },

    #[error("frame check failed: {0}")]
    FrameCheck(String),

    #[error("unbounded growth: dichotomy constant {k:e} exceeds guard {guard:e}")]
    UnboundedGrowth { k: f64, guard: f64 },

    #[error("decay assumption violated: {0}")]
    DecayViolated(String),

    #[error("residual check failed: {residual:e} > {tol:e}")]
    ResidualCheck { residual: f64, tol: f64 },

    #[error("fixed-point iteration is not contracting (ratio {ratio:.3})")]
    NonContraction { ratio: f64 },

    #[error("kappa_1 denominator F4,3 = {value:e} is below threshold")]
    KappaDenominator { value: f64 },

    #[error("Newton divergence: {0}")]
    NewtonDivergence(String),
}
