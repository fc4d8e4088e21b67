//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong, from parsing an expression to aborting an
/// integration run.
#[derive(Debug, Error)]
pub enum Error {
    /// Expression text that does not match the grammar.
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// A symbol that is neither a chart coordinate, a declared parameter, nor
    /// a declared external function.
    #[error("unknown symbol `{name}`")]
    UnknownSymbol { name: String },

    /// Numeric evaluation hit a free symbol with no binding.
    #[error("no binding for symbol `{name}`")]
    UnboundSymbol { name: String },

    /// Numeric evaluation left the domain of a primitive.
    #[error("domain error: {message} in `{subexpression}`")]
    Domain {
        message: String,
        subexpression: String,
    },

    /// An external function binding cannot supply the requested derivative.
    #[error("external function `{name}` was asked for derivative order {requested} but supplies orders up to {available}")]
    ExternalOrder {
        name: String,
        requested: u32,
        available: u32,
    },

    /// Chart construction violated a structural invariant.
    #[error("invalid chart: {0}")]
    Chart(String),

    /// Two objects that must live on the same chart do not.
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    /// A wedge or exterior derivative would exceed the chart dimension.
    #[error("form degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    /// Contraction of a 0-form.
    #[error("interior product requires a form of degree >= 1")]
    ZeroDegreeContraction,

    /// Structure verification failed; the pair is not even precocontact.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// An operation that needs Darboux coordinates got something else.
    #[error("operation requires a Darboux momentum chart: {0}")]
    NonDarboux(String),

    /// A linear solve met a matrix that is singular where it must not be.
    #[error("singular linear system: {0}")]
    Singular(String),

    /// A degenerate structure was passed where a nondegenerate one is needed.
    #[error("{context}: structure is degenerate (class {class}); use the constraint machinery instead")]
    Degenerate { context: String, class: usize },

    /// Hessian rank changes across probe points.
    #[error("not admissible: non-constant rank ({0})")]
    NonConstantRank(String),

    /// Holonomic constraints whose configuration Jacobian loses rank.
    #[error("rank-deficient constraints: {0}")]
    RankDeficient(String),

    /// Constraints that depend on velocities are out of scope.
    #[error("constraint `{constraint}` depends on velocity `{coordinate}`; only configuration constraints are supported")]
    VelocityDependentConstraint {
        constraint: String,
        coordinate: String,
    },

    /// The constraint algorithm met an unknown coefficient nonlinearly.
    #[error("unknown coefficient `{unknown}` occurs nonlinearly in `{equation}`")]
    NonlinearUnknown { unknown: String, equation: String },

    /// The characteristic distribution is not spanned by coordinate directions.
    #[error("characteristic distribution is not coordinate-aligned: {0}")]
    KernelNotAligned(String),

    /// Residual and diagnostic stencils need a minimum number of samples.
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// Residual stencils need a uniform time grid.
    #[error("operation requires uniformly spaced samples")]
    NonUniformSamples,

    /// Integration stopped before the end of the span.
    #[error("integration aborted at t = {t}: {reason}")]
    IntegrationAbort { t: f64, reason: String },

    /// Adaptive stepping drove the step size below the representable floor.
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// Probe points claimed to lie on a submanifold do not.
    #[error("probe point does not satisfy the defining constraints: {0}")]
    InconsistentProbe(String),

    /// Configuration file problems, with a location when available.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem error while writing reports, CSV, or plot scripts.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI (0 success, 2 config, 3 inconsistent,
    /// 4 max stages, 5 integration abort). Derivation statuses are mapped by
    /// the CLI itself; everything user-input-shaped maps to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IntegrationAbort { .. } | Error::StepUnderflow { .. } => 5,
            _ => 2,
        }
    }
}
