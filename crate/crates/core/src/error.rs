//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Transition matrix has a row or column with no 1 entry.
    #[error("row or column {0} of the transition matrix is empty")]
    EmptyRowOrColumn(usize),

    /// Transition matrix is not irreducible; `(i, j)` is a witness pair
    /// with no admissible path from `i` to `j`.
    #[error("transition matrix is reducible: no path from {0} to {1}")]
    ReducibleMatrix(usize, usize),

    /// Matrix entries must be 0 or 1.
    #[error("transition matrix entry ({0},{1}) is not 0 or 1")]
    NonBinaryEntry(usize, usize),

    /// Alphabet size outside the supported range.
    #[error("alphabet size {0} outside supported range 2..={1}")]
    AlphabetSize(usize, usize),

    /// Cylinder depth beyond the dense-enumeration cap.
    #[error("depth {0} exceeds enumeration cap {1}")]
    DepthTooLarge(usize, usize),

    /// A word contains a forbidden transition or an out-of-range symbol.
    #[error("word is not admissible")]
    InadmissibleWord,

    /// A word is shorter than the depth required to evaluate on it.
    #[error("word of length {got} is shorter than required length {need}")]
    WordTooShort { need: usize, got: usize },

    /// A symbol stream ended before the requested number of steps.
    #[error("symbol stream exhausted: need {need} symbols, have {got}")]
    StreamExhausted { need: usize, got: usize },

    /// Potential value table does not match the admissible cylinders.
    #[error("potential values do not match the admissible {depth}-cylinders: {detail}")]
    BadPotentialTable { depth: usize, detail: String },

    /// A potential value is NaN or infinite.
    #[error("potential value for cylinder {0} is not finite")]
    NonFiniteValue(String),

    /// Jacobian potential must be strictly positive (uniform expansion).
    #[error("log-Jacobian value {value} at cylinder {cylinder} is not strictly positive")]
    NotExpanding { cylinder: String, value: f64 },

    /// Power iteration did not reach the residual target.
    #[error(
        "Perron solver did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    ConvergenceFailure { iterations: usize, residual: f64 },

    /// The fundamental-matrix linear system is numerically singular.
    #[error("fundamental-matrix system is numerically singular")]
    SingularSystem,

    /// Operation requires a zero-pressure potential.
    #[error("potential has pressure {pressure:.3e}, not zero within {tolerance:.1e}")]
    NotZeroPressure { pressure: f64, tolerance: f64 },

    /// Root bracket expansion hit the configured bound.
    #[error("temperature root bracketing failed on [{lo}, {hi}] for q = {q}")]
    BracketingFailure { q: f64, lo: f64, hi: f64 },

    /// Spectrum is a single point; slope residuals are undefined.
    #[error("degenerate spectrum: alpha is constant (variation {0:.3e})")]
    DegenerateSpectrum(f64),

    /// No Markov measure on the shift satisfies the requested ratio constraint.
    #[error("ratio constraint alpha = {alpha} is infeasible; attainable range [{lo}, {hi}]")]
    InfeasibleConstraint { alpha: f64, lo: f64, hi: f64 },

    /// Both periodic orbits have the same Birkhoff ratio.
    #[error("periodic orbits have equal Birkhoff ratios ({0})")]
    EqualRatios(f64),

    /// Two objects built over different shifts were combined.
    #[error("operands are defined over different shifts")]
    ShiftMismatch,

    /// A value violated a contract invariant (grid ordering, matrix
    /// stochasticity, curve monotonicity/convexity, schedule growth).
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
