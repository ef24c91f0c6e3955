use thiserror::Error;

/// Errors raised anywhere in the pricing stack.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid model parameters: {0}")]
    Params(String),

    #[error("exponent overflow: mu*t = {exponent} at horizon t = {horizon} exceeds the floating-point range")]
    Overflow { horizon: f64, exponent: f64 },

    #[error("Riccati denominator |Q4*Omega + Q5| = {modulus:e} is numerically singular at time-to-maturity {horizon}")]
    Singular { modulus: f64, horizon: f64 },

    #[error("numerical Riccati integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e} ({context})")]
    ImaginaryResidue {
        residue: f64,
        tolerance: f64,
        context: &'static str,
    },

    #[error("model consistency violated: {0}")]
    ModelConsistency(String),

    #[error("non-positive forward rate: bond-ratio exponent {exponent:e} <= 0, log-forward undefined")]
    NonPositiveForwardRate { exponent: f64 },

    #[error("Fourier contour requires Im(omega) > 0, got {omega_i}")]
    Contour { omega_i: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("Riccati singularity at Fourier node omega = {omega_r}{omega_i:+}i: {source}")]
    NodeSingular {
        omega_r: f64,
        omega_i: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("pricing consistency violated: forward price {price:e} outside [{lower:e}, {upper:e}]")]
    PricingConsistency { price: f64, lower: f64, upper: f64 },

    #[error("price {price:e} violates the {bound} no-arbitrage bound {value:e}")]
    ArbitrageBounds {
        price: f64,
        bound: Bound,
        value: f64,
    },

    #[error("implied-volatility search did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate diffusion: integrated variance {integral:e} is not positive")]
    DegenerateDiffusion { integral: f64 },

    #[error("non-finite {what} at t = {time}")]
    NonFinite { what: &'static str, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Which side of the `[intrinsic, forward]` price interval was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower (intrinsic)"),
            Bound::Upper => f.write_str("upper (forward)"),
        }
    }
}

impl Error {
    /// True for errors caused by the inputs rather than by a computation
    /// going wrong. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Params(_)
                | Error::Config(_)
                | Error::NonPositiveForwardRate { .. }
                | Error::Contour { .. }
                | Error::ArbitrageBounds { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
