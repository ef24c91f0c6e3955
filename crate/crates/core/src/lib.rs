//! Caplet pricing under the quadratic Ornstein-Uhlenbeck short-rate model.
//!
//! Exact prices come from Fourier inversion of the closed-form
//! exponential-quadratic transform; approximate prices from an explicit
//! second-order implied-volatility expansion. A Monte Carlo engine serves
//! as an independent check of both.
//!
//! Numerical code is generic over [`scalar::Real`]; the aliases below fix
//! it to `f64`.

pub mod black;
pub mod bond;
pub mod error;
pub mod expansion;
pub mod experiments;
pub mod fourier;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod riccati;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use fourier::{FourierPricer, QuadratureConfig};
pub use expansion::{IvApprox, IvExpansion};
pub use mc::{McConfig, McEstimate};
pub use model::{ContractSpec, QouParams, TerminalData};
pub use scalar::Real;

pub type Params = QouParams<f64>;
pub type Contract = ContractSpec<f64>;
