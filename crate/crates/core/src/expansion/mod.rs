//! Second-order implied volatility expansion.

pub mod coeffs;
pub mod hermite;
pub mod integrals;
pub mod sigma;

pub use coeffs::{Coefficient, ConstantDiffusion, GeneratorCoefficients, QouCoefficients, Taylor2, TaylorSet};
pub use hermite::{hermite_argument, hermite_poly, scaled_hermite};
pub use integrals::{IntegralTable, DEFAULT_GRID};
pub use sigma::{ivol_approx, sigma0, sigma1, sigma2, IvApprox, IvExpansion};
