//! Fractional Brownian motion toolkit for `H > 1/2` stochastic calculus.
//!
//! * [`fbm`]: exact path samplers (Cholesky, circulant embedding, Hosking) and
//!   covariance estimation.
//! * [`phi`]: closed-form phi-kernel integrals and the `⟨·,·⟩_φ` inner product
//!   on step functions.
//! * [`wick`]: Wick–Riemann sums, phi-derivatives of cylinder functionals and
//!   the exponential functional.
//! * [`ito`]: pathwise residuals and Monte Carlo checks of the Itô, product-rule,
//!   Itô–Wentzell and Girsanov identities.
//! * [`sde`]: additive-noise SDE solvers built on the flow transform
//!   `Y = X − σW`.

pub mod error;
pub mod fbm;
pub mod ito;
pub mod phi;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod wick;

pub use error::{Error, Result};
