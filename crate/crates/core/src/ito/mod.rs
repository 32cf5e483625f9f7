//! Numerical verification of the Itô formula, the product rule, the
//! Itô–Wentzell formula and the Girsanov-type shift identity.

mod convergence;
mod functions;
mod montecarlo;
mod residual;
mod wentzell;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, ResidualOp};
pub use functions::{Coefficient, DriftDiffusion, SpaceTimeFn};
pub use montecarlo::{
    expectation_identity_check, expectation_identity_rhs, girsanov_check, girsanov_shift, identity_by_name,
    residual_expectation, residuals, rms, IDENTITY_REGISTRY,
};
pub use residual::{
    ito_residual_path, product_rule_residual, wentzell_closed_form, wentzell_residual, Integrand, ItoCase,
    PreparedIto, PreparedProduct, PreparedWentzell, Residual,
};
pub use wentzell::{Hypothesis, HypothesisStatus, WentzellCase};
