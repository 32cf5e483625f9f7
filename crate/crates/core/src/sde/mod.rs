//! Additive-noise SDEs `dX = b(t, X) dt + σ dW` solved through the flow
//! `X = Y + σW`, which turns the equation into the pathwise random ODE
//! `Y' = b(t, Y + σW_t)`.

mod oracle;
mod solvers;
mod model;

pub use oracle::{fou_oracle, fou_variance, sde_mc_stats, CheckpointOracle, CheckpointReport, FOU_ORACLE_CELLS};
pub use solvers::{
    solve, solve_direct_euler, solve_flow_transform, solve_picard, solve_picard_with, Method, PicardInfo,
    PicardOptions, SolverChoice, SolverResult, Stepper,
};
pub use model::{ConstantViolation, Drift, SdeSpec};
