//! Uncertainty in the accident size: sampling, Monte Carlo statistics and
//! polynomial chaos.

pub mod convergence;
pub mod distribution;
pub mod monte_carlo;
pub mod pce;
pub mod quadrature;
pub mod stats;

pub use convergence::{
    collocation_expectation, convergence_study, fitted_rate, pce_convergence_study,
    pce_expectation, ConvergenceRow, ConvergenceStudy, Estimator, PceTarget,
};
pub use distribution::AccidentDistribution;
pub use monte_carlo::{monte_carlo, monte_carlo_at, run_at, sample_ys, UqModel};
pub use pce::{expectation_from_modes, PceMacro, PceMicro, PceModesMacro, PceModesMicro};
pub use quadrature::{gauss_legendre, legendre, legendre_phi, Quadrature};
pub use stats::{quantile_sorted, CellStats, StatSummary};
