//! Pathwise realization of the Poisson measure on the atoms, multiple
//! integrals as functions of the counts, difference operators and exact
//! expectations.

pub mod charlier;
pub mod config;
pub mod decompose;
pub mod expectation;
pub mod functional;
pub mod integral;
pub mod poincare;

pub use charlier::{charlier, poisson_pmf};
pub use config::{
    sample_config, sample_config_indexed, sample_configs, PointConfiguration, RNG_ALGORITHM,
};
pub use decompose::extract_kernels;
pub use expectation::{monte_carlo, Expectation, ExpectationEngine, McEstimate};
pub use functional::{
    add_one_cost, add_one_cost_chaos, iterated_difference, iterated_difference_chaos, Envelope,
    PathFunctional,
};
pub use integral::{eval_chaos, eval_integral, product_residual};
