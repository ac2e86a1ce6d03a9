//! Closed-form and semi-analytic ruin/survival probabilities: the oracle
//! layer that validates the Monte Carlo engine.

mod exponential;
mod ik_continuous;
mod ik_discrete;
mod poly;
mod quad;

pub use exponential::{
    psi_finite_exponential, psi_finite_exponential_model, psi_ultimate_exponential, AnalyticError,
};
pub use ik_continuous::{survival_finite_continuous_ik, IkContinuousOptions, IkSeriesValue};
pub use ik_discrete::{b_coefficient_sequence, survival_finite_discrete_ik, IkError};
pub use poly::{appell_eval, appell_sequence, Polynomial};
pub use quad::{
    adaptive_simpson, gauss_legendre, QuadratureError, QuadratureSpec, QuadratureValue,
};
