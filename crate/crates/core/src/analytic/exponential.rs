//! Closed-form ruin probabilities for exponential claim severities.

use thiserror::Error;

use super::quad::{adaptive_simpson, QuadratureError, QuadratureSpec, QuadratureValue};

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("formula requires a positive loading factor, got {theta}")]
    RequiresPositiveLoading { theta: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Ultimate ruin probability for exponential claims with rate `rho` under a
/// positive loading factor `theta`:
/// `psi(u) = exp(-rho*theta*u/(1+theta)) / (1+theta)`.
pub fn psi_ultimate_exponential(rho: f64, theta: f64, u: f64) -> Result<f64, AnalyticError> {
    if !(rho > 0.0) || !(u >= 0.0) {
        return Err(AnalyticError::Invalid(format!("need rho > 0 and u >= 0, got {rho}, {u}")));
    }
    if !(theta > 0.0) {
        return Err(AnalyticError::RequiresPositiveLoading { theta });
    }
    Ok((-rho * theta * u / (1.0 + theta)).exp() / (1.0 + theta))
}

/// Finite-horizon ruin probability for exponential claims, as the ultimate
/// probability minus an oscillatory correction integral over (0, pi).
///
/// The time argument is measured in the unit-premium normalization: the
/// formula is exact for the model with claim rate `rho`, premium rate 1 and
/// claim intensity `rho / (1 + theta)`. For a general model with premium
/// rate c, evaluate at `c * t`; see [`psi_finite_exponential_model`].
pub fn psi_finite_exponential(
    rho: f64,
    theta: f64,
    u: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<QuadratureValue, AnalyticError> {
    if !(t >= 0.0) {
        return Err(AnalyticError::Invalid(format!("need t >= 0, got {t}")));
    }
    let ultimate = psi_ultimate_exponential(rho, theta, u)?;
    let sqrt1t = (1.0 + theta).sqrt();
    let kernel = |x: f64| {
        let f = ((rho * (u + 2.0 * t) / sqrt1t) * x.cos()
            - rho * (u + (2.0 + theta) / (1.0 + theta) * t))
            .exp()
            / (1.0 + theta);
        let phase = rho * u / sqrt1t * x.sin();
        let g = phase.cos() - (phase + 2.0 * x).cos();
        let h = (2.0 + theta) / (1.0 + theta) - 2.0 * x.cos() / sqrt1t;
        f * g / h
    };
    let integral = adaptive_simpson(kernel, 0.0, std::f64::consts::PI, quad)?;
    let raw = ultimate - integral.value / std::f64::consts::PI;
    let err = integral.error_estimate / std::f64::consts::PI;
    // Clamp only within quadrature tolerance of the boundary.
    let value = if raw < 0.0 && raw >= -(err + quad.abs_tol) {
        0.0
    } else if raw > 1.0 && raw <= 1.0 + err + quad.abs_tol {
        1.0
    } else {
        raw
    };
    Ok(QuadratureValue { value, error_estimate: err })
}

/// Finite-horizon ruin probability for a model with premium rate `c` and
/// exponential claims: rescales time into the unit-premium normalization.
pub fn psi_finite_exponential_model(
    rho: f64,
    lambda: f64,
    c: f64,
    u: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<QuadratureValue, AnalyticError> {
    if !(c > 0.0) || !(lambda > 0.0) {
        return Err(AnalyticError::Invalid(format!("need c > 0 and lambda > 0, got {c}, {lambda}")));
    }
    let theta = c * rho / lambda - 1.0;
    psi_finite_exponential(rho, theta, u, c * t, quad)
}
