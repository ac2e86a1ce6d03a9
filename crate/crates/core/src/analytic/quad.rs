//! Numerical integration: adaptive Simpson on an interval and fixed
//! Gauss-Legendre rules for the nested series integrals.

use thiserror::Error;

/// Policy for adaptive Simpson integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_depth: 40 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureValue {
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: partial value {partial}, error estimate {error_estimate}")]
    NotConverged { partial: f64, error_estimate: f64 },
}

/// Adaptive Simpson with the Lyness acceptance test. On failure the partial
/// value and its error estimate are reported rather than silently returned.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureValue, QuadratureError> {
    if a == b {
        return Ok(QuadratureValue { value: 0.0, error_estimate: 0.0 });
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err_acc = 0.0;
    let mut converged = true;
    let value = recurse(
        &f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        spec.abs_tol,
        spec.max_depth,
        &mut err_acc,
        &mut converged,
    );
    if converged {
        Ok(QuadratureValue { value, error_estimate: err_acc })
    } else {
        Err(QuadratureError::NotConverged { partial: value, error_estimate: err_acc })
    }
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err_acc: &mut f64,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || !delta.is_finite() {
        if !delta.is_finite() {
            *converged = false;
        }
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err_acc, converged)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err_acc, converged)
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
