//! Finite-time survival probability for integer-valued claims via the
//! staircase-avoidance series: an exhaustive sum over claim-size
//! compositions weighted by Poisson arrival-geometry coefficients.

use thiserror::Error;

use crate::model::{RiskModel, Support};

#[derive(Debug, Error)]
pub enum IkError {
    #[error("claim law is not supported here: {0}")]
    UnsupportedClaims(String),
    #[error("capital-plus-premium bound {n} exceeds the composition cap {max}; the enumeration would explode")]
    BoundTooLarge { n: usize, max: usize },
    #[error("series needs {needed} terms for the requested tail bound but the cap is {max}")]
    SeriesTooLong { needed: usize, max: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

const FACTORIALS: [f64; 21] = {
    let mut f = [1.0; 21];
    let mut i = 1;
    while i < 21 {
        f[i] = f[i - 1] * i as f64;
        i += 1;
    }
    f
};

fn factorial(n: usize) -> f64 {
    if n < FACTORIALS.len() {
        FACTORIALS[n]
    } else {
        (1..=n).map(|i| i as f64).product()
    }
}

/// The coefficient family `b_0 = 1`, `b_1(z) = z`, and for j >= 2
/// `b_j(z_1..z_j) = sum_{i=0}^{j-1} (-1)^{j+i+1} / (j-i)! * z_j^{j-i} * b_i`.
/// Returns `b_0..b_j` for the given argument prefix.
pub fn b_coefficient_sequence(z: &[f64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(z.len() + 1);
    b.push(1.0);
    for j in 1..=z.len() {
        b.push(next_b(&b, z[j - 1]));
    }
    b
}

/// Extend `b_0..b_{j-1}` by `b_j` given `z_j`.
fn next_b(b: &[f64], z_j: f64) -> f64 {
    let j = b.len();
    let mut acc = 0.0;
    for (i, bi) in b.iter().enumerate() {
        let sign = if (j + i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign / factorial(j - i) * z_j.powi((j - i) as i32) * bi;
    }
    acc
}

/// Finite-time survival probability for a model with integer-valued claims.
///
/// Enumerates claim-size compositions `(x_1, ..., x_{k-1})` with partial
/// sums at most `n - 1`, where `n = floor(1 + u + c*t)` caps the total claim
/// amount reachable before ruin. Rejects `n > max_bound` since the
/// composition count grows exponentially in `n` for laws with wide support.
pub fn survival_finite_discrete_ik(
    model: &RiskModel,
    u: f64,
    t: f64,
    max_bound: usize,
) -> Result<f64, IkError> {
    if model.claims.support() != Support::Integer {
        return Err(IkError::UnsupportedClaims(
            "finite-time discrete survival needs integer-valued claims".into(),
        ));
    }
    if !(u >= 0.0 && t >= 0.0) {
        return Err(IkError::Invalid(format!("need u >= 0 and t >= 0, got {u}, {t}")));
    }
    let c = model.premium_rate;
    let lambda = model.lambda;
    let bound = 1.0 + u + c * t;
    if !bound.is_finite() {
        return Err(IkError::Invalid("u + c*t must be finite".into()));
    }
    let n = bound.floor() as usize;
    if n > max_bound {
        return Err(IkError::BoundTooLarge { n, max: max_bound });
    }

    // Partial sums of the Poisson weight (lambda*t)^m / m! for m = 0..n-1.
    let mut pois = Vec::with_capacity(n);
    let mut term = 1.0;
    let mut acc = 0.0;
    for m in 0..n {
        if m > 0 {
            term *= lambda * t / m as f64;
        }
        acc += term;
        pois.push(acc);
    }

    // Claim values with positive mass, capped at the largest usable size.
    let value_cap = (n.saturating_sub(1)) as u64;
    let support_max = model.claims.integer_support_max().unwrap_or(value_cap).min(value_cap);
    let values: Vec<(u64, f64)> = (1..=support_max)
        .filter_map(|i| {
            let p = model.claims.pmf(i).unwrap_or(0.0);
            (p > 0.0).then_some((i, p))
        })
        .collect();

    let nu = move |claims_total: u64| -> f64 {
        let excess = claims_total as f64 - u;
        if excess <= 0.0 {
            0.0
        } else {
            // c = 0 cannot reach here: totals are capped at n-1 <= u.
            excess / c
        }
    };

    let mut dfs = Dfs {
        lambda,
        n,
        pois: &pois,
        values: &values,
        model,
        b: vec![1.0],
        sum: 0.0,
        compensation: 0.0,
    };
    dfs.visit(0, 1.0, &nu);
    Ok((-lambda * t).exp() * dfs.sum)
}

struct Dfs<'a> {
    lambda: f64,
    n: usize,
    pois: &'a [f64],
    values: &'a [(u64, f64)],
    model: &'a RiskModel,
    b: Vec<f64>,
    sum: f64,
    compensation: f64,
}

impl Dfs<'_> {
    fn add(&mut self, x: f64) {
        // Kahan update keeps the long alternating sum stable.
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    fn visit(&mut self, prefix_sum: u64, weight: f64, nu: &impl Fn(u64) -> f64) {
        let depth = self.b.len() - 1; // claims fixed so far = k - 1
        let sf = self
            .model
            .claims
            .integer_sf(self.n as i64 - prefix_sum as i64)
            .unwrap_or(0.0);
        if sf > 0.0 {
            let mut coeff = 0.0;
            let mut lam_pow = 1.0;
            for j in 0..=depth {
                coeff += lam_pow * self.b[j] * self.pois[depth - j];
                lam_pow *= -self.lambda;
            }
            self.add(weight * sf * coeff);
        }
        for &(x, p) in self.values {
            let total = prefix_sum + x;
            if total > (self.n - 1) as u64 {
                break;
            }
            self.b.push(next_b(&self.b, nu(total)));
            self.visit(total, weight * p, nu);
            self.b.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClaimDistribution;

    fn unit_claims(lambda: f64, c: f64, u: f64) -> RiskModel {
        RiskModel::new(ClaimDistribution::Degenerate { point: 1.0 }, lambda, c, u, 0.0).unwrap()
    }

    #[test]
    fn b_base_cases_and_hand_expansion() {
        assert_eq!(b_coefficient_sequence(&[]), vec![1.0]);
        let b = b_coefficient_sequence(&[3.5]);
        assert_eq!(b, vec![1.0, 3.5]);
        // b_2(z1, z2) = z1*z2 - z2^2/2.
        let b = b_coefficient_sequence(&[1.5, 2.0]);
        assert_eq!(b[2], 1.5 * 2.0 - 2.0 * 2.0 / 2.0);
    }

    #[test]
    fn survival_at_time_zero_is_one() {
        let m = RiskModel::new(
            ClaimDistribution::Logarithmic { param: 0.95 },
            30.0,
            25.0,
            3.0,
            0.0,
        )
        .unwrap();
        let v = survival_finite_discrete_ik(&m, 3.0, 0.0, 40).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn unit_claim_case_matches_poisson_count_argument() {
        // With unit claims, c=1, u=1: ruin by t=1 requires a second claim
        // before the premium catches up, so survival = P(at most one
        // arrival) = 2/e.
        let m = unit_claims(1.0, 1.0, 1.0);
        let v = survival_finite_discrete_ik(&m, 1.0, 1.0, 40).unwrap();
        assert!((v - 2.0 / std::f64::consts::E).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn tabulated_point_mass_equals_degenerate_exactly() {
        let deg = RiskModel::new(ClaimDistribution::Degenerate { point: 2.0 }, 1.3, 1.7, 2.5, 0.0)
            .unwrap();
        let tab = RiskModel::new(
            ClaimDistribution::TabulatedDiscrete { pmf: vec![0.0, 1.0] },
            1.3,
            1.7,
            2.5,
            0.0,
        )
        .unwrap();
        for t in [0.4, 1.0, 2.3] {
            let a = survival_finite_discrete_ik(&deg, 2.5, t, 40).unwrap();
            let b = survival_finite_discrete_ik(&tab, 2.5, t, 40).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn monotone_in_time_and_capital_and_bounded() {
        let m = RiskModel::new(
            ClaimDistribution::Logarithmic { param: 0.6 },
            2.0,
            3.0,
            1.0,
            0.0,
        )
        .unwrap();
        let mut prev = 1.0 + 1e-12;
        for i in 0..6 {
            let t = i as f64 * 0.4;
            let v = survival_finite_discrete_ik(&m, 1.0, t, 40).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-9, "survival should fall with t");
            prev = v;
        }
        let lo = survival_finite_discrete_ik(&m, 1.0, 1.0, 40).unwrap();
        let hi = survival_finite_discrete_ik(&m, 4.0, 1.0, 40).unwrap();
        assert!(hi >= lo);
    }

    #[test]
    fn rejects_exploding_bound_and_wrong_support() {
        let m = unit_claims(1.0, 1.0, 100.0);
        assert!(matches!(
            survival_finite_discrete_ik(&m, 100.0, 1.0, 40),
            Err(IkError::BoundTooLarge { .. })
        ));
        let cont =
            RiskModel::new(ClaimDistribution::Exponential { rate: 1.0 }, 1.0, 1.0, 1.0, 0.0)
                .unwrap();
        assert!(matches!(
            survival_finite_discrete_ik(&cont, 1.0, 1.0, 40),
            Err(IkError::UnsupportedClaims(_))
        ));
    }
}
