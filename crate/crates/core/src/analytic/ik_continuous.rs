//! Finite-time survival probability for continuous claims as a truncated
//! series over claim counts, each term a nested integral over ordered
//! cumulative claim levels. Intended as a small-scale verification oracle:
//! the cost grows as quadrature-points^K.

use super::ik_discrete::IkError;
use super::quad::gauss_legendre;
use crate::model::{ClaimDistribution, RiskModel};

#[derive(Debug, Clone, Copy)]
pub struct IkContinuousOptions {
    /// Number of series terms; `None` picks the smallest K whose Poisson
    /// tail bound is at most `tail_target`.
    pub series_terms: Option<usize>,
    /// Refuse runs needing more terms than this.
    pub max_terms: usize,
    /// Gauss-Legendre points per smooth segment and dimension.
    pub points_per_dim: usize,
    pub tail_target: f64,
}

impl Default for IkContinuousOptions {
    fn default() -> Self {
        Self { series_terms: None, max_terms: 6, points_per_dim: 8, tail_target: 1e-6 }
    }
}

/// Truncated series value with its one-sided truncation bound: the true
/// survival probability lies in `[value, value + tail_bound]` up to
/// quadrature error.
#[derive(Debug, Clone)]
pub struct IkSeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    /// Individual series terms, term k at index k-1.
    pub terms: Vec<f64>,
}

/// Poisson tail mass `P(N > k)` for mean `m`, clamped to [0, 1].
fn poisson_tail(m: f64, k: usize) -> f64 {
    let mut term = (-m).exp();
    let mut cdf = term;
    for i in 1..=k {
        term *= m / i as f64;
        cdf += term;
    }
    (1.0 - cdf).clamp(0.0, 1.0)
}

/// Finite-time survival probability for continuous claim densities.
///
/// Each series term k integrates, over ordered levels
/// `0 <= y_1 <= ... <= y_k <= u + c*t`, the pinned-root polynomial family
/// evaluated at the first-feasible-crossing times `max(0, (y - u) / c)`
/// against the product density of claim increments. Terms are nonnegative
/// and bounded by the Poisson count probabilities, which gives the
/// truncation bound.
pub fn survival_finite_continuous_ik(
    model: &RiskModel,
    u: f64,
    t: f64,
    opts: &IkContinuousOptions,
) -> Result<IkSeriesValue, IkError> {
    match model.claims {
        ClaimDistribution::Exponential { .. } | ClaimDistribution::Pareto { .. } => {}
        _ => {
            return Err(IkError::UnsupportedClaims(
                "continuous series needs a claim density".into(),
            ))
        }
    }
    if !(u >= 0.0 && t >= 0.0) {
        return Err(IkError::Invalid(format!("need u >= 0 and t >= 0, got {u}, {t}")));
    }
    let c = model.premium_rate;
    let level_cap = u + c * t;
    if !level_cap.is_finite() {
        return Err(IkError::Invalid("u + c*t must be finite".into()));
    }
    let mean_count = model.lambda * t;

    let k_terms = match opts.series_terms {
        Some(k) => {
            if k < 1 {
                return Err(IkError::Invalid("series needs at least one term".into()));
            }
            if k > opts.max_terms {
                return Err(IkError::SeriesTooLong { needed: k, max: opts.max_terms });
            }
            k
        }
        None => {
            let mut k = 1;
            while poisson_tail(mean_count, k) > opts.tail_target {
                k += 1;
                if k > opts.max_terms {
                    return Err(IkError::SeriesTooLong { needed: k, max: opts.max_terms });
                }
            }
            k
        }
    };

    let (nodes, weights) = gauss_legendre(opts.points_per_dim);
    let (scale, increment_cutoff) = match model.claims {
        ClaimDistribution::Exponential { rate } => (1.0 / rate, -(1e-12f64).ln() / rate),
        ClaimDistribution::Pareto { scale, shape } => {
            (scale, scale * ((1e-12f64).powf(-1.0 / shape) - 1.0))
        }
        _ => unreachable!("claim kinds checked above"),
    };
    let mut ctx = TermContext {
        model,
        u,
        t,
        level_cap,
        increment_cutoff,
        panel_width: 2.0 * scale,
        nodes: &nodes,
        weights: &weights,
        // Appell coefficient stack: level j holds the degree-j member for
        // the roots fixed so far.
        coeff_stack: vec![vec![1.0]],
        roots: Vec::new(),
    };

    let mut terms = Vec::with_capacity(k_terms);
    let mut total = (-mean_count).exp();
    let mut lambda_pow = 1.0;
    for k in 1..=k_terms {
        lambda_pow *= model.lambda;
        let integral = ctx.integrate_level(k, 0.0, 1.0);
        let term = (-mean_count).exp() * lambda_pow * integral;
        terms.push(term);
        total += term;
    }

    Ok(IkSeriesValue {
        value: total,
        tail_bound: poisson_tail(mean_count, k_terms),
        terms,
    })
}

struct TermContext<'a> {
    model: &'a RiskModel,
    u: f64,
    t: f64,
    level_cap: f64,
    /// Increment beyond which the claim density tail is negligible; bounds
    /// the per-dimension range so panels stay at the density's scale.
    increment_cutoff: f64,
    panel_width: f64,
    nodes: &'a [f64],
    weights: &'a [f64],
    coeff_stack: Vec<Vec<f64>>,
    roots: Vec<f64>,
}

impl TermContext<'_> {
    fn nu(&self, y: f64) -> f64 {
        let excess = y - self.u;
        if excess <= 0.0 {
            0.0
        } else if self.model.premium_rate == 0.0 {
            f64::INFINITY
        } else {
            excess / self.model.premium_rate
        }
    }

    /// Push the antiderivative of the top coefficient vector, pinned to
    /// vanish at `root`.
    fn push_root(&mut self, root: f64) {
        let top = self.coeff_stack.last().unwrap();
        let mut next = Vec::with_capacity(top.len() + 1);
        next.push(0.0);
        next.extend(top.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        let at_root = next.iter().rev().fold(0.0, |acc, c| acc * root + c);
        next[0] = -at_root;
        self.coeff_stack.push(next);
        self.roots.push(root);
    }

    fn pop_root(&mut self) {
        self.coeff_stack.pop();
        self.roots.pop();
    }

    /// Integrate the current dimension over `y_prev <= y <= level_cap`.
    /// The range is split at the capital `u` (kink of the crossing-time
    /// map), truncated at the density cutoff, and subdivided into panels no
    /// wider than the claim scale so the Gauss rule sees smooth pieces.
    fn integrate_level(&mut self, remaining: usize, y_prev: f64, density_so_far: f64) -> f64 {
        let hi_cap = self.level_cap.min(y_prev + self.increment_cutoff);
        let kink = self.u.clamp(y_prev, hi_cap);
        let mut total = 0.0;
        for (seg_lo, seg_hi) in [(y_prev, kink), (kink, hi_cap)] {
            if seg_hi - seg_lo <= 0.0 {
                continue;
            }
            let n_panels = ((seg_hi - seg_lo) / self.panel_width).ceil().max(1.0) as usize;
            let step = (seg_hi - seg_lo) / n_panels as f64;
            for p in 0..n_panels {
                let lo = seg_lo + p as f64 * step;
                let half = 0.5 * step;
                let mid = lo + half;
                for (node, w) in self.nodes.iter().zip(self.weights) {
                    let y = mid + half * node;
                    let Some(f) = self.model.claims.density(y - y_prev) else { return 0.0 };
                    let density = density_so_far * f;
                    if density == 0.0 {
                        continue;
                    }
                    self.push_root(self.nu(y));
                    let inner = if remaining == 1 {
                        let coeffs = self.coeff_stack.last().unwrap();
                        coeffs.iter().rev().fold(0.0, |acc, c| acc * self.t + c) * density
                    } else {
                        self.integrate_level(remaining - 1, y, density)
                    };
                    self.pop_root();
                    total += w * half * inner;
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClaimDistribution;

    fn exp_model(rho: f64, lambda: f64, c: f64) -> RiskModel {
        RiskModel::new(ClaimDistribution::Exponential { rate: rho }, lambda, c, 1.0, 0.0).unwrap()
    }

    #[test]
    fn vanishing_claim_mass_gives_survival_one() {
        let m = exp_model(1.0, 1e-6, 1.5);
        let v = survival_finite_continuous_ik(&m, 2.0, 1.0, &IkContinuousOptions::default())
            .unwrap();
        assert!(v.value > 1.0 - 1e-5, "got {}", v.value);
        assert!(v.tail_bound < 1e-6);
    }

    #[test]
    fn unreachable_threshold_gives_survival_near_one() {
        // Claims of mean 1 at rate 1 over t=1 cannot plausibly breach u=80,
        // so the truncated series recovers the whole retained Poisson mass.
        let m = exp_model(1.0, 1.0, 1.5);
        let opts = IkContinuousOptions { series_terms: Some(2), ..Default::default() };
        let v = survival_finite_continuous_ik(&m, 80.0, 1.0, &opts).unwrap();
        assert!(v.value >= 1.0 - v.tail_bound - 1e-6, "value {} tail {}", v.value, v.tail_bound);
        assert!(v.value <= 1.0 + 1e-9);
    }

    #[test]
    fn first_term_matches_closed_form_for_exponential() {
        // One-claim term: lambda * int_0^{u+ct} (t - nu(y)) rho e^{-rho y} dy.
        let (rho, lambda, c, u, t) = (1.0_f64, 1.0_f64, 1.5_f64, 2.0_f64, 1.0_f64);
        let m = exp_model(rho, lambda, c);
        let opts = IkContinuousOptions { series_terms: Some(3), points_per_dim: 24, ..Default::default() };
        let v = survival_finite_continuous_ik(&m, u, t, &opts).unwrap();
        let l = c * t;
        let closed = lambda
            * (t * (1.0 - (-rho * u).exp())
                + (-rho * u).exp()
                    * (t * (1.0 - (-rho * l).exp())
                        - (1.0 / (c * rho)) * (1.0 - (-rho * l).exp() * (1.0 + rho * l))));
        let term1 = v.terms[0] / (-lambda * t).exp();
        assert!((term1 - closed).abs() < 1e-10, "term1 {term1} closed {closed}");
    }

    #[test]
    fn explicit_term_count_is_capped() {
        let m = exp_model(1.0, 1.0, 1.5);
        let opts = IkContinuousOptions { series_terms: Some(9), ..Default::default() };
        assert!(matches!(
            survival_finite_continuous_ik(&m, 1.0, 1.0, &opts),
            Err(IkError::SeriesTooLong { needed: 9, max: 6 })
        ));
        // Auto selection rejects horizons whose Poisson tail needs too many
        // terms.
        let busy = exp_model(1.0, 30.0, 1.5);
        assert!(matches!(
            survival_finite_continuous_ik(&busy, 1.0, 1.0, &IkContinuousOptions::default()),
            Err(IkError::SeriesTooLong { .. })
        ));
    }

    #[test]
    fn degenerate_claims_are_rejected() {
        let m = RiskModel::new(ClaimDistribution::Degenerate { point: 1.0 }, 1.0, 1.0, 1.0, 0.0)
            .unwrap();
        assert!(matches!(
            survival_finite_continuous_ik(&m, 1.0, 1.0, &IkContinuousOptions::default()),
            Err(IkError::UnsupportedClaims(_))
        ));
    }
}
