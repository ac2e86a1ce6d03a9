//! Claim-severity laws, compound-Poisson risk model parameters, and
//! deterministic capital-level schedules.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("tabulated pmf must sum to 1 within 1e-12, got {sum}")]
    PmfNotNormalized { sum: f64 },
    #[error("model index {index} out of range for schedule with {alarms} events")]
    IndexOutOfRange { index: usize, alarms: usize },
    #[error("injection times must be strictly increasing and positive")]
    BadInjectionTimes,
    #[error("injection amounts must be nonnegative")]
    NegativeInjection,
    #[error("{0}")]
    Invalid(String),
}

/// Claim-severity law. Continuous kinds carry a density; integer kinds a pmf
/// over the positive integers.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimDistribution {
    /// Density `rate * exp(-rate * x)`, x > 0.
    Exponential { rate: f64 },
    /// Density `shape * scale^shape / (scale + x)^(shape + 1)`, x > 0.
    /// The mean is `scale / (shape - 1)` for shape > 1 and infinite otherwise.
    Pareto { scale: f64, shape: f64 },
    /// Pmf `-param^i / (i * ln(1 - param))`, i = 1, 2, ...
    Logarithmic { param: f64 },
    /// Point mass at `point` > 0.
    Degenerate { point: f64 },
    /// Pmf over 1..=n given as `pmf[i-1] = P(X = i)`; must sum to 1.
    TabulatedDiscrete { pmf: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Continuous,
    Integer,
}

impl ClaimDistribution {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "exponential rate must be > 0, got {rate}"
                    )));
                }
            }
            Self::Pareto { scale, shape } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "pareto scale must be > 0, got {scale}"
                    )));
                }
                if !(shape.is_finite() && *shape > 0.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "pareto shape must be > 0, got {shape}"
                    )));
                }
            }
            Self::Logarithmic { param } => {
                if !(param.is_finite() && *param > 0.0 && *param < 1.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "logarithmic parameter must lie in (0,1), got {param}"
                    )));
                }
            }
            Self::Degenerate { point } => {
                if !(point.is_finite() && *point > 0.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "degenerate point mass must be > 0, got {point}"
                    )));
                }
            }
            Self::TabulatedDiscrete { pmf } => {
                if pmf.is_empty() {
                    return Err(ModelError::InvalidParameter("empty pmf".into()));
                }
                if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(ModelError::InvalidParameter(
                        "pmf entries must be finite and nonnegative".into(),
                    ));
                }
                let sum: f64 = pmf.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(ModelError::PmfNotNormalized { sum });
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> Support {
        match self {
            Self::Exponential { .. } | Self::Pareto { .. } => Support::Continuous,
            Self::Logarithmic { .. } | Self::TabulatedDiscrete { .. } => Support::Integer,
            Self::Degenerate { point } => {
                if point.fract() == 0.0 {
                    Support::Integer
                } else {
                    Support::Continuous
                }
            }
        }
    }

    /// Analytic mean; `f64::INFINITY` exactly when the Pareto shape is <= 1.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Pareto { scale, shape } => {
                if *shape <= 1.0 {
                    f64::INFINITY
                } else {
                    scale / (shape - 1.0)
                }
            }
            Self::Logarithmic { param } => {
                -param / ((1.0 - param) * (1.0 - param).ln())
            }
            Self::Degenerate { point } => *point,
            Self::TabulatedDiscrete { pmf } => pmf
                .iter()
                .enumerate()
                .map(|(i, p)| (i + 1) as f64 * p)
                .sum(),
        }
    }

    /// Density for continuous kinds; `None` for integer-valued laws.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Exponential { rate } => {
                Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() })
            }
            Self::Pareto { scale, shape } => Some(if x < 0.0 {
                0.0
            } else {
                shape * scale.powf(*shape) / (scale + x).powf(shape + 1.0)
            }),
            _ => None,
        }
    }

    /// Pmf at the positive integer `i` for integer-valued laws.
    pub fn pmf(&self, i: u64) -> Option<f64> {
        if i == 0 {
            return match self.support() {
                Support::Integer => Some(0.0),
                Support::Continuous => None,
            };
        }
        match self {
            Self::Logarithmic { param } => {
                Some(-param.powi(i as i32) / (i as f64 * (1.0 - param).ln()))
            }
            Self::Degenerate { point } if point.fract() == 0.0 => {
                Some(if *point == i as f64 { 1.0 } else { 0.0 })
            }
            Self::TabulatedDiscrete { pmf } => Some(*pmf.get(i as usize - 1).unwrap_or(&0.0)),
            _ => None,
        }
    }

    /// Survivor function `P(X >= m)` for integer-valued laws.
    /// Computed by suffix summation so a tabulated point mass reproduces the
    /// degenerate law exactly.
    pub fn integer_sf(&self, m: i64) -> Option<f64> {
        if self.support() != Support::Integer {
            return None;
        }
        if m <= 1 {
            return Some(1.0);
        }
        let m = m as u64;
        match self {
            Self::Degenerate { point } => Some(if *point >= m as f64 { 1.0 } else { 0.0 }),
            Self::TabulatedDiscrete { pmf } => {
                let start = (m as usize).saturating_sub(1);
                Some(pmf.get(start..).map_or(0.0, |s| s.iter().rev().sum()))
            }
            Self::Logarithmic { param } => {
                // Tail sums of the log-series pmf converge geometrically.
                let ln_term = (1.0 - param).ln();
                let mut sf = 0.0;
                let mut pw = param.powi(m as i32);
                let mut i = m;
                loop {
                    let p = -pw / (i as f64 * ln_term);
                    sf += p;
                    if p < 1e-16 * (1.0 + sf) {
                        break;
                    }
                    pw *= param;
                    i += 1;
                }
                Some(sf)
            }
            _ => None,
        }
    }

    /// Largest integer with positive pmf, if the support is bounded.
    pub fn integer_support_max(&self) -> Option<u64> {
        match self {
            Self::Degenerate { point } if point.fract() == 0.0 => Some(*point as u64),
            Self::TabulatedDiscrete { pmf } => {
                pmf.iter().rposition(|p| *p > 0.0).map(|i| i as u64 + 1)
            }
            _ => None,
        }
    }
}

/// Compound-Poisson net-outgo model: claims arrive at Poisson rate `lambda`,
/// premiums accrue linearly at `premium_rate`, and ruin means the surplus
/// dropping below `ruin_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    pub claims: ClaimDistribution,
    pub lambda: f64,
    pub premium_rate: f64,
    pub initial_capital: f64,
    pub ruin_level: f64,
}

impl RiskModel {
    pub fn new(
        claims: ClaimDistribution,
        lambda: f64,
        premium_rate: f64,
        initial_capital: f64,
        ruin_level: f64,
    ) -> Result<Self, ModelError> {
        claims.validate()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ModelError::Invalid(format!("lambda must be > 0, got {lambda}")));
        }
        if !(premium_rate.is_finite() && premium_rate >= 0.0) {
            return Err(ModelError::Invalid(format!(
                "premium_rate must be >= 0, got {premium_rate}"
            )));
        }
        if !(initial_capital.is_finite() && initial_capital >= 0.0) {
            return Err(ModelError::Invalid(format!(
                "initial_capital must be >= 0, got {initial_capital}"
            )));
        }
        if !ruin_level.is_finite() {
            return Err(ModelError::Invalid("ruin_level must be finite".into()));
        }
        Ok(Self { claims, lambda, premium_rate, initial_capital, ruin_level })
    }

    pub fn mean_severity(&self) -> f64 {
        self.claims.mean()
    }

    /// Premium loading factor `premium_rate / (lambda * mean) - 1`.
    /// Returns -1 when the mean severity is infinite.
    pub fn loading_factor(&self) -> f64 {
        let mu = self.mean_severity();
        if mu.is_infinite() {
            -1.0
        } else {
            self.premium_rate / (self.lambda * mu) - 1.0
        }
    }

    /// Net profit condition: premium income exceeds expected claim outgo.
    pub fn npc_satisfied(&self) -> bool {
        self.loading_factor() > 0.0
    }
}

/// One capital injection: `amount` becomes available just after `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionEvent {
    pub time: f64,
    pub amount: f64,
}

/// Base capital plus an ordered list of injections. The implicit zeroth
/// event is the base capital at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalSchedule {
    pub base_capital: f64,
    pub events: Vec<InjectionEvent>,
    /// Default discount rate for level-function variants; individual level
    /// queries may override it.
    pub rate: Option<f64>,
}

impl CapitalSchedule {
    pub fn new(
        base_capital: f64,
        events: Vec<InjectionEvent>,
        rate: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !(base_capital.is_finite() && base_capital >= 0.0) {
            return Err(ModelError::Invalid(format!(
                "base capital must be >= 0, got {base_capital}"
            )));
        }
        let mut prev = 0.0;
        for e in &events {
            if !(e.time.is_finite() && e.time > prev) {
                return Err(ModelError::BadInjectionTimes);
            }
            if !(e.amount.is_finite() && e.amount >= 0.0) {
                return Err(ModelError::NegativeInjection);
            }
            prev = e.time;
        }
        if let Some(r) = rate {
            if r.is_nan() || r < 0.0 {
                return Err(ModelError::Invalid(format!("discount rate must be >= 0, got {r}")));
            }
        }
        Ok(Self { base_capital, events, rate })
    }

    pub fn constant(base_capital: f64) -> Self {
        Self { base_capital, events: Vec::new(), rate: None }
    }

    /// Number of injection events.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event time of the m-th injection; time 0 for m = 0.
    pub fn event_time(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.events[m - 1].time
        }
    }

    /// Injection amount of the m-th event; the base capital for m = 0.
    pub fn amount(&self, m: usize) -> f64 {
        if m == 0 {
            self.base_capital
        } else {
            self.events[m - 1].amount
        }
    }

    /// Capital available after the first `m` injections (base included).
    pub fn cumulative(&self, m: usize) -> f64 {
        self.base_capital + self.events[..m].iter().map(|e| e.amount).sum::<f64>()
    }

    /// Truncate to the first `m` injections.
    pub fn prefix(&self, m: usize) -> CapitalSchedule {
        CapitalSchedule {
            base_capital: self.base_capital,
            events: self.events[..m].to_vec(),
            rate: self.rate,
        }
    }

    /// Pure injection staircase: on each inter-event interval the capital is
    /// the sum of amounts injected strictly before `t`. An injection at
    /// exactly `t` is not yet available, matching the half-open interval
    /// convention of the level functions.
    pub fn staircase_level(&self, t: f64) -> f64 {
        let m = self.events.partition_point(|e| e.time < t);
        self.cumulative(m)
    }

    /// Level function of the i-th interpolating model at time `t` with
    /// discount rate `r` (`r = f64::INFINITY` makes future injections
    /// worthless now). The model follows the injection staircase through its
    /// i-th event and then holds all remaining injections discounted to that
    /// event. `i = 0` is the single lump-sum level, `i = len()` the pure
    /// staircase.
    pub fn capital_level(&self, i: usize, t: f64, r: f64) -> Result<f64, ModelError> {
        let k = self.events.len();
        if i > k {
            return Err(ModelError::IndexOutOfRange { index: i, alarms: k });
        }
        let a_i = self.event_time(i);
        if t > a_i {
            let mut level = self.cumulative(i);
            for j in i + 1..=k {
                let gap = self.event_time(j) - a_i;
                level += self.amount(j) * discount(r, gap);
            }
            Ok(level)
        } else {
            // t in (A_m, A_{m+1}] for some m < i.
            Ok(self.staircase_level(t))
        }
    }
}

fn discount(r: f64, gap: f64) -> f64 {
    if r.is_infinite() {
        0.0
    } else {
        (-r * gap).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_schedule() -> CapitalSchedule {
        CapitalSchedule::new(
            50.0,
            vec![
                InjectionEvent { time: 0.29, amount: 5.0 },
                InjectionEvent { time: 0.58, amount: 5.0 },
                InjectionEvent { time: 0.91, amount: 5.0 },
                InjectionEvent { time: 1.28, amount: 5.0 },
            ],
            Some(0.10),
        )
        .unwrap()
    }

    #[test]
    fn exponential_mean() {
        let d = ClaimDistribution::Exponential { rate: 0.5 };
        assert_eq!(d.mean(), 2.0);
    }

    #[test]
    fn pareto_heavy_tail_mean_is_infinite() {
        let d = ClaimDistribution::Pareto { scale: 1.0, shape: 0.95 };
        assert_eq!(d.mean(), f64::INFINITY);
        let d = ClaimDistribution::Pareto { scale: 1.0, shape: 2.0 };
        assert_eq!(d.mean(), 1.0);
    }

    #[test]
    fn logarithmic_mean_matches_pmf_summation() {
        let d = ClaimDistribution::Logarithmic { param: 0.95 };
        let analytic = d.mean();
        assert!((analytic - 6.3421).abs() < 5e-4);
        let mut by_sum = 0.0;
        for i in 1..5000u64 {
            by_sum += i as f64 * d.pmf(i).unwrap();
        }
        assert!((analytic - by_sum).abs() < 1e-8);
    }

    #[test]
    fn tabulated_mean_is_exact() {
        let d = ClaimDistribution::TabulatedDiscrete { pmf: vec![0.25, 0.5, 0.25] };
        assert!((d.mean() - 2.0).abs() < 1e-12);
        assert!(d.validate().is_ok());
        let bad = ClaimDistribution::TabulatedDiscrete { pmf: vec![0.25, 0.5, 0.25 + 1e-9] };
        assert!(matches!(bad.validate(), Err(ModelError::PmfNotNormalized { .. })));
    }

    #[test]
    fn loading_factor_examples() {
        let m = RiskModel::new(
            ClaimDistribution::Exponential { rate: 0.5 },
            20.0,
            25.0,
            15.0,
            0.0,
        )
        .unwrap();
        assert!((m.loading_factor() + 0.375).abs() < 1e-12);
        assert!(!m.npc_satisfied());

        let balanced = RiskModel::new(
            ClaimDistribution::Exponential { rate: 0.5 },
            20.0,
            40.0,
            15.0,
            0.0,
        )
        .unwrap();
        assert!(balanced.loading_factor().abs() < 1e-12);

        let heavy = RiskModel::new(
            ClaimDistribution::Pareto { scale: 1.0, shape: 0.95 },
            20.0,
            40.0,
            50.0,
            0.0,
        )
        .unwrap();
        assert_eq!(heavy.loading_factor(), -1.0);
    }

    #[test]
    fn loading_factor_scale_consistency() {
        // Scaling premium and mean severity together preserves theta.
        for s in [0.5, 2.0, 7.3] {
            let a = RiskModel::new(
                ClaimDistribution::Exponential { rate: 1.0 },
                3.0,
                4.5,
                1.0,
                0.0,
            )
            .unwrap();
            let b = RiskModel::new(
                ClaimDistribution::Exponential { rate: 1.0 / s },
                3.0,
                4.5 * s,
                1.0,
                0.0,
            )
            .unwrap();
            assert!((a.loading_factor() - b.loading_factor()).abs() < 1e-12);
        }
    }

    #[test]
    fn level_before_first_injection_is_base() {
        let s = paper_schedule();
        let k = s.len();
        for t in [0.01, 0.1, 0.29] {
            assert_eq!(s.capital_level(k, t, 0.10).unwrap(), 50.0);
        }
        // Injection available strictly after its event time.
        assert_eq!(s.capital_level(k, 0.29 + 1e-9, 0.10).unwrap(), 55.0);
    }

    #[test]
    fn lump_sum_level_matches_reported_equivalent_capital() {
        let s = paper_schedule();
        let v = s.capital_level(0, 1.0, 0.10).unwrap();
        assert!((v - 68.540).abs() < 5e-4, "got {v}");
        assert_eq!(s.capital_level(0, 1.0, f64::INFINITY).unwrap(), 50.0);
        assert!((s.capital_level(0, 1.0, 0.0).unwrap() - 70.0).abs() < 1e-12);
    }

    #[test]
    fn successive_levels_are_ordered() {
        let s = paper_schedule();
        let k = s.len();
        for r in [0.1, 1.0] {
            for i in 0..k {
                let a_i = s.event_time(i);
                let a_next = s.event_time(i + 1);
                let mut t = 0.01;
                while t < 3.0 {
                    let li = s.capital_level(i, t, r).unwrap();
                    let ln = s.capital_level(i + 1, t, r).unwrap();
                    if t <= a_i {
                        assert!((li - ln).abs() < 1e-12, "equal before A_i");
                    } else if t <= a_next {
                        assert!(li > ln, "i={i} t={t} li={li} ln={ln}");
                    } else {
                        assert!(li < ln, "i={i} t={t} li={li} ln={ln}");
                    }
                    t += 0.01;
                }
            }
        }
    }

    #[test]
    fn level_index_out_of_range() {
        let s = paper_schedule();
        assert!(matches!(
            s.capital_level(5, 1.0, 0.1),
            Err(ModelError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn degenerate_support_classification() {
        assert_eq!(ClaimDistribution::Degenerate { point: 2.0 }.support(), Support::Integer);
        assert_eq!(
            ClaimDistribution::Degenerate { point: 2.5 }.support(),
            Support::Continuous
        );
    }

    #[test]
    fn tabulated_point_mass_sf_is_exact() {
        let tab = ClaimDistribution::TabulatedDiscrete { pmf: vec![0.0, 0.0, 1.0] };
        let deg = ClaimDistribution::Degenerate { point: 3.0 };
        for m in 0..=5i64 {
            assert_eq!(tab.integer_sf(m), deg.integer_sf(m), "m={m}");
        }
    }
}
