//! Analytical lower/upper bounds on the ruin-probability gap between the
//! alarm system and its equivalent-capital lump-sum alternative, evaluated
//! against an empirical ruin-probability surface.
//!
//! All bounds decompose over the inter-alarm intervals: for an evaluation
//! time t in (A_{i-1}, A_i] the recursive comparison contributes one term
//! per earlier alarm plus a leading term for the current interval. Extrema
//! over the net-outgo value x at an alarm are taken by grid scan.

use thiserror::Error;

use crate::compare::equivalent_initial_capital;
use crate::model::CapitalSchedule;
use crate::simulate::PsiSurface;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("schedule has no injection events; nothing to bound")]
    EmptySchedule,
    #[error("evaluation time {t} exceeds the surface time range {max}")]
    TimeOutOfRange { t: f64, max: f64 },
    #[error("empirical survival fractions required for pb_mode=empirical")]
    MissingEmpiricalPb,
    #[error("need one net-outgo sample set per alarm time, got {got} for {need}")]
    SnapshotMismatch { got: usize, need: usize },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Which survival-through-alarms probabilities the bounds use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbMode {
    /// Survivor fractions estimated by simulation.
    Empirical,
    /// The floor `(1 - beta)^j` implied by the alarm definition.
    Approx,
}

impl PbMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PbMode::Empirical => "empirical",
            PbMode::Approx => "approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundEntry {
    pub id: String,
    pub side: Side,
    pub value: f64,
    /// Bounds are informative only inside (-1, 1); outside they hold
    /// trivially.
    pub vacuous: bool,
}

fn entry(id: &str, side: Side, value: f64) -> BoundEntry {
    let vacuous = match side {
        Side::Upper => value >= 1.0,
        Side::Lower => value <= -1.0,
    };
    BoundEntry { id: id.to_string(), side, value, vacuous }
}

/// The nonnegative ratio statistic entering the refined upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Value(f64),
    /// No earlier alarm intervals to scan (t at or before the first alarm).
    NotApplicable,
    /// Every scanned denominator was zero.
    Infinite,
}

impl Gamma {
    pub fn value(&self) -> Option<f64> {
        match self {
            Gamma::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub t: f64,
    /// Interval index i with t in (A_{i-1}, A_i]; k+1 past the last alarm.
    pub interval_index: usize,
    pub entries: Vec<BoundEntry>,
    pub gamma: Gamma,
    /// Largest inter-alarm gap over the intervals entering the bound.
    pub delta_a_i: Option<f64>,
    pub pb_mode: PbMode,
    /// Monte Carlo estimate of the gap with its standard error, when given.
    pub delta_hat: Option<(f64, f64)>,
    /// Per-term decomposition of the headline bounds.
    pub diagnostics: Vec<(String, f64)>,
}

impl BoundReport {
    pub fn min_upper(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.side == Side::Upper && !e.vacuous)
            .map(|e| e.value)
            .min_by(f64::total_cmp)
    }

    pub fn max_lower(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.side == Side::Lower && !e.vacuous)
            .map(|e| e.value)
            .max_by(f64::total_cmp)
    }

    pub fn get(&self, id: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Everything the bound formulas need: the surface, the schedule with its
/// alarm parameters, the discount rate, the survival-probability mode, and
/// one x-scan grid per alarm.
pub struct BoundContext<'a> {
    surface: &'a PsiSurface,
    schedule: &'a CapitalSchedule,
    pub alpha: f64,
    pub beta: f64,
    pub lead_window: f64,
    pub rate: f64,
    pub pb_mode: PbMode,
    pb_empirical: Vec<f64>,
    x_grids: Vec<Vec<f64>>,
}

impl<'a> BoundContext<'a> {
    /// `pb_empirical[j-1]` is the estimated survival through alarm j;
    /// `snapshots[j-1]` holds sorted net-outgo samples at alarm time j.
    /// The x-scan grid per alarm spans the 0.1%-to-100% quantile range of
    /// those samples, capped at the pre-injection level, stepping by the
    /// surface's capital step.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        surface: &'a PsiSurface,
        schedule: &'a CapitalSchedule,
        alpha: f64,
        beta: f64,
        lead_window: f64,
        rate: f64,
        pb_mode: PbMode,
        pb_empirical: Option<&[f64]>,
        snapshots: &[Vec<f64>],
    ) -> Result<Self, BoundError> {
        let k = schedule.len();
        if k == 0 {
            return Err(BoundError::EmptySchedule);
        }
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && lead_window > 0.0) {
            return Err(BoundError::Invalid(
                "need alpha, beta in (0,1) and a positive lead window".into(),
            ));
        }
        if snapshots.len() != k {
            return Err(BoundError::SnapshotMismatch { got: snapshots.len(), need: k });
        }
        let pb_empirical = match (pb_mode, pb_empirical) {
            (PbMode::Empirical, None) => return Err(BoundError::MissingEmpiricalPb),
            (_, Some(v)) if v.len() != k => {
                return Err(BoundError::Invalid(format!(
                    "need {k} empirical survival fractions, got {}",
                    v.len()
                )))
            }
            (_, Some(v)) => v.to_vec(),
            (PbMode::Approx, None) => Vec::new(),
        };

        let step = surface.capital_step();
        // x-grid for the implicit zeroth alarm: the net outgo at time 0 is
        // exactly 0.
        let mut x_grids = vec![vec![0.0]];
        for (j, samples) in snapshots.iter().enumerate() {
            let cap = schedule.cumulative(j); // level just before alarm j+1
            let grid = if samples.is_empty() {
                vec![cap.min(0.0)]
            } else {
                let lo = samples[(samples.len() - 1) / 1000].min(cap);
                let hi = samples[samples.len() - 1].min(cap);
                let mut g = Vec::new();
                let mut x = lo;
                while x < hi {
                    g.push(x);
                    x += step;
                }
                g.push(hi);
                g
            };
            x_grids.push(grid);
        }

        Ok(Self {
            surface,
            schedule,
            alpha,
            beta,
            lead_window,
            rate,
            pb_mode,
            pb_empirical,
            x_grids,
        })
    }

    /// Ruin probability lookup with the conventions the bounds need:
    /// negative capital is certain ruin; capital above the surface clamps
    /// to the top row and time past the grid clamps to the last column.
    fn psi(&self, capital: f64, time: f64) -> f64 {
        if capital < 0.0 {
            return 1.0;
        }
        if time <= 0.0 {
            return 0.0;
        }
        self.surface.interp(capital, time)
    }

    fn surv(&self, capital: f64, time: f64) -> f64 {
        1.0 - self.psi(capital, time)
    }

    /// Ultimate ruin probability approximated by the surface's last time
    /// column.
    fn psi_ult(&self, capital: f64) -> f64 {
        self.psi(capital, *self.surface.times.last().unwrap())
    }

    fn level(&self, model_index: usize, t: f64) -> f64 {
        self.schedule
            .capital_level(model_index, t, self.rate)
            .expect("bound formulas stay within 0..=k")
    }

    /// Alarm time A_j, with A_{k+1} treated as infinite.
    fn alarm_time(&self, j: usize) -> f64 {
        if j > self.schedule.len() {
            f64::INFINITY
        } else {
            self.schedule.event_time(j)
        }
    }

    /// Survival probability through alarm j under the selected mode; 1 for
    /// j = 0.
    pub fn prob_bj(&self, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        match self.pb_mode {
            PbMode::Approx => (1.0 - self.beta).powi(j as i32),
            PbMode::Empirical => self.pb_empirical[j - 1],
        }
    }

    /// Interval index i such that t lies in (A_{i-1}, A_i]; k+1 past A_k.
    pub fn interval_index(&self, t: f64) -> usize {
        let k = self.schedule.len();
        for i in 1..=k {
            if t <= self.alarm_time(i) {
                return i;
            }
        }
        k + 1
    }

    /// Largest inter-alarm gap over the intervals entering a bound at
    /// interval i.
    fn delta_a(&self, i: usize) -> Option<f64> {
        if i < 2 {
            return None;
        }
        Some(
            (0..=i - 2)
                .map(|j| self.alarm_time(j + 1) - self.alarm_time(j))
                .fold(0.0, f64::max),
        )
    }

    fn require_covered(&self, t: f64) -> Result<(), BoundError> {
        let max = *self.surface.times.last().unwrap();
        if t > max + 1e-9 {
            return Err(BoundError::TimeOutOfRange { t, max });
        }
        Ok(())
    }

    /// Scan one alarm's x-grid for the extremum of `f(x)`.
    fn scan<F: Fn(f64) -> f64>(&self, j: usize, minimize: bool, f: F) -> f64 {
        let mut best = if minimize { f64::INFINITY } else { f64::NEG_INFINITY };
        for &x in &self.x_grids[j] {
            let v = f(x);
            best = if minimize { best.min(v) } else { best.max(v) };
        }
        best
    }

    /// Leading-interval difference
    /// `psi(l^i_{A_i} - x, t - A_{i-1}) - psi(l^{i-1}_{A_i} - x, t - A_{i-1})`
    /// extremized over x at the previous alarm. Zero when i = k + 1.
    fn lead_term(&self, i: usize, t: f64, minimize: bool) -> f64 {
        if i > self.schedule.len() {
            return 0.0;
        }
        let a_prev = self.alarm_time(i - 1);
        let staircase_level = self.level(i, self.alarm_time(i));
        let committed_level = self.level(i - 1, self.alarm_time(i));
        self.scan(i - 1, minimize, |x| {
            self.psi(staircase_level - x, t - a_prev) - self.psi(committed_level - x, t - a_prev)
        })
    }

    /// Per-interval quantities shared by the finite-time and ultimate
    /// variants; `tail(x, j)` supplies the horizon-dependent term.
    fn gamma_scan(&self, upto: usize, tail: impl Fn(&Self, f64, usize) -> f64) -> Gamma {
        let mut best = f64::INFINITY;
        let mut any_finite = false;
        for j in 0..=upto {
            let gap = self.alarm_time(j + 1) - self.alarm_time(j);
            let next_committed = self.level(j + 1, self.alarm_time(j + 2));
            let pre_injection = self.level(j + 1, self.alarm_time(j + 1));
            let ratio_min = self.scan(j, true, |x| {
                let denom = self.psi(pre_injection - x, gap);
                if denom <= 0.0 {
                    return f64::INFINITY;
                }
                (self.psi(next_committed - x, gap) + tail(self, x, j)) / denom
            });
            if ratio_min.is_finite() {
                any_finite = true;
            }
            best = best.min(ratio_min);
        }
        if any_finite {
            Gamma::Value(best.max(0.0))
        } else {
            Gamma::Infinite
        }
    }

    /// Finite-time gamma(t): minimum over earlier intervals j <= i-2 and
    /// net-outgo values x of
    /// `[psi(l^{j+1}_{A_{j+2}} - x, gap_j) + psi(l^j_{A_{j+1}} - x, t - A_j)]
    ///  / psi(l^{j+1}_{A_{j+1}} - x, gap_j)`.
    pub fn gamma_t(&self, t: f64) -> Result<Gamma, BoundError> {
        self.require_covered(t)?;
        let i = self.interval_index(t);
        if i < 2 {
            return Ok(Gamma::NotApplicable);
        }
        Ok(self.gamma_scan(i - 2, |ctx, x, j| {
            ctx.psi(ctx.level(j, ctx.alarm_time(j + 1)) - x, t - ctx.alarm_time(j))
        }))
    }

    /// Ultimate-horizon gamma.
    pub fn gamma_ultimate(&self) -> Gamma {
        let k = self.schedule.len();
        self.gamma_scan(k - 1, |ctx, x, j| {
            ctx.psi_ult(ctx.level(j, ctx.alarm_time(j + 1)) - x)
        })
    }

    /// Bounds for t at or before the first alarm: the gap is positive, at
    /// most the difference-of-ruin-probabilities form, and at most beta.
    pub fn delta_bounds_prealarm(&self, t: f64) -> Result<Vec<BoundEntry>, BoundError> {
        self.require_covered(t)?;
        let a1 = self.alarm_time(1);
        if t > a1 {
            return Err(BoundError::Invalid(format!("t={t} lies after the first alarm {a1}")));
        }
        let u0 = self.schedule.base_capital;
        let lump = equivalent_initial_capital(self.schedule, self.rate);
        let diff = self.psi(u0, a1) - self.psi(lump, t);
        Ok(vec![
            entry("prealarm_zero", Side::Lower, 0.0),
            entry("prealarm_psi_diff", Side::Upper, diff),
            entry("prealarm_beta", Side::Upper, self.beta),
        ])
    }

    /// Headline finite-time upper bound: the leading-interval maximum plus
    /// the per-interval sum, refined by the smaller of the gamma branch and
    /// the max/min branch. Also returns the per-term decomposition.
    fn upper_bound_terms(
        &self,
        i: usize,
        t: f64,
        gamma: &Gamma,
    ) -> (Vec<BoundEntry>, Vec<(String, f64)>) {
        let mut diag = Vec::new();
        let sum_pb: f64 = (0..=i - 2).map(|j| self.prob_bj(j)).sum();
        let lead = if i <= self.schedule.len() {
            self.prob_bj(i - 1) * self.lead_term(i, t, false)
        } else {
            0.0
        };
        diag.push(("upper.lead_max".to_string(), lead));

        let mut branch_gamma = gamma.value().map(|g| -(1.0 - self.beta) * g * sum_pb);
        let mut branch_mm = 0.0;
        for j in 0..=i - 2 {
            let a_j = self.alarm_time(j);
            let gap = self.alarm_time(j + 1) - a_j;
            let own = self.level(j, a_j);
            let committed_next = self.level(j + 1, self.alarm_time(j + 2));
            let pre_injection = self.level(j + 1, self.alarm_time(j + 1));
            let committed_own = self.level(j, self.alarm_time(j + 1));
            let pb = self.prob_bj(j);

            if let Some(bg) = branch_gamma.as_mut() {
                let term = pb
                    * (self.psi(committed_next - own, t - a_j)
                        + self.psi(pre_injection - own, gap + self.lead_window));
                diag.push((format!("upper.gamma.j{j}"), term));
                *bg += term;
            }
            let max_part = self.scan(j, false, |x| {
                self.psi(pre_injection - x, gap + self.lead_window)
                    - self.psi(committed_next - x, gap)
            });
            let min_part = self.scan(j, true, |x| {
                self.psi(committed_own - x, t - a_j) - self.psi(committed_next - x, t - a_j)
            });
            let term = pb * (max_part - min_part);
            diag.push((format!("upper.minmax.j{j}"), term));
            branch_mm += term;
        }
        let base = lead - (1.0 - self.alpha) * (1.0 - self.beta) * sum_pb;
        let refined = match branch_gamma {
            Some(bg) => bg.min(branch_mm),
            None => branch_mm,
        };
        diag.push(("upper.base".to_string(), base));
        if let Some(bg) = branch_gamma {
            diag.push(("upper.branch_gamma".to_string(), bg));
        }
        diag.push(("upper.branch_minmax".to_string(), branch_mm));

        let mut entries = vec![entry("prop1_upper", Side::Upper, base + refined)];
        // Rough-approximation corollary for small beta.
        if i <= self.schedule.len() && self.beta * (i as f64 - 1.0) < 1.0 {
            if let Some(g) = gamma.value() {
                let c1 = (i as f64 - 1.0)
                    * (self.alpha
                        + (1.0 - g + self.beta * (1.0 + g - self.alpha)).min(0.0))
                    + (1.0 - self.beta * (i as f64 - 1.0)) * self.lead_term(i, t, false);
                entries.push(entry("cor1_upper", Side::Upper, c1));
            }
        }
        (entries, diag)
    }

    /// Headline finite-time lower bound plus its largest-gap relaxation.
    fn lower_bound_terms(&self, i: usize, t: f64) -> (Vec<BoundEntry>, Vec<(String, f64)>) {
        let mut diag = Vec::new();
        let lead = if i <= self.schedule.len() {
            self.prob_bj(i - 1) * self.lead_term(i, t, true)
        } else {
            0.0
        };
        diag.push(("lower.lead_min".to_string(), lead));

        let mut sum = 0.0;
        let mut sum_pb = 0.0;
        for j in 0..=i - 2 {
            let a_j = self.alarm_time(j);
            let a_next = self.alarm_time(j + 1);
            let gap = a_next - a_j;
            let u_j = self.schedule.amount(j);
            let pb = self.prob_bj(j);
            let term = -self.alpha
                + self.beta * (self.alpha + self.surv(0.0, t - a_next))
                - self.surv(0.0, t - a_next) * self.psi(0.0, gap)
                + self.surv(u_j, t - a_j)
                - self.psi(u_j, gap + self.lead_window);
            diag.push((format!("lower.j{j}"), pb * term));
            sum += pb * term;
            sum_pb += pb;
        }
        let mut entries = vec![entry("prop1_lower", Side::Lower, lead + sum)];

        if let Some(delta_a) = self.delta_a(i) {
            let a_prev = self.alarm_time(i - 1);
            let relaxed = -self.alpha
                + self.beta * (self.alpha + self.surv(0.0, t))
                + self.surv(0.0, t)
                - self.psi(0.0, delta_a) * self.surv(0.0, t - a_prev)
                - self.psi(0.0, delta_a + self.lead_window);
            entries.push(entry("prop1_lower_gap", Side::Lower, relaxed * sum_pb + lead));
            diag.push(("lower.gap_relaxed_per_pb".to_string(), relaxed));

            if i <= self.schedule.len() && self.beta * (i as f64 - 1.0) < 1.0 {
                let c1 = (i as f64 - 1.0)
                    * (-self.alpha + self.surv(0.0, t)
                        - self.psi(0.0, delta_a) * self.surv(0.0, t - a_prev)
                        - self.psi(0.0, delta_a + self.lead_window))
                    + self.lead_term(i, t, true);
                entries.push(entry("cor1_lower", Side::Lower, c1));
            }
        }
        (entries, diag)
    }

    /// Direct sandwich for evaluation times past the last alarm:
    /// `surv(lump, t) - pb_k^2 <= gap <= surv(lump, t) - pb_k^2 * surv(0, t - A_k)`.
    pub fn direct_bounds(&self, t: f64) -> Result<(f64, f64), BoundError> {
        self.require_covered(t)?;
        let k = self.schedule.len();
        let a_k = self.alarm_time(k);
        if t <= a_k {
            return Err(BoundError::Invalid(format!(
                "direct bounds need t past the last alarm {a_k}, got {t}"
            )));
        }
        let lump = equivalent_initial_capital(self.schedule, self.rate);
        let pb2 = self.prob_bj(k).powi(2);
        let surv_lump = self.surv(lump, t);
        Ok((surv_lump - pb2, surv_lump - pb2 * self.surv(0.0, t - a_k)))
    }

    /// Full report at a finite evaluation time.
    pub fn report_at(&self, t: f64, delta_hat: Option<(f64, f64)>) -> Result<BoundReport, BoundError> {
        self.require_covered(t)?;
        if !(t > 0.0) {
            return Err(BoundError::Invalid(format!("need t > 0, got {t}")));
        }
        let i = self.interval_index(t);
        let mut entries = Vec::new();
        let mut diagnostics = Vec::new();
        let gamma = if i >= 2 { self.gamma_t(t)? } else { Gamma::NotApplicable };

        if i == 1 {
            entries.extend(self.delta_bounds_prealarm(t)?);
        } else {
            let (ups, diag_u) = self.upper_bound_terms(i, t, &gamma);
            entries.extend(ups);
            diagnostics.extend(diag_u);
            let (lows, diag_l) = self.lower_bound_terms(i, t);
            entries.extend(lows);
            diagnostics.extend(diag_l);
        }
        if t > self.alarm_time(self.schedule.len()) {
            let (lo, hi) = self.direct_bounds(t)?;
            entries.push(entry("direct_lower", Side::Lower, lo));
            entries.push(entry("direct_upper", Side::Upper, hi));
        }
        Ok(BoundReport {
            t,
            interval_index: i,
            entries,
            gamma,
            delta_a_i: self.delta_a(i),
            pb_mode: self.pb_mode,
            delta_hat,
            diagnostics,
        })
    }

    /// Bounds on the ultimate (infinite-horizon) gap, approximating
    /// infinite-horizon ruin probabilities by the surface's last time
    /// column. When the loading factor is nonpositive, ruin is ultimately
    /// certain for both systems and the gap is exactly zero.
    pub fn ultimate_report(
        &self,
        loading_factor: f64,
        delta_hat: Option<(f64, f64)>,
    ) -> BoundReport {
        let k = self.schedule.len();
        let t_max = *self.surface.times.last().unwrap();
        if loading_factor <= 0.0 {
            return BoundReport {
                t: f64::INFINITY,
                interval_index: k + 1,
                entries: vec![
                    entry("prop2_lower", Side::Lower, 0.0),
                    entry("prop2_upper", Side::Upper, 0.0),
                ],
                gamma: Gamma::NotApplicable,
                delta_a_i: self.delta_a(k + 1),
                pb_mode: self.pb_mode,
                delta_hat,
                diagnostics: vec![("ultimate.ruin_certain".to_string(), 1.0)],
            };
        }

        let mut diagnostics = Vec::new();
        let gamma = self.gamma_ultimate();
        let sum_pb: f64 = (0..=k - 1).map(|j| self.prob_bj(j)).sum();

        let mut branch_gamma = gamma.value().map(|g| -(1.0 - self.beta) * g * sum_pb);
        let mut branch_mm = 0.0;
        let mut lower = 0.0;
        for j in 0..k {
            let a_j = self.alarm_time(j);
            let gap = self.alarm_time(j + 1) - a_j;
            let own = self.level(j, a_j);
            let committed_next = self.level(j + 1, self.alarm_time(j + 2));
            let pre_injection = self.level(j + 1, self.alarm_time(j + 1));
            let committed_own = self.level(j, self.alarm_time(j + 1));
            let u_j = self.schedule.amount(j);
            let pb = self.prob_bj(j);

            if let Some(bg) = branch_gamma.as_mut() {
                *bg += pb
                    * (self.psi_ult(committed_next - own)
                        + self.psi(pre_injection - own, gap + self.lead_window));
            }
            branch_mm += pb
                * (self.scan(j, false, |x| {
                    self.psi(pre_injection - x, gap + self.lead_window)
                        - self.psi(committed_next - x, gap)
                }) - self.scan(j, true, |x| {
                    self.psi_ult(committed_own - x) - self.psi_ult(committed_next - x)
                }));
            lower += pb
                * (-self.alpha
                    + self.beta * (self.alpha + 1.0 - self.psi_ult(0.0))
                    - (1.0 - self.psi_ult(0.0)) * self.psi(0.0, gap)
                    + 1.0
                    - self.psi_ult(u_j)
                    - self.psi(u_j, gap + self.lead_window));
        }
        let refined = match branch_gamma {
            Some(bg) => bg.min(branch_mm),
            None => branch_mm,
        };
        let upper = -(1.0 - self.alpha) * (1.0 - self.beta) * sum_pb + refined;
        if let Some(bg) = branch_gamma {
            diagnostics.push(("ultimate.branch_gamma".to_string(), bg));
        }
        diagnostics.push(("ultimate.branch_minmax".to_string(), branch_mm));
        diagnostics.push(("ultimate.horizon_truncation".to_string(), t_max));

        let mut entries = vec![
            entry("prop2_upper", Side::Upper, upper),
            entry("prop2_lower", Side::Lower, lower),
        ];

        let delta_a = self.delta_a(k + 1);
        if self.beta * (k as f64) < 1.0 {
            if let (Some(g), Some(da)) = (gamma.value(), delta_a) {
                let c_up = k as f64
                    * (self.alpha
                        + (1.0 - g + (1.0 - self.alpha + g) * self.beta).min(0.0));
                let surv_ult0 = 1.0 - self.psi_ult(0.0);
                let c_lo = k as f64
                    * (-self.alpha + surv_ult0 * self.surv(0.0, da)
                        - self.psi(0.0, da + self.lead_window));
                entries.push(entry("cor2_upper_small_beta", Side::Upper, c_up));
                entries.push(entry("cor2_lower_small_beta", Side::Lower, c_lo));
            }
        }
        // Unbounded-alarm-count forms.
        {
            let mut max_over_j = f64::NEG_INFINITY;
            let mut min_over_j = f64::INFINITY;
            for j in 0..k {
                let gap = self.alarm_time(j + 1) - self.alarm_time(j);
                let committed_next = self.level(j + 1, self.alarm_time(j + 2));
                let pre_injection = self.level(j + 1, self.alarm_time(j + 1));
                let committed_own = self.level(j, self.alarm_time(j + 1));
                max_over_j = max_over_j.max(self.scan(j, false, |x| {
                    self.psi(pre_injection - x, gap) - self.psi(committed_next - x, gap)
                }));
                min_over_j = min_over_j.min(self.scan(j, true, |x| {
                    self.psi_ult(committed_own - x) - self.psi_ult(committed_next - x)
                }));
            }
            let c_up = (max_over_j - min_over_j - (1.0 - self.alpha) * (1.0 - self.beta))
                / self.beta;
            entries.push(entry("cor2_upper_unbounded", Side::Upper, c_up));
            if let Some(da) = delta_a {
                let surv_ult0 = 1.0 - self.psi_ult(0.0);
                let c_lo = self.alpha + surv_ult0
                    - (self.alpha - surv_ult0 * self.surv(0.0, da)
                        + self.psi(0.0, da + self.lead_window))
                        / self.beta;
                entries.push(entry("cor2_lower_unbounded", Side::Lower, c_lo));
            }
        }

        BoundReport {
            t: f64::INFINITY,
            interval_index: k + 1,
            entries,
            gamma,
            delta_a_i: delta_a,
            pb_mode: self.pb_mode,
            delta_hat,
            diagnostics,
        }
    }

    /// Small-beta corollary upper bound with an explicit gamma, exposing
    /// the monotone dependence on the ratio statistic.
    pub fn cor1_upper_with_gamma(&self, t: f64, gamma: f64) -> Result<f64, BoundError> {
        self.require_covered(t)?;
        let i = self.interval_index(t);
        if i < 2 || i > self.schedule.len() {
            return Err(BoundError::Invalid("corollary needs an interior interval".into()));
        }
        Ok((i as f64 - 1.0)
            * (self.alpha + (1.0 - gamma + self.beta * (1.0 + gamma - self.alpha)).min(0.0))
            + (1.0 - self.beta * (i as f64 - 1.0)) * self.lead_term(i, t, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InjectionEvent;

    /// Surface where psi(v, s) = clamp(s * 0.2, 0, 1) * exp(-v / 40)-ish,
    /// built from synthetic bins; simple but monotone both ways.
    fn toy_surface() -> PsiSurface {
        let capitals: Vec<f64> = (0..=30).map(|i| i as f64 * 5.0).collect();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        // Fabricate monotone ruin fractions out of a deterministic rule.
        let n = 10_000u64;
        let mut bins = vec![0u64; capitals.len() * times.len()];
        for (ci, cap) in capitals.iter().enumerate() {
            // Total mass ruined by the end at this capital.
            let total = (0.95 * (-cap / 60.0).exp() * n as f64) as u64;
            // Spread it over time bins 1..: geometric-ish front-loading.
            let mut remaining = total;
            let mut ti = 1;
            while remaining > 0 && ti < times.len() {
                let take = (remaining / 8).max(1).min(remaining);
                bins[ci * times.len() + ti] = take;
                remaining -= take;
                ti += 1;
            }
        }
        PsiSurface::from_ruin_bins(&capitals, &times, &bins, n)
    }

    fn schedule() -> CapitalSchedule {
        CapitalSchedule::new(
            50.0,
            vec![
                InjectionEvent { time: 0.29, amount: 5.0 },
                InjectionEvent { time: 0.58, amount: 5.0 },
                InjectionEvent { time: 0.91, amount: 5.0 },
                InjectionEvent { time: 1.28, amount: 5.0 },
            ],
            None,
        )
        .unwrap()
    }

    fn ctx<'a>(
        surface: &'a PsiSurface,
        sched: &'a CapitalSchedule,
        mode: PbMode,
        snaps: &[Vec<f64>],
    ) -> BoundContext<'a> {
        BoundContext::new(surface, sched, 0.45, 0.225, 1.0, 0.10, mode, Some(&[0.86, 0.72, 0.59, 0.46]), snaps)
            .unwrap()
    }

    fn flat_snaps(k: usize) -> Vec<Vec<f64>> {
        (0..k).map(|j| vec![-20.0, -10.0, 0.0, 10.0 + j as f64]).collect()
    }

    #[test]
    fn prob_bj_modes() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        assert_eq!(c.prob_bj(0), 1.0);
        assert_eq!(c.prob_bj(2), 0.775f64.powi(2));
        assert!((c.prob_bj(2) - 0.600625).abs() < 1e-12);
        let c = ctx(&s, &sch, PbMode::Empirical, &snaps);
        assert_eq!(c.prob_bj(3), 0.59);
    }

    #[test]
    fn interval_indexing() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        assert_eq!(c.interval_index(0.1), 1);
        assert_eq!(c.interval_index(0.29), 1);
        assert_eq!(c.interval_index(0.30), 2);
        assert_eq!(c.interval_index(1.0), 4);
        assert_eq!(c.interval_index(2.0), 5);
    }

    #[test]
    fn gamma_not_applicable_before_second_interval() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        assert_eq!(c.gamma_t(0.2).unwrap(), Gamma::NotApplicable);
        assert!(matches!(c.gamma_t(1.0).unwrap(), Gamma::Value(v) if v >= 0.0));
    }

    #[test]
    fn gamma_with_all_zero_denominators_is_flagged_infinite() {
        // An all-zero surface gives zero denominators everywhere.
        let capitals = vec![0.0, 100.0];
        let times = vec![0.0, 1.0, 2.0];
        let bins = vec![0u64; 6];
        let s = PsiSurface::from_ruin_bins(&capitals, &times, &bins, 100);
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        assert_eq!(c.gamma_t(1.0).unwrap(), Gamma::Infinite);
        // The report still produces the max/min-branch upper bound.
        let r = c.report_at(1.0, None).unwrap();
        assert!(r.get("prop1_upper").is_some());
        assert!(r.get("cor1_upper").is_none());
    }

    #[test]
    fn prealarm_chain_ordering() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        let entries = c.delta_bounds_prealarm(0.2).unwrap();
        let diff = entries.iter().find(|e| e.id == "prealarm_psi_diff").unwrap().value;
        let beta = entries.iter().find(|e| e.id == "prealarm_beta").unwrap().value;
        assert!(diff <= beta + 1e-12, "psi-difference bound sits under the beta cap");
        assert_eq!(beta, 0.225);
        let r = c.report_at(0.2, None).unwrap();
        assert_eq!(r.interval_index, 1);
        assert!(r.get("prealarm_zero").is_some());
    }

    #[test]
    fn direct_sandwich_width_identity() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        for mode in [PbMode::Approx, PbMode::Empirical] {
            let c = ctx(&s, &sch, mode, &snaps);
            let t = 2.0;
            let (lo, hi) = c.direct_bounds(t).unwrap();
            let pb2 = c.prob_bj(4).powi(2);
            let width = hi - lo;
            let expect = pb2 * c.psi(0.0, t - 1.28);
            assert!((width - expect).abs() < 1e-12);
            assert!(width >= 0.0);
        }
        // The two modes differ by at most |pb^2 difference|.
        let ca = ctx(&s, &sch, PbMode::Approx, &snaps);
        let ce = ctx(&s, &sch, PbMode::Empirical, &snaps);
        let (lo_a, _) = ca.direct_bounds(2.0).unwrap();
        let (lo_e, _) = ce.direct_bounds(2.0).unwrap();
        let gap = (ca.prob_bj(4).powi(2) - ce.prob_bj(4).powi(2)).abs();
        assert!((lo_a - lo_e).abs() <= gap + 1e-12);
    }

    #[test]
    fn cor1_upper_monotone_in_gamma() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        let t = 1.0;
        let g = c.gamma_t(t).unwrap().value().unwrap();
        let v1 = c.cor1_upper_with_gamma(t, g).unwrap();
        let v2 = c.cor1_upper_with_gamma(t, g + 0.1).unwrap();
        assert!(v2 <= v1 + 1e-12, "upper bound must not grow with gamma");
    }

    #[test]
    fn ultimate_zero_when_loading_nonpositive() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        let c = ctx(&s, &sch, PbMode::Approx, &snaps);
        let r = c.ultimate_report(-1.0, None);
        assert_eq!(r.get("prop2_upper").unwrap().value, 0.0);
        assert_eq!(r.get("prop2_lower").unwrap().value, 0.0);
        let r = c.ultimate_report(0.5, None);
        assert!(r.get("prop2_upper").unwrap().value != 0.0 || r.get("prop2_lower").unwrap().value != 0.0);
        assert!(r.get("cor2_upper_unbounded").is_some());
    }

    #[test]
    fn vacuous_flagging() {
        let e = entry("x", Side::Upper, 1.2);
        assert!(e.vacuous);
        let e = entry("x", Side::Lower, -1.0);
        assert!(e.vacuous);
        let e = entry("x", Side::Upper, 0.9);
        assert!(!e.vacuous);
    }

    #[test]
    fn report_bounds_are_ordered_on_the_toy_surface() {
        let s = toy_surface();
        let sch = schedule();
        let snaps = flat_snaps(4);
        for mode in [PbMode::Approx, PbMode::Empirical] {
            let c = ctx(&s, &sch, mode, &snaps);
            for t in [0.45, 0.7, 1.0, 1.5, 2.5] {
                let r = c.report_at(t, None).unwrap();
                if let (Some(lo), Some(hi)) = (r.max_lower(), r.min_upper()) {
                    assert!(lo <= hi + 1e-9, "t={t}: max lower {lo} vs min upper {hi}");
                }
            }
        }
    }
}
