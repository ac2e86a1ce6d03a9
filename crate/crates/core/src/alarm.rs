//! Alarm times from ruin-time distributions and multi-alarm
//! capital-injection schedules.
//!
//! An alarm sounds at the first time s where, given survival so far, ruin
//! within the next `lead_window` is likely enough (the alpha condition)
//! while survival to s itself is still likely (the beta condition):
//! `survival(s) >= max(1 - beta, survival(s + d) / alpha)`.

use thiserror::Error;

use crate::model::{CapitalSchedule, InjectionEvent, RiskModel};
use crate::simulate::{
    estimate_conditional_ruin_cdf, time_grid, RuinCdf, SimError, SimSettings,
};

#[derive(Debug, Error)]
pub enum AlarmError {
    #[error("invalid alarm parameters: {0}")]
    BadParams(String),
    #[error(
        "censored alarm search: the beta condition still holds at s={last_alive} \
         but s + lead window runs past the estimated horizon {horizon}"
    )]
    Censored { last_alive: f64, horizon: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Parameters of the alarm definition. `alpha` caps the conditional
/// survival over the lead window, `beta` caps the pre-alarm ruin
/// probability, `lead_window` is the look-ahead d.
#[derive(Debug, Clone, Copy)]
pub struct AlarmParams {
    pub alpha: f64,
    pub beta: f64,
    pub lead_window: f64,
    pub grid_dt: f64,
    pub horizon: f64,
}

impl AlarmParams {
    pub fn validate(&self) -> Result<(), AlarmError> {
        let ok_prob = |v: f64| v > 0.0 && v < 1.0;
        if !ok_prob(self.alpha) || !ok_prob(self.beta) {
            return Err(AlarmError::BadParams(format!(
                "alpha and beta must lie in (0,1), got {} and {}",
                self.alpha, self.beta
            )));
        }
        if !(self.lead_window > 0.0) {
            return Err(AlarmError::BadParams("lead window must be > 0".into()));
        }
        if !(self.grid_dt > 0.0) || self.lead_window < self.grid_dt {
            return Err(AlarmError::BadParams(
                "grid step must be positive and no larger than the lead window".into(),
            ));
        }
        if !(self.horizon > self.lead_window) {
            return Err(AlarmError::BadParams("horizon must exceed the lead window".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlarmStatus {
    At(f64),
    Never,
}

#[derive(Debug, Clone, Copy)]
pub struct AlarmResult {
    pub status: AlarmStatus,
    /// First grid time where the beta condition failed, when the scan got
    /// there.
    pub beta_fail_time: Option<f64>,
    /// Crossing margin `alpha * survival(s) - survival(s+d)` at the alarm.
    pub margin: Option<f64>,
}

/// Scan a ruin-time cdf for the first grid time satisfying both alarm
/// conditions. `search_after` restricts the scan to grid times strictly
/// later; `None` starts at time zero, so an instantaneous alarm is
/// reported as 0.
///
/// The scan stops early once the beta condition fails: survival only falls
/// with time, so no later point can satisfy it. If the beta condition is
/// still alive when s + lead window leaves the grid and any ruin mass was
/// observed, the search is censored by the horizon and an error says so.
pub fn find_alarm(
    cdf: &RuinCdf,
    params: &AlarmParams,
    search_after: Option<f64>,
) -> Result<AlarmResult, AlarmError> {
    params.validate()?;
    let horizon = *cdf.times.last().unwrap();
    let d = params.lead_window;
    let mut last_alive = 0.0;
    for (i, &s) in cdf.times.iter().enumerate() {
        if let Some(a) = search_after {
            if s <= a {
                continue;
            }
        }
        let surv_s = 1.0 - cdf.psi[i];
        if surv_s < 1.0 - params.beta {
            return Ok(AlarmResult {
                status: AlarmStatus::Never,
                beta_fail_time: Some(s),
                margin: None,
            });
        }
        last_alive = s;
        if s + d > horizon {
            // Cannot evaluate the look-ahead any more. With no ruin mass at
            // all on the grid the alpha condition is unsatisfiable at any
            // horizon, so report Never instead of censoring.
            if *cdf.psi.last().unwrap() == 0.0 {
                return Ok(AlarmResult { status: AlarmStatus::Never, beta_fail_time: None, margin: None });
            }
            return Err(AlarmError::Censored { last_alive, horizon });
        }
        let surv_ahead = 1.0 - cdf.interp(s + d);
        let margin = params.alpha * surv_s - surv_ahead;
        if margin >= 0.0 {
            return Ok(AlarmResult {
                status: AlarmStatus::At(s),
                beta_fail_time: None,
                margin: Some(margin),
            });
        }
    }
    Err(AlarmError::Censored { last_alive, horizon })
}

/// How to size the injection at each alarm.
#[derive(Debug, Clone)]
pub enum InjectionPolicy {
    /// Each alarm injects this fraction of the base capital.
    Fraction(f64),
    /// Explicit amounts; the schedule stops when the list is exhausted.
    Explicit(Vec<f64>),
}

impl InjectionPolicy {
    fn amount(&self, alarm_index: usize, base: f64) -> Option<f64> {
        match self {
            InjectionPolicy::Fraction(f) => Some(f * base),
            InjectionPolicy::Explicit(v) => v.get(alarm_index).copied(),
        }
    }

    fn cap(&self, max_alarms: usize) -> usize {
        match self {
            InjectionPolicy::Fraction(_) => max_alarms,
            InjectionPolicy::Explicit(v) => max_alarms.min(v.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    NoFurtherAlarm,
    MaxAlarms,
    Horizon,
}

/// Per-alarm diagnostics recorded while the schedule is built.
#[derive(Debug, Clone)]
pub struct AlarmRecord {
    pub time: f64,
    pub injection: f64,
    pub cumulative_capital: f64,
    /// Survivor fraction of the injected process through this alarm.
    pub p_b_empirical: f64,
    /// `(1 - beta)^i`, the survival floor implied by the alarm definition.
    pub p_b_approx: f64,
    /// In-sample conditional ruin mass in (A_i, A_i + d], which the alarm
    /// definition keeps at or above (1 - alpha)(1 - beta).
    pub window_mass: f64,
    pub survivors: u64,
    pub topped_up_paths: u64,
}

/// A built multi-alarm schedule with its estimation diagnostics.
#[derive(Debug, Clone)]
pub struct AlarmSystem {
    pub schedule: CapitalSchedule,
    pub params: AlarmParams,
    pub records: Vec<AlarmRecord>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl AlarmSystem {
    /// Survivor probability through alarm j (1-based); 1 for j = 0.
    pub fn p_b(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.records[j - 1].p_b_empirical
        }
    }
}

/// Iteratively build the alarm schedule: estimate the ruin-time cdf of the
/// injected process conditional on survival through the latest alarm,
/// search it for the next alarm strictly later, and inject there. Stops on
/// no-further-alarm, the alarm cap, or horizon censoring (with a warning).
pub fn build_alarm_system(
    model: &RiskModel,
    params: &AlarmParams,
    policy: &InjectionPolicy,
    max_alarms: usize,
    sim: &SimSettings,
) -> Result<AlarmSystem, AlarmError> {
    params.validate()?;
    if let InjectionPolicy::Fraction(f) = policy {
        if !(f.is_finite() && *f >= 0.0) {
            return Err(AlarmError::BadParams("injection fraction must be >= 0".into()));
        }
    }
    if let InjectionPolicy::Explicit(v) = policy {
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(AlarmError::BadParams("explicit injections must be >= 0".into()));
        }
    }
    let grid = time_grid(params.horizon, params.grid_dt);
    let cap = policy.cap(max_alarms);
    let mut schedule = CapitalSchedule::constant(model.initial_capital);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut termination = Termination::MaxAlarms;

    for alarm_index in 0..=cap {
        let cond = estimate_conditional_ruin_cdf(model, &schedule, params.horizon, &grid, sim)?;
        if cond.survivors < sim.min_survivors.min(sim.n_paths) {
            warnings.push(format!(
                "conditional estimate after alarm {} rests on only {} survivors",
                alarm_index, cond.survivors
            ));
        }
        if let Some(last) = records.last_mut() {
            let r: &mut AlarmRecord = last;
            r.p_b_empirical = cond.p_b;
            r.survivors = cond.survivors;
            r.topped_up_paths = cond.topped_up_paths;
            r.window_mass =
                cond.cdf.interp(r.time + params.lead_window) - cond.cdf.interp(r.time);
        }
        if alarm_index == cap {
            termination = Termination::MaxAlarms;
            break;
        }
        let search_after = (alarm_index > 0).then(|| schedule.event_time(schedule.len()));
        let found = match find_alarm(&cond.cdf, params, search_after) {
            Ok(r) => r,
            Err(AlarmError::Censored { last_alive, horizon }) => {
                warnings.push(format!(
                    "alarm search after alarm {alarm_index} censored at horizon {horizon} \
                     (beta condition alive at {last_alive}); extend the horizon to resolve"
                ));
                termination = Termination::Horizon;
                break;
            }
            Err(e) => return Err(e),
        };
        match found.status {
            AlarmStatus::Never => {
                termination = Termination::NoFurtherAlarm;
                break;
            }
            AlarmStatus::At(time) => {
                let injection = policy
                    .amount(alarm_index, model.initial_capital)
                    .expect("policy cap bounds the index");
                let mut events = schedule.events.clone();
                events.push(InjectionEvent { time, amount: injection });
                schedule = CapitalSchedule::new(model.initial_capital, events, schedule.rate)
                    .map_err(|e| AlarmError::BadParams(e.to_string()))?;
                records.push(AlarmRecord {
                    time,
                    injection,
                    cumulative_capital: schedule.cumulative(schedule.len()),
                    p_b_empirical: f64::NAN, // filled by the next estimation round
                    p_b_approx: (1.0 - params.beta).powi(records.len() as i32 + 1),
                    window_mass: f64::NAN,
                    survivors: 0,
                    topped_up_paths: 0,
                });
                if time + params.lead_window > params.horizon - params.grid_dt {
                    warnings.push(format!(
                        "alarm window at {time} touches the horizon {}; estimates may be \
                         censored",
                        params.horizon
                    ));
                }
            }
        }
    }

    Ok(AlarmSystem { schedule, params: *params, records, termination, warnings })
}

/// Independent re-estimate of the post-alarm window ruin mass for each
/// alarm: `P(A_i < T <= A_i + d | survived through the previous alarms)`,
/// which the alarm construction promises is at least
/// `(1 - alpha)(1 - beta)`. Flags alarms where even the 3-sigma upper edge
/// falls short.
#[derive(Debug, Clone)]
pub struct ConsequenceRow {
    pub alarm_index: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub flagged: bool,
}

pub fn alarm_consequence_check(
    model: &RiskModel,
    system: &AlarmSystem,
    sim: &SimSettings,
) -> Result<Vec<ConsequenceRow>, AlarmError> {
    let params = &system.params;
    let grid = time_grid(params.horizon, params.grid_dt);
    let threshold = (1.0 - params.alpha) * (1.0 - params.beta);
    let mut rows = Vec::new();
    for (i, rec) in system.records.iter().enumerate() {
        // Condition on surviving the schedule prefix before this alarm; the
        // alarm's own injection plays no part in its threat estimate.
        let prefix = system.schedule.prefix(i);
        let cond = estimate_conditional_ruin_cdf(model, &prefix, params.horizon, &grid, sim)?;
        let estimate =
            cond.cdf.interp(rec.time + params.lead_window) - cond.cdf.interp(rec.time);
        let stderr = (estimate * (1.0 - estimate) / cond.survivors.max(1) as f64).sqrt();
        rows.push(ConsequenceRow {
            alarm_index: i + 1,
            estimate,
            stderr,
            threshold,
            flagged: estimate + 3.0 * stderr < threshold,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64, d: f64) -> AlarmParams {
        AlarmParams { alpha, beta, lead_window: d, grid_dt: 0.1, horizon: 4.0 }
    }

    /// Piecewise-linear synthetic cdf on a 0.1 grid.
    fn synthetic_cdf(psi: Vec<f64>) -> RuinCdf {
        let times: Vec<f64> = (0..psi.len()).map(|i| i as f64 * 0.1).collect();
        let stderr = vec![0.0; psi.len()];
        RuinCdf { times, psi, stderr, n_eff: 1_000_000 }
    }

    fn ramp_cdf() -> RuinCdf {
        // psi climbs linearly to 0.8 at t=4.
        synthetic_cdf((0..=40).map(|i| 0.02 * i as f64).collect())
    }

    #[test]
    fn alarm_on_synthetic_ramp() {
        let cdf = ramp_cdf();
        // survival(s) = 1 - 0.2s, so alpha*surv(s) >= surv(s+d) crosses at
        // s = 5 - d/(1-alpha); with alpha=0.8, d=0.95 that is 0.25, and the
        // first grid point at or after it is 0.3.
        let r = find_alarm(&cdf, &params(0.8, 0.5, 0.95), None).unwrap();
        let AlarmStatus::At(a) = r.status else { panic!("expected alarm") };
        assert!((a - 0.3).abs() < 1e-12, "got {a}");
        assert!(r.margin.unwrap() >= 0.0);
    }

    #[test]
    fn beta_failure_gives_never_with_diagnostics() {
        let cdf = ramp_cdf();
        // beta=0.05 dies at psi > 0.05, i.e. t=0.3, before any alpha
        // crossing under a weak alpha.
        let r = find_alarm(&cdf, &params(0.5, 0.05, 1.0), None).unwrap();
        assert_eq!(r.status, AlarmStatus::Never);
        assert!((r.beta_fail_time.unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_ruin_mass_means_never() {
        let cdf = synthetic_cdf(vec![0.0; 41]);
        let r = find_alarm(&cdf, &params(0.4, 0.5, 1.0), None).unwrap();
        assert_eq!(r.status, AlarmStatus::Never);
    }

    #[test]
    fn censoring_is_an_error() {
        // Ruin mass exists but the beta condition survives past horizon-d.
        let mut psi = vec![0.0; 41];
        for (i, p) in psi.iter_mut().enumerate() {
            *p = 0.001 * i as f64;
        }
        let cdf = synthetic_cdf(psi);
        match find_alarm(&cdf, &params(0.1, 0.5, 1.0), None) {
            Err(AlarmError::Censored { .. }) => {}
            other => panic!("expected censoring, got {other:?}"),
        }
    }

    #[test]
    fn instantaneous_alarm_at_zero() {
        // Massive ruin probability within the window right away.
        let mut psi = vec![0.0];
        psi.extend((1..=40).map(|i| (0.5 + 0.01 * i as f64).min(1.0)));
        let cdf = synthetic_cdf(psi);
        let r = find_alarm(&cdf, &params(0.45, 0.5, 1.0), None).unwrap();
        assert_eq!(r.status, AlarmStatus::At(0.0));
    }

    #[test]
    fn alarm_time_monotone_in_lead_window_and_alpha() {
        let cdf = ramp_cdf();
        let time_of = |alpha: f64, d: f64| -> Option<f64> {
            match find_alarm(&cdf, &params(alpha, 0.9, d), None).unwrap().status {
                AlarmStatus::At(a) => Some(a),
                AlarmStatus::Never => None,
            }
        };
        let mut prev = f64::INFINITY;
        for d in [0.5, 0.95, 1.5, 2.0] {
            if let Some(a) = time_of(0.8, d) {
                assert!(a <= prev, "alarm time should fall as the window grows");
                prev = a;
            }
        }
        let mut prev = f64::INFINITY;
        for alpha in [0.75, 0.80, 0.85, 0.90] {
            if let Some(a) = time_of(alpha, 0.95) {
                assert!(a <= prev, "alarm time should fall as alpha grows");
                prev = a;
            }
        }
    }

    #[test]
    fn beta_only_flips_status_never_the_time() {
        let cdf = ramp_cdf();
        let mut seen = Vec::new();
        for beta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            match find_alarm(&cdf, &params(0.8, beta, 0.95), None).unwrap().status {
                AlarmStatus::At(a) => seen.push(a),
                AlarmStatus::Never => {}
            }
        }
        assert!(seen.len() >= 2, "want at least two existing alarms");
        for pair in seen.windows(2) {
            assert_eq!(pair[0], pair[1], "existing alarms must agree across beta");
        }
    }

    #[test]
    fn refinement_only_moves_the_alarm_within_one_cell() {
        let coarse = ramp_cdf();
        // Refine x3 by linear interpolation.
        let times: Vec<f64> = (0..=120).map(|i| i as f64 * 0.1 / 3.0).collect();
        let psi: Vec<f64> = times.iter().map(|t| coarse.interp(*t)).collect();
        let fine = RuinCdf { stderr: vec![0.0; psi.len()], times, psi, n_eff: 1 };
        let p = AlarmParams { grid_dt: 0.1 / 3.0, ..params(0.8, 0.5, 0.95) };
        let a_coarse = match find_alarm(&coarse, &params(0.8, 0.5, 0.95), None).unwrap().status {
            AlarmStatus::At(a) => a,
            _ => panic!(),
        };
        let a_fine = match find_alarm(&fine, &p, None).unwrap().status {
            AlarmStatus::At(a) => a,
            _ => panic!(),
        };
        assert!(a_fine <= a_coarse + 1e-12);
        assert!(a_fine > a_coarse - 0.1 - 1e-12);
    }

    #[test]
    fn param_validation() {
        assert!(params(1.2, 0.5, 1.0).validate().is_err());
        assert!(params(0.4, 0.0, 1.0).validate().is_err());
        assert!(AlarmParams { grid_dt: 2.0, ..params(0.4, 0.5, 1.0) }.validate().is_err());
        assert!(AlarmParams { horizon: 0.5, ..params(0.4, 0.5, 1.0) }.validate().is_err());
    }
}
