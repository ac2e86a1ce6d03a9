//! Head-to-head comparison of the alarm strategy against no-alarm
//! strategies holding the discounted-equivalent initial capital, on shared
//! claim paths.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CapitalSchedule, RiskModel};
use crate::simulate::{path_rng, CapitalLevel, ClaimSampler, SimError};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("rates must be nonnegative (infinity allowed), got {0}")]
    BadRate(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Initial capital whose lump sum at time zero is worth the whole injection
/// schedule discounted at rate `r`; infinite `r` prices future injections
/// at zero.
pub fn equivalent_initial_capital(schedule: &CapitalSchedule, r: f64) -> f64 {
    let mut total = schedule.base_capital;
    for e in &schedule.events {
        total += if r.is_infinite() { 0.0 } else { e.amount * (-r * e.time).exp() };
    }
    total
}

/// Survival curves of the alarm system and of each equivalent-capital
/// no-alarm system, estimated on one shared path pool.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub schedule: CapitalSchedule,
    pub rates: Vec<f64>,
    pub equivalent_capitals: Vec<f64>,
    pub times: Vec<f64>,
    pub survival_alarm: Vec<f64>,
    /// One row per rate.
    pub survival_noalarm: Vec<Vec<f64>>,
    /// `delta[r][t] = P(alarm system ruined by t) - P(no-alarm ruined by t)`;
    /// positive means the lump-sum system is ahead at t.
    pub delta: Vec<Vec<f64>>,
    pub delta_stderr: Vec<Vec<f64>>,
    /// First grid time where delta stays nonpositive for two consecutive
    /// grid points, per rate.
    pub crossover_times: Vec<Option<f64>>,
    pub n_paths: u64,
}

impl ComparisonReport {
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|g| (g - t).abs() < 1e-9)
    }

    /// Signed ruin-probability difference at a grid time.
    pub fn delta_at(&self, rate_idx: usize, t: f64) -> Option<(f64, f64)> {
        let ti = self.time_index(t)?;
        Some((self.delta[rate_idx][ti], self.delta_stderr[rate_idx][ti]))
    }
}

/// Estimate survival for the injected schedule and for every
/// constant-capital alternative in one pass per path (common random
/// numbers), so rate-monotonicity comparisons hold exactly.
pub fn survival_table(
    model: &RiskModel,
    schedule: &CapitalSchedule,
    rates: &[f64],
    grid: &[f64],
    n_paths: u64,
    master_seed: u64,
) -> Result<ComparisonReport, CompareError> {
    if n_paths == 0 {
        return Err(CompareError::Sim(SimError::NoPaths));
    }
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CompareError::Sim(SimError::BadTimeGrid));
    }
    for r in rates {
        if r.is_nan() || *r < 0.0 {
            return Err(CompareError::BadRate(*r));
        }
    }
    let horizon = *grid.last().unwrap();
    let equivalent_capitals: Vec<f64> =
        rates.iter().map(|r| equivalent_initial_capital(schedule, *r)).collect();
    let stair = CapitalLevel::from_schedule(schedule);
    let sampler = ClaimSampler::new(&model.claims);
    let n_times = grid.len();
    let n_rates = rates.len();

    // Ruin-time bins plus open/close difference arrays for the paired
    // per-path difference D(t) = 1{alarm ruined by t} - 1{no-alarm ruined
    // by t}, which is +1 on [alarm bin, no-alarm bin) and -1 on the
    // reversed interval. Arrays carry one extra slot for "past the grid".
    struct Acc {
        alarm: Vec<u64>,
        rate: Vec<u64>,
        pos_open: Vec<u64>,
        pos_close: Vec<u64>,
        neg_open: Vec<u64>,
        neg_close: Vec<u64>,
    }
    let slots = n_rates * (n_times + 1);
    let zero = || Acc {
        alarm: vec![0; n_times],
        rate: vec![0; n_rates * n_times],
        pos_open: vec![0; slots],
        pos_close: vec![0; slots],
        neg_open: vec![0; slots],
        neg_close: vec![0; slots],
    };

    let bin = |t: f64| -> usize {
        // One past the end marks "no ruin within the grid".
        grid.partition_point(|g| *g < t)
    };

    let acc = (0..n_paths)
        .into_par_iter()
        .fold(zero, |mut acc, idx| {
            let mut rng = path_rng(master_seed, idx);
            let mut t = 0.0;
            let mut claims = 0.0;
            let mut running_max = f64::NEG_INFINITY;
            let mut alarm_rt: Option<f64> = None;
            // First crossing per constant capital, via the shared running
            // maximum of the net outgo.
            let mut rate_rt: Vec<Option<f64>> = vec![None; n_rates];
            let mut alive = n_rates;
            loop {
                let u1: f64 = rand::Rng::gen(&mut rng);
                t += -(1.0 - u1).ln() / model.lambda;
                if t > horizon {
                    break;
                }
                let u2: f64 = rand::Rng::gen(&mut rng);
                claims += sampler.sample(u2);
                let outgo = claims - model.premium_rate * t;
                if alarm_rt.is_none() && outgo > stair.at(t) - model.ruin_level {
                    alarm_rt = Some(t);
                }
                if outgo > running_max {
                    running_max = outgo;
                    for (ri, cap) in equivalent_capitals.iter().enumerate() {
                        if rate_rt[ri].is_none() && running_max > cap - model.ruin_level {
                            rate_rt[ri] = Some(t);
                            alive -= 1;
                        }
                    }
                }
                if alarm_rt.is_some() && alive == 0 {
                    break;
                }
            }
            let ab = alarm_rt.map(&bin).unwrap_or(n_times);
            if ab < n_times {
                acc.alarm[ab] += 1;
            }
            for ri in 0..n_rates {
                let rb = rate_rt[ri].map(&bin).unwrap_or(n_times);
                if rb < n_times {
                    acc.rate[ri * n_times + rb] += 1;
                }
                let base = ri * (n_times + 1);
                if ab < rb {
                    acc.pos_open[base + ab] += 1;
                    acc.pos_close[base + rb] += 1;
                } else if rb < ab {
                    acc.neg_open[base + rb] += 1;
                    acc.neg_close[base + ab] += 1;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            let merge = |xs: &mut Vec<u64>, ys: Vec<u64>| {
                for (x, y) in xs.iter_mut().zip(ys) {
                    *x += y;
                }
            };
            merge(&mut a.alarm, b.alarm);
            merge(&mut a.rate, b.rate);
            merge(&mut a.pos_open, b.pos_open);
            merge(&mut a.pos_close, b.pos_close);
            merge(&mut a.neg_open, b.neg_open);
            merge(&mut a.neg_close, b.neg_close);
            a
        });

    let n = n_paths as f64;
    let cum = |bins: &[u64]| -> Vec<f64> {
        let mut acc = 0u64;
        bins.iter()
            .map(|b| {
                acc += b;
                acc as f64 / n
            })
            .collect()
    };
    let survival_alarm: Vec<f64> = cum(&acc.alarm).into_iter().map(|p| 1.0 - p).collect();
    let mut survival_noalarm = Vec::with_capacity(n_rates);
    let mut delta = Vec::with_capacity(n_rates);
    let mut delta_stderr = Vec::with_capacity(n_rates);
    let mut crossover_times = Vec::with_capacity(n_rates);
    for ri in 0..n_rates {
        let row = cum(&acc.rate[ri * n_times..(ri + 1) * n_times]);
        let surv: Vec<f64> = row.iter().map(|p| 1.0 - p).collect();
        let base = ri * (n_times + 1);
        let mut d_row = Vec::with_capacity(n_times);
        let mut se_row = Vec::with_capacity(n_times);
        let mut run_pos = 0i64;
        let mut run_neg = 0i64;
        for ti in 0..n_times {
            run_pos += acc.pos_open[base + ti] as i64 - acc.pos_close[base + ti] as i64;
            run_neg += acc.neg_open[base + ti] as i64 - acc.neg_close[base + ti] as i64;
            let mean = (run_pos - run_neg) as f64 / n;
            let second_moment = (run_pos + run_neg) as f64 / n;
            let var = (second_moment - mean * mean).max(0.0);
            d_row.push(mean);
            se_row.push((var / n).sqrt());
        }
        let crossover = first_sustained_nonpositive(grid, &d_row);
        survival_noalarm.push(surv);
        delta.push(d_row);
        delta_stderr.push(se_row);
        crossover_times.push(crossover);
    }

    Ok(ComparisonReport {
        schedule: schedule.clone(),
        rates: rates.to_vec(),
        equivalent_capitals,
        times: grid.to_vec(),
        survival_alarm,
        survival_noalarm,
        delta,
        delta_stderr,
        crossover_times,
        n_paths,
    })
}

/// First grid time where the difference is nonpositive for two consecutive
/// grid points with at least one strict win; single-point dips are noise
/// and the shared all-zero stretch before the first claim is a tie, not a
/// win.
fn first_sustained_nonpositive(times: &[f64], delta: &[f64]) -> Option<f64> {
    delta
        .windows(2)
        .position(|w| w[0] <= 0.0 && w[1] <= 0.0 && (w[0] < 0.0 || w[1] < 0.0))
        .map(|i| times[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClaimDistribution, InjectionEvent};
    use crate::simulate::time_grid;

    fn paper_schedule() -> CapitalSchedule {
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

    #[test]
    fn equivalent_capital_examples() {
        let s = paper_schedule();
        assert!((equivalent_initial_capital(&s, 0.0) - 70.0).abs() < 1e-12);
        assert!((equivalent_initial_capital(&s, 0.10) - 68.540).abs() < 5e-4);
        assert_eq!(equivalent_initial_capital(&s, f64::INFINITY), 50.0);
        // Non-increasing in the rate.
        let mut prev = f64::INFINITY;
        for r in [0.0, 0.1, 0.3, 0.5, 1.0, 5.0, f64::INFINITY] {
            let v = equivalent_initial_capital(&s, r);
            assert!(v <= prev);
            prev = v;
        }
    }

    fn small_report() -> ComparisonReport {
        let model = RiskModel::new(
            ClaimDistribution::Pareto { scale: 1.0, shape: 0.95 },
            20.0,
            40.0,
            50.0,
            0.0,
        )
        .unwrap();
        let grid = time_grid(2.0, 0.01);
        survival_table(
            &model,
            &paper_schedule(),
            &[0.0, 0.1, 1.0, f64::INFINITY],
            &grid,
            20_000,
            31,
        )
        .unwrap()
    }

    #[test]
    fn survivals_start_at_one_and_fall() {
        let r = small_report();
        assert_eq!(r.survival_alarm[0], 1.0);
        for row in &r.survival_noalarm {
            assert_eq!(row[0], 1.0);
            assert!(row.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!(r.survival_alarm.windows(2).all(|w| w[1] <= w[0]));
        for d in &r.delta {
            assert_eq!(d[0], 0.0);
        }
    }

    #[test]
    fn rate_dominance_is_exact_under_common_paths() {
        let r = small_report();
        for ti in 0..r.times.len() {
            for ri in 1..r.rates.len() {
                assert!(
                    r.survival_noalarm[ri - 1][ti] >= r.survival_noalarm[ri][ti],
                    "lower rate means more initial capital means better survival"
                );
                assert!(r.delta[ri - 1][ti] >= r.delta[ri][ti], "delta anti-monotone in rate");
            }
        }
    }

    #[test]
    fn alarm_system_equals_infinite_rate_system_before_first_injection() {
        let r = small_report();
        let inf_idx = r.rates.iter().position(|x| x.is_infinite()).unwrap();
        for (ti, t) in r.times.iter().enumerate() {
            if *t <= 0.29 {
                assert_eq!(r.survival_alarm[ti], r.survival_noalarm[inf_idx][ti]);
            }
        }
    }

    #[test]
    fn delta_matches_survival_difference() {
        let r = small_report();
        for ri in 0..r.rates.len() {
            for ti in 0..r.times.len() {
                let expect = r.survival_noalarm[ri][ti] - r.survival_alarm[ti];
                assert!(
                    (r.delta[ri][ti] - expect).abs() < 1e-12,
                    "delta is the paired ruin-probability difference"
                );
            }
        }
    }

    #[test]
    fn crossover_requires_two_consecutive_nonpositive_points() {
        let times = vec![0.0, 0.1, 0.2, 0.3, 0.4];
        assert_eq!(
            first_sustained_nonpositive(&times, &[0.0, 0.01, -0.01, 0.02, 0.01]),
            None,
            "single dip is noise"
        );
        assert_eq!(
            first_sustained_nonpositive(&times, &[0.0, 0.02, -0.01, -0.02, 0.0]),
            Some(0.2)
        );
        assert_eq!(
            first_sustained_nonpositive(&times, &[0.0, 0.0, 0.01, 0.0, -0.01]),
            Some(0.3),
            "ties only count once a strict win appears"
        );
    }
}
