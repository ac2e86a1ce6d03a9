//! Deterministic, parallel Monte Carlo engine for ruin-time estimation.
//!
//! All estimators are pure functions of (inputs, master seed): paths are
//! simulated from per-path counter-based streams and merged with
//! order-independent integer accumulation, so results are bit-identical
//! across worker counts and across runs.

mod rng;
mod surface;

pub use rng::{path_rng, ClaimSampler};
pub use surface::{PsiSurface, SurfaceCsvError};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CapitalSchedule, RiskModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time grid must be ascending and start at 0")]
    BadTimeGrid,
    #[error("capital grid must be strictly ascending and nonempty")]
    BadCapitalGrid,
    #[error("n_paths must be >= 1")]
    NoPaths,
    #[error(
        "no path survived the schedule prefix through t={condition_time} \
         after {total_paths} simulated paths; the schedule is inconsistent \
         with the model"
    )]
    NoSurvivors { condition_time: f64, total_paths: u64 },
}

/// One claim arrival: the instant and the net outgo (aggregate claims less
/// premium collected) just after the claim lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEvent {
    pub time: f64,
    pub cumulative_outgo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuinOutcome {
    Ruined { at: f64 },
    Survived { horizon: f64 },
}

impl RuinOutcome {
    pub fn ruin_time(&self) -> Option<f64> {
        match self {
            RuinOutcome::Ruined { at } => Some(*at),
            RuinOutcome::Survived { .. } => None,
        }
    }
}

/// Capital available at time t, as a function the ruin check evaluates at
/// claim instants. Staircase levels hold the cumulative injected capital on
/// each half-open inter-event interval.
#[derive(Debug, Clone)]
pub enum CapitalLevel {
    Constant(f64),
    Staircase { times: Vec<f64>, cumulative: Vec<f64> },
}

impl CapitalLevel {
    pub fn from_schedule(schedule: &CapitalSchedule) -> Self {
        if schedule.is_empty() {
            return CapitalLevel::Constant(schedule.base_capital);
        }
        let times: Vec<f64> = schedule.events.iter().map(|e| e.time).collect();
        let cumulative: Vec<f64> = (0..=schedule.len()).map(|m| schedule.cumulative(m)).collect();
        CapitalLevel::Staircase { times, cumulative }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            CapitalLevel::Constant(u) => *u,
            CapitalLevel::Staircase { times, cumulative } => {
                cumulative[times.partition_point(|a| *a < t)]
            }
        }
    }
}

/// Simulation budget shared by the estimators that condition on surviving a
/// schedule prefix.
#[derive(Debug, Clone, Copy)]
pub struct SimSettings {
    pub n_paths: u64,
    pub master_seed: u64,
    /// Quota of surviving paths for conditional estimates; full batches of
    /// `n_paths` fresh paths are added until the quota is met.
    pub min_survivors: u64,
    /// Hard cap on the total number of simulated paths per estimate.
    pub max_total_paths: u64,
}

impl SimSettings {
    pub fn new(n_paths: u64, master_seed: u64) -> Self {
        Self { n_paths, master_seed, min_survivors: 10_000, max_total_paths: 20 * n_paths.max(1) }
    }
}

struct PathStream<'a> {
    rng: rand_chacha::ChaCha8Rng,
    sampler: &'a ClaimSampler,
    lambda: f64,
    premium_rate: f64,
    horizon: f64,
    t: f64,
    claims: f64,
}

impl<'a> PathStream<'a> {
    fn new(model: &RiskModel, sampler: &'a ClaimSampler, horizon: f64, master_seed: u64, path_index: u64) -> Self {
        Self {
            rng: path_rng(master_seed, path_index),
            sampler,
            lambda: model.lambda,
            premium_rate: model.premium_rate,
            horizon,
            t: 0.0,
            claims: 0.0,
        }
    }
}

impl Iterator for PathStream<'_> {
    type Item = PathEvent;

    #[inline]
    fn next(&mut self) -> Option<PathEvent> {
        let u1 = rng::next_uniform(&mut self.rng);
        self.t += -(1.0 - u1).ln() / self.lambda;
        if self.t > self.horizon {
            return None;
        }
        let u2 = rng::next_uniform(&mut self.rng);
        self.claims += self.sampler.sample(u2);
        Some(PathEvent { time: self.t, cumulative_outgo: self.claims - self.premium_rate * self.t })
    }
}

/// Materialize all claim arrivals of one path over (0, horizon].
/// Identical (model, horizon, master_seed, path_index) give bit-identical
/// sequences.
pub fn simulate_path(
    model: &RiskModel,
    horizon: f64,
    master_seed: u64,
    path_index: u64,
) -> Vec<PathEvent> {
    let sampler = ClaimSampler::new(&model.claims);
    PathStream::new(model, &sampler, horizon, master_seed, path_index).collect()
}

/// First claim instant at which the net outgo exceeds the available capital
/// less the ruin level. Premiums flow in continuously and injections are
/// nonnegative, so ruin can only happen at claim instants.
pub fn ruin_time(
    path: &[PathEvent],
    level: &CapitalLevel,
    ruin_level: f64,
    horizon: f64,
) -> RuinOutcome {
    for e in path {
        if e.cumulative_outgo > level.at(e.time) - ruin_level {
            return RuinOutcome::Ruined { at: e.time };
        }
    }
    RuinOutcome::Survived { horizon }
}

#[inline]
fn stream_ruin_time(stream: &mut PathStream<'_>, level: &CapitalLevel, ruin_level: f64) -> Option<f64> {
    for e in stream {
        if e.cumulative_outgo > level.at(e.time) - ruin_level {
            return Some(e.time);
        }
    }
    None
}

/// Empirical ruin-time distribution on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinCdf {
    pub times: Vec<f64>,
    pub psi: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Denominator of the estimate (survivor count for conditional cdfs).
    pub n_eff: u64,
}

impl RuinCdf {
    /// Linear interpolation of the cdf between grid points; clamped at the
    /// ends.
    pub fn interp(&self, t: f64) -> f64 {
        interp_grid(&self.times, &self.psi, t)
    }

    pub fn survival(&self, idx: usize) -> f64 {
        1.0 - self.psi[idx]
    }
}

pub(crate) fn interp_grid(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let hi = xs.partition_point(|v| *v < x);
    let (x0, x1) = (xs[hi - 1], xs[hi]);
    let w = (x - x0) / (x1 - x0);
    ys[hi - 1] * (1.0 - w) + ys[hi] * w
}

/// Uniform grid 0, dt, 2*dt, ..., covering `horizon`.
pub fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

fn validate_time_grid(grid: &[f64]) -> Result<(), SimError> {
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::BadTimeGrid);
    }
    Ok(())
}

/// Index of the first grid point at or after `t`, or None past the grid end.
#[inline]
fn grid_bin(grid: &[f64], t: f64) -> Option<usize> {
    let idx = grid.partition_point(|g| *g < t);
    (idx < grid.len()).then_some(idx)
}

fn cdf_from_bins(grid: &[f64], bins: &[u64], denom: u64) -> RuinCdf {
    let n = denom.max(1) as f64;
    let mut acc = 0u64;
    let mut psi = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &b in bins {
        acc += b;
        let p = acc as f64 / n;
        psi.push(p);
        stderr.push((p * (1.0 - p) / n).sqrt());
    }
    RuinCdf { times: grid.to_vec(), psi, stderr, n_eff: denom }
}

/// Estimate the ruin-time cdf of the level-process over a time grid.
/// Deterministic in `master_seed` regardless of parallel chunking.
pub fn estimate_ruin_cdf(
    model: &RiskModel,
    level: &CapitalLevel,
    horizon: f64,
    n_paths: u64,
    master_seed: u64,
    grid: &[f64],
) -> Result<RuinCdf, SimError> {
    if n_paths == 0 {
        return Err(SimError::NoPaths);
    }
    validate_time_grid(grid)?;
    let sampler = ClaimSampler::new(&model.claims);
    let bins = (0..n_paths)
        .into_par_iter()
        .fold(
            || vec![0u64; grid.len()],
            |mut bins, idx| {
                let mut stream = PathStream::new(model, &sampler, horizon, master_seed, idx);
                if let Some(rt) = stream_ruin_time(&mut stream, level, model.ruin_level) {
                    if let Some(b) = grid_bin(grid, rt) {
                        bins[b] += 1;
                    }
                }
                bins
            },
        )
        .reduce(|| vec![0u64; grid.len()], merge_counts);
    Ok(cdf_from_bins(grid, &bins, n_paths))
}

fn merge_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Conditional ruin-time distribution given survival of the injected process
/// through the last event of `schedule`, plus the survival probability of
/// that prefix.
#[derive(Debug, Clone)]
pub struct ConditionalCdf {
    /// `P(T <= t | survived the prefix)` over the grid.
    pub cdf: RuinCdf,
    /// Fraction of all simulated paths that survived the prefix.
    pub p_b: f64,
    pub survivors: u64,
    pub total_paths: u64,
    /// Paths simulated beyond the primary batch to satisfy the survivor
    /// quota.
    pub topped_up_paths: u64,
}

/// Estimate the ruin-time cdf conditional on no ruin through the schedule's
/// last event. Survivor paths are accumulated by whole fresh batches
/// (rejection sampling on the survival event) until the quota in `sim` is
/// met or the budget is exhausted.
pub fn estimate_conditional_ruin_cdf(
    model: &RiskModel,
    schedule: &CapitalSchedule,
    horizon: f64,
    grid: &[f64],
    sim: &SimSettings,
) -> Result<ConditionalCdf, SimError> {
    if sim.n_paths == 0 {
        return Err(SimError::NoPaths);
    }
    validate_time_grid(grid)?;
    let condition_time = schedule.event_time(schedule.len());
    let level = CapitalLevel::from_schedule(schedule);
    let sampler = ClaimSampler::new(&model.claims);

    let mut bins = vec![0u64; grid.len()];
    let mut survivors = 0u64;
    let mut total = 0u64;
    loop {
        let start = total;
        let end = total + sim.n_paths;
        let (batch_bins, batch_survivors) = (start..end)
            .into_par_iter()
            .fold(
                || (vec![0u64; grid.len()], 0u64),
                |(mut bins, mut survivors), idx| {
                    let mut stream = PathStream::new(model, &sampler, horizon, sim.master_seed, idx);
                    let rt = stream_ruin_time(&mut stream, &level, model.ruin_level);
                    match rt {
                        Some(t) if t <= condition_time => {}
                        other => {
                            survivors += 1;
                            if let Some(t) = other {
                                if let Some(b) = grid_bin(grid, t) {
                                    bins[b] += 1;
                                }
                            }
                        }
                    }
                    (bins, survivors)
                },
            )
            .reduce(
                || (vec![0u64; grid.len()], 0u64),
                |(a, sa), (b, sb)| (merge_counts(a, b), sa + sb),
            );
        bins = merge_counts(bins, batch_bins);
        survivors += batch_survivors;
        total = end;
        if survivors >= sim.min_survivors.min(sim.n_paths) || total >= sim.max_total_paths {
            break;
        }
    }
    if survivors == 0 {
        return Err(SimError::NoSurvivors { condition_time, total_paths: total });
    }
    Ok(ConditionalCdf {
        cdf: cdf_from_bins(grid, &bins, survivors),
        p_b: survivors as f64 / total as f64,
        survivors,
        total_paths: total,
        topped_up_paths: total - sim.n_paths,
    })
}

/// Estimate the ruin-probability surface over a capital grid and a time
/// grid in one pass per path: the running maximum of the net outgo gives
/// the first-crossing time for every capital simultaneously (common random
/// numbers), so the surface is monotone in both axes exactly.
pub fn estimate_psi_surface(
    model: &RiskModel,
    capitals: &[f64],
    grid: &[f64],
    n_paths: u64,
    master_seed: u64,
) -> Result<PsiSurface, SimError> {
    if n_paths == 0 {
        return Err(SimError::NoPaths);
    }
    if capitals.is_empty() || capitals.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::BadCapitalGrid);
    }
    validate_time_grid(grid)?;
    let sampler = ClaimSampler::new(&model.claims);
    let horizon = *grid.last().unwrap();
    let n_cells = capitals.len() * grid.len();
    let bins = (0..n_paths)
        .into_par_iter()
        .fold(
            || vec![0u64; n_cells],
            |mut bins, idx| {
                let stream = PathStream::new(model, &sampler, horizon, master_seed, idx);
                let mut running_max = f64::NEG_INFINITY;
                let mut cap_idx = 0usize;
                for e in stream {
                    if cap_idx >= capitals.len() {
                        break;
                    }
                    if e.cumulative_outgo > running_max {
                        running_max = e.cumulative_outgo;
                        // Threshold = capital - ruin_level; every still-alive
                        // capital below the new record is ruined now.
                        while cap_idx < capitals.len()
                            && capitals[cap_idx] - model.ruin_level < running_max
                        {
                            if let Some(b) = grid_bin(grid, e.time) {
                                bins[cap_idx * grid.len() + b] += 1;
                            }
                            cap_idx += 1;
                        }
                    }
                }
                bins
            },
        )
        .reduce(|| vec![0u64; n_cells], merge_counts);

    Ok(PsiSurface::from_ruin_bins(capitals, grid, &bins, n_paths))
}

/// Empirical samples of the net outgo at each snapshot time, sorted
/// ascending. Uses the same per-path streams as the other estimators, so
/// with a shared master seed the samples describe the same path population.
pub fn net_outgo_snapshots(
    model: &RiskModel,
    snapshot_times: &[f64],
    n_paths: u64,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>, SimError> {
    if n_paths == 0 {
        return Err(SimError::NoPaths);
    }
    if snapshot_times.is_empty() || snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::BadTimeGrid);
    }
    let sampler = ClaimSampler::new(&model.claims);
    let horizon = *snapshot_times.last().unwrap();
    let mut all: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .fold(
            || vec![Vec::new(); snapshot_times.len()],
            |mut acc, idx| {
                let mut stream = PathStream::new(model, &sampler, horizon, master_seed, idx);
                let mut claims_before = 0.0;
                let mut ptr = 0usize;
                for e in &mut stream {
                    while ptr < snapshot_times.len() && snapshot_times[ptr] < e.time {
                        acc[ptr].push(claims_before - model.premium_rate * snapshot_times[ptr]);
                        ptr += 1;
                    }
                    claims_before = e.cumulative_outgo + model.premium_rate * e.time;
                }
                while ptr < snapshot_times.len() {
                    acc[ptr].push(claims_before - model.premium_rate * snapshot_times[ptr]);
                    ptr += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![Vec::new(); snapshot_times.len()],
            |mut a, b| {
                for (x, mut y) in a.iter_mut().zip(b) {
                    x.append(&mut y);
                }
                a
            },
        );
    for v in &mut all {
        v.sort_unstable_by(f64::total_cmp);
    }
    Ok(all)
}
