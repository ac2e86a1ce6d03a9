//! Ruin-based alarm systems for insurance capital allocation.
//!
//! The crate simulates compound-Poisson surplus processes, estimates
//! ruin-time distributions, derives alarm times and multi-alarm
//! capital-injection schedules, and compares the resulting strategy against
//! a no-alarm strategy with discounted-equivalent initial capital, both
//! empirically and through analytical bounds.

pub mod model;
pub mod simulate;
pub mod analytic;
pub mod alarm;
pub mod compare;
pub mod bounds;
