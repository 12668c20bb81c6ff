//! Run clocks. Training phases are timed exclusively (evaluation and data
//! preparation do not count), via explicit phase brackets.
//!
//! [`RealClock`] measures monotonic wall time and is what the time-matched
//! protocol uses. [`VirtualClock`] advances a fixed tick per optimizer step,
//! which makes a run's recorded timeline a pure function of its seed — the
//! property that lets identical configurations reproduce byte-identical
//! metrics files.

use std::time::{Duration, Instant};

pub trait Clock {
    fn phase_start(&mut self);
    fn phase_end(&mut self);
    /// Called once per optimizer step, inside a phase.
    fn on_optimizer_step(&mut self);
    /// Accumulated in-phase seconds.
    fn elapsed_s(&self) -> f64;
    fn kind(&self) -> &'static str;
}

#[derive(Debug, Default)]
pub struct RealClock {
    accumulated: Duration,
    phase_began: Option<Instant>,
}

impl RealClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for RealClock {
    fn phase_start(&mut self) {
        self.phase_began = Some(Instant::now());
    }

    fn phase_end(&mut self) {
        if let Some(t0) = self.phase_began.take() {
            self.accumulated += t0.elapsed();
        }
    }

    fn on_optimizer_step(&mut self) {}

    fn elapsed_s(&self) -> f64 {
        let mut total = self.accumulated;
        if let Some(t0) = self.phase_began {
            total += t0.elapsed();
        }
        total.as_secs_f64()
    }

    fn kind(&self) -> &'static str {
        "real"
    }
}

/// Deterministic clock: `elapsed = optimizer_steps × tick`.
#[derive(Debug)]
pub struct VirtualClock {
    tick_s: f64,
    steps: u64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::with_tick(1e-3)
    }

    pub fn with_tick(tick_s: f64) -> Self {
        VirtualClock { tick_s, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for VirtualClock {
    fn phase_start(&mut self) {}

    fn phase_end(&mut self) {}

    fn on_optimizer_step(&mut self) {
        self.steps += 1;
    }

    fn elapsed_s(&self) -> f64 {
        self.steps as f64 * self.tick_s
    }

    fn kind(&self) -> &'static str {
        "virtual"
    }
}
