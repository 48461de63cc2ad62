//! Per-instance sweep calibration for sweep-based solvers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Bqm;
use crate::solvers::{Budget, Clock, Solver, SolverConfig};

/// Sweeps in the shorter calibration run; the longer one doubles it.
pub const CALIBRATION_SWEEPS: usize = 8;

/// Wall-clock calibrations keep the fastest of this many repeats.
const WALL_REPEATS: usize = 3;

/// Wall-clock calibrations grow the short run until it takes this long.
const WALL_MIN_SECONDS: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Seconds per sweep of one sample.
    pub time_per_sweep: f64,
    /// Seconds of per-run and per-sample setup.
    pub init_overhead: f64,
    /// Seconds spent calibrating.
    pub cost: f64,
}

impl Calibration {
    /// `floor((t/s - init) / time_per_sweep)`, at least 1.
    pub fn num_sweeps(&self, s: usize, t: f64) -> usize {
        let avail = t / s as f64 - self.init_overhead;
        if avail <= 0.0 || self.time_per_sweep <= 0.0 {
            if avail <= 0.0 {
                log::warn!(
                    "calibration overhead {:.3e} s exceeds t/s = {:.3e} s",
                    self.init_overhead,
                    t / s as f64
                );
            }
            return 1;
        }
        ((avail / self.time_per_sweep).floor() as usize).max(1)
    }
}

fn timed(solver: &dyn Solver, model: &Bqm, clock: Clock, sweeps: usize, seed: u64) -> Result<f64> {
    let config = SolverConfig {
        num_sweeps: sweeps,
        ..SolverConfig::with_seed(seed)
    };
    let mut budget = Budget::unlimited(clock);
    solver.solve(model, 1, &mut budget, &config)?;
    Ok(budget.elapsed())
}

/// Times one sample at [`CALIBRATION_SWEEPS`] and twice that; the
/// difference gives the cost per sweep and the remainder the overhead.
/// On the wall clock the sweep count first doubles until a run takes
/// a few milliseconds.
pub fn calibrate(solver: &dyn Solver, model: &Bqm, clock: Clock, seed: u64) -> Result<Calibration> {
    let repeats = if clock.is_model() { 1 } else { WALL_REPEATS };
    let mut sweeps = CALIBRATION_SWEEPS;
    let mut cost = 0.0;
    if !clock.is_model() {
        loop {
            let a = timed(solver, model, clock, sweeps, seed)?;
            cost += a;
            if a >= WALL_MIN_SECONDS || sweeps >= 1 << 20 {
                break;
            }
            sweeps *= 2;
        }
    }
    let (mut short, mut long) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..repeats {
        let a = timed(solver, model, clock, sweeps, seed)?;
        let b = timed(solver, model, clock, 2 * sweeps, seed)?;
        short = short.min(a);
        long = long.min(b);
        cost += a + b;
    }
    let time_per_sweep = ((long - short) / sweeps as f64).max(f64::MIN_POSITIVE);
    let init_overhead = (short - sweeps as f64 * time_per_sweep).max(0.0);
    Ok(Calibration {
        time_per_sweep,
        init_overhead,
        cost,
    })
}

/// Calibrations cached per (solver, instance).
#[derive(Default)]
pub struct Autotuner {
    cache: Mutex<HashMap<(String, String), Calibration>>,
    runs: AtomicUsize,
}

impl Autotuner {
    pub fn new() -> Self {
        Autotuner::default()
    }

    pub fn calibration(&self, solver: &dyn Solver, instance: &str, model: &Bqm, clock: Clock) -> Result<Calibration> {
        let key = (solver.id().to_string(), instance.to_string());
        if let Some(c) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*c);
        }
        let c = calibrate(solver, model, clock, 0)?;
        self.runs.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, c);
        Ok(c)
    }

    /// Calibration runs performed, cache hits excluded.
    pub fn num_calibrations(&self) -> usize {
        self.runs.load(Ordering::Relaxed)
    }
}
