//! Minimum relative error against a growing time limit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::write_csv;
use super::{median_sample_energy, relative_error};
use crate::error::{Error, Result};
use crate::harness::{run_test, Instance, RunContext, Scenario, SolverEntry};
use crate::seed;

/// `count` time limits `start * ratio^k`.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub solver: String,
    pub t: f64,
    pub trial: usize,
    /// Lowest energy of the run; empty when it returned nothing.
    pub energy: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub instance: String,
    pub target: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn file_name(&self) -> String {
        format!("convergence_{}.csv", self.instance)
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        write_csv(&dir.join(self.file_name()), &self.rows)
    }

    /// Median over trials of the minimum relative error, per time limit.
    pub fn medians(&self, solver: &str) -> Vec<(f64, f64)> {
        let mut ts: Vec<f64> = self.rows.iter().filter(|r| r.solver == solver).map(|r| r.t).collect();
        ts.dedup();
        ts.into_iter()
            .filter_map(|t| {
                let rs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.solver == solver && r.t == t)
                    .filter_map(|r| r.r)
                    .collect();
                median_sample_energy(&rs).map(|m| (t, m))
            })
            .collect()
    }
}

/// Runs every solver `trials` times at each time limit with `s = 1`, so
/// solvers that fill the time with many samples report their best one.
/// The target is the lowest energy seen anywhere in the study.
pub fn convergence_study(
    instance: &Instance,
    solvers: &[SolverEntry],
    grid: &[f64],
    trials: usize,
    ctx: &RunContext,
    master_seed: u64,
) -> Result<ConvergenceTable> {
    if grid.is_empty() || trials == 0 || solvers.is_empty() {
        return Err(Error::Empty("convergence study"));
    }
    let mut rows = Vec::new();
    for entry in solvers {
        for &t in grid {
            for trial in 0..trials {
                let seed = seed::derive_str(
                    master_seed,
                    &[
                        "convergence",
                        &instance.id,
                        entry.id(),
                        &t.to_string(),
                        &trial.to_string(),
                    ],
                );
                let rec = run_test(entry, instance, Scenario::new(1, t), ctx, seed)?;
                rows.push(ConvergenceRow {
                    solver: entry.id().to_string(),
                    t,
                    trial,
                    energy: rec.energies.first().copied(),
                    r: None,
                });
            }
        }
    }
    let target = rows
        .iter()
        .filter_map(|r| r.energy)
        .min_by(f64::total_cmp)
        .ok_or(Error::Empty("convergence energies"))?;
    for r in &mut rows {
        r.r = r.energy.and_then(|e| relative_error(e, target).value());
    }
    Ok(ConvergenceTable {
        instance: instance.id.clone(),
        target,
        rows,
    })
}
