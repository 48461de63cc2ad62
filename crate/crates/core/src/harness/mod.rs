//! Scenario grid, fair-test autotuning and budgeted suite execution.

mod autotune;
mod instance;
mod screen;
mod suite;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::InstanceClass;

pub use autotune::{calibrate, Autotuner, Calibration, CALIBRATION_SWEEPS};
pub use instance::{build_instance, embed_for_class, Embedded, HardwareConfig, Instance, InstanceSummary};
pub use screen::{screen_class, Decision, ScreeningParams, ScreeningVerdict, SizeProbe, SolverAgreement};
pub use suite::{
    build_instances, read_records, run_suite, run_test, write_records, ClassConfig, Dispatch, QpuConfig, RunContext,
    SolverEntry, SuiteConfig, SuiteOutput, TimingMode, JOURNAL_FILE, MANIFEST_FILE, RESULTS_FILE,
};

/// A request for `s` samples within `t` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub s: usize,
    pub t: f64,
}

impl Scenario {
    pub fn new(s: usize, t: f64) -> Self {
        Scenario { s, t }
    }

    /// Seconds available per sample.
    pub fn per_sample(&self) -> f64 {
        self.t / self.s as f64
    }

    fn matches(&self, other: &(usize, f64)) -> bool {
        self.s == other.0 && (self.t - other.1).abs() <= 1e-12 * self.t.abs().max(1.0)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={} t={}", self.s, self.t)
    }
}

pub const DEFAULT_SAMPLE_COUNTS: [usize; 4] = [1, 10, 100, 1000];
pub const DEFAULT_TIME_LIMITS: [f64; 6] = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

/// Scenarios left out of the default grid: those an annealer with the
/// default access times cannot serve.
pub const DEFAULT_EXCLUDED: [(usize, f64); 5] = [(1000, 0.02), (1000, 0.05), (1000, 0.1), (1000, 0.2), (100, 0.02)];

/// The `s` by `t` grid and the scenarios removed from it. With neither
/// `floor` nor `exclude` set, [`DEFAULT_EXCLUDED`] applies; otherwise a
/// scenario is removed if `t / s < floor` or it is listed in `exclude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub s: Vec<usize>,
    pub t: Vec<f64>,
    pub floor: Option<f64>,
    pub exclude: Option<Vec<(usize, f64)>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            s: DEFAULT_SAMPLE_COUNTS.to_vec(),
            t: DEFAULT_TIME_LIMITS.to_vec(),
            floor: None,
            exclude: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_floor(floor: f64) -> Self {
        ScenarioConfig {
            floor: Some(floor),
            ..ScenarioConfig::default()
        }
    }

    fn excluded(&self, sc: &Scenario) -> bool {
        if self.floor.is_none() && self.exclude.is_none() {
            return DEFAULT_EXCLUDED.iter().any(|x| sc.matches(x));
        }
        self.floor.is_some_and(|f| sc.per_sample() < f)
            || self
                .exclude
                .as_ref()
                .is_some_and(|list| list.iter().any(|x| sc.matches(x)))
    }
}

/// Cross product of the configured `s` and `t` values, ordered by `s`
/// then `t`, minus the excluded scenarios.
pub fn scenario_grid(config: &ScenarioConfig) -> Result<Vec<Scenario>> {
    if config.s.contains(&0) || config.t.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Param("sample counts and time limits must be positive".into()));
    }
    let grid: Vec<Scenario> = config
        .s
        .iter()
        .flat_map(|&s| config.t.iter().map(move |&t| Scenario::new(s, t)))
        .filter(|sc| !config.excluded(sc))
        .collect();
    if grid.is_empty() {
        return Err(Error::Empty("scenario grid"));
    }
    Ok(grid)
}

/// Which model a record's energies refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Logical,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Complete,
    Fail,
}

/// One solver run on one instance under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub solver: String,
    pub class: InstanceClass,
    /// Class label records are grouped by when ranking.
    pub group: String,
    pub instance: String,
    pub instance_index: usize,
    pub scenario: Scenario,
    pub space: Space,
    pub status: RecordStatus,
    /// Up to `s` energies, ascending.
    pub energies: Vec<f64>,
    pub wall_time: f64,
    pub work: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_sweeps: Option<usize>,
    /// The scored model has zero fields and unit couplings.
    #[serde(default)]
    pub spin_glass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_break_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TestRecord {
    pub fn is_complete(&self) -> bool {
        self.status == RecordStatus::Complete
    }

    /// Identifies the run within a suite.
    pub fn key(&self) -> (String, String, usize, u64) {
        (
            self.instance.clone(),
            self.solver.clone(),
            self.scenario.s,
            self.scenario.t.to_bits(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_19() {
        let grid = scenario_grid(&ScenarioConfig::default()).unwrap();
        assert_eq!(grid.len(), 19);
        assert!(!grid.contains(&Scenario::new(1000, 0.02)));
        assert!(!grid.contains(&Scenario::new(100, 0.02)));
        let per: Vec<f64> = grid.iter().map(Scenario::per_sample).collect();
        let lo = per.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = per.iter().copied().fold(0.0, f64::max);
        assert!((lo - 0.0005).abs() < 1e-15 && hi == 1.0);
    }

    #[test]
    fn zero_floor_keeps_everything() {
        assert_eq!(scenario_grid(&ScenarioConfig::with_floor(0.0)).unwrap().len(), 24);
    }

    #[test]
    fn floor_alone() {
        // Only three grid points fall strictly below 2e-4 seconds per sample.
        assert_eq!(scenario_grid(&ScenarioConfig::with_floor(2e-4)).unwrap().len(), 21);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let cfg = ScenarioConfig {
            s: vec![1000],
            t: vec![0.02],
            ..ScenarioConfig::default()
        };
        assert!(scenario_grid(&cfg).is_err());
    }

    #[test]
    fn default_exclusions_are_the_infeasible_annealer_scenarios() {
        let m = crate::qpu::AccessTimeModel::default();
        for &s in &DEFAULT_SAMPLE_COUNTS {
            for &t in &DEFAULT_TIME_LIMITS {
                let listed = DEFAULT_EXCLUDED.iter().any(|x| Scenario::new(s, t).matches(x));
                assert_eq!(listed, crate::qpu::plan_schedule(s, t, &m).is_err(), "s={s} t={t}");
            }
        }
    }
}
