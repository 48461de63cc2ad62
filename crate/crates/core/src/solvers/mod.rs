//! Classical samplers with work accounting under a time budget.
//!
//! Every solver reads a [`Bqm`] of either vartype, works in spin form and
//! reports samples in the model's own vartype. Time is measured by a
//! [`Budget`], which either reads the host clock or charges a fixed cost per
//! elementary operation so that runs are reproducible.

mod problem;
mod pt;
mod random;
mod sa;
mod sgd;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Bqm, Vartype};

pub use problem::SpinProblem;
pub use pt::{default_ladder, solve_pt, swap_probability};
pub use random::solve_random;
pub use sa::{beta_schedule, solve_sa};
pub use sgd::{is_local_minimum, solve_sgd};

/// Model-clock cost of one spin update or coupler visit.
pub const DEFAULT_SECONDS_PER_OP: f64 = 5e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    Wall,
    /// Deterministic time: `ops * seconds_per_op`.
    Model {
        seconds_per_op: f64,
    },
}

impl Clock {
    pub fn model() -> Self {
        Clock::Model {
            seconds_per_op: DEFAULT_SECONDS_PER_OP,
        }
    }

    pub fn is_model(&self) -> bool {
        matches!(self, Clock::Model { .. })
    }
}

/// A time allowance that solvers charge as they work.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: f64,
    clock: Clock,
    start: Instant,
    ops: u64,
    extra: f64,
}

impl Budget {
    pub fn new(limit: f64, clock: Clock) -> Self {
        Budget {
            limit,
            clock,
            start: Instant::now(),
            ops: 0,
            extra: 0.0,
        }
    }

    pub fn wall(limit: f64) -> Self {
        Budget::new(limit, Clock::Wall)
    }

    pub fn model(limit: f64) -> Self {
        Budget::new(limit, Clock::model())
    }

    pub fn unlimited(clock: Clock) -> Self {
        Budget::new(f64::INFINITY, clock)
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn charge(&mut self, ops: u64) {
        self.ops += ops;
    }

    /// Adds time that is not tied to operations, such as annealer access
    /// time. Only the model clock accumulates it.
    pub fn charge_seconds(&mut self, seconds: f64) {
        self.extra += seconds;
    }

    pub fn elapsed(&self) -> f64 {
        match self.clock {
            Clock::Wall => self.start.elapsed().as_secs_f64(),
            Clock::Model { seconds_per_op } => self.ops as f64 * seconds_per_op + self.extra,
        }
    }

    pub fn remaining(&self) -> f64 {
        (self.limit - self.elapsed()).max(0.0)
    }

    pub fn exhausted(&self) -> bool {
        self.elapsed() >= self.limit
    }

    /// Whether `ops` more operations finish inside the limit. The wall clock
    /// extrapolates from the rate observed so far.
    pub fn fits(&self, ops: u64) -> bool {
        let elapsed = self.elapsed();
        let cost = match self.clock {
            Clock::Model { seconds_per_op } => ops as f64 * seconds_per_op,
            Clock::Wall if self.ops > 0 => ops as f64 * elapsed / self.ops as f64,
            Clock::Wall => 0.0,
        };
        elapsed + cost <= self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Assignment,
    pub energy: f64,
    pub num_occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub solver: String,
    pub vartype: Vartype,
    pub requested: usize,
    /// Ascending in energy.
    pub samples: Vec<Sample>,
    /// Iterations spent over the whole run, including discarded samples.
    pub work: u64,
    /// Seconds on the budget's clock.
    pub wall_time: f64,
    pub clock: Clock,
    pub status: Status,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, serde_json::Value>,
}

impl SampleSet {
    /// Samples counted with multiplicity.
    pub fn len(&self) -> usize {
        self.samples.iter().map(|s| s.num_occurrences).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Energies with multiplicity, ascending.
    pub fn energies(&self) -> Vec<f64> {
        self.samples
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.energy, s.num_occurrences))
            .collect()
    }

    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.first()
    }

    /// Checks every reported energy against `model`.
    pub fn verify(&self, model: &Bqm) -> Result<()> {
        for (k, s) in self.samples.iter().enumerate() {
            let e = model.energy(&s.values)?;
            if e != s.energy {
                return Err(Error::InvalidModel(format!(
                    "sample {k} reports energy {} but recomputes to {e}",
                    s.energy
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("sample sets serialize")
    }

    pub fn from_json_str(text: &str) -> Result<SampleSet> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for SampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let best = self.lowest().map_or(f64::NAN, |s| s.energy);
        write!(
            f,
            "{}: {}/{} samples, best {best}, work {}, {:.6} s ({:?})",
            self.solver,
            self.len(),
            self.requested,
            self.work,
            self.wall_time,
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    /// Sweeps per sample for SA and PT.
    pub num_sweeps: usize,
    /// `(beta_hot, beta_cold)`; derived from the model when absent.
    pub beta_range: Option<(f64, f64)>,
    /// PT replica count when no explicit ladder is given.
    pub num_replicas: usize,
    /// PT temperatures, strictly increasing.
    pub temperatures: Option<Vec<f64>>,
    /// Upper bound on draws or restarts for Random and SGD.
    pub max_samples: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            num_sweeps: 1000,
            beta_range: None,
            num_replicas: 16,
            temperatures: None,
            max_samples: None,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sweeps == 0 {
            return Err(Error::Param("num_sweeps must be at least 1".into()));
        }
        if self.num_replicas == 0 {
            return Err(Error::Param("num_replicas must be at least 1".into()));
        }
        if let Some((hot, cold)) = self.beta_range {
            if !(hot > 0.0 && cold >= hot && cold.is_finite()) {
                return Err(Error::Param(format!("bad beta range ({hot}, {cold})")));
            }
        }
        if let Some(ts) = &self.temperatures {
            if ts.is_empty() || ts[0] <= 0.0 || ts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Param(
                    "temperatures must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Whether a solver runs on the host or stands in for an annealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Classical,
    Annealer,
}

pub trait Solver: Send + Sync {
    fn id(&self) -> &str;

    fn kind(&self) -> SolverKind {
        SolverKind::Classical
    }

    /// Whether `num_sweeps` controls the time per sample.
    fn uses_sweeps(&self) -> bool {
        false
    }

    fn solve(&self, model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet>;
}

type SolveFn = fn(&Bqm, usize, &mut Budget, &SolverConfig) -> Result<SampleSet>;

struct Builtin {
    id: &'static str,
    sweeps: bool,
    run: SolveFn,
}

impl Solver for Builtin {
    fn id(&self) -> &str {
        self.id
    }

    fn uses_sweeps(&self) -> bool {
        self.sweeps
    }

    fn solve(&self, model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
        (self.run)(model, s, budget, config)
    }
}

/// Solvers by string id.
#[derive(Clone)]
pub struct Registry {
    solvers: BTreeMap<String, Arc<dyn Solver>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            solvers: BTreeMap::new(),
        };
        let builtins: [(&'static str, bool, SolveFn); 4] = [
            ("random", false, solve_random),
            ("sgd", false, solve_sgd),
            ("sa", true, solve_sa),
            ("pt", true, solve_pt),
        ];
        for (id, sweeps, run) in builtins {
            r.register(Arc::new(Builtin { id, sweeps, run }));
        }
        r
    }
}

impl Registry {
    pub fn register(&mut self, solver: Arc<dyn Solver>) {
        self.solvers.insert(solver.id().to_string(), solver);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Solver>> {
        self.solvers
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSolver(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.solvers.keys().map(String::as_str)
    }
}

/// Keeps the `cap` lowest-energy spin states seen, earliest first on ties.
pub(crate) struct Best {
    cap: usize,
    items: Vec<(f64, Vec<i8>)>,
}

impl Best {
    pub(crate) fn new(cap: usize) -> Self {
        Best { cap, items: Vec::new() }
    }

    pub(crate) fn push(&mut self, energy: f64, x: Vec<i8>) {
        if self.cap == 0 {
            return;
        }
        self.items.push((energy, x));
        if self.items.len() >= 2 * self.cap.max(16) {
            self.compact();
        }
    }

    fn compact(&mut self) {
        self.items.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.items.truncate(self.cap);
    }

    pub(crate) fn into_states(mut self) -> Vec<Vec<i8>> {
        self.compact();
        self.items.into_iter().map(|(_, x)| x).collect()
    }
}

/// Assembles a sample set with energies recomputed on `model`.
pub(crate) fn finish(
    solver: &str,
    model: &Bqm,
    problem: &SpinProblem,
    states: Vec<Vec<i8>>,
    requested: usize,
    work: u64,
    budget: &Budget,
) -> SampleSet {
    let mut samples: Vec<Sample> = states
        .into_iter()
        .map(|x| {
            let values = problem.to_source(&x);
            let energy = model.energy_unchecked(&values);
            Sample {
                values: Assignment::new(values),
                energy,
                num_occurrences: 1,
            }
        })
        .collect();
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    samples.truncate(requested);
    let status = if samples.len() >= requested {
        Status::Complete
    } else {
        Status::Partial
    };
    SampleSet {
        solver: solver.to_string(),
        vartype: model.vartype(),
        requested,
        samples,
        work,
        wall_time: budget.elapsed(),
        clock: budget.clock(),
        status,
        info: BTreeMap::new(),
    }
}

/// Model-clock cost of building the spin form.
pub(crate) fn setup_ops(p: &SpinProblem) -> u64 {
    (p.num_variables() + p.num_half_edges()) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_budget_is_exact() {
        let mut b = Budget::model(1e-6);
        assert!(b.fits(200));
        assert!(!b.fits(201));
        b.charge(200);
        assert!(b.exhausted());
        assert_eq!(b.elapsed(), 200.0 * DEFAULT_SECONDS_PER_OP);
    }

    #[test]
    fn best_keeps_lowest_in_order() {
        let mut best = Best::new(2);
        for (e, tag) in [(3.0, 0), (1.0, 1), (1.0, 2), (0.5, 3), (2.0, 4)] {
            best.push(e, vec![tag]);
        }
        assert_eq!(best.into_states(), vec![vec![3], vec![1]]);
    }

    #[test]
    fn registry_lookup() {
        let r = Registry::default();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["pt", "random", "sa", "sgd"]);
        assert!(r.get("sa").unwrap().uses_sweeps());
        assert!(matches!(r.get("nope"), Err(Error::UnknownSolver(_))));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            temperatures: Some(vec![1.0, 1.0]),
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            num_sweeps: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sampleset_json_round_trip() {
        let model = Bqm::from_terms(Vartype::Spin, vec![1.0, 0.0], vec![(0, 1, -1.0)], 0.0).unwrap();
        let set = solve_sa(&model, 3, &mut Budget::model(1.0), &SolverConfig::with_seed(1)).unwrap();
        let back = SampleSet::from_json_str(&set.to_json_string()).unwrap();
        assert_eq!(back, set);
    }
}
