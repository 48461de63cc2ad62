//! Sample statistics, relative error, ranking and report tables.

mod convergence;
mod rank;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::harness::{Scenario, Space, TestRecord};

pub use convergence::{convergence_study, geometric_grid, ConvergenceRow, ConvergenceTable};
pub use rank::{rank_scenario, Epsilon, RankOutcome, ScenarioRanking, Verdict};
pub use report::{
    ecd_export, milestone_report, write_analysis, AnalysisSummary, Cell, EcdTable, MilestoneReport, M1_CLASS_LABELS,
    M2_CLASS_LABELS,
};

/// Median of `energies`; the mean of the middle two for even lengths.
pub fn median_sample_energy(energies: &[f64]) -> Option<f64> {
    if energies.is_empty() {
        return None;
    }
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let k = e.len();
    Some(if k % 2 == 1 {
        e[k / 2]
    } else {
        0.5 * (e[k / 2 - 1] + e[k / 2])
    })
}

/// `|T - M| / |T|`, or the absolute gap when `T = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RelativeError {
    Value(f64),
    ZeroTarget(f64),
}

impl RelativeError {
    pub fn value(self) -> Option<f64> {
        match self {
            RelativeError::Value(r) => Some(r),
            RelativeError::ZeroTarget(_) => None,
        }
    }
}

pub fn relative_error(m: f64, target: f64) -> RelativeError {
    if target == 0.0 {
        RelativeError::ZeroTarget((m - target).abs())
    } else {
        RelativeError::Value((target - m).abs() / target.abs())
    }
}

/// Energies a record contributes to ranking: all of them when complete,
/// a partial set only if it holds at least half of the `s` requested.
pub fn rankable_energies(record: &TestRecord) -> Option<&[f64]> {
    let k = record.energies.len();
    if k == 0 || (!record.is_complete() && k < record.scenario.s.div_ceil(2)) {
        None
    } else {
        Some(&record.energies)
    }
}

/// A set of test records with per-instance target energies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<TestRecord>,
    targets: BTreeMap<(String, Space), f64>,
}

impl Dataset {
    pub fn new(records: Vec<TestRecord>) -> Self {
        let mut d = Dataset::default();
        d.extend(records);
        d
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = TestRecord>) {
        for r in records {
            if let Some(&lo) = r.energies.iter().min_by(|a, b| a.total_cmp(b)) {
                let t = self.targets.entry((r.instance.clone(), r.space)).or_insert(lo);
                *t = t.min(lo);
            }
            self.records.push(r);
        }
    }

    pub fn records(&self) -> &[TestRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The lowest energy recorded for `instance` in `space` by any solver
    /// under any scenario.
    pub fn target_energy(&self, instance: &str, space: Space) -> Option<f64> {
        self.targets.get(&(instance.to_string(), space)).copied()
    }

    /// Median relative error of a record against its instance target.
    pub fn record_error(&self, record: &TestRecord) -> Option<RelativeError> {
        let e = rankable_energies(record)?;
        let t = self.target_energy(&record.instance, record.space)?;
        Some(relative_error(median_sample_energy(e)?, t))
    }

    /// Class labels in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.group.as_str()))
            .map(|r| r.group.clone())
            .collect()
    }

    /// Solver ids in order of first appearance.
    pub fn solvers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.solver.as_str()))
            .map(|r| r.solver.clone())
            .collect()
    }

    /// Distinct scenarios ordered by `s` then `t`.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out: Vec<Scenario> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.scenario) {
                out.push(r.scenario);
            }
        }
        out.sort_by(|a, b| a.s.cmp(&b.s).then(a.t.total_cmp(&b.t)));
        out
    }

    pub fn slice<'a>(&'a self, group: &'a str, scenario: Scenario) -> impl Iterator<Item = &'a TestRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.group == group && r.scenario == scenario)
    }

    /// Records whose energies are in `space`.
    pub fn in_space(&self, space: Space) -> Dataset {
        Dataset::new(self.records.iter().filter(|r| r.space == space).cloned().collect())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::generators::InstanceClass;
    use crate::harness::{RecordStatus, Scenario, Space, TestRecord};

    pub fn record(solver: &str, group: &str, index: usize, sc: Scenario, energies: Vec<f64>) -> TestRecord {
        let status = if energies.len() >= sc.s {
            RecordStatus::Complete
        } else {
            RecordStatus::Fail
        };
        TestRecord {
            solver: solver.into(),
            class: group.parse().unwrap_or(InstanceClass::Import),
            group: group.into(),
            instance: format!("{group}-{index}"),
            instance_index: index,
            scenario: sc,
            space: Space::Physical,
            status,
            energies,
            wall_time: 0.0,
            work: 0,
            seed: 0,
            num_sweeps: None,
            spin_glass: false,
            chain_break_fraction: None,
            error: None,
        }
    }
}
