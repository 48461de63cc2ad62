//! Win / fail / compete verdicts for one (class, scenario) cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, RelativeError};
use crate::error::{Error, Result};
use crate::harness::{Scenario, TestRecord};

/// Tolerance for comparing relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Epsilon {
    /// Exact when every energy in the cell is an integer, else `1e-9`
    /// relative.
    Auto,
    Exact,
    Relative(f64),
}

const DEFAULT_RELATIVE: f64 = 1e-9;

/// Upper limit on solvers per cell for the exhaustive winner search.
const MAX_SOLVERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Win,
    Fail,
    Compete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOutcome {
    pub solver: String,
    pub group: String,
    pub scenario: Scenario,
    pub verdict: Verdict,
    /// Instances where this solver beats every other solver.
    pub dominated: usize,
    /// Instances where this solver shares the best error with another.
    pub tied: usize,
    /// Instances without a complete record.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRanking {
    pub group: String,
    pub scenario: Scenario,
    pub num_instances: usize,
    /// `ceil(N / 2)`.
    pub threshold: usize,
    pub epsilon: f64,
    pub outcomes: Vec<RankOutcome>,
    pub winners: Vec<String>,
    /// Instances left out because their target energy is zero.
    pub zero_target: Vec<String>,
    /// Two distinct winner sets of the same size qualified; no win awarded.
    pub ambiguous: bool,
}

impl ScenarioRanking {
    pub fn outcome(&self, solver: &str) -> Option<&RankOutcome> {
        self.outcomes.iter().find(|o| o.solver == solver)
    }
}

fn integral(x: f64) -> bool {
    x.fract() == 0.0
}

/// Errors are already scaled by `|T|`, so an absolute bound on them is a
/// bound relative to the energy scale.
fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps
}

/// Ranks every solver with records in `(group, scenario)`.
///
/// `A` beats `B` on an instance when `A` has a relative error and `B`
/// either has none or a larger one outside tolerance. The winners are the
/// largest set `W` whose members each beat every non-member on at least
/// `ceil(N/2)` instances and tie each other on at least as many. A solver
/// fails when it lacks a complete record on `ceil(N/2)` instances.
pub fn rank_scenario(data: &Dataset, group: &str, scenario: Scenario, eps: Epsilon) -> Result<ScenarioRanking> {
    let slice: Vec<&TestRecord> = data.slice(group, scenario).collect();
    if slice.is_empty() {
        return Err(Error::Empty("dataset slice"));
    }
    let mut solvers: Vec<&str> = Vec::new();
    let mut instances: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for r in &slice {
        if !solvers.contains(&r.solver.as_str()) {
            solvers.push(&r.solver);
        }
        instances.insert((r.instance_index, &r.instance), 0);
    }
    for (k, v) in instances.values_mut().enumerate() {
        *v = k;
    }
    let (k, n) = (solvers.len(), instances.len());
    if k > MAX_SOLVERS {
        return Err(Error::Param(format!(
            "{k} solvers in one cell; at most {MAX_SOLVERS} are ranked"
        )));
    }
    let eps = match eps {
        Epsilon::Exact => 0.0,
        Epsilon::Relative(e) => e,
        Epsilon::Auto => {
            let all_int = slice.iter().all(|r| {
                r.energies.iter().copied().all(integral)
                    && data.target_energy(&r.instance, r.space).is_none_or(integral)
            });
            if all_int {
                0.0
            } else {
                DEFAULT_RELATIVE
            }
        }
    };

    let mut err = vec![vec![None::<f64>; n]; k];
    let mut complete = vec![vec![false; n]; k];
    let mut zero = vec![false; n];
    let mut zero_target = Vec::new();
    for r in &slice {
        let a = solvers.iter().position(|s| *s == r.solver).expect("solver listed");
        let x = instances[&(r.instance_index, r.instance.as_str())];
        if complete[a][x] || err[a][x].is_some() {
            continue;
        }
        complete[a][x] = r.is_complete();
        match data.record_error(r) {
            Some(RelativeError::Value(v)) => err[a][x] = Some(v),
            Some(RelativeError::ZeroTarget(_)) if !zero[x] => {
                zero[x] = true;
                zero_target.push(r.instance.clone());
            }
            _ => {}
        }
    }
    for x in (0..n).filter(|&x| zero[x]) {
        for row in err.iter_mut() {
            row[x] = None;
        }
    }
    if !zero_target.is_empty() {
        log::warn!(
            "{group} {scenario}: {} instances with zero target left out of ranking",
            zero_target.len()
        );
    }

    let beats = |a: usize, b: usize, x: usize| match (err[a][x], err[b][x]) {
        (Some(_), None) => true,
        (Some(ra), Some(rb)) => ra < rb && !close(ra, rb, eps),
        _ => false,
    };
    let ties = |a: usize, b: usize, x: usize| match (err[a][x], err[b][x]) {
        (Some(ra), Some(rb)) => close(ra, rb, eps),
        _ => false,
    };
    let mut beat = vec![vec![0usize; k]; k];
    let mut tie = vec![vec![0usize; k]; k];
    for a in 0..k {
        for b in (0..k).filter(|&b| b != a) {
            beat[a][b] = (0..n).filter(|&x| beats(a, b, x)).count();
            tie[a][b] = (0..n).filter(|&x| ties(a, b, x)).count();
        }
    }
    let h = n.div_ceil(2);
    let failed: Vec<usize> = (0..k).map(|a| (0..n).filter(|&x| !complete[a][x]).count()).collect();
    let fails: Vec<bool> = failed.iter().map(|&f| f >= h).collect();

    let valid = |mask: u32| {
        (0..k).filter(|&a| mask >> a & 1 == 1).all(|a| {
            (0..k).filter(|&b| b != a).all(|b| {
                if mask >> b & 1 == 1 {
                    tie[a][b] >= h
                } else {
                    beat[a][b] >= h
                }
            })
        })
    };
    let candidates: u32 = (0..k).filter(|&a| !fails[a]).fold(0, |m, a| m | 1 << a);
    let mut best: Option<u32> = None;
    let mut ambiguous = false;
    let mut sub = candidates;
    while sub != 0 {
        if valid(sub) {
            match best {
                Some(b) if b.count_ones() > sub.count_ones() => {}
                Some(b) if b.count_ones() == sub.count_ones() => ambiguous = true,
                _ => {
                    best = Some(sub);
                    ambiguous = false;
                }
            }
        }
        sub = (sub - 1) & candidates;
    }
    let winners_mask = if ambiguous { 0 } else { best.unwrap_or(0) };

    let outcomes = (0..k)
        .map(|a| {
            let others = || (0..k).filter(move |&b| b != a);
            let dominated = (0..n).filter(|&x| others().all(|b| beats(a, b, x))).count();
            let tied = (0..n)
                .filter(|&x| others().all(|b| !beats(b, a, x)) && others().any(|b| ties(a, b, x)))
                .count();
            let verdict = if fails[a] {
                Verdict::Fail
            } else if winners_mask >> a & 1 == 1 {
                Verdict::Win
            } else {
                Verdict::Compete
            };
            RankOutcome {
                solver: solvers[a].to_string(),
                group: group.to_string(),
                scenario,
                verdict,
                dominated,
                tied,
                failed: failed[a],
            }
        })
        .collect::<Vec<_>>();
    Ok(ScenarioRanking {
        group: group.to_string(),
        scenario,
        num_instances: n,
        threshold: h,
        epsilon: eps,
        winners: outcomes
            .iter()
            .filter(|o| o.verdict == Verdict::Win)
            .map(|o| o.solver.clone())
            .collect(),
        outcomes,
        zero_target,
        ambiguous,
    })
}
