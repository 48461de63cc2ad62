//! Two-step hardness screening for candidate input classes.
//!
//! Step 1 sizes heuristic-embedded classes so the median maximum chain
//! length over a few embedding trials falls in a target range. Step 2 runs
//! greedy descent and annealing for one programming-time budget each; a
//! class whose putative ground state both solvers keep finding is rejected.

use serde::{Deserialize, Serialize};

use super::autotune::calibrate;
use crate::embedding::embed_heuristic;
use crate::error::{Error, Result};
use crate::generators::{generate, EmbeddingKind, InstanceClass, InstanceSpec};
use crate::seed;
use crate::solvers::{Budget, Clock, Registry, SolverConfig};
use crate::topology::{model_graph, HardwareGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningParams {
    /// Accepted range of the median maximum chain length.
    pub lmax_range: (usize, usize),
    pub embed_trials: usize,
    pub embed_tries: usize,
    /// Size search interval for heuristic-embedded classes.
    pub size_bounds: (usize, usize),
    /// Fixed size; skips the search.
    pub size: Option<usize>,
    /// Runs per solver in step 2.
    pub runs: usize,
    /// Seconds per run; the programming-time lower bound by default.
    pub time_limit: f64,
    /// Fraction of runs that must reach the common minimum.
    pub agreement: f64,
    pub model_clock: bool,
}

impl Default for ScreeningParams {
    fn default() -> Self {
        ScreeningParams {
            lmax_range: (15, 20),
            embed_trials: 3,
            embed_tries: 10,
            size_bounds: (8, 1000),
            size: None,
            runs: 50,
            time_limit: 0.016,
            agreement: 0.9,
            model_clock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeProbe {
    pub size: usize,
    /// Maximum chain length per trial; `None` where embedding failed.
    pub lmax: Vec<Option<usize>>,
    /// Failed trials count as longer than any success.
    pub median: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverAgreement {
    pub solver: String,
    pub best: f64,
    /// Runs reaching the minimum over both solvers.
    pub hits: usize,
    pub runs: usize,
}

impl SolverAgreement {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.runs as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningVerdict {
    pub class: InstanceClass,
    pub size: usize,
    pub probes: Vec<SizeProbe>,
    /// Whether the chosen size's median lies in the target range.
    pub lmax_in_range: Option<bool>,
    pub minimum: f64,
    pub solvers: Vec<SolverAgreement>,
    pub decision: Decision,
}

fn median_lmax(lmax: &[Option<usize>]) -> Option<usize> {
    let mut v: Vec<usize> = lmax.iter().map(|l| l.unwrap_or(usize::MAX)).collect();
    v.sort_unstable();
    let m = v[v.len() / 2];
    (m != usize::MAX).then_some(m)
}

fn probe(class: InstanceClass, size: usize, hw: &HardwareGraph, p: &ScreeningParams, seed: u64) -> Result<SizeProbe> {
    let mut lmax = Vec::with_capacity(p.embed_trials);
    for trial in 0..p.embed_trials {
        let s = seed::derive(seed, &[size as u64, trial as u64]);
        let logical = generate(&InstanceSpec::new(class, vec![size], s), None)?;
        let e = embed_heuristic(&model_graph(&logical), hw, s, p.embed_tries).ok();
        lmax.push(e.map(|e| e.max_chain_length()));
    }
    Ok(SizeProbe {
        size,
        median: median_lmax(&lmax),
        lmax,
    })
}

/// Binary search for the largest size whose median maximum chain length
/// does not exceed the upper end of the range. Prefers the largest probed
/// size inside the range.
fn search_size(
    class: InstanceClass,
    hw: &HardwareGraph,
    p: &ScreeningParams,
    seed: u64,
) -> Result<(usize, Vec<SizeProbe>, bool)> {
    let (lo_l, hi_l) = p.lmax_range;
    let (mut lo, mut hi) = p.size_bounds;
    let mut probes: Vec<SizeProbe> = Vec::new();
    while lo <= hi {
        let mut mid = lo + (hi - lo) / 2;
        if class == InstanceClass::Dreg03 && mid % 2 == 1 {
            // 3-regular graphs need an even node count.
            mid = if mid < hi { mid + 1 } else { mid - 1 };
            if mid < lo {
                break;
            }
        }
        let pr = probe(class, mid, hw, p, seed)?;
        log::info!("screen {class} size {mid}: lmax {:?}", pr.lmax);
        let fits = pr.median.is_some_and(|m| m <= hi_l);
        probes.push(pr);
        if fits {
            lo = mid + 1;
        } else if mid == 0 {
            break;
        } else {
            hi = mid - 1;
        }
    }
    let in_range = probes
        .iter()
        .filter(|pr| pr.median.is_some_and(|m| (lo_l..=hi_l).contains(&m)))
        .map(|pr| pr.size)
        .max();
    if let Some(size) = in_range {
        return Ok((size, probes, true));
    }
    let fitting = probes
        .iter()
        .filter(|pr| pr.median.is_some_and(|m| m <= hi_l))
        .map(|pr| pr.size)
        .max();
    match fitting {
        Some(size) => Ok((size, probes, false)),
        None => Err(Error::EmbeddingNotFound(p.size_bounds.0)),
    }
}

/// Screens `class` on `hw`. Heuristic-embedded classes are sized by the
/// chain-length search unless `params.size` is set; other classes need an
/// explicit size (Pegasus `m` for native classes).
pub fn screen_class(
    class: InstanceClass,
    hw: &HardwareGraph,
    params: &ScreeningParams,
    seed: u64,
) -> Result<ScreeningVerdict> {
    if class == InstanceClass::Import {
        return Err(Error::Param(
            "imported classes cannot be generated at other sizes".into(),
        ));
    }
    if params.runs == 0 || params.embed_trials == 0 {
        return Err(Error::Param("screening needs at least one run and one trial".into()));
    }
    let (size, probes, in_range) = match (params.size, class.embedding_kind()) {
        (Some(n), _) => (n, Vec::new(), None),
        (None, EmbeddingKind::Heuristic) => {
            let (n, probes, ok) = search_size(class, hw, params, seed)?;
            (n, probes, Some(ok))
        }
        (None, _) => return Err(Error::Param(format!("{class} needs an explicit size"))),
    };
    let spec = InstanceSpec::new(class, vec![size], seed::derive(seed, &[size as u64, 0]));
    let model = generate(&spec, class.is_native().then_some(hw))?;

    let clock = if params.model_clock {
        Clock::model()
    } else {
        Clock::Wall
    };
    let registry = Registry::default();
    let mut best: Vec<(String, Vec<f64>)> = Vec::new();
    for id in ["sgd", "sa"] {
        let solver = registry.get(id)?;
        let mut config = SolverConfig::default();
        if solver.uses_sweeps() {
            config.num_sweeps = calibrate(solver.as_ref(), &model, clock, seed)?.num_sweeps(1, params.time_limit);
        }
        let mut energies = Vec::with_capacity(params.runs);
        for run in 0..params.runs {
            config.seed = seed::derive_str(seed, &["screen", id, &run.to_string()]);
            let mut budget = Budget::new(params.time_limit, clock);
            let set = solver.solve(&model, 1, &mut budget, &config)?;
            energies.push(set.lowest().map_or(f64::INFINITY, |s| s.energy));
        }
        best.push((id.to_string(), energies));
    }
    let minimum = best
        .iter()
        .flat_map(|(_, e)| e.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * minimum.abs().max(1.0);
    let solvers: Vec<SolverAgreement> = best
        .into_iter()
        .map(|(solver, e)| SolverAgreement {
            solver,
            best: e.iter().copied().fold(f64::INFINITY, f64::min),
            hits: e.iter().filter(|&&x| x <= minimum + tol).count(),
            runs: e.len(),
        })
        .collect();
    let decision = if solvers.iter().all(|s| s.fraction() >= params.agreement) {
        Decision::Reject
    } else {
        Decision::Accept
    };
    Ok(ScreeningVerdict {
        class,
        size,
        probes,
        lmax_in_range: in_range,
        minimum,
        solvers,
        decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::pegasus;

    fn quick() -> ScreeningParams {
        ScreeningParams {
            runs: 10,
            model_clock: true,
            ..ScreeningParams::default()
        }
    }

    #[test]
    fn small_regular_graphs_are_rejected() {
        let hw = pegasus(4).unwrap();
        let p = ScreeningParams {
            lmax_range: (2, 3),
            size_bounds: (8, 64),
            embed_tries: 4,
            ..quick()
        };
        let v = screen_class(InstanceClass::Dreg03, &hw, &p, 5).unwrap();
        let chosen = v.probes.iter().find(|pr| pr.size == v.size).unwrap();
        assert!(chosen.median.unwrap() <= 3);
        assert_eq!(v.decision, Decision::Reject, "{v:?}");
    }

    #[test]
    fn native_spin_glass_is_accepted() {
        let hw = pegasus(6).unwrap();
        let p = ScreeningParams {
            size: Some(6),
            ..quick()
        };
        let v = screen_class(InstanceClass::Nat1, &hw, &p, 1).unwrap();
        assert_eq!(v.decision, Decision::Accept, "{v:?}");
    }

    #[test]
    fn medians_treat_failures_as_longest() {
        assert_eq!(median_lmax(&[Some(3), None, Some(5)]), Some(5));
        assert_eq!(median_lmax(&[None, None, Some(5)]), None);
    }
}
