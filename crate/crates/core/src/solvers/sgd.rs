//! Steepest greedy descent with random restarts.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{finish, setup_ops, Best, Budget, SampleSet, SolverConfig, SpinProblem};
use crate::error::Result;
use crate::model::Bqm;
use crate::seed;

#[derive(Debug, PartialEq)]
struct Gain(f64);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Smallest energy decrease treated as an improvement.
fn tolerance(p: &SpinProblem) -> f64 {
    p.delta_energy_range().map_or(0.0, |(max, _)| max * 1e-12)
}

/// Flips the variable with the largest energy decrease (lowest index on
/// ties) until none decreases it. Returns the flip count, or `None` if the
/// budget ran out first.
fn descend(p: &SpinProblem, x: &mut [i8], budget: &mut Budget, tol: f64) -> Option<u64> {
    let mut fields = p.local_fields(x);
    let mut stamp = vec![0u32; x.len()];
    let mut heap = BinaryHeap::new();
    for i in 0..x.len() {
        let gain = 2.0 * f64::from(x[i]) * fields[i];
        if gain > tol {
            heap.push((Gain(gain), Reverse(i), 0u32));
        }
    }
    let mut flips = 0;
    while let Some((_, Reverse(i), st)) = heap.pop() {
        if st != stamp[i] {
            continue;
        }
        let cost = 1 + p.degree(i) as u64;
        if !budget.fits(cost) {
            return None;
        }
        budget.charge(cost);
        p.flip(i, x, &mut fields);
        flips += 1;
        stamp[i] += 1;
        for (j, _) in p.neighbors(i) {
            stamp[j] += 1;
            let gain = 2.0 * f64::from(x[j]) * fields[j];
            if gain > tol {
                heap.push((Gain(gain), Reverse(j), stamp[j]));
            }
        }
    }
    Some(flips)
}

/// Restarted steepest descent, keeping the `s` lowest local minima. Work is
/// the total number of flips.
pub fn solve_sgd(model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
    config.validate()?;
    let p = SpinProblem::new(model);
    budget.charge(setup_ops(&p));
    let tol = tolerance(&p);
    let mut rng = seed::rng(config.seed);
    let cap = config.max_samples.unwrap_or(usize::MAX);
    let mut best = Best::new(s);
    let (mut restarts, mut work) = (0usize, 0u64);
    while restarts < cap && budget.fits(setup_ops(&p)) {
        let mut x = p.random_state(&mut rng);
        budget.charge(setup_ops(&p));
        let Some(flips) = descend(&p, &mut x, budget, tol) else {
            break;
        };
        work += flips;
        best.push(p.energy(&x), x);
        restarts += 1;
    }
    let mut set = finish("sgd", model, &p, best.into_states(), s, work, budget);
    set.info.insert("restarts".into(), restarts.into());
    Ok(set)
}

/// No single flip lowers the energy of `values` by more than `tol`.
pub fn is_local_minimum(model: &Bqm, values: &[i8], tol: f64) -> bool {
    let p = SpinProblem::new(model);
    let x: Vec<i8> = match model.vartype() {
        crate::model::Vartype::Spin => values.to_vec(),
        crate::model::Vartype::Binary => values.iter().map(|&b| 2 * b - 1).collect(),
    };
    let fields = p.local_fields(&x);
    (0..x.len()).all(|i| -2.0 * f64::from(x[i]) * fields[i] >= -tol)
}
