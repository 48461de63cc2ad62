//! Parallel tempering over a fixed ladder of temperatures.

use rand::Rng;

use super::{finish, setup_ops, Budget, SampleSet, SolverConfig, SpinProblem};
use crate::error::Result;
use crate::model::Bqm;
use crate::seed;

/// Acceptance probability for exchanging the states of two replicas.
pub fn swap_probability(beta_a: f64, beta_b: f64, e_a: f64, e_b: f64) -> f64 {
    ((beta_a - beta_b) * (e_a - e_b)).exp().min(1.0)
}

/// `count` inverse temperatures spaced geometrically from `hot` to `cold`.
/// A single replica runs at `cold`.
pub fn default_ladder(hot: f64, cold: f64, count: usize) -> Vec<f64> {
    super::beta_schedule(hot, cold, count)
}

fn ladder(p: &SpinProblem, config: &SolverConfig) -> Vec<f64> {
    match &config.temperatures {
        // Hottest first, to match the default ladder.
        Some(ts) => ts.iter().rev().map(|t| 1.0 / t).collect(),
        None => {
            let (hot, cold) = config.beta_range.unwrap_or_else(|| p.default_beta_range());
            default_ladder(hot, cold, config.num_replicas)
        }
    }
}

struct Replica {
    x: Vec<i8>,
    fields: Vec<f64>,
    energy: f64,
}

/// `s` independent tempering runs of `num_sweeps` rounds; each sample is
/// the lowest state seen at the coldest temperature, also for a run the
/// budget cuts short. Work is `R * n` per round.
pub fn solve_pt(model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
    config.validate()?;
    let p = SpinProblem::new(model);
    budget.charge(setup_ops(&p));
    let betas = ladder(&p, config);
    let r = betas.len();
    let cold = r - 1;
    let round = (r * p.num_variables()) as u64;
    let mut rng = seed::rng(config.seed);
    let mut states = Vec::with_capacity(s);
    let (mut work, mut swaps, mut attempts) = (0u64, 0u64, 0u64);
    'runs: for _ in 0..s {
        let init = r as u64 * setup_ops(&p);
        if !budget.fits(init) {
            break;
        }
        let mut reps: Vec<Replica> = (0..r)
            .map(|_| {
                let x = p.random_state(&mut rng);
                let fields = p.local_fields(&x);
                let energy = p.energy(&x);
                Replica { x, fields, energy }
            })
            .collect();
        budget.charge(init);
        let mut best = (reps[cold].energy, reps[cold].x.clone());
        for _ in 0..config.num_sweeps {
            if !budget.fits(round) {
                states.push(best.1);
                break 'runs;
            }
            for (rep, &beta) in reps.iter_mut().zip(&betas) {
                rep.energy += p.metropolis_sweep(beta, &mut rep.x, &mut rep.fields, &mut rng);
            }
            for a in 0..r.saturating_sub(1) {
                attempts += 1;
                let pr = swap_probability(betas[a], betas[a + 1], reps[a].energy, reps[a + 1].energy);
                if pr >= 1.0 || rng.random::<f64>() < pr {
                    reps.swap(a, a + 1);
                    swaps += 1;
                }
            }
            budget.charge(round);
            work += round;
            if reps[cold].energy < best.0 {
                best = (reps[cold].energy, reps[cold].x.clone());
            }
        }
        states.push(best.1);
    }
    let mut set = finish("pt", model, &p, states, s, work, budget);
    set.info.insert("num_sweeps".into(), config.num_sweeps.into());
    set.info.insert("num_replicas".into(), r.into());
    if attempts > 0 {
        set.info
            .insert("swap_rate".into(), (swaps as f64 / attempts as f64).into());
    }
    Ok(set)
}
