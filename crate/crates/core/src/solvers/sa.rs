//! Simulated annealing with Metropolis sweeps.

use super::{finish, setup_ops, Budget, SampleSet, SolverConfig, SpinProblem};
use crate::error::Result;
use crate::model::Bqm;
use crate::seed;

/// Geometric inverse temperatures from `hot` to `cold` over `sweeps` steps.
pub fn beta_schedule(hot: f64, cold: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![cold];
    }
    let ratio = (cold / hot).powf(1.0 / (sweeps - 1) as f64);
    (0..sweeps).map(|k| hot * ratio.powi(k as i32)).collect()
}

/// `s` independent anneals of `num_sweeps` sweeps each; each sample is the
/// lowest-energy state seen at the end of a sweep. An anneal the budget
/// cuts short contributes the best state it reached. Work is `n` per sweep.
pub fn solve_sa(model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
    config.validate()?;
    let p = SpinProblem::new(model);
    budget.charge(setup_ops(&p));
    let (hot, cold) = config.beta_range.unwrap_or_else(|| p.default_beta_range());
    let betas = beta_schedule(hot, cold, config.num_sweeps);
    let n = p.num_variables() as u64;
    let mut rng = seed::rng(config.seed);
    let mut states = Vec::with_capacity(s);
    let mut work = 0u64;
    'anneals: for _ in 0..s {
        if !budget.fits(setup_ops(&p)) {
            break;
        }
        let mut x = p.random_state(&mut rng);
        let mut fields = p.local_fields(&x);
        budget.charge(setup_ops(&p));
        let mut energy = p.energy(&x);
        let (mut best, mut best_energy) = (x.clone(), energy);
        for &beta in &betas {
            if !budget.fits(n) {
                // A cut-short anneal still reports its best state.
                states.push(best);
                break 'anneals;
            }
            energy += p.metropolis_sweep(beta, &mut x, &mut fields, &mut rng);
            budget.charge(n);
            work += n;
            if energy < best_energy {
                best.copy_from_slice(&x);
                best_energy = energy;
            }
        }
        states.push(best);
    }
    let mut set = finish("sa", model, &p, states, s, work, budget);
    set.info.insert("num_sweeps".into(), config.num_sweeps.into());
    set.info.insert("beta_range".into(), serde_json::json!([hot, cold]));
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vartype;
    use crate::solvers::Status;

    fn ferro_square() -> Bqm {
        Bqm::from_terms(
            Vartype::Spin,
            vec![0.0; 4],
            vec![(0, 1, -1.0), (1, 2, -1.0), (2, 3, -1.0), (0, 3, -1.0)],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn schedule_is_geometric() {
        let b = beta_schedule(0.1, 10.0, 5);
        assert_eq!(b.len(), 5);
        assert!((b[0] - 0.1).abs() < 1e-12 && (b[4] - 10.0).abs() < 1e-9);
        let r = b[1] / b[0];
        assert!(b.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9));
        assert_eq!(beta_schedule(0.1, 10.0, 1), vec![10.0]);
    }

    #[test]
    fn ferromagnet_square() {
        let model = ferro_square();
        let mut hits = 0;
        for seed in 0..100 {
            let set = solve_sa(&model, 1, &mut Budget::model(1.0), &SolverConfig::with_seed(seed)).unwrap();
            if set.samples[0].energy == -4.0 {
                hits += 1;
            }
        }
        assert!(hits >= 99, "{hits}");
    }

    #[test]
    fn work_is_n_times_sweeps() {
        let config = SolverConfig {
            num_sweeps: 37,
            ..SolverConfig::with_seed(1)
        };
        let set = solve_sa(&ferro_square(), 1, &mut Budget::model(1.0), &config).unwrap();
        assert_eq!(set.work, 4 * 37);
        let set = solve_sa(&ferro_square(), 3, &mut Budget::model(1.0), &config).unwrap();
        assert_eq!(set.work, 3 * 4 * 37);
    }

    #[test]
    fn short_budget_is_partial() {
        let config = SolverConfig {
            num_sweeps: 1000,
            ..SolverConfig::default()
        };
        let set = solve_sa(&ferro_square(), 10, &mut Budget::model(4e-5), &config).unwrap();
        assert_eq!(set.status, Status::Partial);
        assert!(set.len() < 10);
        assert!(set.wall_time <= 4e-5);
    }

    #[test]
    fn same_seed_same_samples() {
        let config = SolverConfig::with_seed(11);
        let a = solve_sa(&ferro_square(), 4, &mut Budget::model(1.0), &config).unwrap();
        let b = solve_sa(&ferro_square(), 4, &mut Budget::model(1.0), &config).unwrap();
        assert_eq!(a, b);
    }
}
