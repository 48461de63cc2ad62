use super::{finish, setup_ops, Best, Budget, SampleSet, SolverConfig, SpinProblem};
use crate::error::Result;
use crate::model::Bqm;
use crate::seed;

/// Uniform random assignments until the budget or the draw cap runs out,
/// keeping the `s` best. Random sampling does no work.
pub fn solve_random(model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
    config.validate()?;
    let p = SpinProblem::new(model);
    budget.charge(setup_ops(&p));
    let mut rng = seed::rng(config.seed);
    let cost = setup_ops(&p);
    let cap = config.max_samples.unwrap_or(usize::MAX);
    let mut best = Best::new(s);
    let mut draws = 0usize;
    while draws < cap && budget.fits(cost) {
        let x = p.random_state(&mut rng);
        best.push(p.energy(&x), x);
        budget.charge(cost);
        draws += 1;
    }
    let mut set = finish("random", model, &p, best.into_states(), s, 0, budget);
    set.info.insert("draws".into(), draws.into());
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vartype;
    use crate::solvers::Status;

    #[test]
    fn both_values_appear() {
        let model = Bqm::new(Vartype::Spin, 1);
        let config = SolverConfig {
            max_samples: Some(64),
            ..SolverConfig::with_seed(3)
        };
        let set = solve_random(&model, 64, &mut Budget::model(1.0), &config).unwrap();
        let ones = set.samples.iter().filter(|s| s.values.values()[0] == 1).count();
        assert!(ones > 0 && ones < 64);
        assert_eq!(set.work, 0);
    }

    #[test]
    fn generous_budget_keeps_exactly_s() {
        let model = Bqm::from_terms(Vartype::Spin, vec![0.0; 3], vec![(0, 1, 1.0), (1, 2, -1.0)], 0.0).unwrap();
        let set = solve_random(&model, 10, &mut Budget::model(0.01), &SolverConfig::with_seed(1)).unwrap();
        assert_eq!(set.status, Status::Complete);
        assert_eq!(set.len(), 10);
        assert!(set.energies().windows(2).all(|w| w[0] <= w[1]));
        set.verify(&model).unwrap();
    }

    #[test]
    fn starved_budget_is_partial() {
        let model = Bqm::new(Vartype::Spin, 100);
        let set = solve_random(&model, 10, &mut Budget::model(1e-6), &SolverConfig::default()).unwrap();
        assert_eq!(set.status, Status::Partial);
        assert!(set.len() < 10);
    }
}
