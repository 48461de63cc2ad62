mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use qubench_core::harness::Scenario;
use qubench_core::metrics::{rank_scenario, Dataset, Epsilon, Verdict};
use qubench_core::model::{apply_srt, convert};
use qubench_core::{Assignment, Bqm, Vartype};

use common::{naive_energy, record};

fn vartype() -> impl Strategy<Value = Vartype> {
    prop_oneof![Just(Vartype::Spin), Just(Vartype::Binary)]
}

fn weight() -> impl Strategy<Value = f64> {
    (-40i32..=40).prop_map(|k| k as f64 / 8.0)
}

prop_compose! {
    fn model_with(vt: Vartype)(n in 1usize..=10)(
        linear in prop::collection::vec(weight(), n),
        quad in prop::collection::vec((0..n, 0..n, weight()), 0..3 * n),
        offset in weight(),
        vt in Just(vt),
    ) -> Bqm {
        let quad = quad.into_iter().filter(|(i, j, _)| i != j);
        Bqm::from_terms(vt, linear, quad, offset).unwrap()
    }
}

fn model() -> impl Strategy<Value = Bqm> {
    vartype().prop_flat_map(model_with)
}

fn assignment_for(m: &Bqm, bits: u64) -> Assignment {
    let [lo, hi] = m.vartype().domain();
    Assignment::from(
        (0..m.num_variables())
            .map(|i| if bits >> i & 1 == 1 { hi } else { lo })
            .collect::<Vec<_>>(),
    )
}

proptest! {
    #[test]
    fn energy_matches_direct_sum(m in model(), bits in any::<u64>()) {
        let a = assignment_for(&m, bits);
        prop_assert_eq!(m.energy(&a).unwrap(), naive_energy(&m, &a));
    }

    #[test]
    fn vartype_conversion_preserves_energy(m in model(), bits in any::<u64>()) {
        let a = assignment_for(&m, bits);
        let other = if m.vartype() == Vartype::Spin { Vartype::Binary } else { Vartype::Spin };
        let c = convert(&m, other);
        let e = c.energy(&a.to_vartype(m.vartype(), other)).unwrap();
        prop_assert!((e - m.energy(&a).unwrap()).abs() < 1e-9);
        let back = convert(&c, m.vartype());
        prop_assert!((back.energy(&a).unwrap() - m.energy(&a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn spin_reversal_is_a_gauge(m in model_with(Vartype::Spin), bits in any::<u64>(), mask in any::<u64>()) {
        let a = assignment_for(&m, bits);
        let mask: BTreeSet<usize> = (0..m.num_variables()).filter(|i| mask >> i & 1 == 1).collect();
        let (g, mask) = apply_srt(&m, &mask).unwrap();
        prop_assert_eq!(g.energy(&a.flipped(&mask)).unwrap(), m.energy(&a).unwrap());
    }

    #[test]
    fn spin_glass_gaps_are_even(
        n in 2usize..=10,
        signs in prop::collection::vec(any::<bool>(), 45),
        a in any::<u64>(),
        b in any::<u64>(),
    ) {
        let mut quad = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if k % 3 != 2 {
                    quad.push((i, j, if signs[k] { 1.0 } else { -1.0 }));
                }
                k += 1;
            }
        }
        let m = Bqm::from_terms(Vartype::Spin, vec![0.0; n], quad, 0.0).unwrap();
        prop_assert!(m.is_spin_glass() || m.num_interactions() == 0);
        let gap = m.energy(&assignment_for(&m, a)).unwrap() - m.energy(&assignment_for(&m, b)).unwrap();
        prop_assert_eq!(gap.rem_euclid(2.0), 0.0);
    }
}

const SC: Scenario = Scenario { s: 1, t: 0.1 };

/// A ranking cell: per solver, per instance, `None` for a failed run.
fn cell(results: &[Vec<Option<i32>>]) -> Vec<(String, usize, Option<f64>)> {
    let mut out = Vec::new();
    for (k, per_instance) in results.iter().enumerate() {
        for (i, e) in per_instance.iter().enumerate() {
            out.push((format!("s{k}"), i, e.map(f64::from)));
        }
    }
    out
}

fn dataset(rows: &[(String, usize, Option<f64>)], relabel: &[usize], scale: &[f64]) -> Dataset {
    Dataset::new(
        rows.iter()
            .map(|(solver, i, e)| {
                let energies = e.map(|e| vec![e * scale[*i]]).unwrap_or_default();
                record(solver, "SK", relabel[*i], SC, energies)
            })
            .collect(),
    )
}

fn results() -> impl Strategy<Value = Vec<Vec<Option<i32>>>> {
    (2usize..=4, 1usize..=9).prop_flat_map(|(k, n)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.85, -6i32..=-1), n), k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ranking_ignores_instance_labels_and_scale(
        res in results(),
        perm_seed in any::<u64>(),
        scales in prop::collection::vec(1u32..=8, 9),
    ) {
        let rows = cell(&res);
        let n = res[0].len();
        let identity: Vec<usize> = (0..n).collect();
        let mut relabel = identity.clone();
        // Deterministic shuffle from the seed.
        for i in (1..n).rev() {
            relabel.swap(i, (perm_seed.wrapping_mul(i as u64 + 7) >> 7) as usize % (i + 1));
        }
        let scale: Vec<f64> = scales.iter().map(|&c| c as f64 / 4.0).collect();
        let eps = Epsilon::Relative(1e-9);
        let base = rank_scenario(&dataset(&rows, &identity, &[1.0; 9]), "SK", SC, eps).unwrap();
        let moved = rank_scenario(&dataset(&rows, &relabel, &scale), "SK", SC, eps).unwrap();
        prop_assert_eq!(&base.winners, &moved.winners);
        for o in &base.outcomes {
            prop_assert_eq!(Some(o.verdict), moved.outcome(&o.solver).map(|m| m.verdict));
        }
    }

    #[test]
    fn failing_solvers_never_win(res in results()) {
        let r = rank_scenario(&dataset(&cell(&res), &(0..9).collect::<Vec<_>>(), &[1.0; 9]), "SK", SC, Epsilon::Auto)
            .unwrap();
        for o in &r.outcomes {
            if o.verdict == Verdict::Fail {
                prop_assert!(!r.winners.contains(&o.solver));
            }
            prop_assert_eq!(o.verdict == Verdict::Win, r.winners.contains(&o.solver));
        }
    }
}
