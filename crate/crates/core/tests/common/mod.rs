#![allow(dead_code)]

use qubench_core::generators::InstanceClass;
use qubench_core::harness::{RecordStatus, Scenario, Space, TestRecord};
use qubench_core::{Assignment, Bqm, Vartype};

/// A record with `energies` as reported; complete when there are `s` of them.
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

/// Every assignment of `n` variables in the given domain, in counting order.
pub fn all_assignments(n: usize, vartype: Vartype) -> impl Iterator<Item = Assignment> {
    let [lo, hi] = vartype.domain();
    (0u64..1 << n).map(move |bits| {
        Assignment::from(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { hi } else { lo })
                .collect::<Vec<i8>>(),
        )
    })
}

/// Direct evaluation: linear, then quadratic in ascending key order, then offset.
pub fn naive_energy(model: &Bqm, a: &Assignment) -> f64 {
    let v = a.values();
    let mut e = 0.0;
    for (i, h) in model.linear().iter().enumerate() {
        e += h * v[i] as f64;
    }
    for (i, j, w) in model.quadratic() {
        e += w * v[i] as f64 * v[j] as f64;
    }
    e + model.offset()
}

/// Brute-force ground-state energy.
pub fn ground_energy(model: &Bqm) -> f64 {
    all_assignments(model.num_variables(), model.vartype())
        .map(|a| naive_energy(model, &a))
        .fold(f64::INFINITY, f64::min)
}
