//! Acceptance criteria, one PASS/FAIL line each. Runs with its own harness
//! so the lines are visible without `--nocapture`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;

use qubench_core::embedding::{
    apply_embedding, embed_clique, embed_heuristic, embed_lattice3d, random_graph, unembed, validate_embedding,
    Embedding,
};
use qubench_core::generators::{generate, InstanceClass, InstanceSpec};
use qubench_core::harness::{
    calibrate, run_suite, scenario_grid, RecordStatus, Scenario, ScenarioConfig, Space, SuiteConfig, TestRecord,
};
use qubench_core::metrics::{
    median_sample_energy, milestone_report, rank_scenario, Dataset, Epsilon, Verdict, M1_CLASS_LABELS, M2_CLASS_LABELS,
};
use qubench_core::qpu::{access_time, AccessTimeModel, AnnealSchedule};
use qubench_core::seed;
use qubench_core::solvers::{
    is_local_minimum, solve_sa, solve_sgd, Budget, Clock, Registry, SolverConfig, SpinProblem,
};
use qubench_core::topology::{lattice3d, model_graph, pegasus};
use qubench_core::{Assignment, Bqm, Vartype};

use common::{all_assignments, ground_energy, naive_energy, record};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_model(rng: &mut impl Rng, n: usize, vartype: Vartype, density: f64) -> Bqm {
    let linear = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                quad.push((i, j, rng.random_range(-4.0..4.0)));
            }
        }
    }
    Bqm::from_terms(vartype, linear, quad, rng.random_range(-2.0..2.0)).unwrap()
}

/// Random +-1 couplings on `g`, no fields.
fn pm1_model(g: &qubench_core::HardwareGraph, seed: u64) -> Bqm {
    let mut rng = seed::rng(seed);
    let quad: Vec<_> = g
        .edges()
        .map(|(i, j)| (i, j, if rng.random_bool(0.5) { 1.0 } else { -1.0 }))
        .collect();
    Bqm::from_terms(Vartype::Spin, vec![0.0; g.capacity()], quad, 0.0).unwrap()
}

fn energy_oracle() -> Outcome {
    let mut rng = seed::rng(1);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = 1 + k % 12;
        let vt = if k % 2 == 0 { Vartype::Spin } else { Vartype::Binary };
        let m = random_model(&mut rng, n, vt, 0.5);
        let other = if vt == Vartype::Spin {
            Vartype::Binary
        } else {
            Vartype::Spin
        };
        let c = m.to_vartype(other);
        for a in all_assignments(n, vt) {
            let e = m.energy(&a).unwrap();
            ensure!(
                e == naive_energy(&m, &a),
                "model {k}: energy {e} != oracle {}",
                naive_energy(&m, &a)
            );
            worst = worst.max((c.energy(&a.to_vartype(vt, other)).unwrap() - e).abs());
        }
    }
    ensure!(worst < 1e-9, "round-trip max |dE| = {worst:e}");
    Ok(format!("200 models exact, round-trip max |dE| = {worst:.1e}"))
}

fn access_time_arithmetic() -> Outcome {
    let model = AccessTimeModel::default();
    let t = access_time(&AnnealSchedule::new(1, 1, model.t_anneal), &model).map_err(|e| e.to_string())?;
    ensure!(((t - 0.016481) / 0.016481).abs() <= 1e-12, "access_time(1, 1) = {t}");
    ensure!(model.block_reads() == 33, "r0 = {}", model.block_reads());
    Ok(format!("access_time(1, 1) = {:.3} ms, r0 = 33", t * 1e3))
}

fn scenario_protocol() -> Outcome {
    let grid = scenario_grid(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    ensure!(grid.len() == 19, "{} scenarios", grid.len());
    let mut recs = Vec::new();
    for label in M1_CLASS_LABELS {
        for &sc in &grid {
            for solver in ["sa", "qpu"] {
                let mut r = record(solver, label, 0, sc, vec![-1.0; sc.s]);
                if M2_CLASS_LABELS.contains(&label) {
                    let mut logical = r.clone();
                    logical.space = Space::Logical;
                    recs.push(logical);
                }
                r.space = Space::Physical;
                recs.push(r);
            }
        }
    }
    let data = Dataset::new(recs);
    let m1 = milestone_report(&data, 1, Epsilon::Auto)
        .map_err(|e| e.to_string())?
        .num_cells();
    let m2 = milestone_report(&data, 2, Epsilon::Auto)
        .map_err(|e| e.to_string())?
        .num_cells();
    ensure!(m1 == 247 && m2 == 152, "M1 {m1} cells, M2 {m2} cells");
    Ok("19 scenarios, M1 247 cells, M2 152 cells".into())
}

fn embedding_fuzz() -> Outcome {
    let p16 = pegasus(16).unwrap();
    let p6 = pegasus(6).unwrap();
    let mut max_lattice_chain = 0;
    let mut heuristic_lmax = 0;
    for run in 0..100u64 {
        let k = 2 + (run as usize * 7) % 29;
        let e = embed_clique(k, &p16, run).map_err(|e| format!("clique K{k} seed {run}: {e}"))?;
        let v = validate_embedding(&qubench_core::topology::clique(k).unwrap(), &p16, &e);
        ensure!(v.is_empty(), "clique K{k} seed {run}: {v:?}");

        let dims = (
            2 + run as usize % 5,
            2 + (run as usize / 5) % 5,
            2 + (run as usize / 25) % 5,
        );
        let e = embed_lattice3d(dims.0, dims.1, dims.2, &p16, run).map_err(|e| format!("lattice {dims:?}: {e}"))?;
        let v = validate_embedding(&lattice3d(dims.0, dims.1, dims.2).unwrap(), &p16, &e);
        ensure!(v.is_empty(), "lattice {dims:?} seed {run}: {v:?}");
        max_lattice_chain = max_lattice_chain.max(e.max_chain_length());

        let n = 10 + (run as usize * 13) % 51;
        let g = random_graph(n, 3.0, run);
        let e = embed_heuristic(&g, &p6, run, 10).map_err(|e| format!("heuristic n = {n} seed {run}: {e}"))?;
        let v = validate_embedding(&g, &p6, &e);
        ensure!(v.is_empty(), "heuristic n = {n} seed {run}: {v:?}");
        heuristic_lmax = heuristic_lmax.max(e.max_chain_length());
    }
    ensure!(max_lattice_chain <= 2, "lattice chain of length {max_lattice_chain}");
    Ok(format!(
        "300 embeddings valid, lattice L_max = {max_lattice_chain}, heuristic L_max = {heuristic_lmax}"
    ))
}

/// Minimum over all spin states by Gray-code enumeration.
fn gray_ground(p: &SpinProblem) -> (f64, Vec<Vec<i8>>) {
    let n = p.num_variables();
    let mut x = vec![-1i8; n];
    let mut fields = p.local_fields(&x);
    let mut e = p.energy(&x);
    let mut best = (e, vec![x.clone()]);
    for k in 1u64..1 << n {
        let i = k.trailing_zeros() as usize;
        let de = -2.0 * x[i] as f64 * fields[i];
        p.flip(i, &mut x, &mut fields);
        e += de;
        if e < best.0 - 1e-9 {
            best = (e, vec![x.clone()]);
        } else if (e - best.0).abs() <= 1e-9 {
            best.1.push(x.clone());
        }
    }
    best
}

fn embed_unembed_oracle() -> Outcome {
    let hw = pegasus(3).unwrap();
    let mut rng = seed::rng(7);
    let mut checked = 0;
    for k in 0..40u64 {
        let n = 3 + k as usize % 6;
        let logical = random_model(&mut rng, n, Vartype::Spin, 0.6);
        let e = embed_heuristic(&model_graph(&logical), &hw, k, 10).map_err(|e| e.to_string())?;
        if e.num_qubits() > 20 {
            continue;
        }
        let physical = apply_embedding(&logical, &e, &hw, 4.0).map_err(|e| e.to_string())?;
        let (_, grounds) = gray_ground(&SpinProblem::new(&physical));
        let target = ground_energy(&logical);
        for g in grounds {
            let (l, report) = unembed(&Assignment::from(g), &e, k).map_err(|e| e.to_string())?;
            ensure!(report.num_broken == 0, "model {k}: physical ground state breaks chains");
            let got = logical.energy(&l).unwrap();
            ensure!(
                (got - target).abs() < 1e-9,
                "model {k}: unembedded energy {got}, ground {target}"
            );
        }
        checked += 1;
    }
    ensure!(checked >= 20, "only {checked} models small enough to enumerate");

    // Majority vote on constructed broken chains.
    let e = Embedding::new(vec![vec![0, 1, 2], vec![3, 4, 5, 6, 7], vec![8]]);
    let (l, report) = unembed(&Assignment::from(vec![1, -1, 1, -1, -1, 1, -1, 1, -1]), &e, 0).unwrap();
    ensure!(l.values() == [1, -1, -1], "vote gave {:?}", l.values());
    ensure!(report.broken == [true, true, false], "breaks {:?}", report.broken);
    Ok(format!(
        "{checked} models: every physical ground state unembeds to a logical ground state; votes correct"
    ))
}

fn solver_ground_truth() -> Outcome {
    let mut hits = 0;
    for run in 0..100u64 {
        let g = random_graph(16, 5.0, 1000 + run);
        let m = pm1_model(&g, run);
        let (target, _) = gray_ground(&SpinProblem::new(&m));
        let cfg = SolverConfig {
            num_sweeps: 1000,
            ..SolverConfig::with_seed(run)
        };
        let set = solve_sa(&m, 1, &mut Budget::unlimited(Clock::model()), &cfg).map_err(|e| e.to_string())?;
        if (set.lowest().unwrap().energy - target).abs() < 1e-9 {
            hits += 1;
        }
    }
    ensure!(hits >= 95, "SA found the optimum on {hits}/100 runs");

    let mut rng = seed::rng(3);
    for run in 0..50u64 {
        let vt = if run % 2 == 0 { Vartype::Spin } else { Vartype::Binary };
        let m = random_model(&mut rng, 20, vt, 0.3);
        let set = solve_sgd(&m, 5, &mut Budget::model(0.001), &SolverConfig::with_seed(run)).unwrap();
        for s in &set.samples {
            ensure!(
                is_local_minimum(&m, s.values.values(), 1e-12),
                "SGD run {run}: not a local minimum"
            );
        }
    }
    let triangle = Bqm::from_terms(
        Vartype::Spin,
        vec![0.0; 3],
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)],
        0.0,
    )
    .unwrap();
    for run in 0..100u64 {
        let set = solve_sgd(&triangle, 3, &mut Budget::model(0.001), &SolverConfig::with_seed(run)).unwrap();
        ensure!(
            set.samples.iter().all(|s| s.energy == -1.0),
            "triangle run {run}: {:?}",
            set.energies()
        );
    }
    Ok(format!(
        "SA {hits}/100, SGD local minima on 50 models, triangle always -1"
    ))
}

fn pareto_ordering() -> Outcome {
    let t = 0.5;
    let m = generate(&InstanceSpec::new(InstanceClass::Lat3d, vec![8, 8, 8], 2024), None).unwrap();
    ensure!(m.num_variables() == 512, "lattice has {} nodes", m.num_variables());
    let registry = Registry::default();
    let mut best: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for id in ["random", "sgd", "sa"] {
        let solver = registry.get(id).unwrap();
        let mut cfg = SolverConfig::default();
        if solver.uses_sweeps() {
            cfg.num_sweeps = calibrate(solver.as_ref(), &m, Clock::Wall, 0).unwrap().num_sweeps(1, t);
        }
        for trial in 0..15u64 {
            cfg.seed = seed::derive_str(2024, &["pareto", id, &trial.to_string()]);
            let set = solver.solve(&m, 1, &mut Budget::wall(t), &cfg).unwrap();
            best.entry(id).or_default().push(set.lowest().unwrap().energy);
        }
    }
    let target = best.values().flatten().copied().fold(f64::INFINITY, f64::min);
    let r: BTreeMap<&str, f64> = best
        .iter()
        .map(|(id, es)| {
            let rs: Vec<f64> = es.iter().map(|e| (target - e).abs() / target.abs()).collect();
            (*id, median_sample_energy(&rs).unwrap())
        })
        .collect();
    let line = format!(
        "R(SA) = {:.4}, R(SGD) = {:.4}, R(Random) = {:.4}",
        r["sa"], r["sgd"], r["random"]
    );
    ensure!(
        r["sa"] < r["sgd"] && r["sgd"] < r["random"],
        "ordering violated: {line}"
    );
    ensure!(
        (0.8..=1.2).contains(&r["random"]),
        "R(Random) outside [0.8, 1.2]: {line}"
    );
    Ok(line)
}

fn toy_config(classes: &str, solvers: &str) -> SuiteConfig {
    SuiteConfig::from_toml_str(&format!(
        r#"
        instances = 3
        solvers = {solvers}
        mode = "model"
        hardware = {{ pegasus = 3 }}
        [scenarios]
        s = [1, 10]
        t = [0.02, 0.05]
        {classes}
        "#
    ))
    .unwrap()
}

const TOY_CLASSES: &str = r#"
        [[classes]]
        class = "NAT1"
        size = [3]
        [[classes]]
        class = "3DLAT"
        size = [2, 2, 3]
"#;

fn parity_violations(records: &[TestRecord]) -> (usize, Vec<String>) {
    let mut by_instance: BTreeMap<(&str, Space), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.spin_glass) {
        by_instance
            .entry((&r.instance, r.space))
            .or_default()
            .extend(&r.energies);
    }
    let mut bad = Vec::new();
    for ((id, space), es) in &by_instance {
        let base = es[0];
        for e in es {
            let gap = e - base;
            if gap.fract() != 0.0 || gap.rem_euclid(2.0) != 0.0 {
                bad.push(format!("{id} {space:?}: gap {gap}"));
            }
        }
    }
    (by_instance.len(), bad)
}

fn spin_glass_parity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut total = 0;
    let mut instances = 0;
    for (k, split) in [(1, false), (2, true)] {
        let mut c = toy_config(TOY_CLASSES, r#"["random", "sgd", "sa", "pt", "qpu"]"#);
        c.milestone = if split { 2 } else { 1 };
        let out = run_suite(&c, &dir.path().join(format!("m{k}")), false).map_err(|e| e.to_string())?;
        let (n, bad) = parity_violations(&out.records);
        ensure!(bad.is_empty(), "{} odd gaps, first {}", bad.len(), bad[0]);
        ensure!(n > 0, "no spin-glass records");
        total += out
            .records
            .iter()
            .filter(|r| r.spin_glass)
            .map(|r| r.energies.len())
            .sum::<usize>();
        instances += n;
    }
    Ok(format!(
        "{total} energies over {instances} (instance, space) pairs, all gaps even"
    ))
}

fn ranking_fixtures() -> Outcome {
    let sc = Scenario::new(1, 0.1);
    let cell = |rows: &[(&str, Vec<Option<f64>>)]| {
        let mut recs = Vec::new();
        for (solver, es) in rows {
            for (i, e) in es.iter().enumerate() {
                recs.push(record(solver, "SK", i, sc, e.map(|e| vec![e]).unwrap_or_default()));
            }
        }
        rank_scenario(&Dataset::new(recs), "SK", sc, Epsilon::Auto).unwrap()
    };
    let verdict = |r: &qubench_core::metrics::ScenarioRanking, s: &str| r.outcome(s).unwrap().verdict;
    let n = 25;
    let split = |k: usize, lo: f64, hi: f64| (0..n).map(|i| Some(if i < k { lo } else { hi })).collect::<Vec<_>>();

    // Solo win: best on 13 of 25.
    let r = cell(&[
        ("a", split(13, -10.0, -8.0)),
        ("b", vec![Some(-9.0); n]),
        ("c", vec![Some(-7.0); n]),
    ]);
    ensure!(r.threshold == 13, "threshold {}", r.threshold);
    ensure!(
        r.winners == ["a"] && verdict(&r, "b") == Verdict::Compete,
        "solo: {:?}",
        r.winners
    );
    // Best on only 12 of 25: nobody wins.
    let r = cell(&[
        ("a", split(12, -10.0, -8.0)),
        ("b", vec![Some(-9.0); n]),
        ("c", split(13, -7.0, -10.0)),
    ]);
    ensure!(
        verdict(&r, "a") == Verdict::Compete,
        "12 of 25 gave {:?}",
        verdict(&r, "a")
    );
    // Shared win: identical results, ahead of the third solver.
    let r = cell(&[
        ("a", vec![Some(-5.0); n]),
        ("b", vec![Some(-5.0); n]),
        ("c", vec![Some(-4.0); n]),
    ]);
    ensure!(r.winners == ["a", "b"], "shared: {:?}", r.winners);
    // Fail: no complete record on 13 instances; 12 is not enough.
    let mut f13 = vec![Some(-20.0); n];
    f13[..13].fill(None);
    let mut f12 = vec![Some(-20.0); n];
    f12[..12].fill(None);
    let r = cell(&[("a", f13), ("b", vec![Some(-5.0); n])]);
    ensure!(
        verdict(&r, "a") == Verdict::Fail && r.winners == ["b"],
        "fail on 13: {:?}",
        verdict(&r, "a")
    );
    let r = cell(&[("a", f12), ("b", vec![Some(-5.0); n])]);
    ensure!(
        verdict(&r, "a") == Verdict::Win,
        "12 missing gave {:?}",
        verdict(&r, "a")
    );
    Ok("solo, shared, fail and compete verdicts with threshold 13 of 25".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let c = toy_config(TOY_CLASSES, r#"["sgd", "sa", "qpu"]"#);
    let a = run_suite(&c, &dir.path().join("a"), false).map_err(|e| e.to_string())?;
    let b = run_suite(&c, &dir.path().join("b"), false).map_err(|e| e.to_string())?;
    ensure!(a.records.len() == 72, "{} records", a.records.len());
    let fa = std::fs::read(&a.results_path).unwrap();
    let fb = std::fs::read(&b.results_path).unwrap();
    ensure!(fa == fb, "results differ between runs");
    let complete = a.records.iter().filter(|r| r.status == RecordStatus::Complete).count();
    Ok(format!(
        "72 records ({complete} complete), {} bytes identical",
        fa.len()
    ))
}

fn boltzmann() -> Outcome {
    let m = Bqm::from_terms(
        Vartype::Spin,
        vec![0.3, -0.2, 0.1],
        [(0, 1, -0.5), (1, 2, 0.4), (0, 2, 0.25)],
        0.0,
    )
    .unwrap();
    let beta = 1.0;
    let p = SpinProblem::new(&m);
    let states: Vec<Assignment> = all_assignments(3, Vartype::Spin).collect();
    let weights: Vec<f64> = states.iter().map(|a| (-beta * m.energy(a).unwrap()).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mut rng = seed::rng(11);
    let mut x = vec![1i8; 3];
    let mut fields = p.local_fields(&x);
    let draws = 60_000;
    let mut counts: BTreeMap<Vec<i8>, usize> = BTreeMap::new();
    for _ in 0..100 {
        p.metropolis_sweep(beta, &mut x, &mut fields, &mut rng);
    }
    for _ in 0..draws {
        for _ in 0..5 {
            p.metropolis_sweep(beta, &mut x, &mut fields, &mut rng);
        }
        *counts.entry(x.clone()).or_default() += 1;
    }
    let mut worst: f64 = 0.0;
    for (a, w) in states.iter().zip(&weights) {
        let prob = w / z;
        let expect = draws as f64 * prob;
        let sigma = (draws as f64 * prob * (1.0 - prob)).sqrt();
        let got = counts.get(a.values()).copied().unwrap_or(0) as f64;
        worst = worst.max((got - expect).abs() / sigma);
    }
    ensure!(worst <= 3.0, "largest deviation {worst:.2} sigma");
    let distinct: BTreeSet<_> = counts.keys().collect();
    Ok(format!("{} states, largest deviation {worst:.2} sigma", distinct.len()))
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("energy oracle", energy_oracle),
        ("access-time arithmetic", access_time_arithmetic),
        ("scenario protocol", scenario_protocol),
        ("embedding validity fuzz", embedding_fuzz),
        ("embed/unembed oracle", embed_unembed_oracle),
        ("solver ground truth", solver_ground_truth),
        ("pareto ordering", pareto_ordering),
        ("spin-glass parity", spin_glass_parity),
        ("ranking fixtures", ranking_fixtures),
        ("end-to-end determinism", determinism),
        ("boltzmann smoke test", boltzmann),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name} ({secs:.1} s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name} ({secs:.1} s): {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
