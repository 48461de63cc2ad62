//! Suite configuration, single test runs and the resumable suite runner.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_instance, scenario_grid, Autotuner, HardwareConfig, Instance, InstanceSummary, RecordStatus, Scenario,
    ScenarioConfig, Space, TestRecord,
};
use crate::error::{Error, Result};
use crate::generators::{InstanceClass, InstanceSpec};
use crate::qpu::{endpoint_from_env, AccessTimeModel, MockParams, QpuSolver};
use crate::seed;
use crate::solvers::{Budget, Clock, Registry, SampleSet, Solver, SolverConfig, DEFAULT_SECONDS_PER_OP};
use crate::topology::HardwareGraph;

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const RESULTS_FILE: &str = "results.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

const DEFAULT_MASTER_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingMode {
    /// Deterministic operation-count clock.
    Model,
    /// Host clock; timed runs are serialized.
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub class: InstanceClass,
    #[serde(default)]
    pub size: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Label for reports and instance ids; defaults to the class name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Overrides the suite-wide instance count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
}

impl ClassConfig {
    pub fn new(class: InstanceClass, size: Vec<usize>) -> Self {
        ClassConfig {
            class,
            size,
            path: None,
            label: None,
            instances: None,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.class.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpuConfig {
    /// Use the local stand-in instead of the endpoint in the environment.
    pub mock: bool,
    pub mock_params: MockParams,
    pub access: AccessTimeModel,
}

impl Default for QpuConfig {
    fn default() -> Self {
        QpuConfig {
            mock: true,
            mock_params: MockParams::default(),
            access: AccessTimeModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub master_seed: u64,
    /// Instances per class.
    pub instances: usize,
    pub classes: Vec<ClassConfig>,
    /// Solver ids; `qpu` is the annealer.
    pub solvers: Vec<String>,
    pub scenarios: ScenarioConfig,
    pub mode: TimingMode,
    pub seconds_per_op: f64,
    /// 1: every solver reads the physical input. 2: classical solvers read
    /// the logical input and the annealer's reads are mapped back to it.
    pub milestone: u8,
    pub hardware: HardwareConfig,
    pub qpu: QpuConfig,
    /// Base solver settings; seeds and sweep counts are set per run.
    pub solver: SolverConfig,
    pub jobs: usize,
    pub embed_tries: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            master_seed: DEFAULT_MASTER_SEED,
            instances: 25,
            classes: Vec::new(),
            solvers: ["random", "sgd", "sa", "pt", "qpu"].map(String::from).to_vec(),
            scenarios: ScenarioConfig::default(),
            mode: TimingMode::Model,
            seconds_per_op: DEFAULT_SECONDS_PER_OP,
            milestone: 1,
            hardware: HardwareConfig::default(),
            qpu: QpuConfig::default(),
            solver: SolverConfig::default(),
            jobs: 1,
            embed_tries: 10,
        }
    }
}

impl SuiteConfig {
    pub fn from_toml_str(text: &str) -> Result<SuiteConfig> {
        let config: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<SuiteConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        SuiteConfig::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("suite configs serialize")
    }

    pub fn clock(&self) -> Clock {
        match self.mode {
            TimingMode::Model => Clock::Model {
                seconds_per_op: self.seconds_per_op,
            },
            TimingMode::Wall => Clock::Wall,
        }
    }

    pub fn dispatch(&self) -> Dispatch {
        if self.milestone == 2 {
            Dispatch::Split
        } else {
            Dispatch::Shared
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("no instance classes".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers".into()));
        }
        if !matches!(self.milestone, 1 | 2) {
            return Err(Error::Config(format!(
                "milestone must be 1 or 2, got {}",
                self.milestone
            )));
        }
        if !(self.seconds_per_op > 0.0) {
            return Err(Error::Config("seconds_per_op must be positive".into()));
        }
        let registry = Registry::default();
        for id in &self.solvers {
            if id != "qpu" {
                registry.get(id)?;
            }
        }
        let mut labels = std::collections::BTreeSet::new();
        for c in &self.classes {
            if !labels.insert(c.label()) {
                return Err(Error::Config(format!(
                    "duplicate class label `{}`; set `label`",
                    c.label()
                )));
            }
            if c.class == InstanceClass::Import && c.path.is_none() {
                return Err(Error::Config("IMPORT classes need a path".into()));
            }
            if c.class != InstanceClass::Import && c.size.is_empty() {
                return Err(Error::Config(format!("{} needs a size", c.class)));
            }
        }
        self.solver.validate()?;
        scenario_grid(&self.scenarios)?;
        Ok(())
    }
}

/// Which inputs each kind of solver reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispatch {
    /// Every solver reads the physical input.
    Shared,
    /// Classical solvers read the logical input; the annealer reads the
    /// physical one and its reads are unembedded.
    Split,
}

#[derive(Clone)]
pub enum SolverEntry {
    Classical(Arc<dyn Solver>),
    Annealer(QpuSolver),
}

impl SolverEntry {
    pub fn id(&self) -> &str {
        match self {
            SolverEntry::Classical(s) => s.id(),
            SolverEntry::Annealer(q) => q.id(),
        }
    }

    /// Resolves `id` against the built-in registry; `qpu` becomes the
    /// annealer described by `qpu`.
    pub fn resolve(id: &str, registry: &Registry, qpu: &QpuConfig) -> Result<SolverEntry> {
        if id == "qpu" || id == "qpu-mock" {
            let endpoint = endpoint_from_env(qpu.mock || id == "qpu-mock", qpu.mock_params)?;
            return Ok(SolverEntry::Annealer(QpuSolver::new(Arc::from(endpoint), qpu.access)));
        }
        Ok(SolverEntry::Classical(registry.get(id)?))
    }
}

pub struct RunContext<'a> {
    pub clock: Clock,
    pub dispatch: Dispatch,
    pub autotuner: &'a Autotuner,
    pub base: &'a SolverConfig,
}

fn record(
    entry: &SolverEntry,
    instance: &Instance,
    scenario: Scenario,
    space: Space,
    spin_glass: bool,
    set: &SampleSet,
    seed: u64,
) -> TestRecord {
    let energies = set.energies();
    let status = if energies.len() >= scenario.s {
        RecordStatus::Complete
    } else {
        RecordStatus::Fail
    };
    TestRecord {
        solver: entry.id().to_string(),
        class: instance.class(),
        group: instance.label.clone(),
        instance: instance.id.clone(),
        instance_index: instance.index,
        scenario,
        space,
        status,
        energies,
        wall_time: set.wall_time,
        work: set.work,
        seed,
        num_sweeps: set.info.get("num_sweeps").and_then(|v| v.as_u64()).map(|v| v as usize),
        spin_glass,
        chain_break_fraction: set.info.get("chain_break_fraction").and_then(|v| v.as_f64()),
        error: None,
    }
}

/// Runs one solver on one instance under `scenario`. Sweep-based solvers
/// get their sweep count from the autotuner.
pub fn run_test(
    entry: &SolverEntry,
    instance: &Instance,
    scenario: Scenario,
    ctx: &RunContext,
    seed: u64,
) -> Result<TestRecord> {
    let mut budget = Budget::new(scenario.t, ctx.clock);
    let mut config = ctx.base.clone();
    config.seed = seed;
    match entry {
        SolverEntry::Classical(solver) => {
            let (model, space) = match (ctx.dispatch, &instance.embedded) {
                (Dispatch::Split, Some(_)) => (&instance.logical, Space::Logical),
                _ => (instance.physical(), Space::Physical),
            };
            if solver.uses_sweeps() {
                let cal = ctx
                    .autotuner
                    .calibration(solver.as_ref(), &instance.id, model, ctx.clock)?;
                config.num_sweeps = cal.num_sweeps(scenario.s, scenario.t);
            }
            let set = solver.solve(model, scenario.s, &mut budget, &config)?;
            Ok(record(
                entry,
                instance,
                scenario,
                space,
                model.is_spin_glass(),
                &set,
                seed,
            ))
        }
        SolverEntry::Annealer(qpu) => match (ctx.dispatch, &instance.embedded) {
            (Dispatch::Split, Some(e)) => {
                let (set, _) =
                    qpu.solve_embedded(&instance.logical, &e.embedding, &e.hw, scenario.s, &mut budget, seed)?;
                let glass = instance.logical.is_spin_glass();
                Ok(record(entry, instance, scenario, Space::Logical, glass, &set, seed))
            }
            _ => {
                let model = instance.physical();
                let set = qpu.solve(model, scenario.s, &mut budget, &config)?;
                Ok(record(
                    entry,
                    instance,
                    scenario,
                    Space::Physical,
                    model.is_spin_glass(),
                    &set,
                    seed,
                ))
            }
        },
    }
}

fn failed(entry: &SolverEntry, instance: &Instance, scenario: Scenario, seed: u64, error: String) -> TestRecord {
    TestRecord {
        solver: entry.id().to_string(),
        class: instance.class(),
        group: instance.label.clone(),
        instance: instance.id.clone(),
        instance_index: instance.index,
        scenario,
        space: Space::Physical,
        status: RecordStatus::Fail,
        energies: Vec::new(),
        wall_time: 0.0,
        work: 0,
        seed,
        num_sweeps: None,
        spin_glass: false,
        chain_break_fraction: None,
        error: Some(error),
    }
}

/// `run_test` with errors and panics turned into failed records.
fn run_isolated(
    entry: &SolverEntry,
    instance: &Instance,
    scenario: Scenario,
    ctx: &RunContext,
    seed: u64,
) -> TestRecord {
    match catch_unwind(AssertUnwindSafe(|| run_test(entry, instance, scenario, ctx, seed))) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => failed(entry, instance, scenario, seed, e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            failed(entry, instance, scenario, seed, format!("panic: {msg}"))
        }
    }
}

fn instance_seed(master: u64, spec: &ClassConfig, index: usize) -> u64 {
    let size: Vec<String> = spec.size.iter().map(usize::to_string).collect();
    seed::derive_str(master, &["instance", spec.label(), &size.join("x"), &index.to_string()])
}

fn run_seed(master: u64, instance: &str, solver: &str, sc: Scenario) -> u64 {
    seed::derive_str(master, &["run", instance, solver, &sc.s.to_string(), &sc.t.to_string()])
}

/// Generates and embeds every instance of the suite.
pub fn build_instances(config: &SuiteConfig, hw: &Arc<HardwareGraph>) -> Result<Vec<Instance>> {
    let mut specs = Vec::new();
    for c in &config.classes {
        let count = if c.class == InstanceClass::Import {
            1
        } else {
            c.instances.unwrap_or(config.instances)
        };
        for index in 0..count {
            let mut spec = InstanceSpec::new(c.class, c.size.clone(), instance_seed(config.master_seed, c, index));
            spec.path = c.path.clone();
            specs.push((spec, index, c.label()));
        }
    }
    specs
        .into_par_iter()
        .map(|(spec, index, label)| {
            build_instance(spec, index, hw, &config.hardware, config.embed_tries).map(|i| i.relabel(label))
        })
        .collect()
}

/// Records of a suite in canonical order, with instance summaries.
#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub records: Vec<TestRecord>,
    pub instances: Vec<InstanceSummary>,
    pub scenarios: Vec<Scenario>,
    pub results_path: PathBuf,
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TestRecord>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn write_records(path: impl AsRef<Path>, records: &[TestRecord]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Journal entries from an earlier run. A torn final line is ignored.
fn read_journal(path: &Path) -> Result<HashMap<(String, String, usize, u64), TestRecord>> {
    let mut done = HashMap::new();
    if !path.exists() {
        return Ok(done);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if let Ok(r) = serde_json::from_str::<TestRecord>(&line) {
            done.insert(r.key(), r);
        }
    }
    Ok(done)
}

/// Runs every (instance, solver, scenario) combination, journaling each
/// record as it completes. With `resume`, runs already in the journal are
/// not repeated. Writes the results and a manifest to `out_dir`.
pub fn run_suite(config: &SuiteConfig, out_dir: &Path, resume: bool) -> Result<SuiteOutput> {
    config.validate()?;
    let grid = scenario_grid(&config.scenarios)?;
    let jobs = match config.mode {
        TimingMode::Wall if config.jobs > 1 => {
            log::warn!(
                "wall-clock suites run one test at a time; ignoring jobs = {}",
                config.jobs
            );
            1
        }
        _ => config.jobs.max(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let hw = Arc::new(config.hardware.build()?);
    let instances = pool.install(|| build_instances(config, &hw))?;
    let registry = Registry::default();
    let entries: Vec<SolverEntry> = config
        .solvers
        .iter()
        .map(|id| SolverEntry::resolve(id, &registry, &config.qpu))
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for inst in &instances {
        for entry in &entries {
            for &sc in &grid {
                tasks.push((inst, entry, sc));
            }
        }
    }

    fs::create_dir_all(out_dir)?;
    let journal_path = out_dir.join(JOURNAL_FILE);
    let done = if resume {
        read_journal(&journal_path)?
    } else {
        HashMap::new()
    };
    let journal = Mutex::new(BufWriter::new(
        OpenOptions::new()
            .create(true)
            .append(resume)
            .write(true)
            .truncate(!resume)
            .open(&journal_path)?,
    ));
    let autotuner = Autotuner::new();
    let ctx = RunContext {
        clock: config.clock(),
        dispatch: config.dispatch(),
        autotuner: &autotuner,
        base: &config.solver,
    };
    let run = |&(inst, entry, sc): &(&Instance, &SolverEntry, Scenario)| -> Result<TestRecord> {
        let key = (inst.id.clone(), entry.id().to_string(), sc.s, sc.t.to_bits());
        if let Some(r) = done.get(&key) {
            return Ok(r.clone());
        }
        let r = run_isolated(
            entry,
            inst,
            sc,
            &ctx,
            run_seed(config.master_seed, &inst.id, entry.id(), sc),
        );
        let line = serde_json::to_string(&r)?;
        let mut j = journal.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(j, "{line}")?;
        j.flush()?;
        Ok(r)
    };
    let records: Vec<TestRecord> = if jobs > 1 {
        pool.install(|| tasks.par_iter().map(run).collect::<Result<_>>())?
    } else {
        tasks.iter().map(run).collect::<Result<_>>()?
    };

    let results_path = out_dir.join(RESULTS_FILE);
    write_records(&results_path, &records)?;
    let summaries: Vec<InstanceSummary> = instances.iter().map(Instance::summary).collect();
    let manifest = serde_json::json!({
        "master_seed": config.master_seed,
        "mode": config.mode,
        "milestone": config.milestone,
        "solvers": entries.iter().map(SolverEntry::id).collect::<Vec<_>>(),
        "scenarios": grid,
        "instances": summaries,
        "records": records.len(),
        "failures": records.iter().filter(|r| !r.is_complete()).count(),
        "errors": records.iter().filter(|r| r.error.is_some()).count(),
        "config": config,
    });
    fs::write(out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(SuiteOutput {
        records,
        instances: summaries,
        scenarios: grid,
        results_path,
    })
}
