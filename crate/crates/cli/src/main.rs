//! `qubench`: generate instances, embed them, run solvers and suites, and
//! analyze the results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qubench_core::embedding::{
    apply_embedding, default_chain_strength, embed_clique, embed_heuristic, embed_lattice3d, validate_embedding,
    Embedding,
};
use qubench_core::generators::{generate, InstanceClass, InstanceSpec};
use qubench_core::harness::{
    build_instance, calibrate, read_records, run_suite, screen_class, Autotuner, Dispatch, HardwareConfig, RunContext,
    ScreeningParams, SolverEntry, SuiteConfig, RESULTS_FILE,
};
use qubench_core::metrics::{convergence_study, geometric_grid, write_analysis, Dataset, Epsilon};
use qubench_core::qpu::{endpoint_from_env, AccessTimeModel, MockParams, QpuSolver};
use qubench_core::solvers::{Budget, Clock, Registry, SampleSet, SolverConfig};
use qubench_core::topology::{model_graph, pegasus};
use qubench_core::{Bqm, HardwareGraph};

const DEFAULT_SEED: u64 = 2024;

#[derive(Parser)]
#[command(
    name = "qubench",
    version,
    about = "Quantum-annealer versus classical-heuristic benchmark harness"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Pegasus hardware graph.
    Topo(TopoArgs),
    /// Generate an instance of an input class.
    Gen(GenArgs),
    /// Embed a logical model onto a hardware graph.
    Embed(EmbedArgs),
    /// Run one solver on a model and print the sample set.
    Solve(SolveArgs),
    /// Run a benchmark suite from a TOML config.
    Suite(SuiteArgs),
    /// Rank suite results and write ECD, win and fail tables.
    Analyze(AnalyzeArgs),
    /// Screen an input class for hardness.
    Screen(ScreenArgs),
    /// Minimum relative error against a geometric grid of time limits.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct HwArgs {
    /// Hardware graph file; a full Pegasus graph is used otherwise.
    #[arg(long)]
    hw: Option<PathBuf>,
    /// Pegasus size when no graph file is given.
    #[arg(long, default_value_t = 16)]
    pegasus: usize,
}

impl HwArgs {
    fn load(&self) -> Result<HardwareGraph> {
        match &self.hw {
            Some(path) => HardwareGraph::read(path).with_context(|| format!("reading {}", path.display())),
            None => Ok(pegasus(self.pegasus)?),
        }
    }
}

#[derive(Args)]
struct TopoArgs {
    #[arg(long, default_value_t = 16)]
    pegasus: usize,
    #[arg(long, default_value_t = 1.0)]
    node_yield: f64,
    #[arg(long, default_value_t = 1.0)]
    edge_yield: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    class: InstanceClass,
    /// `N`, or `XxYxZ` for 3DLAT; Pegasus `m` for native classes.
    #[arg(long)]
    size: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Instance file for IMPORT.
    #[arg(long)]
    path: Option<PathBuf>,
    #[command(flatten)]
    hw: HwArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Clique,
    Lattice,
    Heuristic,
}

#[derive(Args)]
struct EmbedArgs {
    /// Logical model JSON.
    model: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Lattice dimensions `XxYxZ` (lattice method).
    #[arg(long)]
    dims: Option<String>,
    #[command(flatten)]
    hw: HwArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    tries: usize,
    /// Embedding JSON output; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the embedded physical model here.
    #[arg(long)]
    physical: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Model,
    Wall,
}

#[derive(Args)]
struct SolveArgs {
    /// Model JSON.
    model: PathBuf,
    /// Solver id: random, sgd, sa, pt or qpu.
    #[arg(long)]
    solver: String,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Model)]
    mode: Mode,
    /// Fixed sweep count; autotuned from (s, t) otherwise.
    #[arg(long)]
    num_sweeps: Option<usize>,
    #[arg(long)]
    num_replicas: Option<usize>,
    /// Use the local mock annealer for `qpu`.
    #[arg(long)]
    mock: bool,
    /// Embedding JSON: sample the embedded model and unembed (qpu only).
    #[arg(long, requires = "hw")]
    embedding: Option<PathBuf>,
    #[arg(long)]
    hw: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the journal, results and manifest.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Skip runs already in the journal.
    #[arg(long)]
    resume: bool,
    /// Worker threads; wall-clock suites always use one.
    #[arg(long)]
    jobs: Option<usize>,
    /// Force the mock annealer.
    #[arg(long)]
    mock: bool,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Results file or suite output directory.
    #[arg(long, default_value = "results")]
    results: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    milestone: u8,
    /// Output directory; the results directory otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `auto`, `exact` or a tolerance on relative errors.
    #[arg(long, default_value = "auto")]
    epsilon: String,
}

#[derive(Args)]
struct ScreenArgs {
    #[arg(long)]
    class: InstanceClass,
    #[command(flatten)]
    hw: HwArgs,
    /// Fixed size; skips the chain-length search.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 8)]
    min_size: usize,
    #[arg(long, default_value_t = 1000)]
    max_size: usize,
    #[arg(long, default_value_t = 15)]
    lmax_min: usize,
    #[arg(long, default_value_t = 20)]
    lmax_max: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0.016)]
    time_limit: f64,
    /// Time runs with the operation-count clock.
    #[arg(long)]
    model_clock: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    class: InstanceClass,
    #[arg(long)]
    size: String,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "random,sgd,sa,pt")]
    solvers: Vec<String>,
    #[arg(long, default_value_t = 0.001)]
    start: f64,
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 15)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Mode::Model)]
    mode: Mode,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    milestone: u8,
    #[arg(long)]
    mock: bool,
    #[command(flatten)]
    hw: HwArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn clock(mode: Mode) -> Clock {
    match mode {
        Mode::Model => Clock::model(),
        Mode::Wall => Clock::Wall,
    }
}

struct Printer {
    json: bool,
}

impl Printer {
    fn emit(&self, value: serde_json::Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{value}");
        } else {
            println!("{}", text());
        }
    }
}

fn cmd_topo(a: TopoArgs, out: &Printer) -> Result<()> {
    let hw = HardwareConfig {
        pegasus: a.pegasus,
        node_yield: a.node_yield,
        edge_yield: a.edge_yield,
        seed: a.seed,
    }
    .build()?;
    match &a.out {
        Some(p) => {
            hw.write(p)?;
            out.emit(
                json!({"nodes": hw.num_nodes(), "edges": hw.num_edges(), "path": p}),
                || {
                    format!(
                        "P{}: {} nodes, {} edges -> {}",
                        a.pegasus,
                        hw.num_nodes(),
                        hw.num_edges(),
                        p.display()
                    )
                },
            );
        }
        None => print!("{}", hw.to_text()),
    }
    Ok(())
}

fn cmd_gen(a: GenArgs, out: &Printer) -> Result<()> {
    let size = match &a.size {
        Some(s) => InstanceSpec::parse_size(s)?,
        None if a.class == InstanceClass::Import => Vec::new(),
        None => bail!("--size is required for {}", a.class),
    };
    let mut spec = InstanceSpec::new(a.class, size, a.seed);
    spec.path = a.path.clone();
    let hw = if a.class.is_native() && a.hw.hw.is_some() {
        Some(a.hw.load()?)
    } else {
        None
    };
    let mut model = generate(&spec, hw.as_ref())?;
    model.set_label(format!("{}-{}", a.class, a.seed));
    match &a.out {
        Some(p) => {
            model.write_json(p)?;
            out.emit(
                json!({"class": a.class, "n": model.num_variables(), "m": model.num_interactions(), "path": p}),
                || {
                    format!(
                        "{}: n = {}, m = {} -> {}",
                        a.class,
                        model.num_variables(),
                        model.num_interactions(),
                        p.display()
                    )
                },
            );
        }
        None => println!("{}", model.to_json_string()),
    }
    Ok(())
}

fn cmd_embed(a: EmbedArgs, out: &Printer) -> Result<()> {
    let model = Bqm::read_json(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let hw = a.hw.load()?;
    let source = model_graph(&model);
    let e = match a.method {
        Method::Clique => embed_clique(model.num_variables(), &hw, a.seed)?,
        Method::Heuristic => embed_heuristic(&source, &hw, a.seed, a.tries)?,
        Method::Lattice => {
            let dims = a
                .dims
                .as_deref()
                .context("--dims XxYxZ is required for the lattice method")?;
            let (x, y, z) =
                InstanceSpec::new(InstanceClass::Lat3d, InstanceSpec::parse_size(dims)?, 0).lattice_dims()?;
            if x * y * z != model.num_variables() {
                bail!(
                    "lattice {dims} has {} sites but the model has {} variables",
                    x * y * z,
                    model.num_variables()
                );
            }
            embed_lattice3d(x, y, z, &hw, a.seed)?
        }
    };
    let violations = validate_embedding(&source, &hw, &e);
    if !violations.is_empty() {
        bail!("embedder returned an invalid embedding: {violations:?}");
    }
    let e = e.with_chain_strength(default_chain_strength(&model));
    if let Some(p) = &a.physical {
        apply_embedding(&model, &e, &hw, 1.0)?.write_json(p)?;
    }
    let stats = json!({
        "n": model.num_variables(),
        "q": e.num_qubits(),
        "mean_chain_length": e.mean_chain_length(),
        "max_chain_length": e.max_chain_length(),
        "chain_strength": e.chain_strength(),
    });
    match &a.out {
        Some(p) => {
            e.write_json(p)?;
            out.emit(stats, || {
                format!(
                    "n = {}, q = {}, L = {:.3}, L_max = {} -> {}",
                    model.num_variables(),
                    e.num_qubits(),
                    e.mean_chain_length(),
                    e.max_chain_length(),
                    p.display()
                )
            });
        }
        None => println!("{}", e.to_json_string()),
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let model = Bqm::read_json(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let clock = clock(a.mode);
    let mut budget = Budget::new(a.t, clock);
    let set: SampleSet = if a.solver == "qpu" || a.solver == "qpu-mock" {
        let endpoint = endpoint_from_env(a.mock || a.solver == "qpu-mock", MockParams::default())?;
        let qpu = QpuSolver::new(Arc::from(endpoint), AccessTimeModel::default());
        match (&a.embedding, &a.hw) {
            (Some(e), Some(hw)) => {
                let e = Embedding::read_json(e)?;
                let hw = HardwareGraph::read(hw)?;
                qpu.solve_embedded(&model, &e, &hw, a.s, &mut budget, a.seed)?.0
            }
            _ => {
                use qubench_core::solvers::Solver;
                qpu.solve(&model, a.s, &mut budget, &SolverConfig::with_seed(a.seed))?
            }
        }
    } else {
        if a.embedding.is_some() {
            bail!("--embedding applies to the qpu solver only");
        }
        let solver = Registry::default().get(&a.solver)?;
        let mut config = SolverConfig::with_seed(a.seed);
        if let Some(r) = a.num_replicas {
            config.num_replicas = r;
        }
        config.num_sweeps = match a.num_sweeps {
            Some(n) => n,
            None if solver.uses_sweeps() => calibrate(solver.as_ref(), &model, clock, a.seed)?.num_sweeps(a.s, a.t),
            None => config.num_sweeps,
        };
        solver.solve(&model, a.s, &mut budget, &config)?
    };
    println!("{}", set.to_json_string());
    Ok(())
}

fn cmd_suite(a: SuiteArgs, out: &Printer) -> Result<()> {
    let mut config = SuiteConfig::from_file(&a.config)?;
    if let Some(j) = a.jobs {
        config.jobs = j;
    }
    if a.mock {
        config.qpu.mock = true;
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    let res = run_suite(&config, &a.out, a.resume)?;
    let failures = res.records.iter().filter(|r| !r.is_complete()).count();
    let errors: Vec<_> = res.records.iter().filter_map(|r| r.error.as_ref()).collect();
    out.emit(
        json!({
            "records": res.records.len(),
            "instances": res.instances.len(),
            "scenarios": res.scenarios.len(),
            "failures": failures,
            "errors": errors.len(),
            "results": res.results_path,
        }),
        || {
            format!(
                "{} records ({} instances x {} scenarios), {} incomplete, {} errors -> {}",
                res.records.len(),
                res.instances.len(),
                res.scenarios.len(),
                failures,
                errors.len(),
                res.results_path.display()
            )
        },
    );
    Ok(())
}

fn parse_epsilon(text: &str) -> Result<Epsilon> {
    Ok(match text {
        "auto" => Epsilon::Auto,
        "exact" => Epsilon::Exact,
        x => Epsilon::Relative(x.parse().with_context(|| format!("bad --epsilon `{x}`"))?),
    })
}

fn cmd_analyze(a: AnalyzeArgs, out: &Printer) -> Result<()> {
    let (file, dir) = if a.results.is_dir() {
        (a.results.join(RESULTS_FILE), a.results.clone())
    } else {
        let dir = a.results.parent().map(Path::to_path_buf).unwrap_or_default();
        (a.results.clone(), dir)
    };
    let records = read_records(&file).with_context(|| format!("reading {}", file.display()))?;
    let out_dir = a.out.unwrap_or(dir);
    let summary = write_analysis(
        &Dataset::new(records),
        &out_dir,
        a.milestone,
        parse_epsilon(&a.epsilon)?,
    )?;
    out.emit(serde_json::to_value(&summary)?, || {
        let mut s = format!(
            "milestone {}: {} cells over {} classes x {} scenarios -> {}\n",
            summary.milestone,
            summary.cells,
            summary.groups.len(),
            summary.scenarios.len(),
            out_dir.display()
        );
        for (solver, counts) in &summary.verdicts {
            s.push_str(&format!("  {solver:<10}"));
            for (v, n) in counts {
                s.push_str(&format!(" {v:?}={n}"));
            }
            s.push('\n');
        }
        for (g, why) in &summary.excluded {
            s.push_str(&format!("  excluded {g}: {why}\n"));
        }
        s.trim_end().to_string()
    });
    Ok(())
}

fn cmd_screen(a: ScreenArgs, out: &Printer) -> Result<()> {
    let hw = a.hw.load()?;
    let params = ScreeningParams {
        lmax_range: (a.lmax_min, a.lmax_max),
        embed_trials: a.trials,
        size_bounds: (a.min_size, a.max_size),
        size: a.size,
        runs: a.runs,
        time_limit: a.time_limit,
        model_clock: a.model_clock,
        ..ScreeningParams::default()
    };
    let v = screen_class(a.class, &hw, &params, a.seed)?;
    out.emit(serde_json::to_value(&v)?, || {
        let mut s = format!("{} size {}: {:?}\n", v.class, v.size, v.decision);
        for p in &v.probes {
            s.push_str(&format!(
                "  size {:>5}: L_max {:?} median {:?}\n",
                p.size, p.lmax, p.median
            ));
        }
        for r in &v.solvers {
            s.push_str(&format!(
                "  {:<4} best {} reached minimum {} in {}/{} runs\n",
                r.solver, r.best, v.minimum, r.hits, r.runs
            ));
        }
        s.trim_end().to_string()
    });
    Ok(())
}

fn cmd_converge(a: ConvergeArgs, out: &Printer) -> Result<()> {
    let hw_config = HardwareConfig {
        pegasus: a.hw.pegasus,
        ..HardwareConfig::default()
    };
    let hw = Arc::new(a.hw.load()?);
    let spec = InstanceSpec::new(a.class, InstanceSpec::parse_size(&a.size)?, a.seed);
    let instance = build_instance(spec, a.index, &hw, &hw_config, 10)?;
    let registry = Registry::default();
    let qpu = qubench_core::harness::QpuConfig {
        mock: a.mock,
        ..Default::default()
    };
    let solvers = a
        .solvers
        .iter()
        .map(|id| SolverEntry::resolve(id, &registry, &qpu))
        .collect::<qubench_core::Result<Vec<_>>>()?;
    let tuner = Autotuner::new();
    let base = SolverConfig::default();
    let ctx = RunContext {
        clock: clock(a.mode),
        dispatch: if a.milestone == 2 {
            Dispatch::Split
        } else {
            Dispatch::Shared
        },
        autotuner: &tuner,
        base: &base,
    };
    let grid = geometric_grid(a.start, a.ratio, a.count);
    let table = convergence_study(&instance, &solvers, &grid, a.trials, &ctx, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    table.write_csv(&a.out)?;
    let path = a.out.join(table.file_name());
    out.emit(
        json!({"instance": table.instance, "target": table.target, "rows": table.rows.len(), "path": path}),
        || {
            let mut s = format!("{} target {} -> {}\n", table.instance, table.target, path.display());
            for id in solvers.iter().map(SolverEntry::id) {
                let m: Vec<String> = table
                    .medians(id)
                    .iter()
                    .map(|(t, r)| format!("{t:.4}:{r:.4}"))
                    .collect();
                s.push_str(&format!("  {id:<8} {}\n", m.join(" ")));
            }
            s.trim_end().to_string()
        },
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = Printer { json: cli.json };
    match cli.command {
        Command::Topo(a) => cmd_topo(a, &out),
        Command::Gen(a) => cmd_gen(a, &out),
        Command::Embed(a) => cmd_embed(a, &out),
        Command::Solve(a) => cmd_solve(a),
        Command::Suite(a) => cmd_suite(a, &out),
        Command::Analyze(a) => cmd_analyze(a, &out),
        Command::Screen(a) => cmd_screen(a, &out),
        Command::Converge(a) => cmd_converge(a, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
