//! `wirecut` command line.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 infeasible, 3 verification
//! failure, 4 resource guard.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use wirecut::bench::BenchmarkSpec;
use wirecut::cut::{find_cuts_with, CutConstraints, SearchOptions, DEFAULT_MAX_SUBCIRCUITS, DEFAULT_NODE_BUDGET};
use wirecut::dd::{dd_run, DdConfig, Strategy};
use wirecut::io::{self, DistributionMeta, RawOutputs, RawRecord, VariantManifest};
use wirecut::metrics::ComparisonReport;
use wirecut::pipeline::{
    reconstruct_from_raw, run_pipeline, scaling_report, ErrorClass, Mode, PipelineError, RunConfig, Stage,
    StageError,
};
use wirecut::reconstruct::{ClipPolicy, EXACT_CLIP_TOL};
use wirecut::sim::{statevector_with_limit, BackendKind, QubitRole, DEFAULT_MAX_QUBITS};
use wirecut::{enumerate_variants, split, Circuit, CutSolution};

#[derive(Parser)]
#[command(name = "wirecut", version, about = "Cut wide circuits into narrow subcircuits and rebuild their output")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark circuit in text format.
    Generate {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Find cuts for a circuit and optionally export its variants.
    Cut {
        circuit: PathBuf,
        #[command(flatten)]
        cut: CutArgs,
        /// Directory for variant circuits and their manifest.
        #[arg(long)]
        variants_dir: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute every variant listed in a manifest.
    Run {
        manifest: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rebuild the full distribution from raw variant outputs.
    Reconstruct {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        raw: PathBuf,
        /// Distribution file; metadata goes next to it with a .json
        /// extension.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = EXACT_CLIP_TOL)]
        clip_tol: f64,
    },
    /// Recursive binned reconstruction.
    Dd {
        circuit: PathBuf,
        #[command(flatten)]
        cut: CutArgs,
        #[command(flatten)]
        dd: DdArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare a distribution file with direct simulation.
    Verify {
        circuit: PathBuf,
        distribution: PathBuf,
        /// Fail when chi-square exceeds this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_QUBITS)]
        max_qubits: usize,
    },
    /// Full-definition scaling table over benchmark sizes.
    Bench {
        /// Run configuration files; each must be fd mode with the exact backend.
        configs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Comma-separated circuit widths.
        #[arg(long, value_delimiter = ',')]
        qubits: Vec<usize>,
        /// Subcircuit width cap; defaults to just over half the circuit.
        #[arg(long)]
        max_qubits: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run every stage from a configuration file and flags.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Bv,
    Adder,
    Aqft,
    Supremacy,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Width for bv, adder and aqft.
    #[arg(long)]
    qubits: Option<usize>,
    /// Hidden string for bv (defaults to all ones).
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long, default_value_t = 0)]
    a: u64,
    #[arg(long, default_value_t = 0)]
    b: u64,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CutArgs {
    #[arg(long)]
    max_qubits: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SUBCIRCUITS)]
    max_subcircuits: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
}

#[derive(Args)]
struct DdArgs {
    /// Active qubits per recursion.
    #[arg(long)]
    active: usize,
    #[arg(long)]
    recursions: usize,
    #[arg(long, value_enum, default_value = "dfs")]
    strategy: StrategyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Dfs,
    Bfs,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Dfs => Strategy::Dfs,
            StrategyArg::Bfs => Strategy::Bfs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendMode {
    Exact,
    Shots,
    Random,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "exact")]
    mode: BackendMode,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BackendArgs {
    fn kind(&self) -> BackendKind {
        backend_kind(self.mode, self.shots, self.seed)
    }
}

fn backend_kind(mode: BackendMode, shots: u64, seed: u64) -> BackendKind {
    match mode {
        BackendMode::Exact => BackendKind::Exact,
        BackendMode::Shots => BackendKind::Shots { shots, seed },
        BackendMode::Random => BackendKind::Random { seed },
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    bench: BenchArgs,
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long)]
    max_qubits: Option<usize>,
    #[arg(long)]
    max_subcircuits: Option<usize>,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    active: Option<usize>,
    #[arg(long)]
    recursions: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    backend: Option<BackendMode>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long = "backend-seed")]
    backend_seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Fail when chi-square against direct simulation exceeds this.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fd,
    Dd,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: exit_code(e.class()),
            message: e.to_string(),
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage | ErrorClass::Other => 1,
        ErrorClass::Infeasible => 2,
        ErrorClass::Verification => 3,
        ErrorClass::Resource => 4,
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn at<T, E: Into<StageError>>(stage: Stage, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| PipelineError::new(stage, e.into()).into())
}

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => at(Stage::Output, io::write_json(path, value)),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
            Ok(())
        }
    }
}

fn bench_spec(b: &BenchArgs) -> Result<Option<BenchmarkSpec>, Failure> {
    let Some(family) = b.family else {
        return Ok(None);
    };
    let qubits = || b.qubits.ok_or_else(|| usage("--qubits is required for this family"));
    Ok(Some(match family {
        Family::Bv => BenchmarkSpec::Bv {
            num_qubits: qubits()?,
            hidden: b.hidden.clone(),
        },
        Family::Adder => BenchmarkSpec::Adder {
            num_qubits: qubits()?,
            a: b.a,
            b: b.b,
        },
        Family::Aqft => BenchmarkSpec::Aqft {
            num_qubits: qubits()?,
            degree: b.degree,
        },
        Family::Supremacy => BenchmarkSpec::Supremacy {
            rows: b.rows.ok_or_else(|| usage("--rows is required for supremacy"))?,
            cols: b.cols.ok_or_else(|| usage("--cols is required for supremacy"))?,
            depth: b.depth,
            seed: b.seed,
        },
    }))
}

fn find(circuit: &Circuit, args: &CutArgs) -> Result<CutSolution, Failure> {
    let constraints = at(Stage::Config, CutConstraints::new(args.max_qubits, args.max_subcircuits))?;
    let options = SearchOptions {
        node_budget: args.node_budget,
    };
    at(Stage::Cut, find_cuts_with(circuit, &constraints, &options))
}

fn generate(bench: &BenchArgs, output: Option<&Path>) -> Result<(), Failure> {
    let spec = bench_spec(bench)?.ok_or_else(|| usage("--family is required"))?;
    let text = at(Stage::Input, spec.build())?.to_text();
    match output {
        Some(path) => at(Stage::Output, io::write_text(path, &text)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cut(circuit: &Path, args: &CutArgs, variants_dir: Option<&Path>, output: Option<&Path>) -> Result<(), Failure> {
    let c = at(Stage::Input, io::read_circuit(circuit))?;
    let sol = find(&c, args)?;
    if let Some(dir) = variants_dir {
        let subs = at(Stage::Split, split(&c, &sol))?;
        let variants: Vec<_> = subs.iter().map(enumerate_variants).collect();
        let manifest = VariantManifest::new(c.num_qubits(), sol.num_cuts, &subs, &variants);
        at(Stage::Output, manifest.write(dir, &variants))?;
    }
    emit_json(&sol, output)
}

fn run_manifest(manifest_path: &Path, backend: BackendKind, output: Option<&Path>) -> Result<(), Failure> {
    let manifest: VariantManifest = at(Stage::Input, io::read_json(manifest_path))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let circuits = manifest
        .variants
        .iter()
        .map(|v| at(Stage::Input, io::read_circuit(&base.join(&v.file))))
        .collect::<Result<Vec<_>, _>>()?;
    let engine = backend.build();
    let records = manifest
        .variants
        .par_iter()
        .zip(&circuits)
        .map(|(v, c)| {
            let roles = vec![QubitRole::Active; c.num_qubits()];
            let stream = ((v.parent as u64) << 24) | v.index as u64;
            engine
                .run_binned(c, &roles, stream)
                .map(|values| RawRecord {
                    parent: v.parent,
                    index: v.index,
                    values,
                })
                .map_err(|source| StageError::Backend {
                    subcircuit: v.parent,
                    variant: v.index,
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>();
    let records = at(Stage::Run, records)?;
    emit_json(&RawOutputs { backend, records }, output)
}

fn reconstruct(manifest: &Path, raw: &Path, output: &Path, clip_tol: f64) -> Result<(), Failure> {
    let manifest: VariantManifest = at(Stage::Input, io::read_json(manifest))?;
    let raw: RawOutputs = at(Stage::Input, io::read_json(raw))?;
    let subs = at(Stage::Input, manifest.subcircuits())?;
    let grouped = at(Stage::Input, raw.grouped(subs.len()))?;
    let policy = match raw.backend {
        BackendKind::Exact => ClipPolicy::Exact { tol: clip_tol },
        BackendKind::Shots { shots, .. } => ClipPolicy::Shots { shots },
        BackendKind::Random { .. } => ClipPolicy::Unchecked,
    };
    let started = std::time::Instant::now();
    let (fd, _) = at(
        Stage::Reconstruct,
        reconstruct_from_raw(&subs, &grouped, manifest.num_qubits, manifest.num_cuts, policy),
    )?;
    let runtime = started.elapsed().as_secs_f64();
    let values = fd.distribution.values();
    at(Stage::Output, io::write_distribution(output, values))?;
    let meta = DistributionMeta {
        n: manifest.num_qubits,
        num_cuts: manifest.num_cuts,
        sum: values.iter().sum(),
        runtime_seconds: runtime,
        multiplies: fd.multiplies,
    };
    at(Stage::Output, io::write_json(&output.with_extension("json"), &meta))?;
    println!("{}", serde_json::to_string_pretty(&meta).expect("serializable"));
    Ok(())
}

fn dd(circuit: &Path, cut: &CutArgs, args: &DdArgs, backend: BackendKind, output: Option<&Path>) -> Result<(), Failure> {
    let c = at(Stage::Input, io::read_circuit(circuit))?;
    let config = DdConfig::new(args.active, args.recursions, args.strategy.into());
    at(Stage::Config, config.validate())?;
    let sol = find(&c, cut)?;
    let tree = at(Stage::Dd, dd_run(&c, &sol, &config, backend.build().as_ref()))?;
    if let Some((state, mass)) = tree.heaviest_resolved() {
        eprintln!("heaviest resolved state {state} with mass {mass:.6}");
    }
    emit_json(&tree, output)
}

fn verify(circuit: &Path, distribution: &Path, tol: f64, max_qubits: usize) -> Result<(), Failure> {
    let c = at(Stage::Input, io::read_circuit(circuit))?;
    let produced = at(Stage::Input, io::read_distribution(distribution))?;
    let truth = at(
        Stage::Verify,
        statevector_with_limit(&c, max_qubits).map_err(wirecut::metrics::MetricsError::from),
    )?;
    let report = at(Stage::Verify, ComparisonReport::between(&produced, truth.values()))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    if report.chi_square.is_nan() || report.chi_square > tol {
        return Err(PipelineError::new(
            Stage::Verify,
            StageError::Verification {
                chi_square: report.chi_square,
                tol,
            },
        )
        .into());
    }
    Ok(())
}

fn read_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = at(Stage::Input, io::read_text(path))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn bench(
    configs: &[PathBuf],
    family: Option<Family>,
    qubits: &[usize],
    max_qubits: Option<usize>,
    json: bool,
) -> Result<(), Failure> {
    let mut runs = configs.iter().map(|p| read_config(p)).collect::<Result<Vec<_>, _>>()?;
    if let Some(family) = family {
        for &n in qubits {
            let args = BenchArgs {
                family: Some(family),
                qubits: Some(n),
                hidden: None,
                a: 0,
                b: 0,
                degree: None,
                rows: None,
                cols: None,
                depth: 10,
                seed: 0,
            };
            let spec = bench_spec(&args)?.expect("family set");
            runs.push(RunConfig::for_benchmark(spec, max_qubits.unwrap_or(n / 2 + 1)));
        }
    }
    if runs.is_empty() {
        return Err(usage("give configuration files or --family with --qubits"));
    }
    let rows = scaling_report(&runs)?;
    if json {
        return emit_json(&rows, None);
    }
    println!("n\tK\twidths\tL\tmultiplies\tpostprocess_s");
    for r in &rows {
        println!(
            "{}\t{}\t{:?}\t{}\t{}\t{:.6}",
            r.num_qubits, r.num_cuts, r.subcircuit_qubits, r.objective, r.measured_multiplies, r.postprocess_seconds
        );
    }
    Ok(())
}

fn pipeline_config(args: &PipelineArgs, threads: Option<usize>) -> Result<RunConfig, Failure> {
    let from_flags = bench_spec(&args.bench)?;
    let mut config = match &args.config {
        Some(path) => read_config(path)?,
        None => {
            let max = args
                .max_qubits
                .ok_or_else(|| usage("--max-qubits is required without --config"))?;
            RunConfig::new(max)
        }
    };
    if from_flags.is_some() || args.circuit.is_some() {
        config.benchmark = from_flags;
        config.circuit = args.circuit.clone();
    }
    if let Some(v) = args.max_qubits {
        config.max_subcircuit_qubits = v;
    }
    if let Some(v) = args.max_subcircuits {
        config.max_subcircuits = v;
    }
    if let Some(v) = args.node_budget {
        config.node_budget = v;
    }
    if let Some(m) = args.mode {
        config.mode = match m {
            ModeArg::Fd => Mode::Fd,
            ModeArg::Dd => Mode::Dd,
        };
    }
    if config.mode == Mode::Fd && args.mode.is_some() {
        config.dd = None;
    }
    if args.active.is_some() || args.recursions.is_some() || args.strategy.is_some() {
        let base = config.dd.unwrap_or_else(|| DdConfig::new(0, 0, Strategy::Dfs));
        let mut dd = DdConfig::new(
            args.active.unwrap_or(base.max_active),
            args.recursions.unwrap_or(base.max_recursions),
            args.strategy.map_or(base.strategy, Into::into),
        );
        dd.append_width = base.append_width;
        dd.min_mass = base.min_mass;
        config.dd = Some(dd);
    }
    if args.backend.is_some() || args.shots.is_some() || args.backend_seed.is_some() {
        let (mode, shots, seed) = match config.backend {
            BackendKind::Exact => (BackendMode::Exact, 10_000, 0),
            BackendKind::Shots { shots, seed } => (BackendMode::Shots, shots, seed),
            BackendKind::Random { seed } => (BackendMode::Random, 10_000, seed),
        };
        config.backend = backend_kind(
            args.backend.unwrap_or(mode),
            args.shots.unwrap_or(shots),
            args.backend_seed.unwrap_or(seed),
        );
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = Some(dir.clone());
    }
    if let Some(tol) = args.tol {
        config.tolerances.verify_chi_square = Some(tol);
    }
    if threads.is_some() {
        config.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn pipeline(args: &PipelineArgs, threads: Option<usize>) -> Result<(), Failure> {
    let config = pipeline_config(args, threads)?;
    let out = run_pipeline(&config)?;
    println!("{}", serde_json::to_string_pretty(&out.report).expect("serializable"));
    eprintln!(
        "total {:.3}s, backend {:.3}s, postprocess {:.3}s",
        out.timings.total, out.timings.backend, out.timings.postprocess
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Generate { bench, output } => generate(bench, output.as_deref()),
        Command::Cut {
            circuit,
            cut: args,
            variants_dir,
            output,
        } => cut(circuit, args, variants_dir.as_deref(), output.as_deref()),
        Command::Run {
            manifest,
            backend,
            output,
        } => run_manifest(manifest, backend.kind(), output.as_deref()),
        Command::Reconstruct {
            manifest,
            raw,
            output,
            clip_tol,
        } => reconstruct(manifest, raw, output, *clip_tol),
        Command::Dd {
            circuit,
            cut,
            dd: args,
            backend,
            output,
        } => dd(circuit, cut, args, backend.kind(), output.as_deref()),
        Command::Verify {
            circuit,
            distribution,
            tol,
            max_qubits,
        } => verify(circuit, distribution, *tol, *max_qubits),
        Command::Bench {
            configs,
            family,
            qubits,
            max_qubits,
            json,
        } => bench(configs, *family, qubits, *max_qubits, *json),
        Command::Pipeline(args) => pipeline(args, cli.threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        // the pipeline builds its own pool; this caps every other command
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
