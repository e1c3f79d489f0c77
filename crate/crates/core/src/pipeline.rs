//! End-to-end driver: input, cut, split, run, reconstruct or recurse,
//! verify, with every artifact written to one run directory.
//!
//! Run directory layout (all paths relative to `output_dir`):
//! `config.json`, `circuit.txt`, `cut.json`, `variants/variants.json` plus
//! one circuit file per variant, then `distribution.bin` and
//! `distribution.json` (full definition) or `dd_tree.json` (dynamic
//! definition), `report.json`, `timings.json` and `manifest.json`.
//! `report.json` is reproducible byte for byte; wall-clock numbers live
//! only in `timings.json`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{BenchError, BenchmarkSpec};
use crate::circuit::Circuit;
use crate::cut::{find_cuts_with, CutConstraints, CutError, CutSolution, SearchOptions, DEFAULT_NODE_BUDGET};
use crate::dd::{dd_run_timed, policy_for, DdConfig, DdError};
use crate::io::{self, DistributionMeta, IoError, VariantManifest};
use crate::metrics::{ComparisonReport, MetricsError};
use crate::reconstruct::{reconstruct_fd, ClipPolicy, FdResult, ReconstructError, ReconstructionPlan, EXACT_CLIP_TOL};
use crate::sim::{statevector_with_limit, Backend, BackendKind, QubitRole, SimError};
use crate::variant::{enumerate_variants, split, tensor_table, Subcircuit, SubcircuitVariant, VariantError};

/// Largest circuit compared against direct simulation by default.
pub const DEFAULT_ORACLE_MAX_QUBITS: usize = 20;
/// Raw variant outputs larger than this many values in total are not
/// written to the run directory.
pub const RAW_ARTIFACT_LIMIT: usize = 1 << 22;
const TOP_STATES: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fd,
    Dd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Most negative entry clipped silently under an exact backend.
    pub clip: f64,
    /// Fail the verify stage when chi-square exceeds this.
    pub verify_chi_square: Option<f64>,
    /// Skip the oracle comparison above this width.
    pub oracle_max_qubits: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            clip: EXACT_CLIP_TOL,
            verify_chi_square: None,
            oracle_max_qubits: DEFAULT_ORACLE_MAX_QUBITS,
        }
    }
}

/// One experiment. Exactly one of `benchmark` and `circuit` is set, and
/// `dd` is set exactly when `mode` is `dd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub benchmark: Option<BenchmarkSpec>,
    /// Circuit text file.
    #[serde(default)]
    pub circuit: Option<PathBuf>,
    pub max_subcircuit_qubits: usize,
    #[serde(default = "default_max_subcircuits")]
    pub max_subcircuits: usize,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub dd: Option<DdConfig>,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker threads; all cores when unset.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_max_subcircuits() -> usize {
    crate::cut::DEFAULT_MAX_SUBCIRCUITS
}

fn default_node_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

fn default_backend() -> BackendKind {
    BackendKind::Exact
}

impl RunConfig {
    /// Defaults for everything except the input, which is left unset.
    pub fn new(max_subcircuit_qubits: usize) -> Self {
        RunConfig {
            benchmark: None,
            circuit: None,
            max_subcircuit_qubits,
            max_subcircuits: default_max_subcircuits(),
            node_budget: DEFAULT_NODE_BUDGET,
            mode: Mode::Fd,
            dd: None,
            backend: BackendKind::Exact,
            output_dir: None,
            tolerances: Tolerances::default(),
            threads: None,
        }
    }

    pub fn for_benchmark(benchmark: BenchmarkSpec, max_subcircuit_qubits: usize) -> Self {
        RunConfig {
            benchmark: Some(benchmark),
            ..RunConfig::new(max_subcircuit_qubits)
        }
    }

    pub fn for_circuit(path: impl Into<PathBuf>, max_subcircuit_qubits: usize) -> Self {
        RunConfig {
            circuit: Some(path.into()),
            ..RunConfig::new(max_subcircuit_qubits)
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::new(Stage::Config, StageError::Config(msg.to_string())));
        match (&self.benchmark, &self.circuit) {
            (Some(_), Some(_)) => return bad("set either benchmark or circuit, not both"),
            (None, None) => return bad("one of benchmark or circuit is required"),
            _ => {}
        }
        match (self.mode, &self.dd) {
            (Mode::Dd, None) => return bad("mode dd requires a dd section"),
            (Mode::Fd, Some(_)) => return bad("dd section given but mode is fd"),
            (Mode::Dd, Some(dd)) => dd.validate().map_err(|e| PipelineError::new(Stage::Config, e.into()))?,
            (Mode::Fd, None) => {}
        }
        self.constraints()?;
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        if self.tolerances.clip.is_nan() || self.tolerances.clip < 0.0 {
            return bad("clip tolerance must be non-negative");
        }
        if let BackendKind::Shots { shots: 0, .. } = self.backend {
            return bad("shots must be at least 1");
        }
        Ok(())
    }

    pub fn constraints(&self) -> Result<CutConstraints, PipelineError> {
        CutConstraints::new(self.max_subcircuit_qubits, self.max_subcircuits)
            .map_err(|e| PipelineError::new(Stage::Config, e.into()))
    }

    /// Clip policy for full-definition output of `backend`.
    pub fn clip_policy(&self, backend: &dyn Backend) -> ClipPolicy {
        match policy_for(backend) {
            ClipPolicy::Exact { .. } => ClipPolicy::Exact {
                tol: self.tolerances.clip,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Input,
    Cut,
    Split,
    Run,
    Reconstruct,
    Dd,
    Verify,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Cut => "cut",
            Stage::Split => "split",
            Stage::Run => "run",
            Stage::Reconstruct => "reconstruct",
            Stage::Dd => "dd",
            Stage::Verify => "verify",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error("variant {variant} of subcircuit {subcircuit}: {source}")]
    Backend {
        subcircuit: usize,
        variant: usize,
        source: SimError,
    },
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Dd(#[from] DdError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("chi-square {chi_square:e} exceeds tolerance {tol:e}")]
    Verification { chi_square: f64, tol: f64 },
    #[error("measured {measured} multiplies, expected {expected}")]
    MultiplyCount { measured: u64, expected: u128 },
}

/// How a failure should be reported to a caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Infeasible,
    Verification,
    Resource,
    Other,
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, source: StageError) -> Self {
        PipelineError { stage, source }
    }

    pub fn class(&self) -> ErrorClass {
        classify(&self.source)
    }
}

pub fn classify(e: &StageError) -> ErrorClass {
    let sim = |e: &SimError| match e {
        SimError::TooManyQubits { .. } => ErrorClass::Resource,
        _ => ErrorClass::Other,
    };
    match e {
        StageError::Config(_) => ErrorClass::Usage,
        StageError::Bench(_) => ErrorClass::Usage,
        StageError::Cut(CutError::InvalidConstraints(_)) => ErrorClass::Usage,
        StageError::Cut(CutError::TooLarge(_)) => ErrorClass::Resource,
        StageError::Cut(_) => ErrorClass::Infeasible,
        StageError::Dd(DdError::Unnecessary { .. }) => ErrorClass::Infeasible,
        StageError::Dd(DdError::InvalidConfig(_)) => ErrorClass::Usage,
        StageError::Dd(DdError::Backend { source, .. }) => sim(source),
        StageError::Dd(DdError::Reconstruct(r)) | StageError::Reconstruct(r) => match r {
            ReconstructError::TooManyQubits(_) => ErrorClass::Resource,
            ReconstructError::NegativeMass { .. } | ReconstructError::NormalizationFailure { .. } => {
                ErrorClass::Verification
            }
            _ => ErrorClass::Other,
        },
        StageError::Backend { source, .. } => sim(source),
        StageError::Metrics(MetricsError::Sim(s)) => sim(s),
        StageError::Verification { .. } | StageError::MultiplyCount { .. } => ErrorClass::Verification,
        _ => ErrorClass::Other,
    }
}

trait StageResult<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> StageResult<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e.into()))
    }
}

/// Runs every variant with all wires active. Output is indexed
/// `[subcircuit][variant]`.
pub fn run_variants(
    variants: &[Vec<SubcircuitVariant>],
    backend: &dyn Backend,
) -> Result<Vec<Vec<Vec<f64>>>, StageError> {
    variants
        .iter()
        .map(|vars| {
            vars.par_iter()
                .map(|v| {
                    let roles = vec![QubitRole::Active; v.circuit.num_qubits()];
                    let stream = ((v.parent as u64) << 24) | v.index as u64;
                    backend
                        .run_binned(&v.circuit, &roles, stream)
                        .map_err(|source| StageError::Backend {
                            subcircuit: v.parent,
                            variant: v.index,
                            source,
                        })
                })
                .collect()
        })
        .collect()
}

/// Attributes raw outputs and contracts them into the full distribution.
pub fn reconstruct_from_raw(
    subs: &[Subcircuit],
    raw: &[Vec<Vec<f64>>],
    num_qubits: usize,
    num_cuts: usize,
    policy: ClipPolicy,
) -> Result<(FdResult, ReconstructionPlan), StageError> {
    let plan = ReconstructionPlan::new(subs, num_qubits, num_cuts);
    if num_qubits > crate::reconstruct::FD_MAX_QUBITS {
        return Err(ReconstructError::TooManyQubits(num_qubits).into());
    }
    let tables = subs
        .iter()
        .zip(raw)
        .map(|(sub, r)| {
            let wires: Vec<usize> = (0..sub.num_wires()).collect();
            tensor_table(r, sub, &wires)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fd = reconstruct_fd(&tables, &plan, policy)?;
    Ok((fd, plan))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMass {
    pub state: String,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSummary {
    pub multiplies: u64,
    pub contraction_multiplies: u128,
    pub terms: usize,
    pub sum: f64,
    pub top_states: Vec<StateMass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdSummary {
    pub config: DdConfig,
    pub recursions: usize,
    pub multiplies: u64,
    /// Heaviest fully resolved state, if any recursion resolved one.
    pub solution: Option<StateMass>,
    pub top_bins: Vec<StateMass>,
}

/// Reproducible summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub num_qubits: usize,
    pub mode: Mode,
    pub backend: BackendKind,
    pub num_cuts: usize,
    pub num_subcircuits: usize,
    pub subcircuit_qubits: Vec<usize>,
    pub objective: u128,
    pub log2_objective: f64,
    pub certified: bool,
    pub num_variants: usize,
    pub fd: Option<FdSummary>,
    pub dd: Option<DdSummary>,
    pub comparison: Option<ComparisonReport>,
    pub artifacts: Vec<String>,
}

/// Wall-clock seconds per stage. `postprocess` is reconstruction work
/// without backend execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: BTreeMap<String, f64>,
    pub backend: f64,
    pub postprocess: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub artifacts: Vec<String>,
    pub completed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Timings,
    pub circuit: Circuit,
    pub solution: CutSolution,
    pub distribution: Option<Vec<f64>>,
    pub tree: Option<crate::dd::DdTree>,
}

struct RunDir<'a> {
    root: Option<&'a Path>,
    written: Vec<String>,
}

impl RunDir<'_> {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), IoError> {
        if let Some(root) = self.root {
            io::write_json(&root.join(name), value)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), IoError> {
        if let Some(root) = self.root {
            io::write_text(&root.join(name), text)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn distribution(&mut self, name: &str, values: &[f64]) -> Result<(), IoError> {
        if let Some(root) = self.root {
            io::write_distribution(&root.join(name), values)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn manifest(&self, error: Option<&PipelineError>) -> Result<(), IoError> {
        if let Some(root) = self.root {
            let m = ArtifactManifest {
                artifacts: self.written.clone(),
                completed: error.is_none(),
                error: error.map(|e| e.to_string()),
            };
            io::write_json(&root.join("manifest.json"), &m)?;
        }
        Ok(())
    }
}

fn top_states(values: &[f64], n: usize) -> Vec<StateMass> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.into_iter()
        .take(TOP_STATES)
        .map(|i| StateMass {
            state: crate::sim::bitstring(i, n),
            mass: values[i],
        })
        .collect()
}

/// Loads or generates the input circuit.
pub fn load_circuit(config: &RunConfig) -> Result<Circuit, PipelineError> {
    match (&config.benchmark, &config.circuit) {
        (Some(spec), None) => spec.build().at(Stage::Input),
        (None, Some(path)) => io::read_circuit(path).at(Stage::Input),
        _ => Err(PipelineError::new(
            Stage::Config,
            StageError::Config("set exactly one of benchmark or circuit".into()),
        )),
    }
}

/// Runs all stages. Uses a dedicated thread pool when `threads` is set.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| PipelineError::new(Stage::Config, StageError::Config(e.to_string())))?
            .install(|| run_stages(config)),
        None => run_stages(config),
    }
}

fn run_stages(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let mut dir = RunDir {
        root: config.output_dir.as_deref(),
        written: Vec::new(),
    };
    let result = stages(config, &mut dir);
    let manifest = dir.manifest(result.as_ref().err());
    let outcome = result?;
    manifest.at(Stage::Output)?;
    Ok(outcome)
}

fn stages(config: &RunConfig, dir: &mut RunDir<'_>) -> Result<RunOutcome, PipelineError> {
    let started = Instant::now();
    let mut timings = Timings::default();
    let mut clock = Instant::now();
    let mut lap = |timings: &mut Timings, stage: Stage| {
        let now = Instant::now();
        *timings.stages.entry(stage.to_string()).or_default() += (now - clock).as_secs_f64();
        clock = now;
    };

    dir.json("config.json", config).at(Stage::Output)?;
    let circuit = load_circuit(config)?;
    dir.text("circuit.txt", &circuit.to_text()).at(Stage::Input)?;
    lap(&mut timings, Stage::Input);

    let constraints = config.constraints()?;
    let options = SearchOptions {
        node_budget: config.node_budget,
    };
    let solution = find_cuts_with(&circuit, &constraints, &options).at(Stage::Cut)?;
    dir.json("cut.json", &solution).at(Stage::Cut)?;
    lap(&mut timings, Stage::Cut);

    let subs = split(&circuit, &solution).at(Stage::Split)?;
    let variants: Vec<Vec<SubcircuitVariant>> = subs.iter().map(enumerate_variants).collect();
    let manifest = VariantManifest::new(circuit.num_qubits(), solution.num_cuts, &subs, &variants);
    if let Some(root) = dir.root {
        manifest.write(&root.join("variants"), &variants).at(Stage::Split)?;
        dir.written.push("variants/variants.json".into());
    }
    lap(&mut timings, Stage::Split);

    let backend = config.backend.build();
    let n = circuit.num_qubits();
    let mut report = RunReport {
        num_qubits: n,
        mode: config.mode,
        backend: config.backend,
        num_cuts: solution.num_cuts,
        num_subcircuits: solution.num_subcircuits(),
        subcircuit_qubits: solution.subcircuit_qubits.clone(),
        objective: solution.objective,
        log2_objective: solution.log2_objective,
        certified: solution.certified,
        num_variants: manifest.variants.len(),
        fd: None,
        dd: None,
        comparison: None,
        artifacts: Vec::new(),
    };
    let mut distribution = None;
    let mut tree = None;

    match config.mode {
        Mode::Fd => {
            if n > crate::reconstruct::FD_MAX_QUBITS {
                return Err(ReconstructError::TooManyQubits(n)).at(Stage::Reconstruct);
            }
            let raw = run_variants(&variants, backend.as_ref()).at(Stage::Run)?;
            let total: usize = raw.iter().flatten().map(Vec::len).sum();
            if total <= RAW_ARTIFACT_LIMIT {
                let outputs = io::RawOutputs {
                    backend: config.backend,
                    records: raw
                        .iter()
                        .enumerate()
                        .flat_map(|(s, vs)| {
                            vs.iter().enumerate().map(move |(v, values)| io::RawRecord {
                                parent: s,
                                index: v,
                                values: values.clone(),
                            })
                        })
                        .collect(),
                };
                dir.json("raw.json", &outputs).at(Stage::Run)?;
            }
            lap(&mut timings, Stage::Run);
            timings.backend = timings.stages["run"];

            let post = Instant::now();
            let policy = config.clip_policy(backend.as_ref());
            let (fd, plan) =
                reconstruct_from_raw(&subs, &raw, n, solution.num_cuts, policy).at(Stage::Reconstruct)?;
            timings.postprocess = post.elapsed().as_secs_f64();
            let values = fd.distribution.into_values();
            dir.distribution("distribution.bin", &values).at(Stage::Reconstruct)?;
            let meta = DistributionMeta {
                n,
                num_cuts: solution.num_cuts,
                sum: values.iter().sum(),
                runtime_seconds: timings.postprocess,
                multiplies: fd.multiplies,
            };
            dir.json("distribution.json", &meta).at(Stage::Reconstruct)?;
            report.fd = Some(FdSummary {
                multiplies: fd.multiplies,
                contraction_multiplies: plan.contraction_multiplies(),
                terms: fd.terms,
                sum: meta.sum,
                top_states: top_states(&values, n),
            });
            lap(&mut timings, Stage::Reconstruct);
            distribution = Some(values);
        }
        Mode::Dd => {
            let dd_config = config.dd.expect("validated");
            let (t, dd_timings) = dd_run_timed(&circuit, &solution, &dd_config, backend.as_ref()).at(Stage::Dd)?;
            timings.backend = dd_timings.backend_seconds;
            timings.postprocess = dd_timings.postprocess_seconds;
            dir.json("dd_tree.json", &t).at(Stage::Dd)?;
            let mut bins: Vec<_> = t.bins().collect();
            bins.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.bin.cmp(&b.bin)));
            report.dd = Some(DdSummary {
                config: dd_config,
                recursions: t.recursions.len(),
                multiplies: t.recursions.iter().map(|r| r.multiplies).sum(),
                solution: t.heaviest_resolved().map(|(state, mass)| StateMass { state, mass }),
                top_bins: bins
                    .iter()
                    .take(TOP_STATES)
                    .map(|b| StateMass {
                        state: t.bin_state(b.bin),
                        mass: b.mass,
                    })
                    .collect(),
            });
            lap(&mut timings, Stage::Dd);
            tree = Some(t);
        }
    }

    if let Some(values) = &distribution {
        if n <= config.tolerances.oracle_max_qubits {
            let truth = statevector_with_limit(&circuit, config.tolerances.oracle_max_qubits)
                .map_err(MetricsError::from)
                .at(Stage::Verify)?;
            let cmp = ComparisonReport::between(values, truth.values()).at(Stage::Verify)?;
            let chi = cmp.chi_square;
            report.comparison = Some(cmp);
            if let Some(tol) = config.tolerances.verify_chi_square {
                if chi.is_nan() || chi > tol {
                    return Err(StageError::Verification { chi_square: chi, tol }).at(Stage::Verify);
                }
            }
        }
        lap(&mut timings, Stage::Verify);
    }

    timings.total = started.elapsed().as_secs_f64();
    dir.json("timings.json", &timings).at(Stage::Output)?;
    report.artifacts = dir.written.clone();
    report.artifacts.push("report.json".into());
    report.artifacts.push("manifest.json".into());
    if dir.root.is_none() {
        report.artifacts.clear();
    }
    dir.json("report.json", &report).at(Stage::Output)?;
    Ok(RunOutcome {
        report,
        timings,
        circuit,
        solution,
        distribution,
        tree,
    })
}

/// One row of [`scaling_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub num_qubits: usize,
    pub num_cuts: usize,
    pub subcircuit_qubits: Vec<usize>,
    /// Cost estimate over subcircuit widths including input ports.
    pub objective: u128,
    /// The same product formula over the widths the kernel contracts.
    pub contraction_multiplies: u128,
    pub measured_multiplies: u64,
    pub postprocess_seconds: f64,
}

/// Runs full-definition, exact-backend configs and checks that each
/// kernel performed exactly the predicted number of multiplications.
pub fn scaling_report(configs: &[RunConfig]) -> Result<Vec<ScalingRow>, PipelineError> {
    configs
        .iter()
        .map(|c| {
            if c.mode != Mode::Fd || c.backend != BackendKind::Exact {
                return Err(PipelineError::new(
                    Stage::Config,
                    StageError::Config("scaling runs need mode fd and the exact backend".into()),
                ));
            }
            let out = run_pipeline(c)?;
            let fd = out.report.fd.as_ref().expect("fd mode");
            if u128::from(fd.multiplies) != fd.contraction_multiplies {
                return Err(PipelineError::new(
                    Stage::Reconstruct,
                    StageError::MultiplyCount {
                        measured: fd.multiplies,
                        expected: fd.contraction_multiplies,
                    },
                ));
            }
            Ok(ScalingRow {
                num_qubits: out.report.num_qubits,
                num_cuts: out.report.num_cuts,
                subcircuit_qubits: out.report.subcircuit_qubits.clone(),
                objective: out.report.objective,
                contraction_multiplies: fd.contraction_multiplies,
                measured_multiplies: fd.multiplies,
                postprocess_seconds: out.timings.postprocess,
            })
        })
        .collect()
}
