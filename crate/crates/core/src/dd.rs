//! Dynamic definition: recursive binned reconstruction.
//!
//! Each recursion picks up to `M` active qubits; merged qubits are summed
//! out and zoomed qubits are fixed to the bits of the bin being refined.
//! The first recursion has no zoomed qubits. After every recursion the
//! heaviest bins that still contain merged qubits join a frontier capped
//! at `R` bins, and the next bin to refine is popped from it, deepest first
//! (`dfs`) or shallowest first (`bfs`), heaviest within a depth.
//!
//! Binning is linear, so it commutes with attribution: subcircuits are run
//! with the roles projected onto their own wires (port wires always
//! active), and the same contraction kernel as the full definition
//! combines the binned tensors.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::cut::CutSolution;
use crate::reconstruct::{contract, postprocess, ClipPolicy, ReconstructError, ReconstructionPlan};
use crate::sim::{Backend, QubitRole, SimError};
use crate::variant::{enumerate_variants, split, tensor_table, Subcircuit, SubcircuitVariant, VariantError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DdError {
    #[error("{max_active} active qubits cover the whole {num_qubits}-qubit circuit; use full definition")]
    Unnecessary { max_active: usize, num_qubits: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error("backend failed on variant {variant} of subcircuit {subcircuit}: {source}")]
    Backend {
        subcircuit: usize,
        variant: usize,
        source: SimError,
    },
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    Bfs,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dfs" => Ok(Strategy::Dfs),
            "bfs" => Ok(Strategy::Bfs),
            other => Err(format!("unknown strategy '{other}' (expected dfs or bfs)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdConfig {
    /// Active qubits per recursion (`M`).
    pub max_active: usize,
    /// Recursions to run, including the first (`R`).
    pub max_recursions: usize,
    pub strategy: Strategy,
    /// Bins appended to the frontier per recursion; defaults to `R`.
    #[serde(default)]
    pub append_width: Option<usize>,
    /// Bins at or below this mass are never refined.
    #[serde(default)]
    pub min_mass: f64,
}

impl DdConfig {
    pub fn new(max_active: usize, max_recursions: usize, strategy: Strategy) -> Self {
        DdConfig {
            max_active,
            max_recursions,
            strategy,
            append_width: None,
            min_mass: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DdError> {
        if self.max_active == 0 {
            return Err(DdError::InvalidConfig("max_active must be at least 1".into()));
        }
        if self.max_recursions == 0 {
            return Err(DdError::InvalidConfig("max_recursions must be at least 1".into()));
        }
        if self.append_width == Some(0) {
            return Err(DdError::InvalidConfig("append_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// A bin: one active-qubit pattern of one recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinRef {
    pub recursion: usize,
    pub pattern: usize,
}

/// One reconstructed binned distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recursion {
    pub roles: Vec<QubitRole>,
    /// Active qubits ascending; bit order of `masses` indices.
    pub active: Vec<usize>,
    /// The bin this recursion refines.
    pub parent: Option<BinRef>,
    pub depth: usize,
    pub masses: Vec<f64>,
    pub multiplies: u64,
}

impl Recursion {
    /// Whether basis state `index` (of an `n`-qubit register) falls in bin
    /// `pattern`.
    pub fn contains(&self, pattern: usize, index: usize) -> bool {
        let n = self.roles.len();
        let bit = |q: usize| (index >> (n - 1 - q)) & 1 == 1;
        let na = self.active.len();
        self.roles.iter().enumerate().all(|(q, role)| match role {
            QubitRole::Zoomed(b) => bit(q) == *b,
            _ => true,
        }) && self
            .active
            .iter()
            .enumerate()
            .all(|(j, &q)| bit(q) == ((pattern >> (na - 1 - j)) & 1 == 1))
    }

    pub fn has_merged(&self) -> bool {
        self.roles.contains(&QubitRole::Merged)
    }
}

/// Flat view of a bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdBin {
    pub bin: BinRef,
    pub mass: f64,
    pub depth: usize,
    pub parent: Option<BinRef>,
    /// True when no merged qubits remain: the bin is a single state.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdTree {
    pub num_qubits: usize,
    pub config: DdConfig,
    pub recursions: Vec<Recursion>,
}

impl DdTree {
    pub fn bin(&self, b: BinRef) -> DdBin {
        let r = &self.recursions[b.recursion];
        DdBin {
            bin: b,
            mass: r.masses[b.pattern],
            depth: r.depth,
            parent: r.parent,
            resolved: !r.has_merged(),
        }
    }

    /// Recursion refining each bin.
    pub fn children(&self) -> HashMap<BinRef, usize> {
        self.recursions
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.parent.map(|p| (p, i)))
            .collect()
    }

    /// Finest bin containing the basis state written qubit 0 first.
    pub fn bin_lookup(&self, state: &str) -> Option<DdBin> {
        if state.len() != self.num_qubits || self.recursions.is_empty() {
            return None;
        }
        let index = usize::from_str_radix(state, 2).ok()?;
        let children = self.children();
        let mut rec = 0;
        loop {
            let r = &self.recursions[rec];
            let n = self.num_qubits;
            let pattern = r
                .active
                .iter()
                .fold(0, |acc, &q| (acc << 1) | ((index >> (n - 1 - q)) & 1));
            let here = BinRef { recursion: rec, pattern };
            match children.get(&here) {
                Some(&next) => rec = next,
                None => return Some(self.bin(here)),
            }
        }
    }

    /// Every bin of every recursion.
    pub fn bins(&self) -> impl Iterator<Item = DdBin> + '_ {
        self.recursions.iter().enumerate().flat_map(move |(i, r)| {
            (0..r.masses.len()).map(move |p| self.bin(BinRef { recursion: i, pattern: p }))
        })
    }

    /// The heaviest single-state bin, if any recursion resolved every
    /// qubit.
    pub fn heaviest_resolved(&self) -> Option<(String, f64)> {
        let mut best: Option<(String, f64)> = None;
        for r in self.recursions.iter().filter(|r| !r.has_merged()) {
            for (p, &m) in r.masses.iter().enumerate() {
                if best.as_ref().is_none_or(|(_, b)| m > *b) {
                    best = Some((self.state_of(r, p), m));
                }
            }
        }
        best
    }

    /// Bin label over all qubits: `0`/`1` for fixed bits, `x` for merged.
    pub fn bin_state(&self, b: BinRef) -> String {
        self.state_of(&self.recursions[b.recursion], b.pattern)
    }

    fn state_of(&self, r: &Recursion, pattern: usize) -> String {
        let na = r.active.len();
        r.roles
            .iter()
            .enumerate()
            .map(|(q, role)| match role {
                QubitRole::Zoomed(true) => '1',
                QubitRole::Zoomed(false) => '0',
                QubitRole::Active => {
                    let j = r.active.iter().position(|&a| a == q).expect("active");
                    if (pattern >> (na - 1 - j)) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                }
                QubitRole::Merged => 'x',
            })
            .collect()
    }
}

/// Lowest-index merged qubits, at most `max_active` of them.
pub fn select_active(roles: &[QubitRole], max_active: usize) -> Vec<usize> {
    roles
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == QubitRole::Merged)
        .map(|(q, _)| q)
        .take(max_active)
        .collect()
}

/// Clipping policy matching a backend.
pub fn policy_for(backend: &dyn Backend) -> ClipPolicy {
    match (backend.is_exact(), backend.shots()) {
        (true, _) => ClipPolicy::exact(),
        (false, Some(shots)) => ClipPolicy::Shots { shots },
        (false, None) => ClipPolicy::Unchecked,
    }
}

struct Runner<'a> {
    subs: Vec<Subcircuit>,
    variants: Vec<Vec<SubcircuitVariant>>,
    num_cuts: usize,
    backend: &'a dyn Backend,
    policy: ClipPolicy,
}

impl Runner<'_> {
    fn reconstruct(
        &self,
        roles: &[QubitRole],
        index: usize,
        expected: f64,
        timings: &mut DdTimings,
    ) -> Result<(Vec<f64>, u64), DdError> {
        let started = Instant::now();
        let raws = self
            .subs
            .iter()
            .zip(&self.variants)
            .map(|(sub, vars)| {
                let local = sub.local_roles(roles);
                vars.par_iter()
                    .map(|v| {
                        let stream = ((index as u64) << 40) | ((sub.index as u64) << 24) | v.index as u64;
                        self.backend
                            .run_binned(&v.circuit, &local, stream)
                            .map_err(|source| DdError::Backend {
                                subcircuit: sub.index,
                                variant: v.index,
                                source,
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, DdError>>()?;
        let after_backend = Instant::now();
        timings.backend_seconds += (after_backend - started).as_secs_f64();

        let tables = self
            .subs
            .iter()
            .zip(&raws)
            .map(|(sub, raw)| {
                let local = sub.local_roles(roles);
                let wires: Vec<usize> = (0..sub.num_wires()).filter(|&w| local[w] == QubitRole::Active).collect();
                tensor_table(raw, sub, &wires)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let plan = ReconstructionPlan::binned(&self.subs, roles, self.num_cuts);
        let mut c = contract(&tables, &plan)?;
        postprocess(&mut c.values, self.policy, expected)?;
        timings.postprocess_seconds += after_backend.elapsed().as_secs_f64();
        Ok((c.values, c.multiplies))
    }
}

/// Wall-clock split of a recursion run. Kept out of [`DdTree`] so trees
/// stay reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DdTimings {
    pub backend_seconds: f64,
    pub postprocess_seconds: f64,
}

/// Runs the recursion. Fails with [`DdError::Unnecessary`] when `M`
/// already covers every qubit.
pub fn dd_run(
    circuit: &Circuit,
    solution: &CutSolution,
    config: &DdConfig,
    backend: &dyn Backend,
) -> Result<DdTree, DdError> {
    dd_run_timed(circuit, solution, config, backend).map(|(tree, _)| tree)
}

/// [`dd_run`] that also reports where the time went.
pub fn dd_run_timed(
    circuit: &Circuit,
    solution: &CutSolution,
    config: &DdConfig,
    backend: &dyn Backend,
) -> Result<(DdTree, DdTimings), DdError> {
    config.validate()?;
    let n = circuit.num_qubits();
    if config.max_active >= n {
        return Err(DdError::Unnecessary {
            max_active: config.max_active,
            num_qubits: n,
        });
    }
    let subs = split(circuit, solution)?;
    let runner = Runner {
        variants: subs.iter().map(enumerate_variants).collect(),
        subs,
        num_cuts: solution.num_cuts,
        backend,
        policy: policy_for(backend),
    };
    let append_width = config.append_width.unwrap_or(config.max_recursions);

    let mut tree = DdTree {
        num_qubits: n,
        config: *config,
        recursions: Vec::new(),
    };
    let mut frontier: Vec<BinRef> = Vec::new();
    let mut roles = vec![QubitRole::Merged; n];
    let mut parent = None;
    let mut depth = 0;
    let mut timings = DdTimings::default();
    loop {
        let active = select_active(&roles, config.max_active);
        for &q in &active {
            roles[q] = QubitRole::Active;
        }
        let expected = parent.map_or(1.0, |p| tree.bin(p).mass);
        let (masses, multiplies) = runner.reconstruct(&roles, tree.recursions.len(), expected, &mut timings)?;
        let rec = Recursion {
            roles: roles.clone(),
            active,
            parent,
            depth,
            masses,
            multiplies,
        };
        let index = tree.recursions.len();
        if rec.has_merged() {
            let mut cands: Vec<usize> = (0..rec.masses.len()).filter(|&p| rec.masses[p] > config.min_mass).collect();
            cands.sort_by(|&a, &b| rec.masses[b].total_cmp(&rec.masses[a]).then(a.cmp(&b)));
            frontier.extend(cands.into_iter().take(append_width).map(|pattern| BinRef {
                recursion: index,
                pattern,
            }));
        }
        tree.recursions.push(rec);
        let key = |b: &BinRef| {
            let bin = tree.bin(*b);
            (std::cmp::Reverse(OrdF64(bin.mass)), bin.depth, *b)
        };
        frontier.sort_by_key(key);
        frontier.truncate(config.max_recursions);

        if tree.recursions.len() >= config.max_recursions || frontier.is_empty() {
            break;
        }
        let pick = (0..frontier.len())
            .min_by_key(|&i| {
                let bin = tree.bin(frontier[i]);
                let depth_key = match config.strategy {
                    Strategy::Dfs => -(bin.depth as isize),
                    Strategy::Bfs => bin.depth as isize,
                };
                (depth_key, std::cmp::Reverse(OrdF64(bin.mass)), frontier[i])
            })
            .expect("frontier nonempty");
        let next = frontier.remove(pick);
        let r = &tree.recursions[next.recursion];
        roles = r.roles.clone();
        let na = r.active.len();
        for (j, &q) in r.active.iter().enumerate() {
            roles[q] = QubitRole::Zoomed((next.pattern >> (na - 1 - j)) & 1 == 1);
        }
        depth = r.depth + 1;
        parent = Some(next);
    }
    Ok((tree, timings))
}

/// Total order on masses for sorting.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
