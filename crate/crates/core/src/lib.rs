//! Wire cutting for gate-level quantum circuits.
//!
//! A circuit too wide for the available simulator is split along wire
//! segments into smaller subcircuits. Each subcircuit runs in a handful of
//! variants (different port initializations and measurement bases), and
//! the outputs are recombined either into the full `2^n` distribution or
//! into a recursively refined binned view of it.
//!
//! Bit order everywhere: qubit 0 is the most significant bit of a basis
//! index.

pub mod bench;
pub mod circuit;
pub mod cut;
pub mod dag;
pub mod dd;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod reconstruct;
pub mod sim;
pub mod variant;

pub use circuit::{Circuit, CircuitError, Gate, GateKind, ParseError};
pub use cut::{enumerate_all_cuts, find_cuts, CutConstraints, CutError, CutSolution};
pub use dag::{build_dag, CircuitDag};
pub use dd::{dd_run, dd_run_timed, DdConfig, DdTree, Strategy};
pub use metrics::{chi_square, oracle_compare, ComparisonReport};
pub use reconstruct::{reconstruct_fd, ClipPolicy, ReconstructionPlan};
pub use sim::{statevector, ProbabilityVector, QubitRole};
pub use variant::{enumerate_variants, split, Subcircuit, SubcircuitVariant};
pub use pipeline::{run_pipeline, RunConfig, RunReport};
