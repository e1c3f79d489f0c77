//! Shared helpers for integration tests and the acceptance runner.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirecut::pipeline::{reconstruct_from_raw, run_variants};
use wirecut::sim::ExactBackend;
use wirecut::{enumerate_variants, split, Circuit, ClipPolicy, CutSolution, ReconstructionPlan};

/// A random circuit made of two blocks that overlap on `shared` wires in
/// time: block A runs first on qubits `0..a`, then block B on `a..n` plus
/// the shared wires. Cutting each shared wire between the blocks is always
/// feasible under `cap`.
#[derive(Debug, Clone)]
pub struct BlockCircuit {
    pub circuit: Circuit,
    pub split_at: usize,
    pub shared: Vec<usize>,
    pub cap: usize,
    pub seed: u64,
}

fn random_one_qubit(c: &mut Circuit, rng: &mut ChaCha8Rng, q: usize) {
    match rng.gen_range(0..9) {
        0 => c.h(q),
        1 => c.x(q),
        2 => c.t(q),
        3 => c.tdg(q),
        4 => c.s(q),
        5 => c.sdg(q),
        6 => c.sx(q),
        7 => c.sy(q),
        _ => c.rz(rng.gen_range(-3.0..3.0), q),
    };
}

fn random_two_qubit(c: &mut Circuit, rng: &mut ChaCha8Rng, a: usize, b: usize) {
    match rng.gen_range(0..3) {
        0 => c.cx(a, b),
        1 => c.cz(a, b),
        _ => c.cp(rng.gen_range(-3.0..3.0), a, b),
    };
}

/// Random connected gates over `wires`: a spanning chain of two-qubit
/// gates in shuffled order plus `extra` more, with one-qubit gates mixed in.
fn random_block(c: &mut Circuit, rng: &mut ChaCha8Rng, wires: &[usize], extra: usize) {
    let mut order = wires.to_vec();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for &q in wires {
        if rng.gen_bool(0.7) {
            c.h(q);
        }
    }
    let mut pairs: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    for _ in 0..extra {
        let i = rng.gen_range(0..wires.len());
        let mut j = rng.gen_range(0..wires.len() - 1);
        if j >= i {
            j += 1;
        }
        pairs.insert(rng.gen_range(0..=pairs.len()), (wires[i], wires[j]));
    }
    for (a, b) in pairs {
        if rng.gen_bool(0.6) {
            random_one_qubit(c, rng, a);
        }
        random_two_qubit(c, rng, a, b);
        if rng.gen_bool(0.4) {
            random_one_qubit(c, rng, b);
        }
    }
}

/// `n` in 4..=14 qubits, `shared` in 1..=3 wires crossing the blocks.
pub fn block_circuit(n: usize, shared: usize, extra: usize, seed: u64) -> BlockCircuit {
    assert!((4..=14).contains(&n) && (1..=3).contains(&shared));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Both blocks must be narrower than the whole circuit.
    let a = rng.gen_range(shared + 1..n);
    let mut pool: Vec<usize> = (0..a).collect();
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.gen_range(0..=i));
    }
    let mut shared_wires: Vec<usize> = pool[..shared].to_vec();
    shared_wires.sort_unstable();

    let mut c = Circuit::new(n).expect("n > 0");
    let block_a: Vec<usize> = (0..a).collect();
    random_block(&mut c, &mut rng, &block_a, extra);
    let block_b: Vec<usize> = shared_wires.iter().copied().chain(a..n).collect();
    random_block(&mut c, &mut rng, &block_b, extra);
    BlockCircuit {
        circuit: c,
        split_at: a,
        cap: a.max(block_b.len()),
        shared: shared_wires,
        seed,
    }
}

/// Deterministic sweep of block circuits. Shapes cycle through widths and
/// shared-wire counts; widths too narrow for the requested sharing fall
/// back to fewer shared wires.
pub fn sweep(count: usize, base_seed: u64) -> Vec<BlockCircuit> {
    (0..count)
        .map(|i| {
            let n = 4 + i % 11;
            let shared = (1 + (i / 11) % 3).min(n - 3);
            let extra = (i / 33) % 3;
            block_circuit(n, shared, extra, base_seed.wrapping_add(i as u64))
        })
        .collect()
}

pub struct Fd {
    pub values: Vec<f64>,
    pub multiplies: u64,
    pub plan: ReconstructionPlan,
}

/// Full-definition reconstruction with exact variant outputs.
pub fn fd_exact(circuit: &Circuit, solution: &CutSolution) -> Fd {
    let subs = split(circuit, solution).expect("split");
    let variants: Vec<_> = subs.iter().map(enumerate_variants).collect();
    let raw = run_variants(&variants, &ExactBackend::default()).expect("run");
    let (fd, plan) = reconstruct_from_raw(&subs, &raw, circuit.num_qubits(), solution.num_cuts, ClipPolicy::exact())
        .expect("reconstruct");
    Fd {
        values: fd.distribution.into_values(),
        multiplies: fd.multiplies,
        plan,
    }
}
