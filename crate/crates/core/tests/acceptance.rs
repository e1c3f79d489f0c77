//! Acceptance runner: one PASS/FAIL line per criterion. Exits nonzero if
//! any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirecut::bench::{five_qubit_example, gen_bv, gen_supremacy};
use wirecut::dd::{DdConfig, Strategy};
use wirecut::metrics::{chi_square, l_inf};
use wirecut::reconstruct::{contract, FD_MAX_QUBITS};
use wirecut::sim::{bin_values, statevector, ExactBackend, RandomBackend};
use wirecut::variant::TensorTable;
use wirecut::{build_dag, dd_run, enumerate_all_cuts, enumerate_variants, find_cuts, split, CutConstraints};
use wirecut::{ReconstructionPlan, Circuit};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(limit_secs),
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

/// Criterion 1: the five-qubit example.
fn five_qubit_golden() -> Check {
    let started = Instant::now();
    let c = five_qubit_example();
    let sol = find_cuts(&c, &CutConstraints::new(3, 5).unwrap()).map_err(|e| e.to_string())?;
    ensure(sol.num_cuts == 1 && sol.cuts[0].qubit == 2, format!("cuts {:?}", sol.cuts))?;
    ensure(sol.subcircuit_qubits == [3, 3], format!("widths {:?}", sol.subcircuit_qubits))?;
    let subs = split(&c, &sol).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = subs.iter().map(|s| enumerate_variants(s).len()).collect();
    ensure(counts == [3, 4], format!("variant counts {counts:?}"))?;
    let fd = common::fd_exact(&c, &sol);
    let terms = 1usize << (2 * fd.plan.num_cuts);
    ensure(terms == 4, format!("{terms} terms"))?;
    let err = l_inf(&fd.values, statevector(&c).unwrap().values()).unwrap();
    ensure(err <= 1e-8, format!("L_inf {err:e}"))?;
    within(started.elapsed(), 1)?;
    Ok(format!("K=1 on q2, widths [3,3], variants [3,4], 4 terms, L_inf {err:.1e}"))
}

struct SweepRecord {
    vertices: usize,
    objective: u128,
    multiplies_match: bool,
    circuit: Circuit,
    cap: usize,
}

/// Criterion 2, also collecting what criteria 3 and 6 need.
fn oracle_sweep(records: &mut Vec<SweepRecord>) -> Check {
    let started = Instant::now();
    let (mut worst_linf, mut worst_chi) = (0.0f64, 0.0f64);
    let mut per_k = [0usize; 4];
    for bc in common::sweep(240, 20_000) {
        let c = &bc.circuit;
        ensure(c.is_fully_connected(), format!("seed {} disconnected", bc.seed))?;
        let sol = find_cuts(c, &CutConstraints::new(bc.cap, 5).unwrap())
            .map_err(|e| format!("seed {}: {e}", bc.seed))?;
        if !(1..=3).contains(&sol.num_cuts) {
            continue;
        }
        let fd = common::fd_exact(c, &sol);
        let truth = statevector(c).unwrap();
        worst_linf = worst_linf.max(l_inf(&fd.values, truth.values()).unwrap());
        worst_chi = worst_chi.max(chi_square(&fd.values, truth.values()).unwrap());
        per_k[sol.num_cuts] += 1;
        records.push(SweepRecord {
            vertices: build_dag(c).num_vertices(),
            objective: sol.objective,
            multiplies_match: u128::from(fd.multiplies) == fd.plan.contraction_multiplies(),
            circuit: c.clone(),
            cap: bc.cap,
        });
    }
    ensure(records.len() >= 200, format!("only {} circuits", records.len()))?;
    ensure(per_k[1..].iter().all(|&k| k > 0), format!("K coverage {:?}", &per_k[1..]))?;
    ensure(worst_linf <= 1e-8, format!("L_inf {worst_linf:e}"))?;
    ensure(worst_chi <= 1e-10, format!("chi-square {worst_chi:e}"))?;
    within(started.elapsed(), 300)?;
    Ok(format!(
        "{} circuits (K=1: {}, K=2: {}, K=3: {}), max L_inf {worst_linf:.1e}, max chi-square {worst_chi:.1e}",
        records.len(),
        per_k[1],
        per_k[2],
        per_k[3]
    ))
}

/// Criterion 3.
fn search_exactness(records: &[SweepRecord]) -> Check {
    let started = Instant::now();
    let mut checked = 0;
    for r in records.iter().filter(|r| r.vertices <= 12) {
        let all = enumerate_all_cuts(&r.circuit, &CutConstraints::new(r.cap, 5).unwrap()).map_err(|e| e.to_string())?;
        let best = all.first().ok_or("enumeration found nothing")?;
        ensure(
            best.objective == r.objective,
            format!("search {} vs enumeration {}", r.objective, best.objective),
        )?;
        checked += 1;
    }
    ensure(checked >= 20, format!("only {checked} small circuits"))?;
    within(started.elapsed(), 120)?;
    Ok(format!("{checked} circuits with at most 12 vertices"))
}

/// Criterion 4.
fn supremacy_grid() -> Check {
    let started = Instant::now();
    let c = gen_supremacy(5, 7, 10, 0).map_err(|e| e.to_string())?;
    let sol = find_cuts(&c, &CutConstraints::new(20, 5).unwrap()).map_err(|e| e.to_string())?;
    ensure(sol.num_subcircuits() == 2, format!("{} subcircuits", sol.num_subcircuits()))?;
    ensure(sol.num_cuts <= 5, format!("K={}", sol.num_cuts))?;
    within(started.elapsed(), 600)?;
    Ok(format!(
        "K={}, widths {:?}, certified={}, {:.1}s",
        sol.num_cuts,
        sol.subcircuit_qubits,
        sol.certified,
        started.elapsed().as_secs_f64()
    ))
}

/// Criterion 5.
fn dd_correctness() -> Check {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for bc in common::sweep(66, 50_000).into_iter().filter(|b| b.circuit.num_qubits() >= 10) {
        let c = &bc.circuit;
        let sol = find_cuts(c, &CutConstraints::new(bc.cap, 5).unwrap()).map_err(|e| e.to_string())?;
        let fd = common::fd_exact(c, &sol).values;
        for (m, strategy) in [(3, Strategy::Dfs), (4, Strategy::Bfs), (5, Strategy::Dfs)] {
            let tree = dd_run(c, &sol, &DdConfig::new(m, 6, strategy), &ExactBackend::default())
                .map_err(|e| e.to_string())?;
            for rec in &tree.recursions {
                worst = worst.max(l_inf(&rec.masses, &bin_values(&fd, &rec.roles)).unwrap());
                let parent = rec.parent.map_or(1.0, |p| tree.bin(p).mass);
                let total: f64 = rec.masses.iter().sum();
                ensure((total - parent).abs() <= 1e-6, format!("mass {total} under parent {parent}"))?;
            }
            checked += 1;
        }
    }
    ensure(worst <= 1e-8, format!("bin L_inf {worst:e}"))?;

    let mut bv_runs = 0;
    for m in [2, 4, 8] {
        for n in (m + 1)..=16 {
            // a zero bit leaves its qubit uncoupled, so every bit is set
            let c = gen_bv(n, &"1".repeat(n - 1)).unwrap();
            let truth = statevector(&c).unwrap();
            let (argmax, _) = truth
                .values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            let want = wirecut::sim::bitstring(argmax, n);
            let cap = (n.div_ceil(2) + 1).clamp(2, n - 1);
            let sol = find_cuts(&c, &CutConstraints::new(cap, 5).unwrap()).map_err(|e| format!("bv {n}: {e}"))?;
            let budget = n.div_ceil(m);
            let tree = dd_run(&c, &sol, &DdConfig::new(m, budget, Strategy::Dfs), &ExactBackend::default())
                .map_err(|e| e.to_string())?;
            let (state, mass) = tree.heaviest_resolved().ok_or(format!("bv n={n} M={m}: nothing resolved"))?;
            ensure(
                state == want && mass >= 0.999 && tree.recursions.len() <= budget,
                format!("bv n={n} M={m}: {state} mass {mass} after {} recursions", tree.recursions.len()),
            )?;
            bv_runs += 1;
        }
    }
    Ok(format!(
        "{checked} trees on 10-14 qubits, max bin L_inf {worst:.1e}; {bv_runs} BV runs resolved within ceil(n/M) recursions"
    ))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Two synthetic tensors of `width` qubits each joined by `k` cuts.
fn synthetic(width: usize, k: usize, rng: &mut ChaCha8Rng) -> (Vec<TensorTable>, ReconstructionPlan) {
    let mut table = |sub: usize| {
        let tables = (0..1usize << (2 * k))
            .map(|_| (0..1usize << width).map(|_| rng.gen::<f64>()).collect())
            .collect();
        TensorTable::from_parts(sub, (0..k).collect(), tables)
    };
    let tables = vec![table(0), table(1)];
    let plan = ReconstructionPlan {
        num_qubits: 2 * width,
        num_cuts: k,
        subcircuit_qubits: vec![width + k, width + k],
        tensor_qubits: vec![(0..width).collect(), (width..2 * width).collect()],
    };
    (tables, plan)
}

/// Criterion 6.
fn work_scaling(records: &[SweepRecord]) -> Check {
    let mismatched = records.iter().filter(|r| !r.multiplies_match).count();
    ensure(mismatched == 0, format!("{mismatched} sweep circuits miscounted"))?;

    let width = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut times = Vec::new();
    for k in 1..=3 {
        let (tables, plan) = synthetic(width, k, &mut rng);
        let mut samples = Vec::new();
        for _ in 0..5 {
            let t = Instant::now();
            let c = contract(&tables, &plan).map_err(|e| e.to_string())?;
            samples.push(t.elapsed().as_secs_f64());
            ensure(
                u128::from(c.multiplies) == plan.contraction_multiplies(),
                format!("K={k}: {} multiplies, expected {}", c.multiplies, plan.contraction_multiplies()),
            )?;
        }
        times.push(median(samples));
    }
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    ensure(
        ratios.iter().all(|r| (2.0..=6.0).contains(r)),
        format!("time ratios {ratios:.2?} outside [2, 6]"),
    )?;
    Ok(format!(
        "{} sweep counts exact; K=1..3 medians {:.3?}s, ratios {:.2?}",
        records.len(),
        times,
        ratios
    ))
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Criterion 7.
fn scale_smoke() -> Check {
    let started = Instant::now();
    let n = 30;
    let c = gen_bv(n, &"1".repeat(n - 1)).unwrap();
    let sol = find_cuts(&c, &CutConstraints::new(16, 5).unwrap()).map_err(|e| e.to_string())?;
    let tree = dd_run(&c, &sol, &DdConfig::new(20, 1, Strategy::Dfs), &RandomBackend { seed: 30 })
        .map_err(|e| e.to_string())?;
    let bins = tree.recursions[0].masses.len();
    ensure(bins == 1 << 20, format!("{bins} bins"))?;
    let total: f64 = tree.recursions[0].masses.iter().sum();
    ensure((total - 1.0).abs() < 1e-6, format!("mass {total}"))?;
    let peak = peak_rss_bytes().ok_or("no VmHWM")?;
    ensure(peak < 4 << 30, format!("peak RSS {} MiB", peak >> 20))?;
    within(started.elapsed(), 600)?;
    let fd_bytes = 8u64 << n;
    Ok(format!(
        "n=30, K={}, 2^20 bins, peak RSS {} MiB (a full distribution would need {} MiB; FD limit {} qubits), {:.1}s",
        sol.num_cuts,
        peak >> 20,
        fd_bytes >> 20,
        FD_MAX_QUBITS,
        started.elapsed().as_secs_f64()
    ))
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Criterion 8.
fn chi_square_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for len in [1, 2, 7, 64] {
        let a = random_distribution(&mut rng, len);
        ensure(chi_square(&a, &a).unwrap() == 0.0, "identical pair is nonzero")?;
    }
    for len in [2, 8, 64] {
        let a = random_distribution(&mut rng, len / 2);
        let b = random_distribution(&mut rng, len / 2);
        let left: Vec<f64> = a.iter().copied().chain(std::iter::repeat_n(0.0, len / 2)).collect();
        let right: Vec<f64> = std::iter::repeat_n(0.0, len / 2).chain(b.iter().copied()).collect();
        let d = chi_square(&left, &right).unwrap();
        ensure((d - 2.0).abs() <= 1e-12, format!("disjoint pair gives {d}"))?;
    }
    for i in 0..1000 {
        let len = 1 + i % 97;
        let a = random_distribution(&mut rng, len);
        let b = random_distribution(&mut rng, len);
        let (ab, ba) = (chi_square(&a, &b).unwrap(), chi_square(&b, &a).unwrap());
        ensure(ab == ba, format!("asymmetric: {ab} vs {ba}"))?;
        ensure((0.0..=2.0).contains(&ab), format!("out of range: {ab}"))?;
    }
    Ok("identical 0, disjoint 2, 1000 random pairs symmetric within [0, 2]".into())
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = started.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("criterion {id} ({name}): PASS [{secs:.2}s] {detail}"),
        Err(detail) => println!("criterion {id} ({name}): FAIL [{secs:.2}s] {detail}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut records = Vec::new();
    let results = [
        run(1, "five-qubit golden", five_qubit_golden),
        run(2, "oracle equivalence sweep", || oracle_sweep(&mut records)),
        run(3, "cut search exactness", || search_exactness(&records)),
        run(4, "5x7 supremacy structure", supremacy_grid),
        run(5, "dynamic definition correctness", dd_correctness),
        run(6, "work scaling", || work_scaling(&records)),
        run(7, "30-qubit smoke test", scale_smoke),
        run(8, "chi-square suite", chi_square_suite),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
