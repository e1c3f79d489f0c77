mod common;

use std::fs;

use wirecut::bench::{five_qubit_example, BenchmarkSpec};
use wirecut::dd::{DdConfig, Strategy};
use wirecut::io::{read_distribution, read_json, DistributionMeta};
use wirecut::pipeline::{scaling_report, ArtifactManifest, ErrorClass, Mode, RunConfig, Stage};
use wirecut::sim::{statevector, BackendKind};
use wirecut::{run_pipeline, RunReport};

fn five_qubit_config(dir: &std::path::Path) -> RunConfig {
    let path = dir.join("five.txt");
    fs::write(&path, five_qubit_example().to_text()).unwrap();
    RunConfig::for_circuit(path, 3)
}

#[test]
fn five_qubit_fd_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = five_qubit_config(tmp.path());
    let out_dir = tmp.path().join("run");
    config.output_dir = Some(out_dir.clone());
    let out = run_pipeline(&config).unwrap();

    let r = &out.report;
    assert_eq!((r.num_cuts, r.objective), (1, 256));
    assert_eq!(r.subcircuit_qubits, vec![3, 3]);
    assert_eq!(r.num_variants, 7);
    let fd = r.fd.as_ref().unwrap();
    assert_eq!(fd.terms, 4);
    assert_eq!(u128::from(fd.multiplies), fd.contraction_multiplies);
    assert!(r.comparison.as_ref().unwrap().chi_square <= 1e-10);

    for name in &r.artifacts {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let on_disk = read_distribution(&out_dir.join("distribution.bin")).unwrap();
    assert_eq!(Some(&on_disk), out.distribution.as_ref());
    let truth = statevector(&five_qubit_example()).unwrap();
    for (a, b) in on_disk.iter().zip(truth.values()) {
        assert!((a - b).abs() <= 1e-8);
    }
    let meta: DistributionMeta = read_json(&out_dir.join("distribution.json")).unwrap();
    assert_eq!((meta.n, meta.num_cuts, meta.multiplies), (5, 1, fd.multiplies));
    let report: RunReport = read_json(&out_dir.join("report.json")).unwrap();
    assert_eq!(&report, r);
    let manifest: ArtifactManifest = read_json(&out_dir.join("manifest.json")).unwrap();
    assert!(manifest.completed);
    assert!(manifest.artifacts.iter().any(|a| a == "variants/variants.json"));
}

#[test]
fn bv_dd_run_finds_the_hidden_string() {
    let mut config = RunConfig::for_benchmark(
        BenchmarkSpec::Bv {
            num_qubits: 8,
            hidden: None,
        },
        5,
    );
    config.mode = Mode::Dd;
    config.dd = Some(DdConfig::new(4, 4, Strategy::Dfs));
    let out = run_pipeline(&config).unwrap();
    let dd = out.report.dd.as_ref().unwrap();
    let solution = dd.solution.as_ref().unwrap();
    assert_eq!(solution.state, "11111111");
    assert!(solution.mass >= 0.999, "{}", solution.mass);
    assert_eq!(dd.top_bins[0].state, "1111xxxx");
    assert!(out.report.comparison.is_none());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for backend in [BackendKind::Exact, BackendKind::Shots { shots: 2000, seed: 9 }] {
        let mut config = RunConfig::for_benchmark(
            BenchmarkSpec::Supremacy {
                rows: 3,
                cols: 3,
                depth: 8,
                seed: 4,
            },
            6,
        );
        config.backend = backend;
        let mut texts = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{backend:?}-{run}"));
            config.output_dir = Some(dir.clone());
            config.threads = Some(1 + run * 3);
            run_pipeline(&config).unwrap();
            texts.push((
                fs::read(dir.join("report.json")).unwrap(),
                fs::read(dir.join("distribution.bin")).unwrap(),
            ));
        }
        assert_eq!(texts[0], texts[1], "{backend:?}");
    }
}

#[test]
fn failures_name_their_stage_and_keep_earlier_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = five_qubit_config(tmp.path());
    config.circuit = Some(tmp.path().join("missing.txt"));
    let e = run_pipeline(&config).unwrap_err();
    assert_eq!(e.stage, Stage::Input);

    let mut config = five_qubit_config(tmp.path());
    config.max_subcircuit_qubits = 2;
    config.max_subcircuits = 2;
    let out_dir = tmp.path().join("infeasible");
    config.output_dir = Some(out_dir.clone());
    let e = run_pipeline(&config).unwrap_err();
    assert_eq!((e.stage, e.class()), (Stage::Cut, ErrorClass::Infeasible));
    assert!(out_dir.join("circuit.txt").exists());
    let manifest: ArtifactManifest = read_json(&out_dir.join("manifest.json")).unwrap();
    assert!(!manifest.completed);
    assert_eq!(manifest.artifacts, vec!["config.json", "circuit.txt"]);
    assert!(manifest.error.unwrap().starts_with("cut stage"));
}

#[test]
fn verification_tolerance_is_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = five_qubit_config(tmp.path());
    config.backend = BackendKind::Shots { shots: 500, seed: 1 };
    config.tolerances.verify_chi_square = Some(1e-12);
    let e = run_pipeline(&config).unwrap_err();
    assert_eq!((e.stage, e.class()), (Stage::Verify, ErrorClass::Verification));
    config.tolerances.verify_chi_square = Some(0.5);
    assert!(run_pipeline(&config).is_ok());
}

#[test]
fn scaling_rows_match_the_multiply_formula() {
    let configs: Vec<RunConfig> = [(8, 5), (10, 6), (12, 7)]
        .into_iter()
        .map(|(n, cap)| {
            RunConfig::for_benchmark(
                BenchmarkSpec::Aqft {
                    num_qubits: n,
                    degree: Some(2),
                },
                cap,
            )
        })
        .collect();
    let rows = scaling_report(&configs).unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(u128::from(row.measured_multiplies), row.contraction_multiplies);
        assert!(row.num_cuts >= 1);
    }
    assert_eq!(scaling_report(&configs[..1]).unwrap().len(), 1);

    let mut dd = configs[0].clone();
    dd.backend = BackendKind::Random { seed: 1 };
    assert_eq!(scaling_report(&[dd]).unwrap_err().stage, Stage::Config);
}
