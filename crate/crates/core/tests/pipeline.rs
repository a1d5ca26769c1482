use std::fs;

use iontrap::circuit::Circuit;
use iontrap::harness::{self, CircuitMode, ExperimentConfig};
use iontrap::metrics::fidelity;
use iontrap::pulse::execute;
use iontrap::shor::{
    build_modexp_circuit, extract_order, factors_from_order, ideal_state_truncated, push_qft, FactoringInstance,
    ModexpOptions, Stage,
};
use iontrap::statevec::QuantumState;

fn instance() -> FactoringInstance {
    FactoringInstance::new(15, 7, 8, 6).unwrap()
}

#[test]
fn truncated_circuit_reaches_its_ideal_state_and_factors() {
    let inst = instance();
    let layout = inst.layout();
    let mut c = build_modexp_circuit(&inst, ModexpOptions::truncated(2)).unwrap();
    push_qft(&mut c, &layout.register1).unwrap();
    let mut s = QuantumState::new(inst.n_qubits()).unwrap();
    execute(&mut s, &c.compile().unwrap(), None).unwrap();
    let ideal = ideal_state_truncated(&inst, 2, Stage::PostFt).unwrap();
    assert!(fidelity(&s, &ideal).unwrap() > 1.0 - 1e-10);

    let pc = s.register_distribution(&layout.register1).unwrap();
    let peaks: Vec<u64> = (0..pc.len() as u64).filter(|&c| pc[c as usize] > 1e-6).collect();
    let r = extract_order(&peaks, &inst).unwrap();
    assert_eq!(r, 4);
    assert_eq!(factors_from_order(&inst, r).unwrap(), (3, 5));
}

#[test]
fn circuit_dump_round_trips() {
    let inst = instance();
    let c = build_modexp_circuit(&inst, ModexpOptions::truncated(1)).unwrap();
    let mut text = Vec::new();
    c.write_dump(&mut text).unwrap();
    let parsed = Circuit::parse_dump(inst.n_qubits(), std::str::from_utf8(&text).unwrap()).unwrap();
    assert_eq!(parsed.compile().unwrap(), c.compile().unwrap());
}

#[test]
fn fig1_files_hold_normalized_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        sigmas: vec![0.0, 0.02],
        circuit: CircuitMode::Truncated(1),
        out_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let points = harness::run_fig1(&config).unwrap();
    assert_eq!(points.len(), 2);
    assert!((points[0].fidelity - 1.0).abs() < 1e-10);
    assert!(points[1].fidelity < 1.0);

    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "fig1_joint_sigma0.02.csv",
            "fig1_joint_sigma0.csv",
            "fig1_pc_analytic.csv",
            "fig1_pc_sigma0.02.csv",
            "fig1_pc_sigma0.csv",
            "fig1_summary.csv",
        ]
    );
    for name in names.iter().filter(|n| n.contains("_pc_") || n.contains("_joint_")) {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header == "c,probability" || header == "j,x,probability", "{name}: {header}");
        let total: f64 = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-6, "{name} sums to {total}");
    }
}
