use std::path::{Path, PathBuf};
use std::process::Command;

use qinstrument::codec::{InstrumentJson, ModelJson};
use qinstrument::gate::GateImplementation;
use qinstrument::instruments::{KrausInstrument, MeasurementModel};
use qinstrument::operator::{identity, tensor, unitary_exp};
use qinstrument::spin::{hadamard, pauli_z, spin_half, sy_plus};
use qinstrument::{DensityOperator, NumericConfig, Observable};
use qinstrument_cli::{GateInput, WayInput, EXIT_INPUT, EXIT_OK};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qinstrument"))
}

fn write(dir: &TempDir, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>) -> (i32, Value, String) {
    let mut cmd = bin();
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    let out = cmd.output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8(out.stderr).unwrap())
}

fn small_config(dir: &TempDir) -> PathBuf {
    write(
        dir,
        "small.json",
        &json!({
            "seed": 17,
            "sample_counts": {
                "instrument_chain": 200, "direct_chain": 50, "joint_povm": 50,
                "heisenberg": 100, "zero_noise": 30, "dilation": 30, "way": 60
            },
            "optimizer": { "restarts": 4, "iterations": 60 },
            "fidelity": { "grid": 32, "cb_samples": 50 }
        }),
    )
}

fn sx() -> Observable {
    Observable::new(spin_half().0).unwrap()
}

fn sz() -> Observable {
    Observable::new(spin_half().2).unwrap()
}

#[test]
fn verify_relations_default_sweep_is_clean_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = small_config(&dir);
    let (code, first, _) = run(&["verify-relations"], Some(&config));
    assert_eq!(code, EXIT_OK);
    assert!(first["results"]["min_slack"].as_f64().unwrap() >= -1e-8);
    assert_eq!(first["violations"], json!([]));
    assert_eq!(first["results"]["sweeps"].as_array().unwrap().len(), 6);
    let (_, second, _) = run(&["verify-relations"], Some(&config));
    assert_eq!(
        serde_json::to_string(&first["results"]).unwrap(),
        serde_json::to_string(&second["results"]).unwrap()
    );
    let (_, other_seed, _) = run(&["verify-relations", "--seed", "18"], Some(&config));
    assert_ne!(first["results"], other_seed["results"]);
}

#[test]
fn zero_sample_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "zero.json", &json!({ "sample_counts": { "heisenberg": 0 } }));
    let (code, _, err) = run(&["verify-relations"], Some(&config));
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("heisenberg"), "{err}");

    let bad = write(&dir, "unknown.json", &json!({ "sede": 1 }));
    assert_eq!(run(&["verify-relations"], Some(&bad)).0, EXIT_INPUT);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["verify-relations"], Some(&missing)).0, EXIT_INPUT);
}

#[test]
fn way_bound_random_sweep_has_nonnegative_margins() {
    let dir = TempDir::new().unwrap();
    let (code, report, _) = run(&["way-bound"], Some(&small_config(&dir)));
    assert_eq!(code, EXIT_OK);
    let summary = &report["results"]["summary"];
    assert_eq!(summary["qualifying"], 60);
    assert!(summary["links"][0]["min_slack"].as_f64().unwrap() >= -1e-8);
}

fn way_input(unitary: qinstrument::ComplexMatrix, observable: Observable) -> WayInput {
    let model = MeasurementModel::new(2, DensityOperator::basis(2, 0), unitary, sx()).unwrap();
    WayInput {
        model: ModelJson::encode(&model),
        observable,
        state: DensityOperator::pure(&sy_plus()).unwrap(),
        system_charge: sx(),
        ancilla_charge: sx(),
    }
}

#[test]
fn way_bound_non_conserving_model_is_diagnostic() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "model.json", &way_input(tensor(&hadamard(), &identity(2)), sz()));
    let (code, report, _) = run(&["way-bound", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_OK);
    assert_eq!(report["results"]["mode"], "diagnostic");
    assert!(report["results"]["report"]["conservation_residual"].as_f64().unwrap() > 0.1);
}

#[test]
fn way_bound_commuting_target_has_zero_bound() {
    let dir = TempDir::new().unwrap();
    let total = tensor(sx().matrix(), &identity(2)) + tensor(&identity(2), sx().matrix());
    let path = write(&dir, "model.json", &way_input(unitary_exp(&total.scale(0.7)), sx()));
    let (code, report, _) = run(&["way-bound", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_OK);
    assert_eq!(report["results"]["mode"], "certified");
    assert_eq!(report["results"]["report"]["bound"].as_f64().unwrap(), 0.0);
}

#[test]
fn gate_audit_optimized_single_qubit_respects_floor() {
    let dir = TempDir::new().unwrap();
    let (code, report, _) = run(&["gate-audit"], Some(&small_config(&dir)));
    assert_eq!(code, EXIT_OK);
    let bound = &report["results"]["bound"];
    assert_eq!(bound["floor"].as_f64().unwrap(), 0.125);
    assert!(bound["achieved_error"].as_f64().unwrap() >= 0.125);
    let lowest = report["results"]["optimized"]["lowest_restart_error"].as_f64().unwrap();
    assert!(lowest >= 0.125 - 1e-6);
}

#[test]
fn gate_audit_exact_hadamard_skips_floor() {
    let dir = TempDir::new().unwrap();
    let input = GateInput {
        implementation: GateImplementation::exact_hadamard(2),
        ancilla_charge: None,
    };
    let path = write(&dir, "h.json", &input);
    let (code, report, _) = run(&["gate-audit", "--input", path.to_str().unwrap()], Some(&small_config(&dir)));
    assert_eq!(code, EXIT_OK);
    let r = &report["results"];
    assert!((r["fidelity"]["gate_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["floor_checked"], false);
    assert!(r["conservation_residual"].as_f64().unwrap() > 0.5);
}

#[test]
fn gate_audit_coherent_floor() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.json", &json!({ "scenario": { "kind": "coherent", "mean_photons": 1.0 } }));
    let (code, report, _) = run(&["gate-audit"], Some(&config));
    assert_eq!(code, EXIT_OK);
    assert!((report["results"]["bound"]["floor"].as_f64().unwrap() - 0.05).abs() < 1e-15);
    assert_eq!(report["results"]["bound"]["scenario"], "coherent");
}

#[test]
fn gate_audit_rejects_invalid_implementations() {
    let dir = TempDir::new().unwrap();
    let mut input = serde_json::to_value(GateInput {
        implementation: GateImplementation::exact_hadamard(2),
        ancilla_charge: None,
    })
    .unwrap();
    input["implementation"]["ancilla_vector"] = json!([[1.0, 0.0], [1.0, 0.0]]);
    let path = write(&dir, "norm.json", &input);
    let (code, _, err) = run(&["gate-audit", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("norm"), "{err}");

    let mut input = serde_json::to_value(GateInput {
        implementation: GateImplementation::exact_hadamard(2),
        ancilla_charge: None,
    })
    .unwrap();
    input["implementation"]["unitary"]["entries"][0] = json!([2.0, 0.0]);
    let path = write(&dir, "unitary.json", &input);
    let (code, _, err) = run(&["gate-audit", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("unitary"), "{err}");
}

#[test]
fn optimize_gate_ladder() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "opt.json",
        &json!({
            "scenario": { "n": 2 },
            "optimizer": { "restarts": 3, "iterations": 40 },
            "fidelity": { "grid": 24, "cb_samples": 10 }
        }),
    );
    let out = dir.path().join("report.json");
    let (code, _, _) = run(&["optimize-gate", "--out", out.to_str().unwrap()], Some(&config));
    assert_eq!(code, EXIT_OK);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let runs = report["results"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let errors: Vec<f64> = runs.iter().map(|r| r["gate_error"].as_f64().unwrap()).collect();
    assert!(errors[1] <= errors[0] + 1e-9);
    assert_eq!(runs[1]["bound"]["floor"].as_f64().unwrap(), 0.05);
}

#[test]
fn dilate_lueders_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = NumericConfig::default();
    let lueders = KrausInstrument::lueders(&Observable::new(pauli_z()).unwrap(), &cfg);
    let path = write(&dir, "lz.json", &InstrumentJson::encode(&lueders));
    let (code, report, _) = run(&["dilate", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_OK);
    assert!(report["results"]["round_trip_residual"].as_f64().unwrap() <= 1e-10);
    let model: ModelJson = serde_json::from_value(report["results"]["model"].clone()).unwrap();
    let back = qinstrument::instruments::instrument_from_model(&model.decode(&cfg).unwrap(), &cfg).unwrap();
    assert!(qinstrument::instruments::action_distance(&lueders, &back) <= 1e-10);
}

#[test]
fn dilate_rejects_incomplete_kraus_set() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "bad.json",
        &json!({ "outcomes": [1.0], "kraus": [[{ "dim": 2, "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]] }]] }),
    );
    let (code, _, err) = run(&["dilate", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("completeness"), "{err}");
    assert_eq!(run(&["dilate"], None).0, EXIT_INPUT);
}

#[test]
fn dilate_unitary_channel_uses_one_dimensional_ancilla() {
    let dir = TempDir::new().unwrap();
    let channel = KrausInstrument::unitary(hadamard()).unwrap();
    let path = write(&dir, "u.json", &InstrumentJson::encode(&channel));
    let (code, report, _) = run(&["dilate", "--input", path.to_str().unwrap()], None);
    assert_eq!(code, EXIT_OK);
    assert_eq!(report["results"]["ancilla_dim"], 1);
    assert!(report["results"]["round_trip_residual"].as_f64().unwrap() <= 1e-12);
}
