use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use hcs_core::backend::{sample_counts, run_circuit, Endianness};
use hcs_core::experiment::{
    read_epochs_csv, run_experiment, run_experiment_with, summarize_run_dir, telemetry_file_name, write_outputs,
    ExperimentBackend, ExperimentConfig, EPOCHS_CSV,
};
use hcs_core::hypercausal::{graph_forward, graph_forward_parallel, topological_order, GraphDocument};
use hcs_core::optim::{OptimizerRegistry, OptimizerSpec};
use hcs_core::registry::{BackendFactory, BackendRegistry};
use hcs_core::runtime::load_jsonl;
use hcs_core::types::BackendCapabilities;
use hcs_core::{Backend, BackendConfig, BitstringCounts, Error, ReferenceBackend, StateVector};

const DIAMOND: &str = r#"{
  "nodes": {
    "src":   {"backend": "reference", "config": {"dim": 3, "branches": 4, "seed": 1}},
    "left":  {"backend": "sim_analytic", "config": {"dim": 3, "branches": 5, "depth": 2, "seed": 2}, "policy": "median"},
    "right": {"backend": "sim_sampled", "config": {"dim": 3, "branches": 3, "shots": 2048, "seed": 3},
              "policy": "min_risk:l2", "projector": {"w": 0.8, "b": [0.0, 0.1, -0.1], "span": 0.3,
                                                    "perturbations": ["shift:0.2"], "symmetric": true}},
    "sink":  {"backend": "reference", "config": {"dim": 3, "branches": 6, "seed": 4}}
  },
  "edges": [["src", "left"], ["src", "right"], ["left", "sink"], ["right", "sink"]],
  "inputs": {"src": [0.2, -0.5, 1.0]}
}"#;

#[test]
fn graph_document_runs_serial_and_parallel_identically() {
    let doc = GraphDocument::from_json(DIAMOND).unwrap();
    let graph = doc.build(&BackendRegistry::with_builtins()).unwrap();
    assert_eq!(topological_order(&graph).unwrap(), vec!["src", "left", "right", "sink"]);

    let serial = graph_forward(&graph).unwrap();
    let parallel = graph_forward_parallel(&graph).unwrap();
    assert_eq!(serial.order, parallel.order);
    for name in &serial.order {
        let (a, b) = (serial.get(name).unwrap(), parallel.get(name).unwrap());
        assert_eq!(a.state, b.state, "{name}");
        assert_eq!(a.futures, b.futures, "{name}");
        assert_eq!(a.representative, b.representative, "{name}");
    }
    // Base rows plus the shift variant and its mirror.
    assert_eq!(serial.get("right").unwrap().futures.branches(), 5);

    let again = GraphDocument::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn graph_document_rejects_cycles_and_unknown_names() {
    let cyclic = DIAMOND.replace(r#"["left", "sink"]"#, r#"["sink", "src"]"#);
    let graph = GraphDocument::from_json(&cyclic)
        .unwrap()
        .build(&BackendRegistry::with_builtins())
        .unwrap();
    assert!(matches!(graph_forward(&graph), Err(Error::CycleDetected { .. })));

    let unknown = DIAMOND.replace(r#""backend": "sim_analytic""#, r#""backend": "nope""#);
    let err = GraphDocument::from_json(&unknown)
        .unwrap()
        .build(&BackendRegistry::with_builtins())
        .unwrap_err();
    assert_eq!(err, Error::UnknownName("nope".into()));
}

#[test]
fn counts_documents_round_trip_both_orders() {
    let state = run_circuit(&[0.4, 1.1, -2.0, 0.3], 2).unwrap();
    let counts = sample_counts(&state, 4096, 9).unwrap();
    assert_eq!(counts.total(), 4096);
    for order in [Endianness::Wire0Left, Endianness::Wire0Right] {
        let json = counts.to_json(order).unwrap();
        assert_eq!(BitstringCounts::from_json(&json).unwrap(), counts);
    }
}

#[test]
fn experiment_outputs_reload() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        epochs: 25,
        backend: ExperimentBackend::Analytic,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    write_outputs(dir.path(), &run, "test").unwrap();

    assert_eq!(read_epochs_csv(&dir.path().join(EPOCHS_CSV)).unwrap(), run.logs);
    let telemetry = load_jsonl(BufReader::new(File::open(dir.path().join(telemetry_file_name("test"))).unwrap())).unwrap();
    assert_eq!(telemetry, run.telemetry);
    assert!(telemetry.windows(2).all(|w| w[0].tau <= w[1].tau));

    let summary = summarize_run_dir(dir.path()).unwrap();
    assert_eq!(summary.len(), 25);
    assert_eq!(summary[3].delta_alpha, Some(run.logs[3].alpha - run.logs[2].alpha));

    let resolved = std::fs::read_to_string(dir.path().join("config.resolved.json")).unwrap();
    let reloaded = ExperimentConfig::from_json(&resolved).unwrap();
    assert_eq!(reloaded, run.config);
    assert_eq!(run_experiment(&reloaded).unwrap().logs, run.logs);
}

#[test]
fn experiment_logs_are_consistent() {
    let cfg = ExperimentConfig {
        epochs: 40,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    for (t, log) in run.logs.iter().enumerate() {
        assert_eq!(log.epoch, t);
        let total = log.loss_task + 0.5 * (log.loss_cons + log.loss_coh);
        assert_eq!(log.loss_total, total);
        if t > 0 {
            assert_eq!(log.delta_alpha, log.alpha - run.logs[t - 1].alpha);
        }
        assert!((1..=5).contains(&log.depth));
    }
}

#[test]
fn frozen_alpha_and_zero_drift_on_analytic_backend_still_varies_with_depth() {
    // Depth changes the circuit, so only the reference engine is depth-invariant.
    let cfg = ExperimentConfig {
        epochs: 300,
        backend: ExperimentBackend::Analytic,
        drift: hcs_core::experiment::DriftParams::zero(),
        freeze_alpha: true,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    assert!(run.logs.iter().all(|l| l.alpha == 1.0));
    assert_ne!(run.logs[1].mean_state, run.logs[299].mean_state);
}

#[test]
fn phase_drift_changes_the_state() {
    let cfg = ExperimentConfig {
        epochs: 301,
        backend: ExperimentBackend::Analytic,
        drift: hcs_core::experiment::DriftParams {
            phi_max: 0.1,
            eps: 0.0,
            b_max: 0.0,
            ..Default::default()
        },
        depth: hcs_core::experiment::DepthRamp {
            start: 2,
            end: 2,
            horizon: None,
        },
        freeze_alpha: true,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    assert_eq!(run.logs[0].phi, 0.0);
    assert!((run.logs[75].phi - 0.1).abs() < 1e-15);
    assert_ne!(run.logs[75].mean_state, run.logs[0].mean_state);
}

fn identity_factory() -> BackendFactory {
    Arc::new(|cfg: &BackendConfig| Ok(Arc::new(ReferenceBackend::identity(cfg.clone())?) as Arc<dyn Backend>))
}

const DETERMINISTIC: BackendCapabilities = BackendCapabilities {
    analytic: true,
    sampled: false,
    deterministic: true,
};

#[test]
fn custom_backend_and_optimizer_plug_into_experiment() {
    let mut backends = BackendRegistry::with_builtins();
    backends.register("identity", identity_factory(), DETERMINISTIC).unwrap();
    let x = StateVector::new(vec![0.1, 0.2]).unwrap();
    let identity = backends.create("identity", &BackendConfig::new(2, 2)).unwrap();
    assert_eq!(identity.execute(&x).unwrap().as_slice(), &[0.1f64.tanh(), 0.2f64.tanh()]);

    // The experiment resolves its engine by name, so a registry can swap
    // what "reference" means.
    let mut swapped = BackendRegistry::new();
    swapped.register("reference", identity_factory(), DETERMINISTIC).unwrap();
    let cfg = ExperimentConfig {
        epochs: 10,
        backend: ExperimentBackend::Reference,
        optimizer: OptimizerSpec::new("spsa").with("a", 0.05),
        ..ExperimentConfig::default()
    };
    let run = run_experiment_with(&cfg, &swapped, &OptimizerRegistry::with_builtins()).unwrap();
    assert_eq!(run.logs.len(), 10);
    assert!(run.logs.iter().all(|l| l.loss_total.is_finite()));
    assert_ne!(run.logs, run_experiment(&cfg).unwrap().logs);
}

#[test]
fn gradient_only_optimizer_is_rejected_by_experiment() {
    let cfg = ExperimentConfig {
        epochs: 5,
        backend: ExperimentBackend::Reference,
        optimizer: OptimizerSpec::new("sgd").with("lr", 0.1),
        ..ExperimentConfig::default()
    };
    assert!(matches!(run_experiment(&cfg), Err(Error::UnsupportedStepInput { .. })));
}
