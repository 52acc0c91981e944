mod common;

use std::thread;

use common::*;
use proptest::prelude::*;
use qcor_core::{
    exact_expectation, ExecutionConfig, HeterogeneousMap, Kernel, MapError, PauliObservable,
    ReadoutNoiseModel, ResultBuffer, ValueKind,
};
use qcor_rt::{
    calibrate_backend, default_objective_evaluate, to_json_string, Backend, JsonOptions,
    MitigatedObjective, NelderMead, ObjectiveFunction, Runtime, TaskSpec, VqeObjective,
    CALIBRATION_KEY,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn obs(s: &str) -> PauliObservable {
    s.parse().unwrap()
}

fn kernel(s: &str) -> Kernel {
    s.parse().unwrap()
}

/// Serialization without wall-time, the only run-dependent entry.
fn untimed(b: &ResultBuffer) -> String {
    to_json_string(b, JsonOptions::default())
}

fn exact_eval(o: &PauliObservable, k: &Kernel, params: &[f64]) -> f64 {
    default_objective_evaluate(
        o,
        k,
        params,
        &Backend::exact(None),
        &mut ResultBuffer::new(),
    )
    .unwrap()
}

#[test]
fn sampled_calibration_matches_flip_rates() {
    let shots = 100_000u64;
    let noise = ReadoutNoiseModel::uniform(0.05, 0.10).unwrap();
    let backend = Backend::sampled(ExecutionConfig::new(shots, 21).with_noise(noise));
    let cal = calibrate_backend(2, &backend).unwrap();
    let expected = [[0.95, 0.10], [0.05, 0.90]];
    for m in cal.matrices() {
        for (obs_bit, row) in expected.iter().enumerate() {
            for (true_bit, &p) in row.iter().enumerate() {
                let sigma = (p * (1.0 - p) / shots as f64).sqrt();
                let got = m.get(obs_bit, true_bit);
                assert!(
                    (got - p).abs() <= 5.0 * sigma,
                    "M[{obs_bit}][{true_bit}] = {got}"
                );
            }
        }
    }
}

#[test]
fn noiseless_calibration_is_identity_within_sampling_error() {
    let shots = 2_000u64;
    let cal = calibrate_backend(3, &Backend::sampled(ExecutionConfig::new(shots, 1))).unwrap();
    let bound = 5.0 / (shots as f64).sqrt();
    for m in cal.matrices() {
        assert!((m.get(0, 0) - 1.0).abs() <= bound && (m.get(1, 1) - 1.0).abs() <= bound);
    }
}

#[test]
fn single_qubit_flip_bias_is_removed() {
    let shots = 100_000u64;
    let noise = ReadoutNoiseModel::uniform(0.0, 0.1).unwrap();
    let backend = Backend::sampled(ExecutionConfig::new(shots, 31).with_noise(noise));
    let inner = VqeObjective::new(
        obs("Z0"),
        kernel("kernel flip() qubits 1 { X q0; }"),
        backend.clone(),
    )
    .unwrap();
    let mut m = MitigatedObjective::new(inner, backend, 1);
    let mut sink = ResultBuffer::new();
    let mitigated = m.evaluate(&[], &mut sink).unwrap();
    let raw: f64 = sink.children[0].metadata.get("raw-value").unwrap();
    let n = shots as f64;
    // Raw is 1 - 2·f1 with f1 ~ Bin(0.9); mitigation divides by 0.9 and
    // adds calibration noise on the p10 estimate.
    let raw_sigma = 2.0 * (0.09 / n).sqrt();
    assert!((raw + 0.8).abs() <= 5.0 * raw_sigma, "{raw}");
    let mitigated_sigma = (raw_sigma.powi(2) / 0.81 + 4.0 * 0.09 / n / 0.81).sqrt();
    assert!(
        (mitigated + 1.0).abs() <= 5.0 * mitigated_sigma,
        "{mitigated}"
    );
}

#[test]
fn two_qubit_parity_is_recovered() {
    let shots = 100_000u64;
    let noise = ReadoutNoiseModel::uniform(0.05, 0.10).unwrap();
    let k = kernel("kernel k() qubits 2 { X q0; Ry(0.4) q1; }");
    let o = obs("Z0 Z1");
    let clean = exact_expectation(&k, &o).unwrap();
    let backend = Backend::sampled(ExecutionConfig::new(shots, 41).with_noise(noise));
    let inner = VqeObjective::new(o, k, backend.clone()).unwrap();
    let mut m = MitigatedObjective::new(inner, backend, 2);
    let mut sink = ResultBuffer::new();
    let v = m.evaluate(&[], &mut sink).unwrap();
    let raw: f64 = sink.children[0].metadata.get("raw-value").unwrap();
    assert!(
        (raw - clean).abs() > 0.05,
        "noise should bias the raw value"
    );
    assert!(
        (v - clean).abs() <= 5.0 / (shots as f64).sqrt(),
        "{v} vs {clean}"
    );
    assert!(sink.metadata.contains_key(CALIBRATION_KEY));
}

#[test]
fn mitigated_task_caches_calibration_in_root_metadata() {
    let noise = ReadoutNoiseModel::uniform(0.05, 0.10).unwrap();
    let spec = TaskSpec::new()
        .kernel(kernel(ANSATZ))
        .observable(obs("X0 X1"))
        .config(ExecutionConfig::default().with_noise(noise))
        .exact(true)
        .mitigate(true)
        .optimizer(NelderMead::new());
    let rt = Runtime::new();
    let root = rt.sync(rt.task_initiate(spec).unwrap()).unwrap();
    let v: f64 = root.metadata.get("opt-value").unwrap();
    assert!((v + 1.0).abs() < 1e-4);
    let cal = root.metadata.raw(CALIBRATION_KEY).unwrap();
    assert_eq!(cal.kind(), ValueKind::List);
    for child in &root.children {
        assert!(child.metadata.contains_key("raw-value"));
    }
}

#[test]
fn handle_synced_on_another_thread_gives_the_same_tree() {
    let spec = || {
        TaskSpec::new()
            .kernel(kernel(ANSATZ2))
            .observable(obs("X0 X1 + Z0 Z1 - 0.5 Y1"))
            .config(ExecutionConfig::new(500, 77))
            .optimizer(NelderMead {
                options: qcor_core::NelderMeadOptions {
                    max_evaluations: 25,
                    ..Default::default()
                },
                initial_point: None,
            })
    };
    let rt = Runtime::new();
    let here = rt.sync(rt.task_initiate(spec()).unwrap()).unwrap();
    let handle = thread::spawn(move || qcor_rt::task_initiate(spec()).unwrap())
        .join()
        .unwrap();
    let there = thread::spawn(move || qcor_rt::sync(handle).unwrap())
        .join()
        .unwrap();
    assert_eq!(untimed(&here), untimed(&there));
    assert_eq!(there.children.len(), 25);
}

#[test]
fn many_concurrent_tasks_complete_independently() {
    let rt = Runtime::new();
    let thetas: Vec<f64> = (0..16).map(|i| -3.0 + 0.4 * i as f64).collect();
    let handles: Vec<_> = thetas
        .iter()
        .map(|&t| {
            rt.task_initiate(
                TaskSpec::new()
                    .kernel(kernel(ANSATZ))
                    .observable(obs("X0 X1"))
                    .params(vec![t])
                    .exact(true),
            )
            .unwrap()
        })
        .collect();
    for (h, t) in handles.into_iter().zip(thetas).rev() {
        let root = rt.sync(h).unwrap();
        let v: f64 = root.metadata.get("value").unwrap();
        assert!((v - t.sin()).abs() < 1e-12);
        assert_eq!(root.children.len(), 1);
    }
}

#[test]
fn heterogeneous_map_kinds() {
    let m = HeterogeneousMap::new().with("shots", 1024i64);
    assert_eq!(m.get::<i64>("shots"), Ok(1024));
    let missing = m.get::<f64>("missing").unwrap_err();
    let mismatch = m.get::<&str>("shots").unwrap_err();
    assert!(matches!(missing, MapError::MissingKey(_)));
    assert_ne!(missing.code(), mismatch.code());
}

#[test]
fn decoration_preserves_dimensions() {
    let inner = VqeObjective::new(obs("Z0"), kernel(ANSATZ2), Backend::exact(None)).unwrap();
    let m = MitigatedObjective::new(inner, Backend::exact(None), 2);
    assert_eq!(m.dimensions(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn default_objective_is_linear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64, t in -4.0..4.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let o1 = random_hermitian(&mut rng, 2);
        let o2 = random_hermitian(&mut rng, 2);
        let combined = o1.scale(c(a, 0.0)).add(&o2.scale(c(b, 0.0)));
        let k = kernel("kernel k(t) qubits 2 { H q0; Ry(t) q1; CNOT q0 q1; Rz(t) q0; }");
        let lhs = exact_eval(&combined, &k, &[t]);
        let rhs = a * exact_eval(&o1, &k, &[t]) + b * exact_eval(&o2, &k, &[t]);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn grouped_evaluation_matches_whole(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let o = random_hermitian(&mut rng, 3);
        let k = random_kernel(&mut rng, 3, 10);
        let whole = exact_eval(&o, &k, &[]);
        let parts: f64 = o.group_commuting().iter().map(|g| exact_eval(g, &k, &[])).sum();
        prop_assert!((whole - parts).abs() < 1e-10);
    }

    #[test]
    fn sampled_evaluations_are_seed_deterministic(seed in any::<u64>(), cfg_seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let o = random_hermitian(&mut rng, 2);
        let k = random_kernel(&mut rng, 2, 6);
        let backend = Backend::sampled(ExecutionConfig::new(200, cfg_seed));
        let mut a = ResultBuffer::new();
        let mut b = ResultBuffer::new();
        let va = default_objective_evaluate(&o, &k, &[], &backend, &mut a).unwrap();
        let vb = default_objective_evaluate(&o, &k, &[], &backend, &mut b).unwrap();
        prop_assert_eq!(va, vb);
        prop_assert_eq!(untimed(&a), untimed(&b));
    }
}
