use nalgebra::DMatrix;
use proptest::prelude::*;
use qcor_core::pauli::{expectation_from_distribution, MAX_DENSE_QUBITS};
use qcor_core::simulator::bitstring;
use qcor_core::{
    exact_distribution, exact_expectation, execute, nelder_mead, Calibration, Complex64,
    DenseMatrix, ExecutionConfig, FermionObservable, FermionTerm, GateKind, Instruction, Kernel,
    LadderOp, NelderMeadOptions, ParamExpr, PauliObservable, PauliOp, PauliString, PauliTerm,
    QuasiDistribution, ReadoutNoiseModel, StateVector,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_op() -> impl Strategy<Value = PauliOp> {
    prop_oneof![
        Just(PauliOp::I),
        Just(PauliOp::X),
        Just(PauliOp::Y),
        Just(PauliOp::Z)
    ]
}

fn coefficient() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| c(re, im))
}

fn pauli_observable(qubits: usize) -> impl Strategy<Value = PauliObservable> {
    prop::collection::vec(
        (coefficient(), prop::collection::vec(pauli_op(), qubits)),
        0..5,
    )
    .prop_map(|terms| {
        PauliObservable::from_terms(terms.into_iter().map(|(coef, ops)| {
            let (phase, s) = PauliString::from_factors(ops.into_iter().enumerate());
            PauliTerm::new(coef * phase, s).unwrap()
        }))
        .simplify(1e-12)
    })
}

fn hermitian_observable(qubits: usize) -> impl Strategy<Value = PauliObservable> {
    pauli_observable(qubits).prop_map(|o| {
        PauliObservable::from_terms(
            o.terms()
                .iter()
                .map(|t| PauliTerm::new(c(t.coefficient().re, 0.0), t.string().clone()).unwrap()),
        )
        .simplify(1e-12)
    })
}

fn dense(o: &PauliObservable, n: usize) -> DenseMatrix {
    o.to_dense_matrix(n).unwrap()
}

fn dense_mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.dim();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn gate(n: usize) -> impl Strategy<Value = Instruction> {
    let single = (0..12usize, 0..n, -6.3..6.3f64).prop_map(|(g, q, angle)| {
        let kind = [
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::T,
            GateKind::Rx,
            GateKind::Ry,
            GateKind::Rz,
            GateKind::H,
            GateKind::Ry,
        ][g];
        let param = kind.is_rotation().then_some(ParamExpr::Literal(angle));
        Instruction::new(kind, vec![q], param).unwrap()
    });
    let double = (any::<bool>(), 0..n, 1..n.max(2)).prop_map(move |(cz, a, off)| {
        let b = (a + off) % n;
        let kind = if cz { GateKind::CZ } else { GateKind::CNOT };
        Instruction::new(kind, vec![a, b], None).unwrap()
    });
    prop_oneof![3 => single, 1 => double]
}

fn circuit(n: usize) -> impl Strategy<Value = Kernel> {
    prop::collection::vec(gate(n), 0..12)
        .prop_map(move |body| Kernel::new("k", vec![], n, body).unwrap())
}

fn state_of(k: &Kernel) -> Vec<Complex64> {
    StateVector::prepare(k).unwrap().amplitudes().to_vec()
}

fn quadratic_form(m: &DenseMatrix, psi: &[Complex64]) -> Complex64 {
    let mpsi = m.mul_vec(psi);
    psi.iter().zip(&mpsi).map(|(a, b)| a.conj() * b).sum()
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

fn sorted_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_nalgebra(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn ladder() -> impl Strategy<Value = LadderOp> {
    (0..4usize, any::<bool>()).prop_map(|(site, dagger)| LadderOp { site, dagger })
}

fn fermion_observable() -> impl Strategy<Value = FermionObservable> {
    prop::collection::vec((coefficient(), prop::collection::vec(ladder(), 0..5)), 0..4).prop_map(
        |terms| {
            FermionObservable::from_terms(
                terms
                    .into_iter()
                    .map(|(coef, ops)| FermionTerm::new(coef, ops).unwrap()),
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_matches_dense_products(
        a in pauli_observable(3),
        b in pauli_observable(3),
        d in pauli_observable(3),
    ) {
        let left = a.multiply(&b).multiply(&d);
        let right = a.multiply(&b.multiply(&d));
        let oracle = dense_mul(&dense_mul(&dense(&a, 3), &dense(&b, 3)), &dense(&d, 3));
        prop_assert!(dense(&left, 3).max_abs_diff(&oracle) < 1e-10);
        prop_assert!(dense(&right, 3).max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn addition_matches_dense_sum(a in pauli_observable(3), b in pauli_observable(3)) {
        let oracle = &dense(&a, 3) + &dense(&b, 3);
        prop_assert!(dense(&a.add(&b), 3).max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn pauli_text_round_trips(o in pauli_observable(4)) {
        let back: PauliObservable = o.to_string().parse().unwrap();
        prop_assert_eq!(back, o);
    }

    #[test]
    fn grouping_partitions_the_observable(o in hermitian_observable(3), k in circuit(3)) {
        let groups = o.group_commuting();
        let mut rebuilt = PauliObservable::zero();
        for g in &groups {
            for (i, s) in g.terms().iter().enumerate() {
                for t in &g.terms()[i + 1..] {
                    prop_assert!(s.string().qubit_wise_commutes(t.string()));
                }
            }
            rebuilt = rebuilt.add(g);
        }
        prop_assert_eq!(rebuilt.simplify(1e-12), o.clone());
        let whole = exact_expectation(&k, &o).unwrap();
        let parts: f64 = groups.iter().map(|g| exact_expectation(&k, g).unwrap()).sum();
        prop_assert!((whole - parts).abs() < 1e-10);
    }

    #[test]
    fn counts_expectation_is_bounded(k in circuit(3), seed in any::<u64>(), o in hermitian_observable(3)) {
        for t in o.terms() {
            if t.string().is_identity() {
                continue;
            }
            let measured = k.append_measurement_basis(t.string()).unwrap();
            let (counts, _) = execute(&measured, &ExecutionConfig::new(64, seed)).unwrap();
            let v = qcor_core::expectation_from_counts(t, &counts).unwrap();
            prop_assert!(v.abs() <= t.coefficient().norm() + 1e-12);
        }
    }

    #[test]
    fn exact_expectation_matches_dense_oracle(k in circuit(3), o in hermitian_observable(3)) {
        let psi = state_of(&k);
        let oracle = quadratic_form(&dense(&o, 3), &psi);
        prop_assert!((exact_expectation(&k, &o).unwrap() - oracle.re).abs() < 1e-10);
    }

    #[test]
    fn measured_terms_reproduce_exact_expectation(k in circuit(3), o in hermitian_observable(3)) {
        let plan = o.observe(&k).unwrap();
        let mut total = plan.identity_offset.re;
        for (term, kernel) in &plan.circuits {
            let dist = exact_distribution(kernel, None).unwrap();
            total += expectation_from_distribution(term, &dist).unwrap();
        }
        prop_assert!((total - exact_expectation(&k, &o).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn norm_is_conserved_gate_by_gate(k in circuit(4)) {
        let mut s = StateVector::new(4).unwrap();
        for g in k.body() {
            s.apply(g).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn self_inverse_gates_undo_themselves(k in circuit(3), which in 0..6usize, q in 0..3usize) {
        let kind = [GateKind::X, GateKind::Y, GateKind::Z, GateKind::H, GateKind::CNOT, GateKind::CZ][which];
        let qubits = if kind.num_qubits() == 2 { vec![q, (q + 1) % 3] } else { vec![q] };
        let g = Instruction::new(kind, qubits, None).unwrap();
        let mut s = StateVector::prepare(&k).unwrap();
        let before = s.clone();
        s.apply(&g).unwrap();
        s.apply(&g).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn execution_is_deterministic(k in circuit(3), seed in any::<u64>(), shots in 1..500u64) {
        let k = k.measure_all().unwrap();
        let noise = ReadoutNoiseModel::uniform(0.05, 0.1).unwrap();
        let cfg = ExecutionConfig::new(shots, seed).with_noise(noise);
        let (a, _) = execute(&k, &cfg).unwrap();
        let (b, _) = execute(&k, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.values().sum::<u64>(), shots);
        prop_assert!(a.keys().all(|b| b.len() == 3));
    }

    #[test]
    fn kernel_text_round_trips(k in circuit(3), named in any::<bool>()) {
        let k = if named {
            let mut body: Vec<Instruction> = k.body().to_vec();
            body.push(Instruction::new(GateKind::Ry, vec![0], Some(ParamExpr::Named("theta".into()))).unwrap());
            body.push(Instruction::gate(GateKind::Measure, 1).unwrap());
            Kernel::new("named", vec!["theta".into()], 3, body).unwrap()
        } else {
            k
        };
        let back: Kernel = k.to_string().parse().unwrap();
        prop_assert_eq!(back, k);
    }

    #[test]
    fn bind_is_idempotent_once_bound(angle in -10.0..10.0f64) {
        let k: Kernel = "kernel a(t) qubits 2 { Ry(t) q0; CNOT q0 q1; Rz(t) q1; }".parse().unwrap();
        let bound = k.bind(&[angle]).unwrap();
        prop_assert_eq!(bound.bind(&[]).unwrap(), bound.clone());
        prop_assert!(bound.is_bound());
    }

    #[test]
    fn normal_order_preserves_dense_form(o in fermion_observable()) {
        let before = o.to_dense(4).unwrap();
        let after = o.normal_order();
        prop_assert!(after.is_normal_ordered());
        prop_assert!(after.to_dense(4).unwrap().max_abs_diff(&before) < 1e-10);
    }

    #[test]
    fn jordan_wigner_matches_fermion_oracle(o in fermion_observable()) {
        let pauli = o.jordan_wigner();
        prop_assert!(dense(&pauli, 4).max_abs_diff(&o.to_dense(4).unwrap()) < 1e-10);
    }

    #[test]
    fn jordan_wigner_is_linear(a in fermion_observable(), b in fermion_observable()) {
        let lhs = a.add(&b).jordan_wigner();
        let rhs = a.jordan_wigner().add(&b.jordan_wigner()).simplify(1e-12);
        prop_assert!(dense(&lhs, 4).max_abs_diff(&dense(&rhs, 4)) < 1e-10);
    }

    #[test]
    fn hermitian_fermion_spectrum_survives_jordan_wigner(o in fermion_observable()) {
        let h = o.add(&o.adjoint());
        let pauli = h.jordan_wigner();
        for t in pauli.terms() {
            prop_assert!(t.coefficient().im.abs() < 1e-12);
        }
        let fermion_ev = sorted_eigenvalues(&h.to_dense(4).unwrap());
        let pauli_ev = sorted_eigenvalues(&dense(&pauli, 4));
        for (x, y) in fermion_ev.iter().zip(&pauli_ev) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn quasi_distribution_sums_to_one(
        p01 in prop::collection::vec(0.0..0.45f64, 3),
        p10 in prop::collection::vec(0.0..0.45f64, 3),
        weights in prop::collection::vec(0u64..50, 8),
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let cal = Calibration::new(
            p01.iter().zip(&p10)
                .map(|(a, b)| qcor_core::ConfusionMatrix::from_error_rates(*a, *b).unwrap())
                .collect(),
        );
        let counts = weights.iter().enumerate()
            .filter(|(_, w)| **w > 0)
            .map(|(i, w)| (bitstring(i, 3), *w))
            .collect();
        let q = cal.mitigate_counts(&counts, &[0, 1, 2]).unwrap();
        prop_assert!((q.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_mitigation_removes_readout_bias(
        k in circuit(3),
        p01 in 0.0..0.3f64,
        p10 in 0.0..0.3f64,
    ) {
        let k = k.measure_all().unwrap();
        let noise = ReadoutNoiseModel::uniform(p01, p10).unwrap();
        let clean = exact_distribution(&k, None).unwrap();
        let noisy = exact_distribution(&k, Some(&noise)).unwrap();
        let cal = Calibration::from_noise_model(&noise, 3);
        let fixed: QuasiDistribution = cal.mitigate_distribution(&noisy, &[0, 1, 2]).unwrap();
        for i in 0..8 {
            let b = bitstring(i, 3);
            let want = clean.get(&b).copied().unwrap_or(0.0);
            let got = fixed.get(&b).copied().unwrap_or(0.0);
            prop_assert!((want - got).abs() < 1e-10, "{}: {} vs {}", b, want, got);
        }
    }

    #[test]
    fn nelder_mead_finds_convex_quadratic_minima(
        dims in 1..=4usize,
        centre in prop::collection::vec(-3.0..3.0f64, 4),
        scales in prop::collection::vec(0.5..4.0f64, 4),
    ) {
        let f = |x: &[f64]| -> Result<f64, ()> {
            Ok(x.iter().enumerate().map(|(i, xi)| scales[i] * (xi - centre[i]).powi(2)).sum())
        };
        let m = nelder_mead(f, dims, &vec![0.0; dims], &NelderMeadOptions::default()).unwrap();
        prop_assert!(m.evaluations <= 500);
        for i in 0..dims {
            prop_assert!((m.params[i] - centre[i]).abs() < 1e-3, "{:?} vs {:?}", m.params, centre);
        }
    }
}

#[test]
fn dense_limit_is_enforced() {
    let z: PauliObservable = "Z0".parse().unwrap();
    assert!(z.to_dense_matrix(MAX_DENSE_QUBITS + 1).is_err());
}

#[test]
fn hopping_term_spectrum() {
    // c†_0 c_1 + c†_1 c_0 has single-particle energies ±1 on the one-particle sector.
    let h: FermionObservable = "0^ 1 + 1^ 0".parse().unwrap();
    let ev = sorted_eigenvalues(&h.jordan_wigner().to_dense_matrix(2).unwrap());
    let want = [-1.0, 0.0, 0.0, 1.0];
    for (x, y) in ev.iter().zip(want) {
        assert!((x - y).abs() < 1e-12, "{ev:?}");
    }
}
