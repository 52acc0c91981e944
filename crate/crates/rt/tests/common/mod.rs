#![allow(dead_code)]

use nalgebra::DMatrix;
use qcor_core::{
    Complex64, DenseMatrix, FermionObservable, FermionTerm, GateKind, Instruction, Kernel,
    LadderOp, ParamExpr, PauliObservable, PauliOp, PauliString, PauliTerm,
};
use rand::Rng;

pub const ANSATZ: &str = "kernel ansatz(t) qubits 2 { X q0; Ry(t) q1; CNOT q1 q0; }";
pub const ANSATZ2: &str = "kernel ansatz2(a, b) qubits 2 { Ry(a) q0; CNOT q0 q1; Ry(b) q1; }";

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sorted_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut ev: Vec<f64> = DMatrix::from_row_slice(n, n, m.as_slice())
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of `o` on `n` qubits by dense diagonalization.
pub fn ground_energy(o: &PauliObservable, n: usize) -> f64 {
    sorted_eigenvalues(&o.to_dense_matrix(n).unwrap())[0]
}

const SINGLE: [GateKind; 10] = [
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
];

/// Random gate on `n` qubits; rotations draw literal angles or, when
/// `params` is non-empty, sometimes a named parameter.
pub fn random_gate(rng: &mut impl Rng, n: usize, params: &[String]) -> Instruction {
    if n > 1 && rng.random_bool(0.3) {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let kind = if rng.random_bool(0.5) {
            GateKind::CNOT
        } else {
            GateKind::CZ
        };
        return Instruction::new(kind, vec![a, b], None).unwrap();
    }
    let kind = SINGLE[rng.random_range(0..SINGLE.len())];
    let param = kind.is_rotation().then(|| {
        if !params.is_empty() && rng.random_bool(0.5) {
            ParamExpr::Named(params[rng.random_range(0..params.len())].clone())
        } else {
            ParamExpr::Literal(rng.random_range(-7.0..7.0))
        }
    });
    Instruction::new(kind, vec![rng.random_range(0..n)], param).unwrap()
}

/// Random bound, unmeasured kernel.
pub fn random_kernel(rng: &mut impl Rng, n: usize, gates: usize) -> Kernel {
    let body = (0..gates).map(|_| random_gate(rng, n, &[])).collect();
    Kernel::new("k", vec![], n, body).unwrap()
}

/// Random kernel with free parameters and, sometimes, trailing measurements.
pub fn random_parameterized_kernel(rng: &mut impl Rng) -> Kernel {
    let n = rng.random_range(1..5);
    let params: Vec<String> = (0..rng.random_range(0..4))
        .map(|i| format!("p{i}"))
        .collect();
    let mut body: Vec<Instruction> = (0..rng.random_range(0..15))
        .map(|_| random_gate(rng, n, &params))
        .collect();
    for q in 0..n {
        if rng.random_bool(0.3) {
            body.push(Instruction::new(GateKind::Measure, vec![q], None).unwrap());
        }
    }
    Kernel::new(
        format!("kernel_{}", rng.random_range(0..1000)),
        params,
        n,
        body,
    )
    .unwrap()
}

fn random_op(rng: &mut impl Rng) -> PauliOp {
    [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z][rng.random_range(0..4)]
}

/// Random string on `n` qubits with at least one non-identity factor.
pub fn random_pauli_string(rng: &mut impl Rng, n: usize) -> PauliString {
    loop {
        let (_, s) = PauliString::from_factors((0..n).map(|q| (q, random_op(rng))));
        if !s.is_identity() {
            return s;
        }
    }
}

/// Random real-coefficient observable on at most `n` qubits, identity
/// terms included.
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> PauliObservable {
    let terms = rng.random_range(1..6);
    PauliObservable::from_terms((0..terms).map(|_| {
        let (_, s) = PauliString::from_factors((0..n).map(|q| (q, random_op(rng))));
        PauliTerm::new(c(rng.random_range(-2.0..2.0), 0.0), s).unwrap()
    }))
    .simplify(1e-12)
}

/// Random complex-coefficient observable, not necessarily Hermitian.
pub fn random_observable(rng: &mut impl Rng, n: usize) -> PauliObservable {
    let terms = rng.random_range(1..6);
    PauliObservable::from_terms((0..terms).map(|_| {
        let (phase, s) = PauliString::from_factors((0..n).map(|q| (q, random_op(rng))));
        let coef = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        PauliTerm::new(coef * phase, s).unwrap()
    }))
    .simplify(1e-12)
}

/// Random fermionic observable on `modes` modes.
pub fn random_fermion(rng: &mut impl Rng, modes: usize) -> FermionObservable {
    let terms = rng.random_range(1..5);
    FermionObservable::from_terms((0..terms).map(|_| {
        let ops = (0..rng.random_range(0..5))
            .map(|_| LadderOp {
                site: rng.random_range(0..modes),
                dagger: rng.random_bool(0.5),
            })
            .collect();
        FermionTerm::new(
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            ops,
        )
        .unwrap()
    }))
}
