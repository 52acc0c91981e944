//! Readout-error calibration and factorized confusion-matrix inversion.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::hetmap::Value;
use crate::kernel::{GateKind, Instruction, Kernel};
use crate::simulator::{
    self, derive_seed, ExecutionConfig, ReadoutNoiseModel, ShotCounts, SimError,
};

/// Outcome bitstring to (possibly negative) quasi-probability.
pub type QuasiDistribution = BTreeMap<String, f64>;

/// Smallest |det| accepted when inverting a confusion matrix.
pub const SINGULAR_TOLERANCE: f64 = 1e-6;

/// Minimum shots per calibration kernel.
pub const MIN_CALIBRATION_SHOTS: u64 = 100;

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MitigationError {
    #[error("confusion matrix entry {0} outside [0, 1]")]
    EntryOutOfRange(f64),
    #[error("confusion matrix column {column} sums to {sum}, not 1")]
    NotStochastic { column: usize, sum: f64 },
    #[error("confusion matrix for qubit {qubit} is singular (det = {det})")]
    Singular { qubit: usize, det: f64 },
    #[error("no calibration for qubit {0}")]
    Uncovered(usize),
    #[error("no counts to mitigate")]
    EmptyCounts,
    #[error("bitstring {bits:?} has length {got}, expected {expected}")]
    BitstringLength {
        bits: String,
        expected: usize,
        got: usize,
    },
    #[error("bitstring {0:?} contains characters other than 0 and 1")]
    InvalidBitstring(String),
    #[error("calibration needs at least {MIN_CALIBRATION_SHOTS} shots, got {0}")]
    TooFewShots(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `m[observed][true] = P(observed | true)` for a single qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionMatrix {
    m: [[f64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self, MitigationError> {
        for &x in m.iter().flatten() {
            if !(0.0..=1.0).contains(&x) {
                return Err(MitigationError::EntryOutOfRange(x));
            }
        }
        for column in 0..2 {
            let sum = m[0][column] + m[1][column];
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(MitigationError::NotStochastic { column, sum });
            }
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Matrix for flip probabilities `p01 = P(1|0)` and `p10 = P(0|1)`.
    pub fn from_error_rates(p01: f64, p10: f64) -> Result<Self, MitigationError> {
        Self::new([[1.0 - p01, p10], [p01, 1.0 - p10]])
    }

    pub fn get(&self, observed: usize, truth: usize) -> f64 {
        self.m[observed][truth]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Inverse, or `None` when `|det| < SINGULAR_TOLERANCE`.
    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        let d = self.det();
        if d.abs() < SINGULAR_TOLERANCE {
            return None;
        }
        let m = &self.m;
        Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    fn to_value(self) -> Value {
        Value::List(
            self.m
                .iter()
                .map(|row| Value::RealList(row.to_vec()))
                .collect(),
        )
    }
}

/// One confusion matrix per qubit, indexed by qubit number.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    matrices: Vec<ConfusionMatrix>,
}

impl Calibration {
    pub fn new(matrices: Vec<ConfusionMatrix>) -> Self {
        Self { matrices }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::new(vec![ConfusionMatrix::identity(); num_qubits])
    }

    /// Exact matrices for a known noise model.
    pub fn from_noise_model(noise: &ReadoutNoiseModel, num_qubits: usize) -> Self {
        Self::new(
            (0..num_qubits)
                .map(|q| {
                    let e = noise.for_qubit(q);
                    ConfusionMatrix::from_error_rates(e.p01, e.p10)
                        .expect("readout error rates are validated probabilities")
                })
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[ConfusionMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, qubit: usize) -> Option<&ConfusionMatrix> {
        self.matrices.get(qubit)
    }

    /// Nested-list form: one `[[m00, m01], [m10, m11]]` per qubit.
    pub fn to_value(&self) -> Value {
        Value::List(self.matrices.iter().map(|m| m.to_value()).collect())
    }

    /// Inverse of [`Calibration::to_value`].
    pub fn from_value(v: &Value) -> Option<Result<Self, MitigationError>> {
        let Value::List(qubits) = v else { return None };
        let mut out = Vec::with_capacity(qubits.len());
        for q in qubits {
            let Value::List(rows) = q else { return None };
            let [Value::RealList(r0), Value::RealList(r1)] = rows.as_slice() else {
                return None;
            };
            let ([a, b], [c, d]) = (r0.as_slice(), r1.as_slice()) else {
                return None;
            };
            match ConfusionMatrix::new([[*a, *b], [*c, *d]]) {
                Ok(m) => out.push(m),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(Self::new(out)))
    }

    fn gather(
        &self,
        measured: &[usize],
        invert: bool,
    ) -> Result<Vec<[[f64; 2]; 2]>, MitigationError> {
        measured
            .iter()
            .map(|&q| {
                let m = self.matrix(q).ok_or(MitigationError::Uncovered(q))?;
                if invert {
                    m.inverse().ok_or(MitigationError::Singular {
                        qubit: q,
                        det: m.det(),
                    })
                } else {
                    Ok(m.rows())
                }
            })
            .collect()
    }

    /// Applies the tensor product of the measured qubits' matrices to a
    /// dense distribution whose index bit `i` is `measured[i]`.
    pub fn apply_forward(
        &self,
        dense: &mut [f64],
        measured: &[usize],
    ) -> Result<(), MitigationError> {
        apply_factorized(dense, &self.gather(measured, false)?);
        Ok(())
    }

    /// Applies the tensor product of the inverses.
    pub fn apply_inverse(
        &self,
        dense: &mut [f64],
        measured: &[usize],
    ) -> Result<(), MitigationError> {
        apply_factorized(dense, &self.gather(measured, true)?);
        Ok(())
    }

    /// Quasi-distribution obtained by inverting readout noise on observed
    /// counts. Negative entries are kept.
    pub fn mitigate_counts(
        &self,
        counts: &ShotCounts,
        measured: &[usize],
    ) -> Result<QuasiDistribution, MitigationError> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(MitigationError::EmptyCounts);
        }
        let dist = counts
            .iter()
            .map(|(b, &n)| (b.clone(), n as f64 / total as f64))
            .collect();
        self.mitigate_distribution(&dist, measured)
    }

    pub fn mitigate_distribution(
        &self,
        dist: &QuasiDistribution,
        measured: &[usize],
    ) -> Result<QuasiDistribution, MitigationError> {
        let inverses = self.gather(measured, true)?;
        let mut dense = to_dense(dist, measured.len())?;
        apply_factorized(&mut dense, &inverses);
        Ok(from_dense(&dense))
    }

    /// Forward noise channel applied to an exact distribution.
    pub fn corrupt_distribution(
        &self,
        dist: &QuasiDistribution,
        measured: &[usize],
    ) -> Result<QuasiDistribution, MitigationError> {
        let mats = self.gather(measured, false)?;
        let mut dense = to_dense(dist, measured.len())?;
        apply_factorized(&mut dense, &mats);
        Ok(from_dense(&dense))
    }
}

fn apply_factorized(dense: &mut [f64], mats: &[[[f64; 2]; 2]]) {
    for (pos, m) in mats.iter().enumerate() {
        let mask = 1usize << pos;
        for i in 0..dense.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (dense[i], dense[j]);
                dense[i] = m[0][0] * a + m[0][1] * b;
                dense[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
}

fn to_dense(dist: &QuasiDistribution, width: usize) -> Result<Vec<f64>, MitigationError> {
    if dist.is_empty() {
        return Err(MitigationError::EmptyCounts);
    }
    let mut dense = vec![0.0; 1 << width];
    for (bits, &p) in dist {
        if bits.len() != width {
            return Err(MitigationError::BitstringLength {
                bits: bits.clone(),
                expected: width,
                got: bits.len(),
            });
        }
        let mut idx = 0;
        for (pos, b) in bits.bytes().enumerate() {
            match b {
                b'0' => {}
                b'1' => idx |= 1 << pos,
                _ => return Err(MitigationError::InvalidBitstring(bits.clone())),
            }
        }
        dense[idx] += p;
    }
    Ok(dense)
}

fn from_dense(dense: &[f64]) -> QuasiDistribution {
    let width = dense.len().trailing_zeros() as usize;
    dense
        .iter()
        .enumerate()
        .filter(|(_, p)| **p != 0.0)
        .map(|(idx, &p)| (simulator::bitstring(idx, width), p))
        .collect()
}

fn calibration_kernel(qubit: usize, num_qubits: usize, excited: bool) -> Kernel {
    let mut body = Vec::with_capacity(2);
    if excited {
        body.push(Instruction::gate(GateKind::X, qubit).expect("single-qubit gate"));
    }
    body.push(Instruction::gate(GateKind::Measure, qubit).expect("single-qubit gate"));
    Kernel::new("calibration", Vec::new(), num_qubits, body).expect("qubit is within the register")
}

/// Estimates each qubit's confusion matrix from sampled runs of
/// `Measure q` and `X q; Measure q`.
pub fn calibrate(
    num_qubits: usize,
    config: &ExecutionConfig,
) -> Result<Calibration, MitigationError> {
    if config.shots < MIN_CALIBRATION_SHOTS {
        return Err(MitigationError::TooFewShots(config.shots));
    }
    let mut matrices = Vec::with_capacity(num_qubits);
    for q in 0..num_qubits {
        let mut m = [[0.0; 2]; 2];
        for truth in 0..2 {
            let kernel = calibration_kernel(q, num_qubits, truth == 1);
            let run = ExecutionConfig {
                seed: derive_seed(config.seed, (2 * q + truth) as u64),
                ..config.clone()
            };
            let (counts, _) = simulator::execute(&kernel, &run)?;
            let ones = counts.get("1").copied().unwrap_or(0) as f64;
            let p1 = ones / config.shots as f64;
            m[1][truth] = p1;
            m[0][truth] = 1.0 - p1;
        }
        matrices.push(ConfusionMatrix::new(m)?);
    }
    Ok(Calibration::new(matrices))
}

/// Calibration from exact outcome distributions of the same kernels.
pub fn calibrate_exact(
    num_qubits: usize,
    noise: Option<&ReadoutNoiseModel>,
) -> Result<Calibration, MitigationError> {
    let mut matrices = Vec::with_capacity(num_qubits);
    for q in 0..num_qubits {
        let mut m = [[0.0; 2]; 2];
        for truth in 0..2 {
            let kernel = calibration_kernel(q, num_qubits, truth == 1);
            let dist = simulator::exact_distribution(&kernel, noise)?;
            let p1 = dist.get("1").copied().unwrap_or(0.0);
            m[1][truth] = p1;
            m[0][truth] = 1.0 - p1;
        }
        matrices.push(ConfusionMatrix::new(m)?);
    }
    Ok(Calibration::new(matrices))
}
