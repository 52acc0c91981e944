//! Dense statevector backend with seeded shot sampling and independent
//! per-qubit readout noise.
//!
//! Qubit `k` is bit `k` of a basis index. Result bitstrings list only the
//! measured qubits, ascending, with the lowest measured qubit as the
//! leftmost character.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hetmap::{HeterogeneousMap, Value};
use crate::kernel::{GateKind, Instruction, Kernel, ParamExpr};
use crate::mitigation::{Calibration, QuasiDistribution};
use crate::pauli::PauliObservable;

/// Largest register the dense backend accepts.
pub const MAX_QUBITS: usize = 24;

/// Name recorded in execution metadata under `generator`.
pub const GENERATOR: &str = "ChaCha8Rng";

const NORM_TOLERANCE: f64 = 1e-10;
const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Outcome bitstring to number of shots.
pub type ShotCounts = BTreeMap<String, u64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{qubits} qubits exceeds the simulator limit of {MAX_QUBITS}")]
    TooManyQubits { qubits: usize },
    #[error("amplitude vector of length {0} is not a power of two")]
    BadDimension(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("Measure cannot be applied as a unitary")]
    MeasureAsGate,
    #[error("kernel has free parameters")]
    Unbound,
    #[error("{gate} has an unbound angle")]
    UnboundAngle { gate: GateKind },
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("kernel has no Measure instruction")]
    NotMeasured,
    #[error("kernel is measured; expected an unmeasured kernel")]
    AlreadyMeasured,
    #[error("shots must be at least {min}, got {got}")]
    TooFewShots { min: u64, got: u64 },
    #[error("readout error probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("observable acts on {needed} qubits, kernel has {available}")]
    ObservableTooWide { needed: usize, available: usize },
    #[error("observable is not Hermitian: imaginary expectation {imag}")]
    NonHermitian { imag: f64 },
}

/// Readout flip probabilities for one qubit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReadoutError {
    /// P(read 1 | prepared 0).
    pub p01: f64,
    /// P(read 0 | prepared 1).
    pub p10: f64,
}

impl ReadoutError {
    pub fn new(p01: f64, p10: f64) -> Result<Self, SimError> {
        for p in [p01, p10] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidProbability(p));
            }
        }
        Ok(Self { p01, p10 })
    }
}

/// Independent per-qubit readout flips.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReadoutNoiseModel {
    per_qubit: Vec<ReadoutError>,
    default: ReadoutError,
}

impl ReadoutNoiseModel {
    /// Same error rates on every qubit.
    pub fn uniform(p01: f64, p10: f64) -> Result<Self, SimError> {
        Ok(Self {
            per_qubit: Vec::new(),
            default: ReadoutError::new(p01, p10)?,
        })
    }

    /// Explicit rates for qubits `0..errors.len()`; higher qubits are noiseless.
    pub fn per_qubit(errors: Vec<ReadoutError>) -> Self {
        Self {
            per_qubit: errors,
            default: ReadoutError::default(),
        }
    }

    pub fn for_qubit(&self, qubit: usize) -> ReadoutError {
        self.per_qubit.get(qubit).copied().unwrap_or(self.default)
    }
}

/// Shot count, seed and optional readout noise for one execution.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionConfig {
    pub shots: u64,
    pub seed: u64,
    pub noise: Option<ReadoutNoiseModel>,
}

impl ExecutionConfig {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            noise: None,
        }
    }

    pub fn with_noise(mut self, noise: ReadoutNoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.shots == 0 {
            return Err(SimError::TooFewShots { min: 1, got: 0 });
        }
        Ok(())
    }
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self::new(1024, 0)
    }
}

/// Deterministic per-stream seed derived from a base seed (splitmix64),
/// truncated to 63 bits so it fits a signed metadata integer.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) >> 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self, SimError> {
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits { qubits: num_qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::BadDimension(amps.len()));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits { qubits: num_qubits });
        }
        let s = Self { num_qubits, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), SimError> {
        if qubit >= self.num_qubits {
            return Err(SimError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_diag(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & mask == 0 { d0 } else { d1 };
        }
    }

    /// Applies one bound, non-measurement instruction.
    pub fn apply(&mut self, instr: &Instruction) -> Result<(), SimError> {
        for &q in instr.qubits() {
            self.check_qubit(q)?;
        }
        let angle = || match instr.param() {
            Some(ParamExpr::Literal(v)) => Ok(*v),
            _ => Err(SimError::UnboundAngle { gate: instr.kind() }),
        };
        let q = instr.qubits()[0];
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match instr.kind() {
            GateKind::X => self.apply_1q(q, [[zero, one], [one, zero]]),
            GateKind::Y => self.apply_1q(q, [[zero, -i], [i, zero]]),
            GateKind::Z => self.apply_diag(q, one, -one),
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(q, [[h, h], [h, -h]])
            }
            GateKind::S => self.apply_diag(q, one, i),
            GateKind::Sdg => self.apply_diag(q, one, -i),
            GateKind::T => self.apply_diag(q, one, Complex64::from_polar(1.0, FRAC_PI_4)),
            GateKind::Rx => {
                let t = angle()? / 2.0;
                let (c, s) = (libm::cos(t), libm::sin(t));
                let (c, ms) = (Complex64::new(c, 0.0), Complex64::new(0.0, -s));
                self.apply_1q(q, [[c, ms], [ms, c]])
            }
            GateKind::Ry => {
                let t = angle()? / 2.0;
                let (c, s) = (libm::cos(t), libm::sin(t));
                let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                self.apply_1q(q, [[c, -s], [s, c]])
            }
            GateKind::Rz => {
                let t = angle()? / 2.0;
                self.apply_diag(
                    q,
                    Complex64::from_polar(1.0, -t),
                    Complex64::from_polar(1.0, t),
                )
            }
            GateKind::CNOT => {
                let (control, target) = (1usize << q, 1usize << instr.qubits()[1]);
                for idx in 0..self.amps.len() {
                    if idx & control != 0 && idx & target == 0 {
                        self.amps.swap(idx, idx | target);
                    }
                }
            }
            GateKind::CZ => {
                let both = (1usize << q) | (1usize << instr.qubits()[1]);
                for (idx, a) in self.amps.iter_mut().enumerate() {
                    if idx & both == both {
                        *a = -*a;
                    }
                }
            }
            GateKind::Measure => return Err(SimError::MeasureAsGate),
        }
        Ok(())
    }

    /// Evolves `|0...0>` through every non-measurement instruction.
    pub fn prepare(kernel: &Kernel) -> Result<Self, SimError> {
        if !kernel.is_bound() {
            return Err(SimError::Unbound);
        }
        let mut s = Self::new(kernel.num_qubits())?;
        for instr in kernel.body() {
            if instr.kind() != GateKind::Measure {
                s.apply(instr)?;
            }
        }
        Ok(s)
    }

    /// Outcome probabilities over `qubits`; bit `i` of the returned index
    /// corresponds to `qubits[i]`.
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << qubits.len()];
        for (basis, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut idx = 0;
            for (pos, &q) in qubits.iter().enumerate() {
                idx |= ((basis >> q) & 1) << pos;
            }
            out[idx] += p;
        }
        out
    }

    /// `<psi| O |psi>` without building the dense matrix.
    pub fn expectation(&self, obs: &PauliObservable) -> Complex64 {
        let o_psi = obs.apply(&self.amps);
        self.amps
            .iter()
            .zip(&o_psi)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Bitstring for marginal index `idx` over `len` measured qubits.
pub fn bitstring(idx: usize, len: usize) -> String {
    (0..len)
        .map(|pos| if (idx >> pos) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_measured(kernel: &Kernel) -> Result<Vec<usize>, SimError> {
    if !kernel.is_bound() {
        return Err(SimError::Unbound);
    }
    let measured = kernel.measured_qubits();
    if measured.is_empty() {
        return Err(SimError::NotMeasured);
    }
    Ok(measured)
}

/// Samples `config.shots` outcomes of a bound, measured kernel.
///
/// The full marginal over the measured qubits is computed once and shots
/// are drawn from it; readout flips are then applied per qubit per shot.
/// Output is a pure function of `(kernel, config)`.
pub fn execute(
    kernel: &Kernel,
    config: &ExecutionConfig,
) -> Result<(ShotCounts, HeterogeneousMap), SimError> {
    config.validate()?;
    let measured = check_measured(kernel)?;
    let state = StateVector::prepare(kernel)?;
    let probs = state.marginal(&measured);

    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let last = probs.len() - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..config.shots {
        let u = rng.random::<f64>() * total;
        let mut idx = cdf.partition_point(|&c| c <= u).min(last);
        if let Some(noise) = &config.noise {
            for (pos, &q) in measured.iter().enumerate() {
                let e = noise.for_qubit(q);
                let p = if (idx >> pos) & 1 == 0 { e.p01 } else { e.p10 };
                if rng.random::<f64>() < p {
                    idx ^= 1 << pos;
                }
            }
        }
        tally[idx] += 1;
    }

    let counts: ShotCounts = tally
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(idx, &n)| (bitstring(idx, measured.len()), n))
        .collect();

    let metadata = HeterogeneousMap::new()
        .with("shots", config.shots)
        .with("seed", config.seed)
        .with(
            "measured-qubits",
            measured.iter().map(|&q| Value::from(q)).collect::<Vec<_>>(),
        )
        .with("generator", GENERATOR)
        .with("readout-noise", config.noise.is_some());
    Ok((counts, metadata))
}

/// Exact outcome distribution of a bound, measured kernel, with readout
/// noise applied analytically when given.
pub fn exact_distribution(
    kernel: &Kernel,
    noise: Option<&ReadoutNoiseModel>,
) -> Result<QuasiDistribution, SimError> {
    let measured = check_measured(kernel)?;
    let state = StateVector::prepare(kernel)?;
    let mut probs = state.marginal(&measured);
    if let Some(noise) = noise {
        Calibration::from_noise_model(noise, kernel.num_qubits())
            .apply_forward(&mut probs, &measured)
            .expect("noise model covers every qubit");
    }
    Ok(probs
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p != 0.0)
        .map(|(idx, p)| (bitstring(idx, measured.len()), p))
        .collect())
}

/// `<psi|O|psi>` for the state prepared by a bound, unmeasured kernel.
pub fn exact_expectation(kernel: &Kernel, obs: &PauliObservable) -> Result<f64, SimError> {
    if kernel.is_measured() {
        return Err(SimError::AlreadyMeasured);
    }
    if obs.num_qubits() > kernel.num_qubits() {
        return Err(SimError::ObservableTooWide {
            needed: obs.num_qubits(),
            available: kernel.num_qubits(),
        });
    }
    let state = StateVector::prepare(kernel)?;
    let v = state.expectation(obs);
    if v.im.abs() > HERMITIAN_TOLERANCE {
        return Err(SimError::NonHermitian { imag: v.im });
    }
    Ok(v.re)
}
