//! Readout-error mitigation as an objective decorator.
//!
//! The decorator runs its inner objective, then revisits the evaluation
//! node the inner objective just published: every per-term node's outcome
//! distribution is pushed through the inverse confusion matrices and the
//! term expectations and total are recomputed from the result. Decorators
//! stack, each one starting from the latest mitigated distribution.

use qcor_core::mitigation::{calibrate, calibrate_exact};
use qcor_core::pauli::expectation_from_distribution;
use qcor_core::simulator::derive_seed;
use qcor_core::{
    Calibration, Complex64, ExecutionConfig, HeterogeneousMap, PauliObservable, PauliTerm,
    QuasiDistribution, ResultBuffer, Value,
};

use crate::backend::{distribution_value, Backend};
use crate::objective::{identity_offset, ObjectiveFunction};
use crate::RuntimeError;

/// Root metadata key for the calibration in use.
pub const CALIBRATION_KEY: &str = "readout-calibration";

const MITIGATED: &str = "mitigated-distribution";
const CALIBRATION_STREAM: u64 = 0xC0FF_EE00;

/// Estimates per-qubit confusion matrices on `backend`: exactly in exact
/// mode, otherwise by sampling with `backend.config.shots` shots.
pub fn calibrate_backend(
    num_qubits: usize,
    backend: &Backend,
) -> Result<Calibration, RuntimeError> {
    let cal = if backend.exact {
        calibrate_exact(num_qubits, backend.noise())?
    } else {
        let cfg = ExecutionConfig {
            seed: derive_seed(backend.config.seed, CALIBRATION_STREAM),
            ..backend.config.clone()
        };
        calibrate(num_qubits, &cfg)?
    };
    Ok(cal)
}

enum Source {
    Lazy { backend: Backend, num_qubits: usize },
    Ready,
}

/// Decorates an objective with readout-error mitigation.
pub struct MitigatedObjective<O> {
    inner: O,
    calibration: Option<Calibration>,
    source: Source,
}

impl<O: ObjectiveFunction> MitigatedObjective<O> {
    /// Calibrates `num_qubits` qubits on `backend` at the first evaluation.
    pub fn new(inner: O, backend: Backend, num_qubits: usize) -> Self {
        Self {
            inner,
            calibration: None,
            source: Source::Lazy {
                backend,
                num_qubits,
            },
        }
    }

    /// Uses a fixed calibration.
    pub fn with_calibration(inner: O, calibration: Calibration) -> Self {
        Self {
            inner,
            calibration: Some(calibration),
            source: Source::Ready,
        }
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    fn ensure_calibrated(&mut self, sink: &mut ResultBuffer) -> Result<&Calibration, RuntimeError> {
        if self.calibration.is_none() {
            let Source::Lazy {
                backend,
                num_qubits,
            } = &self.source
            else {
                unreachable!("fixed calibrations are set at construction");
            };
            self.calibration = Some(calibrate_backend(*num_qubits, backend)?);
        }
        let cal = self.calibration.as_ref().expect("set above");
        sink.metadata.insert(CALIBRATION_KEY, cal.to_value());
        Ok(cal)
    }
}

fn real_map(map: &HeterogeneousMap) -> Result<QuasiDistribution, RuntimeError> {
    map.iter()
        .map(|(k, v)| match v {
            Value::Real(p) => Ok((k.to_string(), *p)),
            _ => Err(RuntimeError::MalformedBuffer(format!(
                "real probability for {k:?}"
            ))),
        })
        .collect()
}

fn measured_qubits(md: &HeterogeneousMap) -> Result<Vec<usize>, RuntimeError> {
    md.get::<&[Value]>("measured-qubits")?
        .iter()
        .map(|v| match v {
            Value::Int(q) if *q >= 0 => Ok(*q as usize),
            _ => Err(RuntimeError::MalformedBuffer(
                "integer measured qubits".into(),
            )),
        })
        .collect()
}

fn term_of(md: &HeterogeneousMap) -> Result<PauliTerm, RuntimeError> {
    let text = md.get::<&str>("term")?;
    let coefficient = md.get::<Complex64>("coefficient")?;
    let parsed: PauliObservable = text.parse()?;
    let string = parsed
        .terms()
        .first()
        .ok_or_else(|| RuntimeError::MalformedBuffer(format!("term string {text:?}")))?
        .string()
        .clone();
    Ok(PauliTerm::new(coefficient, string)?)
}

/// Re-derives one evaluation node's value from mitigated distributions.
fn mitigate_evaluation(node: &mut ResultBuffer, cal: &Calibration) -> Result<f64, RuntimeError> {
    let mut value = identity_offset(node).re;
    for child in &mut node.children {
        let md = &child.metadata;
        let measured = measured_qubits(md)?;
        let term = term_of(md)?;
        let mitigated = if let Ok(prev) = md.get::<&HeterogeneousMap>(MITIGATED) {
            cal.mitigate_distribution(&real_map(prev)?, &measured)?
        } else if let Ok(probs) = md.get::<&HeterogeneousMap>("probabilities") {
            cal.mitigate_distribution(&real_map(probs)?, &measured)?
        } else {
            cal.mitigate_counts(&child.counts, &measured)?
        };
        let e = expectation_from_distribution(&term, &mitigated)?;
        let md = &mut child.metadata;
        if !md.contains_key("raw-expectation") {
            let raw = md.get::<f64>("expectation")?;
            md.insert("raw-expectation", raw);
        }
        md.insert("expectation", e);
        md.insert(MITIGATED, distribution_value(&mitigated));
        value += e;
    }
    let md = &mut node.metadata;
    if !md.contains_key("raw-value") {
        let raw = md.get::<f64>("value")?;
        md.insert("raw-value", raw);
    }
    md.insert("mitigated-value", value);
    md.insert("value", value);
    Ok(value)
}

impl<O: ObjectiveFunction> ObjectiveFunction for MitigatedObjective<O> {
    fn dimensions(&self) -> usize {
        self.inner.dimensions()
    }

    fn evaluate(&mut self, params: &[f64], sink: &mut ResultBuffer) -> Result<f64, RuntimeError> {
        self.ensure_calibrated(sink)?;
        let before = sink.children.len();
        self.inner.evaluate(params, sink)?;
        if sink.children.len() != before + 1 {
            return Err(RuntimeError::MalformedBuffer(
                "exactly one evaluation node from the inner objective".into(),
            ));
        }
        let cal = self.calibration.as_ref().expect("calibrated above");
        let node = sink.children.last_mut().expect("checked length");
        mitigate_evaluation(node, cal)
    }

    fn name(&self) -> String {
        format!("readout-mitigated({})", self.inner.name())
    }
}
