//! Quantum kernel IR and its textual form.
//!
//! A kernel is a named, parameterized list of instructions over a fixed
//! register. Construction always validates, so every [`Kernel`] value obeys
//! its invariants: qubits in range, rotation angles present, named angles
//! declared, and nothing after a measurement on the same qubit.
//!
//! ```text
//! kernel ansatz(t) qubits 2 {
//!   X q0;
//!   Ry(t) q1;
//!   CNOT q1 q0;
//! }
//! ```

mod parse;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::pauli::{PauliOp, PauliString};

pub use parse::parse_kernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: {source}")]
    At {
        line: usize,
        col: usize,
        source: Box<KernelError>,
    },
    #[error("kernel must have at least one qubit")]
    NoQubits,
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit kernel")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("{gate} expects {expected} qubit(s), got {got}")]
    WrongQubitCount {
        gate: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{gate} applied twice to qubit {qubit}")]
    RepeatedQubit { gate: GateKind, qubit: usize },
    #[error("{0} requires an angle")]
    MissingAngle(GateKind),
    #[error("{0} takes no angle")]
    UnexpectedAngle(GateKind),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("parameter {0:?} declared twice")]
    DuplicateParameter(String),
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),
    #[error("non-finite angle literal")]
    NonFiniteAngle,
    #[error("{gate} on qubit {qubit} after it was measured")]
    GateAfterMeasure { gate: GateKind, qubit: usize },
    #[error("expected {expected} parameter value(s), got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("non-finite value for parameter {0:?}")]
    NonFiniteValue(String),
    #[error("kernel has free parameters; bind it first")]
    Unbound,
    #[error("kernel is already measured")]
    AlreadyMeasured,
}

/// Supported gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Rx,
    Ry,
    Rz,
    CNOT,
    CZ,
    Measure,
}

impl GateKind {
    pub const ALL: [GateKind; 13] = [
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
        GateKind::CNOT,
        GateKind::CZ,
        GateKind::Measure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::T => "T",
            GateKind::Rx => "Rx",
            GateKind::Ry => "Ry",
            GateKind::Rz => "Rz",
            GateKind::CNOT => "CNOT",
            GateKind::CZ => "CZ",
            GateKind::Measure => "Measure",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|g| g.name() == name)
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::CZ => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rotation angle: a literal in radians or a kernel parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamExpr {
    Literal(f64),
    Named(String),
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // 17 significant digits round-trip every f64
            ParamExpr::Literal(v) => write!(f, "{v:.16e}"),
            ParamExpr::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    kind: GateKind,
    qubits: Vec<usize>,
    param: Option<ParamExpr>,
}

impl Instruction {
    pub fn new(
        kind: GateKind,
        qubits: Vec<usize>,
        param: Option<ParamExpr>,
    ) -> Result<Self, KernelError> {
        if qubits.len() != kind.num_qubits() {
            return Err(KernelError::WrongQubitCount {
                gate: kind,
                expected: kind.num_qubits(),
                got: qubits.len(),
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(KernelError::RepeatedQubit {
                gate: kind,
                qubit: qubits[0],
            });
        }
        match (&param, kind.is_rotation()) {
            (None, true) => return Err(KernelError::MissingAngle(kind)),
            (Some(_), false) => return Err(KernelError::UnexpectedAngle(kind)),
            (Some(ParamExpr::Literal(v)), true) if !v.is_finite() => {
                return Err(KernelError::NonFiniteAngle)
            }
            (Some(ParamExpr::Named(n)), true) if !is_identifier(n) => {
                return Err(KernelError::InvalidIdentifier(n.clone()))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            qubits,
            param,
        })
    }

    pub fn gate(kind: GateKind, qubit: usize) -> Result<Self, KernelError> {
        Self::new(kind, vec![qubit], None)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn param(&self) -> Option<&ParamExpr> {
        self.param.as_ref()
    }

    /// The literal angle, if this is a bound rotation.
    pub fn angle(&self) -> Option<f64> {
        match self.param {
            Some(ParamExpr::Literal(v)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(p) = &self.param {
            write!(f, "({p})")?;
        }
        for q in &self.qubits {
            write!(f, " q{q}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Validated parameterized circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    name: String,
    params: Vec<String>,
    num_qubits: usize,
    body: Vec<Instruction>,
}

impl Kernel {
    pub fn new(
        name: impl Into<String>,
        params: Vec<String>,
        num_qubits: usize,
        body: Vec<Instruction>,
    ) -> Result<Self, KernelError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(KernelError::InvalidIdentifier(name));
        }
        let mut k = Self {
            name,
            params: Vec::with_capacity(params.len()),
            num_qubits,
            body: Vec::with_capacity(body.len()),
        };
        for p in params {
            k.declare_param(p)?;
        }
        if num_qubits == 0 {
            return Err(KernelError::NoQubits);
        }
        let mut measured = BTreeSet::new();
        for instr in body {
            k.push_checked(instr, &mut measured)?;
        }
        Ok(k)
    }

    /// `n`-qubit kernel with an empty body, mapping |0...0> to itself.
    pub fn identity(num_qubits: usize) -> Result<Self, KernelError> {
        Self::new("identity", vec![], num_qubits, vec![])
    }

    fn declare_param(&mut self, p: String) -> Result<(), KernelError> {
        if !is_identifier(&p) {
            return Err(KernelError::InvalidIdentifier(p));
        }
        if self.params.contains(&p) {
            return Err(KernelError::DuplicateParameter(p));
        }
        self.params.push(p);
        Ok(())
    }

    fn push_checked(
        &mut self,
        instr: Instruction,
        measured: &mut BTreeSet<usize>,
    ) -> Result<(), KernelError> {
        for &q in &instr.qubits {
            if q >= self.num_qubits {
                return Err(KernelError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if measured.contains(&q) {
                return Err(KernelError::GateAfterMeasure {
                    gate: instr.kind,
                    qubit: q,
                });
            }
        }
        if let Some(ParamExpr::Named(n)) = &instr.param {
            if !self.params.contains(n) {
                return Err(KernelError::UnknownParameter(n.clone()));
            }
        }
        if instr.kind == GateKind::Measure {
            measured.insert(instr.qubits[0]);
        }
        self.body.push(instr);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// Number of free parameters still to be bound.
    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn body(&self) -> &[Instruction] {
        &self.body
    }

    pub fn is_bound(&self) -> bool {
        self.params.is_empty()
    }

    pub fn is_measured(&self) -> bool {
        self.body.iter().any(|i| i.kind == GateKind::Measure)
    }

    /// Measured qubits in ascending order; this is the bitstring layout.
    pub fn measured_qubits(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .body
            .iter()
            .filter(|i| i.kind == GateKind::Measure)
            .map(|i| i.qubits[0])
            .collect();
        set.into_iter().collect()
    }

    /// Substitutes `values` (in declaration order) for every named angle.
    pub fn bind(&self, values: &[f64]) -> Result<Kernel, KernelError> {
        if values.len() != self.params.len() {
            return Err(KernelError::ArityMismatch {
                expected: self.params.len(),
                got: values.len(),
            });
        }
        if let Some((name, _)) = self.params.iter().zip(values).find(|(_, v)| !v.is_finite()) {
            return Err(KernelError::NonFiniteValue(name.clone()));
        }
        let body = self
            .body
            .iter()
            .map(|instr| {
                let param = match &instr.param {
                    Some(ParamExpr::Named(n)) => {
                        let idx = self.params.iter().position(|p| p == n).unwrap();
                        Some(ParamExpr::Literal(values[idx]))
                    }
                    other => other.clone(),
                };
                Instruction {
                    kind: instr.kind,
                    qubits: instr.qubits.clone(),
                    param,
                }
            })
            .collect();
        Ok(Kernel {
            name: self.name.clone(),
            params: Vec::new(),
            num_qubits: self.num_qubits,
            body,
        })
    }

    /// Rotates each qubit of `string` into the Z basis and measures it.
    ///
    /// Basis changes come first (H for X, Sdg then H for Y), followed by
    /// one Measure per qubit, all in ascending qubit order.
    pub fn append_measurement_basis(&self, string: &PauliString) -> Result<Kernel, KernelError> {
        if !self.is_bound() {
            return Err(KernelError::Unbound);
        }
        if self.is_measured() {
            return Err(KernelError::AlreadyMeasured);
        }
        let mut out = self.clone();
        let mut measured = BTreeSet::new();
        for (q, op) in string.iter() {
            match op {
                PauliOp::X => {
                    out.push_checked(Instruction::gate(GateKind::H, q)?, &mut measured)?
                }
                PauliOp::Y => {
                    out.push_checked(Instruction::gate(GateKind::Sdg, q)?, &mut measured)?;
                    out.push_checked(Instruction::gate(GateKind::H, q)?, &mut measured)?;
                }
                PauliOp::Z | PauliOp::I => {}
            }
        }
        for q in string.support() {
            out.push_checked(Instruction::gate(GateKind::Measure, q)?, &mut measured)?;
        }
        Ok(out)
    }

    /// Appends `Measure` on every qubit not measured yet.
    pub fn measure_all(&self) -> Result<Kernel, KernelError> {
        let already = self.measured_qubits();
        let mut out = self.clone();
        let mut measured: BTreeSet<usize> = already.iter().copied().collect();
        for q in 0..self.num_qubits {
            if !already.contains(&q) {
                out.push_checked(Instruction::gate(GateKind::Measure, q)?, &mut measured)?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kernel {}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(p)?;
        }
        writeln!(f, ") qubits {} {{", self.num_qubits)?;
        for instr in &self.body {
            writeln!(f, "  {instr};")?;
        }
        f.write_str("}")
    }
}

impl FromStr for Kernel {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, KernelError> {
        parse_kernel(s)
    }
}
