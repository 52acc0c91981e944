use qcor_core::{FermionError, KernelError, MapError, MitigationError, PauliError, SimError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Fermion(#[from] FermionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mitigation(#[from] MitigationError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("invalid task: {0}")]
    InvalidSpec(String),
    #[error("invalid optimizer option {key:?}: {reason}")]
    InvalidOption { key: String, reason: String },
    #[error("objective expects {expected} parameters, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("observable is not Hermitian")]
    NonHermitian,
    #[error("objective returned non-finite value {value} at {params:?}")]
    NonFinite { params: Vec<f64>, value: f64 },
    #[error("objective failed: {0}")]
    Objective(String),
    #[error("buffer is missing {0}")]
    MalformedBuffer(String),
    #[error("handle belongs to runtime {handle_runtime}, not {runtime}")]
    ForeignHandle { handle_runtime: u64, runtime: u64 },
    #[error("task {task} panicked: {message}")]
    TaskPanicked { task: u64, message: String },
}
