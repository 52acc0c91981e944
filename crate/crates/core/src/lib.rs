//! Pure algorithmic core for hybrid quantum-classical workflows.
//!
//! Everything in this crate is `no_std` (with `alloc`): operator algebras,
//! the kernel IR and its textual DSL, the statevector engine, readout
//! mitigation math, the Nelder-Mead minimizer, and the metadata containers
//! that the runtime fills in. Threads, clocks, files and JSON live in the
//! companion `qcor-rt` crate.

#![no_std]
#![forbid(unsafe_code)]
// Confusion matrices are indexed by (observed, true) in lockstep.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod buffer;
pub mod dense;
pub mod fermion;
pub mod hetmap;
pub mod kernel;
mod lex;
pub mod mitigation;
pub mod optimize;
pub mod pauli;
pub mod simulator;

pub use num_complex::Complex64;

pub use buffer::ResultBuffer;
pub use dense::DenseMatrix;
pub use fermion::{
    fermion_to_dense, jordan_wigner, parse_fermion, FermionError, FermionObservable, FermionTerm,
    LadderOp,
};
pub use hetmap::{HeterogeneousMap, MapError, Value, ValueKind};
pub use kernel::{GateKind, Instruction, Kernel, KernelError, ParamExpr};
pub use mitigation::{
    calibrate, calibrate_exact, Calibration, ConfusionMatrix, MitigationError, QuasiDistribution,
};
pub use optimize::{nelder_mead, Minimum, NelderMeadError, NelderMeadOptions};
pub use pauli::{
    expectation_from_counts, MeasuredTerms, PauliError, PauliObservable, PauliOp, PauliString,
    PauliTerm, DEFAULT_PRUNE_TOLERANCE,
};
pub use simulator::{
    derive_seed, exact_distribution, exact_expectation, execute, ExecutionConfig, ReadoutError,
    ReadoutNoiseModel, ShotCounts, SimError, StateVector, MAX_QUBITS,
};
