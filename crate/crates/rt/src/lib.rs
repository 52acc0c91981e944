//! Host-side runtime for hybrid quantum-classical workflows.
//!
//! Tasks pair a parameterized kernel and an observable with an objective
//! and optionally an optimizer. [`task_initiate`] starts one on a worker
//! thread and returns a [`TaskHandle`] right away; [`sync`] waits for it
//! and yields the task's [`ResultBuffer`](qcor_core::ResultBuffer) tree.
//!
//! ```
//! use qcor_rt::{sync, task_initiate, NelderMead, TaskSpec};
//!
//! let kernel = "kernel ansatz(t) qubits 2 { X q0; Ry(t) q1; CNOT q1 q0; }".parse().unwrap();
//! let spec = TaskSpec::new()
//!     .kernel(kernel)
//!     .observable("X0 X1".parse().unwrap())
//!     .optimizer(NelderMead::new())
//!     .exact(true);
//! let root = sync(task_initiate(spec).unwrap()).unwrap();
//! let best: f64 = root.metadata.get("opt-value").unwrap();
//! assert!((best + 1.0).abs() < 1e-4);
//! ```

pub mod backend;
pub mod cli;
mod error;
pub mod json;
pub mod mitigation;
pub mod objective;
pub mod optimizer;
pub mod runtime;

pub use backend::{Backend, Execution, WALL_TIME};
pub use error::RuntimeError;
pub use json::{buffer_to_json, to_json_string, validate_result_buffer, JsonOptions};
pub use mitigation::{calibrate_backend, MitigatedObjective, CALIBRATION_KEY};
pub use objective::{default_objective_evaluate, FnObjective, ObjectiveFunction, VqeObjective};
pub use optimizer::{create_optimizer, NelderMead, Optimizer, OptimumResult};
pub use runtime::{sync, task_initiate, Runtime, TaskHandle, TaskSpec};
