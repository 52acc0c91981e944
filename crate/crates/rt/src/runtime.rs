//! Asynchronous task launch and synchronization.
//!
//! `task_initiate` validates a [`TaskSpec`], resolves its defaults and
//! starts the task on a worker thread, returning a [`TaskHandle`] at once.
//! `sync` consumes the handle, blocks until the task finishes and hands
//! back the root [`ResultBuffer`] or the error the task hit.

use std::any::Any;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::thread::{self, JoinHandle};

use qcor_core::{ExecutionConfig, HeterogeneousMap, Kernel, PauliObservable, ResultBuffer};

use crate::backend::Backend;
use crate::mitigation::MitigatedObjective;
use crate::objective::{ObjectiveFunction, VqeObjective};
use crate::optimizer::Optimizer;
use crate::RuntimeError;

static NEXT_RUNTIME: AtomicU64 = AtomicU64::new(1);
static NEXT_TASK: AtomicU64 = AtomicU64::new(1);

/// Everything a task may be launched with. Absent parts take defaults.
#[derive(Default)]
pub struct TaskSpec {
    pub kernel: Option<Kernel>,
    pub observable: Option<PauliObservable>,
    pub objective: Option<Box<dyn ObjectiveFunction>>,
    pub optimizer: Option<Box<dyn Optimizer>>,
    pub params: Option<Vec<f64>>,
    pub config: ExecutionConfig,
    /// Exact expectations instead of sampled ones.
    pub exact: bool,
    /// Register width when neither a kernel nor an objective is given.
    pub width: Option<usize>,
    /// Run the per-term executions of each evaluation concurrently.
    pub parallel_bases: bool,
    /// Wrap the default objective in readout-error mitigation.
    pub mitigate: bool,
}

impl TaskSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn observable(mut self, observable: PauliObservable) -> Self {
        self.observable = Some(observable);
        self
    }

    pub fn objective(mut self, objective: impl ObjectiveFunction + 'static) -> Self {
        self.objective = Some(Box::new(objective));
        self
    }

    pub fn optimizer(mut self, optimizer: impl Optimizer + 'static) -> Self {
        self.optimizer = Some(Box::new(optimizer));
        self
    }

    pub fn params(mut self, params: Vec<f64>) -> Self {
        self.params = Some(params);
        self
    }

    pub fn config(mut self, config: ExecutionConfig) -> Self {
        self.config = config;
        self
    }

    pub fn exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    pub fn width(mut self, width: usize) -> Self {
        self.width = Some(width);
        self
    }

    pub fn parallel_bases(mut self, on: bool) -> Self {
        self.parallel_bases = on;
        self
    }

    pub fn mitigate(mut self, on: bool) -> Self {
        self.mitigate = on;
        self
    }
}

/// A validated task ready to run on a worker.
struct Task {
    objective: Box<dyn ObjectiveFunction>,
    optimizer: Option<Box<dyn Optimizer>>,
    params: Option<Vec<f64>>,
    metadata: HeterogeneousMap,
}

fn resolve(spec: TaskSpec) -> Result<Task, RuntimeError> {
    if !spec.exact {
        spec.config.validate()?;
    }
    let mut metadata = HeterogeneousMap::new();
    let objective: Box<dyn ObjectiveFunction> = match spec.objective {
        Some(obj) => {
            if spec.kernel.is_some() || spec.observable.is_some() {
                return Err(RuntimeError::InvalidSpec(
                    "give either an objective or a kernel/observable pair, not both".into(),
                ));
            }
            obj
        }
        None => {
            let backend = Backend {
                config: spec.config.clone(),
                exact: spec.exact,
            };
            let kernel = match spec.kernel {
                Some(k) => k,
                None => {
                    let width = spec
                        .width
                        .or_else(|| {
                            spec.observable
                                .as_ref()
                                .map(|o| o.num_qubits())
                                .filter(|&n| n > 0)
                        })
                        .ok_or_else(|| {
                            RuntimeError::InvalidSpec(
                                "without a kernel the register width must be given".into(),
                            )
                        })?;
                    Kernel::identity(width)?
                }
            };
            let observable = spec
                .observable
                .unwrap_or_else(|| PauliObservable::computational_basis(kernel.num_qubits()));
            metadata.insert("kernel", kernel.to_string());
            metadata.insert("observable", observable.to_string());
            metadata.insert("exact", backend.exact);
            if !backend.exact {
                metadata.insert("shots", backend.config.shots);
            }
            metadata.insert("seed", backend.config.seed);
            let width = kernel.num_qubits();
            let vqe = VqeObjective::new(observable, kernel, backend.clone())?
                .parallel(spec.parallel_bases);
            if spec.mitigate {
                Box::new(MitigatedObjective::new(vqe, backend, width))
            } else {
                Box::new(vqe)
            }
        }
    };
    if spec.mitigate && metadata.get::<&str>("kernel").is_err() {
        return Err(RuntimeError::InvalidSpec(
            "mitigation applies to the default objective; decorate custom objectives directly"
                .into(),
        ));
    }
    metadata.insert("objective", objective.name());
    let dims = objective.dimensions();
    match (&spec.optimizer, &spec.params) {
        (None, None) if dims > 0 => {
            return Err(RuntimeError::InvalidSpec(format!(
                "no optimizer: {dims} concrete parameters are required"
            )))
        }
        (None, Some(p)) if p.len() != dims => {
            return Err(RuntimeError::ArityMismatch {
                expected: dims,
                got: p.len(),
            })
        }
        (Some(_), _) if dims == 0 => {
            return Err(RuntimeError::InvalidSpec(
                "an optimizer needs an objective with at least one parameter".into(),
            ))
        }
        _ => {}
    }
    if let Some(opt) = &spec.optimizer {
        metadata.insert("optimizer", opt.name());
    }
    Ok(Task {
        objective,
        optimizer: spec.optimizer,
        params: spec.params,
        metadata,
    })
}

fn run(mut task: Task) -> Result<ResultBuffer, RuntimeError> {
    let mut root = ResultBuffer::with_metadata(task.metadata);
    match task.optimizer.as_mut() {
        Some(opt) => {
            let best = opt.optimize(task.objective.as_mut(), &mut root)?;
            let md = &mut root.metadata;
            md.insert("opt-value", best.value);
            md.insert("opt-params", best.params);
            md.insert("num-evaluations", best.evaluations);
            md.insert("converged", best.converged);
        }
        None => {
            let params = task.params.unwrap_or_default();
            let value = task.objective.evaluate(&params, &mut root)?;
            let md = &mut root.metadata;
            md.insert("value", value);
            md.insert("params", params);
            md.insert("num-evaluations", 1usize);
        }
    }
    Ok(root)
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".into()
    }
}

/// Claim on one in-flight task. Consumed by [`Runtime::sync`], so a task
/// cannot be synchronized twice; it may be sent to another thread.
#[derive(Debug)]
pub struct TaskHandle {
    runtime: u64,
    task: u64,
    join: JoinHandle<Result<ResultBuffer, RuntimeError>>,
}

impl TaskHandle {
    pub fn task_id(&self) -> u64 {
        self.task
    }

    pub fn runtime_id(&self) -> u64 {
        self.runtime
    }

    /// True once the task has stopped running.
    pub fn is_finished(&self) -> bool {
        self.join.is_finished()
    }
}

/// Launches tasks on worker threads and collects their results.
#[derive(Debug)]
pub struct Runtime {
    id: u64,
}

impl Runtime {
    pub fn new() -> Self {
        Self {
            id: NEXT_RUNTIME.fetch_add(1, Ordering::Relaxed),
        }
    }

    /// Process-wide runtime behind the free [`task_initiate`] and [`sync`].
    pub fn global() -> &'static Runtime {
        static GLOBAL: OnceLock<Runtime> = OnceLock::new();
        GLOBAL.get_or_init(Runtime::new)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Validates `spec` on the calling thread, then starts the task and
    /// returns without waiting for it.
    pub fn task_initiate(&self, spec: TaskSpec) -> Result<TaskHandle, RuntimeError> {
        let task = resolve(spec)?;
        let id = NEXT_TASK.fetch_add(1, Ordering::Relaxed);
        let join = thread::Builder::new()
            .name(format!("qcor-task-{id}"))
            .spawn(move || run(task))
            .map_err(|e| RuntimeError::InvalidSpec(format!("cannot start worker: {e}")))?;
        Ok(TaskHandle {
            runtime: self.id,
            task: id,
            join,
        })
    }

    /// Blocks until the task behind `handle` finishes.
    ///
    /// A handle from another runtime is rejected; the task it refers to is
    /// left running detached.
    pub fn sync(&self, handle: TaskHandle) -> Result<ResultBuffer, RuntimeError> {
        if handle.runtime != self.id {
            return Err(RuntimeError::ForeignHandle {
                handle_runtime: handle.runtime,
                runtime: self.id,
            });
        }
        let task = handle.task;
        handle.join.join().map_err(|p| RuntimeError::TaskPanicked {
            task,
            message: panic_message(p),
        })?
    }

    /// Runs a task to completion on the calling thread.
    pub fn run_blocking(&self, spec: TaskSpec) -> Result<ResultBuffer, RuntimeError> {
        run(resolve(spec)?)
    }
}

impl Default for Runtime {
    fn default() -> Self {
        Self::new()
    }
}

/// [`Runtime::task_initiate`] on the global runtime.
pub fn task_initiate(spec: TaskSpec) -> Result<TaskHandle, RuntimeError> {
    Runtime::global().task_initiate(spec)
}

/// [`Runtime::sync`] on the global runtime.
pub fn sync(handle: TaskHandle) -> Result<ResultBuffer, RuntimeError> {
    Runtime::global().sync(handle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;
    use crate::optimizer::NelderMead;

    fn ansatz() -> Kernel {
        "kernel ansatz(t) qubits 2 { X q0; Ry(t) q1; CNOT q1 q0; }"
            .parse()
            .unwrap()
    }

    fn xx() -> PauliObservable {
        "X0 X1".parse().unwrap()
    }

    #[test]
    fn all_defaults_measure_zero_state() {
        let h = task_initiate(TaskSpec::new().width(1)).unwrap();
        let root = sync(h).unwrap();
        assert_eq!(root.metadata.get::<f64>("value"), Ok(1.0));
        assert_eq!(root.children.len(), 1);
        assert_eq!(root.metadata.get::<&str>("observable"), Ok("Z0"));
    }

    #[test]
    fn all_defaults_without_width_are_rejected() {
        assert!(matches!(
            task_initiate(TaskSpec::new()),
            Err(RuntimeError::InvalidSpec(_))
        ));
    }

    #[test]
    fn single_evaluation_at_given_params() {
        let t = 0.4f64;
        let spec = TaskSpec::new()
            .kernel(ansatz())
            .observable(xx())
            .params(vec![t])
            .exact(true);
        let root = sync(task_initiate(spec).unwrap()).unwrap();
        let v = root.metadata.get::<f64>("value").unwrap();
        assert!((v - t.sin()).abs() < 1e-12, "{v}");
        assert_eq!(root.metadata.get::<&[f64]>("params"), Ok(&[t][..]));
        assert_eq!(root.metadata.get::<i64>("num-evaluations"), Ok(1));
    }

    #[test]
    fn optimizer_task_records_every_evaluation() {
        let spec = TaskSpec::new()
            .kernel(ansatz())
            .observable(xx())
            .optimizer(NelderMead::new())
            .exact(true);
        let root = sync(task_initiate(spec).unwrap()).unwrap();
        let n = root.metadata.get::<i64>("num-evaluations").unwrap();
        assert_eq!(root.children.len() as i64, n);
        assert!((root.metadata.get::<f64>("opt-value").unwrap() + 1.0).abs() < 1e-4);
        for (i, child) in root.children.iter().enumerate() {
            assert_eq!(child.metadata.get::<i64>("evaluation-index"), Ok(i as i64));
            assert_eq!(child.children.len(), 1);
        }
    }

    #[test]
    fn spec_validation_is_synchronous() {
        let missing = TaskSpec::new().kernel(ansatz()).observable(xx());
        assert!(matches!(
            task_initiate(missing),
            Err(RuntimeError::InvalidSpec(_))
        ));
        let arity = TaskSpec::new().kernel(ansatz()).params(vec![1.0, 2.0]);
        assert_eq!(
            task_initiate(arity).unwrap_err(),
            RuntimeError::ArityMismatch {
                expected: 1,
                got: 2
            }
        );
        let zero_shots = TaskSpec::new().width(1).config(ExecutionConfig::new(0, 0));
        assert!(task_initiate(zero_shots).is_err());
        let both = TaskSpec::new()
            .kernel(ansatz())
            .objective(FnObjective::new(1, |_: &[f64]| Ok(0.0)))
            .params(vec![0.0]);
        assert!(task_initiate(both).is_err());
    }

    #[test]
    fn task_errors_surface_at_sync() {
        let spec = TaskSpec::new()
            .objective(FnObjective::new(1, |_: &[f64]| {
                Err(RuntimeError::Objective("device offline".into()))
            }))
            .params(vec![0.0]);
        let h = task_initiate(spec).unwrap();
        assert_eq!(
            sync(h),
            Err(RuntimeError::Objective("device offline".into()))
        );

        let panicking = TaskSpec::new().objective(FnObjective::new(
            0,
            |_: &[f64]| -> Result<f64, RuntimeError> { panic!("boom") },
        ));
        let err = sync(task_initiate(panicking).unwrap()).unwrap_err();
        assert!(matches!(err, RuntimeError::TaskPanicked { ref message, .. } if message == "boom"));
    }

    #[test]
    fn foreign_handles_are_rejected() {
        let a = Runtime::new();
        let b = Runtime::new();
        let h = a.task_initiate(TaskSpec::new().width(1)).unwrap();
        assert!(matches!(b.sync(h), Err(RuntimeError::ForeignHandle { .. })));
    }

    #[test]
    fn handles_sync_in_any_order_and_on_any_thread() {
        let rt = Runtime::new();
        let spec = |t: f64| {
            TaskSpec::new()
                .kernel(ansatz())
                .observable(xx())
                .params(vec![t])
                .exact(true)
        };
        let h1 = rt.task_initiate(spec(0.1)).unwrap();
        let h2 = rt.task_initiate(spec(0.2)).unwrap();
        let r2 = thread::scope(|s| s.spawn(|| rt.sync(h2)).join().unwrap()).unwrap();
        let r1 = rt.sync(h1).unwrap();
        assert!((r1.metadata.get::<f64>("value").unwrap() - 0.1f64.sin()).abs() < 1e-12);
        assert!((r2.metadata.get::<f64>("value").unwrap() - 0.2f64.sin()).abs() < 1e-12);
    }
}
