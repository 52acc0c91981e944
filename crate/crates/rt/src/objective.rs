//! Parameterized scalar functions whose evaluations publish into a task's
//! result tree.

use std::thread;

use qcor_core::pauli::expectation_from_distribution;
use qcor_core::simulator::derive_seed;
use qcor_core::{
    expectation_from_counts, Complex64, HeterogeneousMap, Kernel, PauliObservable, PauliTerm,
    ResultBuffer,
};

use crate::backend::{Backend, Execution};
use crate::RuntimeError;

const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// A parameterized scalar function.
///
/// Each call to [`evaluate`](ObjectiveFunction::evaluate) appends exactly
/// one evaluation node to `sink.children`. Quantum-backed objectives hang
/// one child per executed kernel under that node.
pub trait ObjectiveFunction: Send {
    fn dimensions(&self) -> usize;

    fn evaluate(&mut self, params: &[f64], sink: &mut ResultBuffer) -> Result<f64, RuntimeError>;

    /// Short label recorded in task metadata.
    fn name(&self) -> String {
        "objective".into()
    }
}

impl<T: ObjectiveFunction + ?Sized> ObjectiveFunction for Box<T> {
    fn dimensions(&self) -> usize {
        (**self).dimensions()
    }

    fn evaluate(&mut self, params: &[f64], sink: &mut ResultBuffer) -> Result<f64, RuntimeError> {
        (**self).evaluate(params, sink)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

fn check_arity(expected: usize, params: &[f64]) -> Result<(), RuntimeError> {
    if params.len() != expected {
        return Err(RuntimeError::ArityMismatch {
            expected,
            got: params.len(),
        });
    }
    Ok(())
}

/// Expectation value of an observable in the state a kernel prepares.
///
/// Every evaluation binds the parameters, measures each non-identity term
/// in its own basis and adds the identity terms analytically.
#[derive(Clone, Debug)]
pub struct VqeObjective {
    observable: PauliObservable,
    kernel: Kernel,
    backend: Backend,
    parallel: bool,
    evaluations: u64,
}

impl VqeObjective {
    pub fn new(
        observable: PauliObservable,
        kernel: Kernel,
        backend: Backend,
    ) -> Result<Self, RuntimeError> {
        if kernel.is_measured() {
            return Err(RuntimeError::InvalidSpec(
                "objective kernel must not contain Measure".into(),
            ));
        }
        if observable.num_qubits() > kernel.num_qubits() {
            return Err(qcor_core::PauliError::TooFewQubits {
                needed: observable.num_qubits(),
                available: kernel.num_qubits(),
            }
            .into());
        }
        if !observable.is_hermitian(HERMITIAN_TOLERANCE) {
            return Err(RuntimeError::NonHermitian);
        }
        Ok(Self {
            observable,
            kernel,
            backend,
            parallel: false,
            evaluations: 0,
        })
    }

    /// Runs the per-term executions of one evaluation on separate threads.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn observable(&self) -> &PauliObservable {
        &self.observable
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    fn run_term(
        backend: &Backend,
        term: &PauliTerm,
        kernel: &Kernel,
        seed: u64,
    ) -> Result<(ResultBuffer, f64), RuntimeError> {
        let Execution {
            mut buffer,
            distribution,
        } = backend.run(kernel, seed)?;
        let value = match &distribution {
            Some(d) => expectation_from_distribution(term, d)?,
            None => expectation_from_counts(term, &buffer.counts)?,
        };
        let md = &mut buffer.metadata;
        md.insert("term", term.string().to_string());
        md.insert("coefficient", term.coefficient());
        md.insert("expectation", value);
        Ok((buffer, value))
    }
}

impl ObjectiveFunction for VqeObjective {
    fn dimensions(&self) -> usize {
        self.kernel.num_params()
    }

    fn evaluate(&mut self, params: &[f64], sink: &mut ResultBuffer) -> Result<f64, RuntimeError> {
        check_arity(self.dimensions(), params)?;
        let bound = self.kernel.bind(params)?;
        let plan = self.observable.observe(&bound)?;
        let index = self.evaluations;
        self.evaluations += 1;
        let eval_seed = derive_seed(self.backend.config.seed, index);
        let seeds: Vec<u64> = (0..plan.circuits.len() as u64)
            .map(|i| derive_seed(eval_seed, i))
            .collect();

        let results: Vec<Result<(ResultBuffer, f64), RuntimeError>> = if self.parallel {
            let backend = &self.backend;
            thread::scope(|s| {
                let workers: Vec<_> = plan
                    .circuits
                    .iter()
                    .zip(&seeds)
                    .map(|((term, k), &seed)| {
                        s.spawn(move || Self::run_term(backend, term, k, seed))
                    })
                    .collect();
                workers
                    .into_iter()
                    .map(|w| w.join().expect("term execution panicked"))
                    .collect()
            })
        } else {
            plan.circuits
                .iter()
                .zip(&seeds)
                .map(|((term, k), &seed)| Self::run_term(&self.backend, term, k, seed))
                .collect()
        };

        let mut node = ResultBuffer::with_metadata(
            HeterogeneousMap::new()
                .with("evaluation-index", index)
                .with("params", params.to_vec())
                .with("identity-offset", plan.identity_offset),
        );
        let mut value = plan.identity_offset.re;
        for (i, r) in results.into_iter().enumerate() {
            let (mut child, v) = r?;
            child.metadata.insert("params", params.to_vec());
            child.metadata.insert("term-index", i);
            value += v;
            node.push_child(child);
        }
        node.metadata.insert("value", value);
        sink.push_child(node);
        Ok(value)
    }

    fn name(&self) -> String {
        "vqe".into()
    }
}

/// Evaluates `observable` on `kernel` at `params` once, appending the
/// evaluation node to `sink`.
pub fn default_objective_evaluate(
    observable: &PauliObservable,
    kernel: &Kernel,
    params: &[f64],
    backend: &Backend,
    sink: &mut ResultBuffer,
) -> Result<f64, RuntimeError> {
    VqeObjective::new(observable.clone(), kernel.clone(), backend.clone())?.evaluate(params, sink)
}

/// Wraps a plain closure as an objective; useful for classical test
/// functions and for instrumenting tasks.
pub struct FnObjective<F> {
    dimensions: usize,
    f: F,
    evaluations: u64,
}

impl<F> FnObjective<F>
where
    F: FnMut(&[f64]) -> Result<f64, RuntimeError> + Send,
{
    pub fn new(dimensions: usize, f: F) -> Self {
        Self {
            dimensions,
            f,
            evaluations: 0,
        }
    }
}

impl<F> ObjectiveFunction for FnObjective<F>
where
    F: FnMut(&[f64]) -> Result<f64, RuntimeError> + Send,
{
    fn dimensions(&self) -> usize {
        self.dimensions
    }

    fn evaluate(&mut self, params: &[f64], sink: &mut ResultBuffer) -> Result<f64, RuntimeError> {
        check_arity(self.dimensions, params)?;
        let value = (self.f)(params)?;
        sink.push_child(ResultBuffer::with_metadata(
            HeterogeneousMap::new()
                .with("evaluation-index", self.evaluations)
                .with("params", params.to_vec())
                .with("value", value),
        ));
        self.evaluations += 1;
        Ok(value)
    }

    fn name(&self) -> String {
        "function".into()
    }
}

/// Identity offset stored on an evaluation node.
pub(crate) fn identity_offset(node: &ResultBuffer) -> Complex64 {
    node.metadata
        .get::<Complex64>("identity-offset")
        .unwrap_or_default()
}
