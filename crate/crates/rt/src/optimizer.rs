//! Classical optimizers driving an objective.

use qcor_core::{
    nelder_mead, HeterogeneousMap, NelderMeadError, NelderMeadOptions, ResultBuffer, Value,
};

use crate::objective::ObjectiveFunction;
use crate::RuntimeError;

/// Best point found by an optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimumResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub trait Optimizer: Send {
    fn name(&self) -> String;

    /// Minimizes `objective`; every evaluation lands in `sink`.
    fn optimize(
        &mut self,
        objective: &mut dyn ObjectiveFunction,
        sink: &mut ResultBuffer,
    ) -> Result<OptimumResult, RuntimeError>;
}

/// Nelder-Mead simplex search.
///
/// Recognized options: `max-iterations` (integer evaluation budget),
/// `tolerance` (simplex value spread), `x-tolerance` (simplex size),
/// `initial-point` (list of reals) and `initial-step` (real).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NelderMead {
    pub options: NelderMeadOptions,
    pub initial_point: Option<Vec<f64>>,
}

const KNOWN_OPTIONS: [&str; 5] = [
    "max-iterations",
    "tolerance",
    "x-tolerance",
    "initial-point",
    "initial-step",
];

fn invalid(key: &str, reason: impl Into<String>) -> RuntimeError {
    RuntimeError::InvalidOption {
        key: key.into(),
        reason: reason.into(),
    }
}

impl NelderMead {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an optimizer from an option map, rejecting unknown keys,
    /// wrongly typed values and out-of-range settings.
    pub fn from_options(options: &HeterogeneousMap) -> Result<Self, RuntimeError> {
        if let Some(key) = options.keys().find(|k| !KNOWN_OPTIONS.contains(k)) {
            return Err(invalid(key, "unknown option"));
        }
        let mut nm = Self::new();
        if options.contains_key("max-iterations") {
            let n = options.get::<i64>("max-iterations")?;
            if n < 1 {
                return Err(invalid("max-iterations", "must be positive"));
            }
            nm.options.max_evaluations = n as usize;
        }
        for (key, slot) in [
            ("tolerance", &mut nm.options.ftol),
            ("x-tolerance", &mut nm.options.xtol),
        ] {
            if options.contains_key(key) {
                let v = options.get::<f64>(key)?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(key, "must be a finite non-negative real"));
                }
                *slot = v;
            }
        }
        if options.contains_key("initial-step") {
            let v = options.get::<f64>("initial-step")?;
            if !(v.is_finite() && v != 0.0) {
                return Err(invalid("initial-step", "must be finite and non-zero"));
            }
            nm.options.initial_step = v;
        }
        if options.contains_key("initial-point") {
            let x = options.get::<&[f64]>("initial-point")?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid("initial-point", "entries must be finite"));
            }
            nm.initial_point = Some(x.to_vec());
        }
        Ok(nm)
    }

    /// The options as a map, suitable for task metadata.
    pub fn to_options(&self) -> HeterogeneousMap {
        let mut m = HeterogeneousMap::new()
            .with("max-iterations", self.options.max_evaluations)
            .with("tolerance", self.options.ftol)
            .with("x-tolerance", self.options.xtol)
            .with("initial-step", self.options.initial_step);
        if let Some(x) = &self.initial_point {
            m.insert("initial-point", Value::RealList(x.clone()));
        }
        m
    }
}

impl Optimizer for NelderMead {
    fn name(&self) -> String {
        "nelder-mead".into()
    }

    fn optimize(
        &mut self,
        objective: &mut dyn ObjectiveFunction,
        sink: &mut ResultBuffer,
    ) -> Result<OptimumResult, RuntimeError> {
        let dims = objective.dimensions();
        let x0 = self
            .initial_point
            .clone()
            .unwrap_or_else(|| vec![0.0; dims]);
        let found = nelder_mead(
            |x: &[f64]| objective.evaluate(x, sink),
            dims,
            &x0,
            &self.options,
        )
        .map_err(|e| match e {
            NelderMeadError::Objective(inner) => inner,
            NelderMeadError::NonFinite { params, value } => {
                RuntimeError::NonFinite { params, value }
            }
            NelderMeadError::DimensionMismatch { expected, got } => {
                RuntimeError::ArityMismatch { expected, got }
            }
            NelderMeadError::NoDimensions => RuntimeError::InvalidSpec(
                "optimizer needs an objective with at least one parameter".into(),
            ),
            NelderMeadError::InvalidOption(reason) => invalid("nelder-mead", reason),
        })?;
        Ok(OptimumResult {
            params: found.params,
            value: found.value,
            evaluations: found.evaluations,
            converged: found.converged,
        })
    }
}

/// Looks an optimizer up by name.
pub fn create_optimizer(
    name: &str,
    options: &HeterogeneousMap,
) -> Result<Box<dyn Optimizer>, RuntimeError> {
    match name {
        "nelder-mead" => Ok(Box::new(NelderMead::from_options(options)?)),
        other => Err(RuntimeError::InvalidSpec(format!(
            "unknown optimizer {other:?}"
        ))),
    }
}
