//! The simulator seen as a quantum co-processor: one call per measured
//! kernel, each producing a result node.

use std::time::Instant;

use qcor_core::{
    exact_distribution, execute, ExecutionConfig, HeterogeneousMap, Kernel, QuasiDistribution,
    ReadoutNoiseModel, ResultBuffer, Value,
};

use crate::RuntimeError;

/// Metadata key holding elapsed seconds; dropped when reproducible output
/// is wanted.
pub const WALL_TIME: &str = "wall-time";

/// How a backend turns a measured kernel into outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct Backend {
    pub config: ExecutionConfig,
    /// Skip sampling and report the exact outcome distribution.
    pub exact: bool,
}

/// Result node plus the distribution expectations should be read from.
#[derive(Clone, Debug)]
pub struct Execution {
    pub buffer: ResultBuffer,
    /// Present in exact mode; sampled runs carry counts instead.
    pub distribution: Option<QuasiDistribution>,
}

pub(crate) fn distribution_value(d: &QuasiDistribution) -> Value {
    Value::Map(d.iter().map(|(k, v)| (k.clone(), *v)).collect())
}

impl Backend {
    pub fn sampled(config: ExecutionConfig) -> Self {
        Self {
            config,
            exact: false,
        }
    }

    pub fn exact(noise: Option<ReadoutNoiseModel>) -> Self {
        Self {
            config: ExecutionConfig {
                noise,
                ..ExecutionConfig::default()
            },
            exact: true,
        }
    }

    pub fn noise(&self) -> Option<&ReadoutNoiseModel> {
        self.config.noise.as_ref()
    }

    /// Runs one bound, measured kernel under `seed`.
    pub fn run(&self, kernel: &Kernel, seed: u64) -> Result<Execution, RuntimeError> {
        let start = Instant::now();
        let (mut buffer, distribution) = if self.exact {
            let dist = exact_distribution(kernel, self.noise())?;
            let measured: Vec<Value> = kernel
                .measured_qubits()
                .into_iter()
                .map(Value::from)
                .collect();
            let metadata = HeterogeneousMap::new()
                .with("exact", true)
                .with("measured-qubits", measured)
                .with("readout-noise", self.config.noise.is_some())
                .with("probabilities", distribution_value(&dist));
            (ResultBuffer::with_metadata(metadata), Some(dist))
        } else {
            let cfg = ExecutionConfig {
                seed,
                ..self.config.clone()
            };
            let (counts, metadata) = execute(kernel, &cfg)?;
            let mut buffer = ResultBuffer::with_metadata(metadata);
            buffer.counts = counts;
            (buffer, None)
        };
        buffer
            .metadata
            .insert(WALL_TIME, start.elapsed().as_secs_f64());
        Ok(Execution {
            buffer,
            distribution,
        })
    }
}

impl Default for Backend {
    fn default() -> Self {
        Self::sampled(ExecutionConfig::default())
    }
}
