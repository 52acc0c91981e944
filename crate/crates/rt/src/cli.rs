//! `qcor-rt` command line.
//!
//! Exit status: 0 on success, 1 when a task fails while running, 2 for
//! usage, parse and configuration errors. JSON goes to stdout (or
//! `--output`), a one-line human summary to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qcor_core::simulator::derive_seed;
use qcor_core::{
    execute, jordan_wigner, parse_fermion, ExecutionConfig, HeterogeneousMap, Kernel,
    PauliObservable, ReadoutNoiseModel, ResultBuffer,
};

use crate::json::{to_json_string, JsonOptions};
use crate::optimizer::create_optimizer;
use crate::runtime::{Runtime, TaskSpec};
use crate::RuntimeError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qcor-rt",
    version,
    about = "Hybrid quantum-classical task runtime"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize an observable's expectation over a kernel's parameters.
    Vqe(VqeArgs),
    /// Evaluate the expectation at given parameters, or along a sweep.
    Evaluate(EvaluateArgs),
    /// Map a fermionic observable to Pauli form (Jordan-Wigner).
    Transform {
        /// Fermion string, e.g. "0^ 1 + 1^ 0".
        fermion: String,
    },
    /// Sample a measured kernel and print its counts.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Execution {
    /// Shots per measured kernel.
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    /// Base seed for all sampling.
    #[arg(long, env = "QCOR_RT_SEED", default_value_t = 0)]
    seed: u64,
    /// Probability that a 0 is read as 1.
    #[arg(long, default_value_t = 0.0)]
    p01: f64,
    /// Probability that a 1 is read as 0.
    #[arg(long, default_value_t = 0.0)]
    p10: f64,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Keep wall-time entries in the JSON.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
#[group(id = "obs", required = true, multiple = false, args = ["observable", "observable_file"])]
struct TaskArgs {
    /// Kernel source file.
    #[arg(long)]
    kernel: PathBuf,
    /// Observable, e.g. "X0 X1 + Z0 Z1".
    #[arg(long)]
    observable: Option<String>,
    /// File holding the observable.
    #[arg(long)]
    observable_file: Option<PathBuf>,
    /// Exact expectations instead of sampling.
    #[arg(long)]
    exact: bool,
    /// Apply readout-error mitigation.
    #[arg(long)]
    mitigate: bool,
    /// Execute the measurement bases of each evaluation concurrently.
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    exec: Execution,
}

#[derive(Debug, Args)]
struct VqeArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Optimizer name.
    #[arg(long, default_value = "nelder-mead")]
    optimizer: String,
    /// Objective evaluation budget.
    #[arg(long)]
    max_iterations: Option<i64>,
    /// Stop when the simplex values agree to this.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Starting parameters (zeros by default).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    initial_point: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
#[group(id = "point", required = true, multiple = false, args = ["params", "sweep"])]
struct EvaluateArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Parameter values; pass the flag with no values for a parameterless kernel.
    #[arg(long, num_args = 0.., allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    /// START:STOP:COUNT grid for a one-parameter kernel.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Kernel source file; must contain Measure.
    #[arg(long)]
    kernel: PathBuf,
    /// Values for the kernel parameters.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    bind: Option<Vec<f64>>,
    #[command(flatten)]
    exec: Execution,
}

/// A failure and the exit status it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(e: RuntimeError) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

impl From<RuntimeError> for Failure {
    /// Errors raised before a task starts are configuration errors.
    fn from(e: RuntimeError) -> Self {
        Self::usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let outcome = match cli.command {
        Command::Vqe(a) => vqe(a, stdout, stderr),
        Command::Evaluate(a) => evaluate(a, stdout, stderr),
        Command::Transform { fermion } => transform(&fermion, stdout),
        Command::Simulate(a) => simulate(a, stdout, stderr),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_kernel(path: &Path) -> Result<Kernel, Failure> {
    read(path, "kernel file")?
        .parse()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_observable(a: &TaskArgs) -> Result<PauliObservable, Failure> {
    let (text, origin) = match (&a.observable, &a.observable_file) {
        (Some(s), _) => (s.clone(), "--observable".to_string()),
        (None, Some(p)) => (read(p, "observable file")?, p.display().to_string()),
        (None, None) => unreachable!("clap requires one observable source"),
    };
    text.trim()
        .parse()
        .map_err(|e| Failure::usage(format!("{origin}: {e}")))
}

impl Execution {
    fn config(&self) -> Result<ExecutionConfig, Failure> {
        let mut cfg = ExecutionConfig::new(self.shots, self.seed);
        if self.p01 != 0.0 || self.p10 != 0.0 {
            let noise = ReadoutNoiseModel::uniform(self.p01, self.p10)
                .map_err(|e| Failure::usage(e.to_string()))?;
            cfg = cfg.with_noise(noise);
        }
        Ok(cfg)
    }

    fn emit(&self, buffer: &ResultBuffer, stdout: &mut dyn Write) -> Outcome {
        let text = to_json_string(
            buffer,
            JsonOptions {
                timing: self.timing,
            },
        );
        match &self.output {
            Some(path) => fs::write(path, text).map_err(|e| Failure {
                code: EXIT_RUNTIME,
                message: format!("cannot write {}: {e}", path.display()),
            }),
            None => stdout.write_all(text.as_bytes()).map_err(|e| Failure {
                code: EXIT_RUNTIME,
                message: format!("cannot write output: {e}"),
            }),
        }
    }
}

impl TaskArgs {
    fn spec(&self) -> Result<TaskSpec, Failure> {
        let config = self.exec.config()?;
        if !self.exact && config.shots == 0 {
            return Err(Failure::usage("--shots must be at least 1 unless --exact"));
        }
        Ok(TaskSpec::new()
            .kernel(load_kernel(&self.kernel)?)
            .observable(load_observable(self)?)
            .config(config)
            .exact(self.exact)
            .mitigate(self.mitigate)
            .parallel_bases(self.parallel))
    }
}

fn vqe(a: VqeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let mut options = HeterogeneousMap::new();
    if let Some(n) = a.max_iterations {
        options.insert("max-iterations", n);
    }
    if let Some(t) = a.tolerance {
        options.insert("tolerance", t);
    }
    if let Some(x) = a.initial_point {
        options.insert("initial-point", x);
    }
    let optimizer = create_optimizer(&a.optimizer, &options)?;
    let mut spec = a.task.spec()?;
    spec.optimizer = Some(optimizer);
    let rt = Runtime::new();
    let handle = rt.task_initiate(spec)?;
    let root = rt.sync(handle).map_err(Failure::runtime)?;
    let md = &root.metadata;
    let _ = writeln!(
        stderr,
        "opt-value {:.8} at {:?} after {} evaluations{}",
        md.get::<f64>("opt-value").unwrap_or(f64::NAN),
        md.get::<&[f64]>("opt-params").unwrap_or(&[]),
        md.get::<i64>("num-evaluations").unwrap_or(0),
        if md.get::<bool>("converged") == Ok(true) {
            ""
        } else {
            " (budget exhausted)"
        },
    );
    a.task.exec.emit(&root, stdout)
}

fn parse_sweep(text: &str) -> Result<(f64, f64, usize), Failure> {
    let bad = || Failure::usage(format!("--sweep expects START:STOP:COUNT, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if !(start.is_finite() && stop.is_finite()) || count == 0 {
        return Err(bad());
    }
    Ok((start, stop, count))
}

fn sweep_points(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

fn evaluate(a: EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let rt = Runtime::new();
    let Some(sweep) = &a.sweep else {
        let spec = a.task.spec()?.params(a.params.clone().unwrap_or_default());
        let root = rt.sync(rt.task_initiate(spec)?).map_err(Failure::runtime)?;
        let _ = writeln!(
            stderr,
            "value {:.8} at {:?}",
            root.metadata.get::<f64>("value").unwrap_or(f64::NAN),
            root.metadata.get::<&[f64]>("params").unwrap_or(&[]),
        );
        return a.task.exec.emit(&root, stdout);
    };

    let (start, stop, count) = parse_sweep(sweep)?;
    let template = a.task.spec()?;
    let kernel = template.kernel.clone().expect("spec sets the kernel");
    if kernel.num_params() != 1 {
        return Err(Failure::usage(format!(
            "--sweep needs a one-parameter kernel, {} has {}",
            kernel.name(),
            kernel.num_params()
        )));
    }
    let observable = template
        .observable
        .clone()
        .expect("spec sets the observable");
    let points = sweep_points(start, stop, count);
    // Launch every point before waiting on any of them.
    let handles = points
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut config = template.config.clone();
            config.seed = derive_seed(template.config.seed, i as u64);
            let spec = TaskSpec::new()
                .kernel(kernel.clone())
                .observable(observable.clone())
                .config(config)
                .exact(template.exact)
                .mitigate(template.mitigate)
                .parallel_bases(template.parallel_bases)
                .params(vec![t]);
            rt.task_initiate(spec)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut root = ResultBuffer::with_metadata(
        HeterogeneousMap::new()
            .with("kernel", kernel.to_string())
            .with("observable", observable.to_string())
            .with("sweep-start", start)
            .with("sweep-stop", stop)
            .with("num-points", count)
            .with("seed", template.config.seed),
    );
    let mut values = Vec::with_capacity(count);
    for h in handles {
        let child = rt.sync(h).map_err(Failure::runtime)?;
        values.push(
            child
                .metadata
                .get::<f64>("value")
                .map_err(RuntimeError::from)
                .map_err(Failure::runtime)?,
        );
        root.push_child(child);
    }
    root.metadata.insert("params", points);
    root.metadata.insert("values", values.clone());
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let _ = writeln!(stderr, "{count} points, values in [{lo:.6}, {hi:.6}]");
    a.task.exec.emit(&root, stdout)
}

fn transform(text: &str, stdout: &mut dyn Write) -> Outcome {
    let fermion = parse_fermion(text).map_err(|e| Failure::usage(e.to_string()))?;
    let pauli = jordan_wigner(&fermion);
    writeln!(stdout, "{pauli}").map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("cannot write output: {e}"),
    })
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let mut kernel = load_kernel(&a.kernel)?;
    if let Some(values) = &a.bind {
        kernel = kernel
            .bind(values)
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    if !kernel.is_bound() {
        return Err(Failure::usage(format!(
            "kernel {} has unbound parameters; supply --bind",
            kernel.name()
        )));
    }
    if !kernel.is_measured() {
        return Err(Failure::usage(format!(
            "kernel {} has no Measure",
            kernel.name()
        )));
    }
    let config = a.exec.config()?;
    config
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let (counts, metadata) = execute(&kernel, &config).map_err(|e| Failure::runtime(e.into()))?;
    let mut buffer = ResultBuffer::with_metadata(metadata.with("kernel", kernel.to_string()));
    buffer.counts = counts;
    let _ = writeln!(
        stderr,
        "{} shots, {} distinct outcomes",
        buffer.total_shots(),
        buffer.counts.len()
    );
    a.exec.emit(&buffer, stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grammar() {
        assert_eq!(parse_sweep("-3.14:3.14:64").ok().map(|s| s.2), Some(64));
        for bad in ["1:2", "a:1:2", "0:1:0", "0:1:2:3", "0:inf:3"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
        let pts = sweep_points(-1.0, 1.0, 5);
        assert_eq!(pts, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(sweep_points(0.3, 9.0, 1), vec![0.3]);
    }

    #[test]
    fn transform_prints_canonical_pauli_form() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(["qcor-rt", "transform", "0^ 0"], &mut out, &mut err);
        assert_eq!(code, EXIT_OK);
        assert_eq!(String::from_utf8(out).unwrap(), "(0.5,0) I + (-0.5,0) Z0\n");
        assert_eq!(
            run(["qcor-rt", "transform", ""], &mut Vec::new(), &mut err),
            EXIT_USAGE
        );
    }

    #[test]
    fn usage_errors_exit_two() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(
            run(["qcor-rt", "frobnicate"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(run(["qcor-rt", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(!out.is_empty());
    }
}
