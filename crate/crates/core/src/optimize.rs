//! Derivative-free Nelder-Mead minimization.

use alloc::vec::Vec;

use thiserror::Error;

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Objective evaluation budget, initial simplex included.
    pub max_evaluations: usize,
    /// Stop once max - min of the simplex values drops below this...
    pub ftol: f64,
    /// ...and every vertex lies within this distance (per axis) of the best.
    pub xtol: f64,
    /// Offset added along each axis to build the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 500,
            ftol: 1e-6,
            xtol: 1e-4,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// False when the budget ran out before the spread fell below `ftol`.
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NelderMeadError<E> {
    #[error("nothing to optimize: zero dimensions")]
    NoDimensions,
    #[error("initial point has {got} entries, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
    #[error("objective returned {value} at {params:?}")]
    NonFinite { params: Vec<f64>, value: f64 },
    #[error("objective failed: {0}")]
    Objective(E),
}

enum Stop<E> {
    Budget,
    Fail(NelderMeadError<E>),
}

struct Counter<F> {
    f: F,
    used: usize,
    budget: usize,
}

impl<F, E> Counter<F>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    fn eval(&mut self, x: &[f64]) -> Result<f64, Stop<E>> {
        if self.used >= self.budget {
            return Err(Stop::Budget);
        }
        self.used += 1;
        let v = (self.f)(x).map_err(|e| Stop::Fail(NelderMeadError::Objective(e)))?;
        if !v.is_finite() {
            return Err(Stop::Fail(NelderMeadError::NonFinite {
                params: x.to_vec(),
                value: v,
            }));
        }
        Ok(v)
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` starting from `x0`, expecting `dimensions` parameters.
///
/// Reflection, expansion, contraction and shrink coefficients are 1, 2,
/// 0.5 and 0.5.
pub fn nelder_mead<F, E>(
    mut f: F,
    dimensions: usize,
    x0: &[f64],
    options: &NelderMeadOptions,
) -> Result<Minimum, NelderMeadError<E>>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    if dimensions == 0 {
        return Err(NelderMeadError::NoDimensions);
    }
    if x0.len() != dimensions {
        return Err(NelderMeadError::DimensionMismatch {
            expected: dimensions,
            got: x0.len(),
        });
    }
    if options.ftol.is_nan() || options.ftol < 0.0 {
        return Err(NelderMeadError::InvalidOption("ftol must be non-negative"));
    }
    if options.xtol.is_nan() || options.xtol < 0.0 {
        return Err(NelderMeadError::InvalidOption("xtol must be non-negative"));
    }
    if !(options.initial_step.is_finite() && options.initial_step != 0.0) {
        return Err(NelderMeadError::InvalidOption(
            "initial step must be finite and non-zero",
        ));
    }
    if options.max_evaluations < dimensions + 1 {
        return Err(NelderMeadError::InvalidOption(
            "evaluation budget smaller than the initial simplex",
        ));
    }
    let n = dimensions;
    let mut c = Counter {
        f: &mut f,
        used: 0,
        budget: options.max_evaluations,
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut x = x0.to_vec();
        if i > 0 {
            x[i - 1] += options.initial_step;
        }
        let v = match c.eval(&x) {
            Ok(v) => v,
            Err(Stop::Fail(e)) => return Err(e),
            Err(Stop::Budget) => unreachable!("budget covers the initial simplex"),
        };
        simplex.push((x, v));
    }

    let mut converged = false;
    let outcome = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 < options.ftol && diameter(&simplex) <= options.xtol {
            converged = true;
            break Ok(());
        }
        match step(&mut simplex, &mut c) {
            Ok(()) => {}
            Err(stop) => break Err(stop),
        }
    };
    if let Err(Stop::Fail(e)) = outcome {
        return Err(e);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (params, value) = simplex.swap_remove(0);
    Ok(Minimum {
        params,
        value,
        evaluations: c.used,
        converged,
    })
}

/// Largest per-axis distance from the best vertex.
fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// One iteration on a simplex sorted best-first.
fn step<F, E>(simplex: &mut [(Vec<f64>, f64)], c: &mut Counter<F>) -> Result<(), Stop<E>>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let n = simplex.len() - 1;
    let mut centroid = alloc::vec![0.0; n];
    for (x, _) in &simplex[..n] {
        for (acc, xi) in centroid.iter_mut().zip(x) {
            *acc += xi / n as f64;
        }
    }
    let (best, second_worst, worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

    let xr = lerp(&centroid, &simplex[n].0, -ALPHA);
    let fr = c.eval(&xr)?;
    if fr < best {
        let xe = lerp(&centroid, &xr, GAMMA);
        let fe = c.eval(&xe)?;
        simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        return Ok(());
    }
    if fr < second_worst {
        simplex[n] = (xr, fr);
        return Ok(());
    }
    let (xc, fc, accept) = if fr < worst {
        let xc = lerp(&centroid, &xr, RHO);
        let fc = c.eval(&xc)?;
        (xc, fc, fc < fr)
    } else {
        let xc = lerp(&centroid, &simplex[n].0, RHO);
        let fc = c.eval(&xc)?;
        (xc, fc, fc < worst)
    };
    if accept {
        simplex[n] = (xc, fc);
        return Ok(());
    }
    let x_best = simplex[0].0.clone();
    for vertex in simplex.iter_mut().skip(1) {
        let x = lerp(&x_best, &vertex.0, SIGMA);
        let v = c.eval(&x)?;
        *vertex = (x, v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    fn ok(v: f64) -> Result<f64, Infallible> {
        Ok(v)
    }

    #[test]
    fn one_dimensional_quadratic() {
        let m = nelder_mead(
            |x| ok((x[0] - 2.0).powi(2)),
            1,
            &[0.0],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!((m.params[0] - 2.0).abs() < 1e-3, "{m:?}");
        assert!(m.converged);
        assert!(m.evaluations <= 500);
    }

    #[test]
    fn rosenbrock_with_larger_budget() {
        let opts = NelderMeadOptions {
            max_evaluations: 5000,
            ftol: 1e-14,
            xtol: 1e-8,
            initial_step: 0.5,
        };
        let m = nelder_mead(
            |x| ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            2,
            &[-1.2, 1.0],
            &opts,
        )
        .unwrap();
        assert!(
            (m.params[0] - 1.0).abs() < 1e-3 && (m.params[1] - 1.0).abs() < 1e-3,
            "{m:?}"
        );
    }

    #[test]
    fn symmetric_simplex_does_not_stop_early() {
        // Vertices 1.9 and 2.1 have equal values; the spread alone would stop here.
        let m = nelder_mead(
            |x| ok((x[0] - 2.0).powi(2)),
            1,
            &[1.9],
            &NelderMeadOptions {
                initial_step: 0.2,
                ..NelderMeadOptions::default()
            },
        )
        .unwrap();
        assert!((m.params[0] - 2.0).abs() < 1e-3, "{m:?}");
    }

    #[test]
    fn budget_is_respected() {
        let opts = NelderMeadOptions {
            max_evaluations: 7,
            ftol: 0.0,
            xtol: 0.0,
            initial_step: 0.1,
        };
        let mut calls = 0;
        let m = nelder_mead(
            |x| {
                calls += 1;
                ok(x[0] * x[0] + x[1] * x[1])
            },
            2,
            &[1.0, 1.0],
            &opts,
        )
        .unwrap();
        assert_eq!(m.evaluations, 7);
        assert_eq!(calls, 7);
        assert!(!m.converged);
    }

    #[test]
    fn errors() {
        let opts = NelderMeadOptions::default();
        assert_eq!(
            nelder_mead(|_| ok(0.0), 0, &[], &opts),
            Err(NelderMeadError::NoDimensions)
        );
        assert_eq!(
            nelder_mead(|_| ok(0.0), 2, &[0.0], &opts),
            Err(NelderMeadError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(matches!(
            nelder_mead(
                |x| ok(if x[0] > 0.05 { f64::NAN } else { 0.0 }),
                1,
                &[0.0],
                &opts
            ),
            Err(NelderMeadError::NonFinite { .. })
        ));
        assert_eq!(
            nelder_mead(|_| Err::<f64, _>("boom"), 1, &[0.0], &opts),
            Err(NelderMeadError::Objective("boom"))
        );
    }
}
