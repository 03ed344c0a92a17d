use super::{Tape, Tensor, Var};
use crate::error::Result;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Outcome of comparing reverse-mode gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_relative_error: f64,
    /// `(parameter index, flat coordinate)` of the worst entry.
    pub worst: (usize, usize),
    /// Analytic and numeric derivative at `worst`.
    pub worst_values: (f64, f64),
    pub coordinates: usize,
}

/// Compares `backward()` with `(f(p+h) - f(p-h)) / 2h` for every coordinate of
/// every parameter. `f` must be deterministic and return a scalar.
pub fn finite_difference_check<F>(f: F, params: &[Tensor], h: f64) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let analytic: Vec<Tensor> = {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = params.iter().map(|p| tape.param(p.clone())).collect();
        let loss = f(&tape, &vars)?;
        let grads = loss.backward()?;
        vars.iter()
            .map(|v| grads.get(*v).cloned().expect("every param has a gradient"))
            .collect()
    };
    let eval = |ps: &[Tensor]| -> Result<f64> {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = ps.iter().map(|p| tape.constant(p.clone())).collect();
        f(&tape, &vars)?.item()
    };

    let mut work = params.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        worst_values: (0.0, 0.0),
        coordinates: 0,
    };
    for (pi, grad) in analytic.iter().enumerate() {
        for ci in 0..grad.len() {
            let orig = work[pi].data()[ci];
            work[pi].data_mut()[ci] = orig + h;
            let up = eval(&work)?;
            work[pi].data_mut()[ci] = orig - h;
            let down = eval(&work)?;
            work[pi].data_mut()[ci] = orig;

            let numeric = (up - down) / (2.0 * h);
            let a = grad.data()[ci];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > report.max_relative_error || report.coordinates == 0 {
                report.max_relative_error = rel;
                report.worst = (pi, ci);
                report.worst_values = (a, numeric);
            }
            report.coordinates += 1;
        }
    }
    Ok(report)
}
