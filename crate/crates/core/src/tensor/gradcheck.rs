//! Central finite-difference checks for tape gradients.

use super::{ParamId, ParamSet, Tape, TensorError, Var};

/// Worst discrepancy found by [`check_gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_param: Option<String>,
    pub entries_checked: usize,
    /// Largest `|analytic − numeric|` over entries below [`SMALL_GRADIENT`].
    pub max_small_abs_error: f64,
}

/// Gradient magnitude below which central differences at step 1e-5 carry
/// rounding error comparable to the value, so only the absolute error is
/// reported.
pub const SMALL_GRADIENT: f64 = 1e-6;

/// Compares tape gradients with central differences of step `step` on every
/// parameter entry. Entries where both estimates are below
/// [`SMALL_GRADIENT`] in magnitude count toward the absolute error only.
pub fn check_gradients<F>(params: &ParamSet, step: f64, build: F) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape) -> Result<Var, TensorError>,
{
    let eval = |ps: &ParamSet| -> Result<f64, TensorError> {
        let mut tape = Tape::new(ps);
        let loss = build(&mut tape)?;
        Ok(tape.scalar(loss))
    };
    let grads = {
        let mut tape = Tape::new(params);
        let loss = build(&mut tape)?;
        tape.backward(loss)?
    };
    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_param: None,
        entries_checked: 0,
        max_small_abs_error: 0.0,
    };
    for id in params.ids() {
        let shape = params.get(id).dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let analytic = grads.get(id).map_or(0.0, |g| g[[r, c]]);
                let numeric = central_difference(&mut work, id, (r, c), step, &eval)?;
                let scale = analytic.abs().max(numeric.abs());
                if scale <= SMALL_GRADIENT {
                    report.max_small_abs_error = report.max_small_abs_error.max((analytic - numeric).abs());
                    continue;
                }
                report.entries_checked += 1;
                let rel = (analytic - numeric).abs() / scale;
                if rel > report.max_relative_error {
                    report.max_relative_error = rel;
                    report.worst_param = Some(format!("{}[{r}, {c}]", params.name(id)));
                }
            }
        }
    }
    Ok(report)
}

fn central_difference<E>(
    work: &mut ParamSet,
    id: ParamId,
    at: (usize, usize),
    step: f64,
    eval: &E,
) -> Result<f64, TensorError>
where
    E: Fn(&ParamSet) -> Result<f64, TensorError>,
{
    let orig = work.get(id)[at];
    work.get_mut(id)[at] = orig + step;
    let plus = eval(work)?;
    work.get_mut(id)[at] = orig - step;
    let minus = eval(work)?;
    work.get_mut(id)[at] = orig;
    Ok((plus - minus) / (2.0 * step))
}
