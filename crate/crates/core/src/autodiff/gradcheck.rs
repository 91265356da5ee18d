//! Central finite-difference verification of taped gradients.

use super::{AutodiffError, Parameter, Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index where the maximum was observed.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

fn evaluate<F>(forward: &F, params: &[Parameter]) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let vars = tape.params(params);
    let loss = forward(&mut tape, &vars)?;
    let v = tape.value(loss);
    if v.shape() != (1, 1) {
        return Err(AutodiffError::NotScalar(v.shape()));
    }
    Ok(v[(0, 0)])
}

/// Compares reverse-mode gradients of `forward` against central differences
/// `(f(p + h) - f(p - h)) / 2h` for every coordinate of every parameter.
///
/// The per-coordinate error is `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
/// `forward` receives the tape and one bound [`Var`] per parameter, in order.
/// Parameter values are restored and gradients hold the analytic result on return.
pub fn finite_diff_check<F>(
    forward: F,
    params: &mut [Parameter],
    h: f64,
) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    params.iter_mut().for_each(Parameter::zero_grad);
    let mut tape = Tape::new();
    let vars = tape.params(params);
    let loss = forward(&mut tape, &vars)?;
    tape.backward(loss, params)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    for pi in 0..params.len() {
        for k in 0..params[pi].value.len() {
            let original = params[pi].value.data()[k];
            params[pi].value.data_mut()[k] = original + h;
            let plus = evaluate(&forward, params);
            params[pi].value.data_mut()[k] = original - h;
            let minus = evaluate(&forward, params);
            params[pi].value.data_mut()[k] = original;
            let numeric = (plus? - minus?) / (2.0 * h);
            let analytic = params[pi].grad().data()[k];
            let err = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            report.coordinates += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((params[pi].name.clone(), k));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn quadratic_matches_calculus() {
        let mut params = vec![Parameter::new("w", Tensor::scalar(3.0))];
        let report = finite_diff_check(
            |tape, v| tape.hadamard(v[0], v[0]),
            &mut params,
            1e-6,
        )
        .unwrap();
        assert!((params[0].grad()[(0, 0)] - 6.0).abs() < 1e-12);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
        assert_eq!(params[0].value[(0, 0)], 3.0);
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut params = vec![Parameter::new("w", Tensor::filled(2, 2, 0.7))];
        let report = finite_diff_check(
            |tape, _| Ok(tape.constant(Tensor::scalar(4.0))),
            &mut params,
            1e-6,
        )
        .unwrap();
        assert_eq!(report.max_rel_error, 0.0);
        assert_eq!(report.coordinates, 4);
    }
}
