//! Finite-difference verification of tape gradients.

use super::{Tape, Tensor};
use crate::error::{Result, SwdError};

/// Compares the tape gradient of `f` at `x` against central finite
/// differences and returns the worst relative error over all coordinates.
///
/// `f` receives a fresh tape and an already-watched copy of `x` and must
/// return a scalar. The relative error for coordinate `k` is
/// `|analytic_k - numeric_k| / max(1, |analytic_k|, |numeric_k|)`, which
/// degrades to an absolute comparison near zero.
pub fn grad_check<F>(mut f: F, x: &Tensor, step: f64) -> Result<f64>
where
    F: FnMut(&mut Tape, &Tensor) -> Result<Tensor>,
{
    if !(step > 0.0) {
        return Err(SwdError::Argument(format!(
            "grad_check step must be positive, got {step}"
        )));
    }

    let mut tape = Tape::new();
    let watched = tape.watch(x);
    let loss = f(&mut tape, &watched)?;
    if loss.numel() != 1 {
        return Err(SwdError::Dimension(format!(
            "grad_check requires a scalar output, got shape {:?}",
            loss.shape()
        )));
    }
    let grads = tape.backward(&loss)?;
    let analytic: Vec<f64> = match grads.get(&watched) {
        Some(g) => g.to_vec(),
        None => vec![0.0; x.numel()],
    };

    let mut eval = |values: Vec<f64>| -> Result<f64> {
        let mut tape = Tape::new();
        let point = Tensor::new(x.shape(), values)?;
        let point = tape.watch(&point);
        Ok(f(&mut tape, &point)?.item())
    };

    let mut worst = 0.0f64;
    for k in 0..x.numel() {
        let mut plus = x.values().to_vec();
        plus[k] += step;
        let mut minus = x.values().to_vec();
        minus[k] -= step;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * step);
        let a = analytic[k];
        let err = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_for_composite_expression() {
        let x = Tensor::new(&[4], vec![0.3, -0.8, 1.2, 0.05]).unwrap();
        let err = grad_check(
            |tape, x| {
                let t = tape.tanh(x);
                let s = tape.sigmoid(x);
                let p = tape.mul(&t, &s)?;
                Ok(tape.sum(&p))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-6, "relative error {err}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // f computes sum(2x) forward; intercepting via scale(x, 2) is fine,
        // but a deliberately inconsistent forward (x + |x|) breaks symmetry
        // between forward evaluations and the recorded graph.
        let x = Tensor::new(&[3], vec![0.5, 1.5, 2.5]).unwrap();
        let err = grad_check(
            |tape, x| {
                // forward value depends on untracked copy: gradient misses it
                let detached = Tensor::new(x.shape(), x.values().to_vec()).unwrap();
                let y = tape.add(x, &detached)?;
                Ok(tape.sum(&y))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err > 1e-2, "expected a large error, got {err}");
    }

    #[test]
    fn rejects_non_scalar_outputs() {
        let x = Tensor::new(&[2], vec![1.0, 2.0]).unwrap();
        let err = grad_check(|tape, x| Ok(tape.neg(x)), &x, 1e-5).unwrap_err();
        assert!(matches!(err, SwdError::Dimension(_)));
    }
}
