//! Exact gradients by forward-mode dual evaluation, and a central-difference
//! verifier that shares no code path with it.

mod dual;

pub use dual::Dual;

use thiserror::Error;

use crate::scalar::Scalar;

/// A scalar function of a small parameter vector, evaluable on any [`Scalar`].
pub trait Objective {
    type Error;

    fn eval<T: Scalar>(&self, params: &[T]) -> Result<T, Self::Error>;
}

#[derive(Debug, Error, PartialEq)]
pub enum GradError<E> {
    #[error("objective evaluation failed: {0}")]
    Eval(E),
    #[error("non-finite objective value or derivative at parameter {index}")]
    NonFinite { index: usize },
}

/// Value and exact gradient; one dual pass per parameter.
pub fn value_and_grad<O: Objective>(objective: &O, params: &[f64]) -> Result<(f64, Vec<f64>), GradError<O::Error>> {
    let all: Vec<usize> = (0..params.len()).collect();
    partials(objective, params, &all)
}

/// Value and the partial derivatives with respect to `wrt` only.
pub fn partials<O: Objective>(
    objective: &O,
    params: &[f64],
    wrt: &[usize],
) -> Result<(f64, Vec<f64>), GradError<O::Error>> {
    let mut seeded: Vec<Dual<f64>> = params.iter().map(|&p| Dual::constant(p)).collect();
    let mut grad = Vec::with_capacity(wrt.len());
    let mut value = None;
    for &i in wrt {
        seeded[i].derivative = 1.0;
        let out = objective.eval(&seeded).map_err(GradError::Eval)?;
        seeded[i].derivative = 0.0;
        if !out.value.is_finite() || !out.derivative.is_finite() {
            return Err(GradError::NonFinite { index: i });
        }
        value = Some(out.value);
        grad.push(out.derivative);
    }
    let value = match value {
        Some(v) => v,
        None => objective.eval::<f64>(params).map_err(GradError::Eval)?,
    };
    if !value.is_finite() {
        return Err(GradError::NonFinite { index: 0 });
    }
    Ok((value, grad))
}

/// Exact gradient of `objective` at `params`.
pub fn grad<O: Objective>(objective: &O, params: &[f64]) -> Result<Vec<f64>, GradError<O::Error>> {
    value_and_grad(objective, params).map(|(_, g)| g)
}

/// Central differences `(f(x+h) - f(x-h)) / 2h`, one coordinate at a time.
pub fn central_differences<E>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    params: &[f64],
    step: f64,
) -> Result<Vec<f64>, E> {
    let mut x = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + step;
        let fp = f(&x)?;
        x[i] = x0 - step;
        let fm = f(&x)?;
        x[i] = x0;
        out.push((fp - fm) / (2.0 * step));
    }
    Ok(out)
}

/// `max_i |analytic_i - fd_i| / max(|analytic_i|, 1e-8)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs() / a.abs().max(1e-8)).fold(0.0, f64::max)
}

/// Compare a supplied gradient against central differences of `f`.
pub fn fd_check_against<E>(
    analytic: &[f64],
    f: impl FnMut(&[f64]) -> Result<f64, E>,
    params: &[f64],
    step: f64,
) -> Result<f64, E> {
    let numeric = central_differences(f, params, step)?;
    Ok(max_relative_error(analytic, &numeric))
}

/// IEEE binary128 scalar (113-bit significand, correctly rounded).
pub type Wide = f128::f128;

/// Central differences of an [`Objective`] evaluated in [`Wide`] precision.
///
/// Same formula and step as [`central_differences`]; the wider evaluation
/// removes the `ε·|f|/h` round-off that otherwise swamps gradient
/// components much smaller than the loss itself.
pub fn central_differences_wide<O: Objective>(objective: &O, params: &[f64], step: f64) -> Result<Vec<f64>, O::Error> {
    let mut x: Vec<Wide> = params.iter().map(|&p| Wide::of(p)).collect();
    let h = Wide::of(step);
    let mut out = Vec::with_capacity(params.len());
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + h;
        let fp = objective.eval(&x)?;
        x[i] = x0 - h;
        let fm = objective.eval(&x)?;
        x[i] = x0;
        out.push(((fp - fm) / (h + h)).re());
    }
    Ok(out)
}

/// Compare a supplied gradient against wide central differences.
pub fn fd_check_wide_against<O: Objective>(
    analytic: &[f64],
    objective: &O,
    params: &[f64],
    step: f64,
) -> Result<f64, O::Error> {
    let numeric = central_differences_wide(objective, params, step)?;
    Ok(max_relative_error(analytic, &numeric))
}

/// Dual-number gradient of `objective` checked against wide central
/// differences.
pub fn fd_check<O: Objective>(objective: &O, params: &[f64], step: f64) -> Result<f64, GradError<O::Error>> {
    let analytic = grad(objective, params)?;
    fd_check_wide_against(&analytic, objective, params, step).map_err(GradError::Eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    struct Square;
    impl Objective for Square {
        type Error = Infallible;
        fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, Infallible> {
            Ok(p[0] * p[0])
        }
    }

    struct Product;
    impl Objective for Product {
        type Error = Infallible;
        fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, Infallible> {
            Ok(p[0] * p[1])
        }
    }

    struct Rosenbrock;
    impl Objective for Rosenbrock {
        type Error = Infallible;
        fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, Infallible> {
            let one = T::one();
            let a = one - p[0];
            let b = p[1] - p[0] * p[0];
            Ok(a * a + T::of(100.0) * b * b)
        }
    }

    struct LogOf;
    impl Objective for LogOf {
        type Error = Infallible;
        fn eval<T: Scalar>(&self, p: &[T]) -> Result<T, Infallible> {
            Ok(p[0].ln())
        }
    }

    #[test]
    fn polynomial_gradient() {
        assert_eq!(grad(&Square, &[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn product_rule_gradient() {
        assert_eq!(grad(&Product, &[2.0, 5.0]).unwrap(), vec![5.0, 2.0]);
    }

    #[test]
    fn rosenbrock_passes_fd_check() {
        let err = fd_check(&Rosenbrock, &[-0.7, 1.3], 1e-6).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let p = [0.3, -1.2];
        let mut g = grad(&Rosenbrock, &p).unwrap();
        g.iter_mut().for_each(|v| *v *= 1.01);
        let err = fd_check_against(&g, |x| Rosenbrock.eval::<f64>(x), &p, 1e-6).unwrap();
        assert!((err - 0.01 / 1.01).abs() < 1e-4, "{err}");
    }

    #[test]
    fn non_finite_value_is_an_error() {
        assert_eq!(grad(&LogOf, &[-1.0]), Err(GradError::NonFinite { index: 0 }));
    }
}
