//! Central-difference gradients for verifying analytic gradients in tests.

use crate::scalar::Scalar;

/// Numeric gradient of `loss` at `theta` by central differences with step
/// `eps` per coordinate.
pub fn numeric_gradient<S, F>(mut loss: F, theta: &[S], eps: S) -> Vec<S>
where
    S: Scalar,
    F: FnMut(&[S]) -> S,
{
    let mut point = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = point[i];
        point[i] = orig + eps;
        let plus = loss(&point);
        point[i] = orig - eps;
        let minus = loss(&point);
        point[i] = orig;
        grad.push((plus - minus) / (eps + eps));
    }
    grad
}

/// Worst relative discrepancy between two gradients.
///
/// Per coordinate: `|a - n| / max(|a|, |n|, 1e-4)`. The floor turns the
/// comparison absolute for near-zero coordinates, where central differences
/// carry roundoff of roughly `1e-12 / eps` and a pure ratio would be noise.
pub fn max_rel_err<S: Scalar>(analytic: &[S], numeric: &[S]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let floor = 1e-4;
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let a = a.into_f64();
            let n = n.into_f64();
            (a - n).abs() / (a.abs().max(n.abs())).max(floor)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_linear_gradient_exactly() {
        // f(x) = 3x0 - 2x1 + 0.5x2; central differences are exact on affine
        // functions up to roundoff
        let f = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1] + 0.5 * x[2];
        let grad = numeric_gradient(f, &[0.3, -1.2, 7.0], 1e-4);
        let expected = [3.0, -2.0, 0.5];
        assert!(max_rel_err(&grad, &expected) < 1e-9);
    }

    #[test]
    fn recovers_quadratic_gradient() {
        // f(x) = x0^2 + x0 x1 + sin(x1)
        let f = |x: &[f64]| x[0] * x[0] + x[0] * x[1] + x[1].sin();
        let at = [1.5, -0.7];
        let grad = numeric_gradient(f, &at, 1e-4);
        let expected = [2.0 * at[0] + at[1], at[0] + at[1].cos()];
        assert!(max_rel_err(&grad, &expected) < 1e-7);
    }

    #[test]
    fn rel_err_floor_handles_zero_gradients() {
        assert_eq!(max_rel_err::<f64>(&[0.0], &[0.0]), 0.0);
        assert!(max_rel_err::<f64>(&[1e-9], &[0.0]) < 1e-4);
        assert!(max_rel_err::<f64>(&[1.0], &[1.1]) > 0.05);
    }

    #[test]
    fn leaves_theta_unchanged() {
        let theta = [0.25f64, -3.5];
        let copy = theta;
        numeric_gradient(|x| x[0] * x[1], &theta, 1e-4);
        assert_eq!(theta, copy);
    }
}
