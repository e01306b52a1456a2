//! Central finite-difference gradient checking.

/// Perturbation used for every parameter.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared in absolute rather than relative terms.
const MAGNITUDE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter index where the worst error occurred.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Compares `analytic` against `(f(p + h e_i) - f(p - h e_i)) / 2h` for every
/// coordinate of `params`. The relative error of one coordinate is
/// `|a - n| / max(|a|, |n|, 1e-6)`. `params` is restored before returning.
pub fn central_difference_check<F>(params: &mut [f64], analytic: &[f64], mut loss: F) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length must match parameters");
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + FD_STEP;
        let plus = loss(params);
        params[i] = orig - FD_STEP;
        let minus = loss(params);
        params[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR);
        if err > report.max_relative_error || !err.is_finite() {
            report = GradCheckReport {
                max_relative_error: if err.is_finite() { err } else { f64::INFINITY },
                worst_index: i,
                analytic: a,
                numeric,
            };
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nets::{Activation, Mlp};

    #[test]
    fn polynomial_loss_is_exact() {
        let mut p = vec![0.7, -1.3, 2.0];
        // f = x0^2 x1 + x2^3
        let f = |p: &[f64]| p[0] * p[0] * p[1] + p[2].powi(3);
        let analytic = vec![2.0 * p[0] * p[1], p[0] * p[0], 3.0 * p[2] * p[2]];
        let r = central_difference_check(&mut p, &analytic, f);
        assert!(r.passes(1e-6), "{r:?}");
        assert_eq!(p, vec![0.7, -1.3, 2.0]);
    }

    #[test]
    fn linear_net_squared_loss() {
        let mut net = Mlp::new(
            3,
            &[(4, Activation::Linear), (2, Activation::Linear)],
            3,
        )
        .unwrap();
        let x = Matrix::from_rows(&[vec![0.5, -1.0, 0.25], vec![1.0, 2.0, -0.5]]).unwrap();
        let (out, cache) = net.forward(&x).unwrap();
        let mut up = out.clone();
        up.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);
        net.backward(&cache, &up).unwrap();
        let analytic = net.grads().to_vec();
        let mut params = net.params().to_vec();
        let r = central_difference_check(&mut params, &analytic, |p| {
            let mut probe = net.clone();
            probe.params_mut().copy_from_slice(p);
            probe.predict(&x).unwrap().as_slice().iter().map(|v| v * v).sum()
        });
        assert!(r.passes(1e-6), "{r:?}");
    }
}
