//! Shared numeric primitives.

mod descent;
mod quadrature;
mod tridiag;

pub use descent::{
    minimize_functional, minimize_preconditioned, normalize, DescentError, DescentOutcome,
    StepControl,
};
pub use quadrature::{
    integrate_damped, integrate_finite, Estimate, QuadValue, QuadratureError, QuadratureSpec,
};
pub use tridiag::{
    inverse_iteration, solve_tridiagonal, tridiag_ground, TridiagError, TridiagProblem,
};

/// Composite Simpson weights for `n + 1` equally spaced nodes with step `h`.
///
/// Falls back to a trapezoid on the last interval when `n` is odd.
pub fn simpson_weights(n_nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n_nodes];
    if n_nodes < 2 {
        return w;
    }
    let intervals = n_nodes - 1;
    let even = intervals - intervals % 2;
    for k in (0..even).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if even < intervals {
        w[intervals - 1] += h / 2.0;
        w[intervals] += h / 2.0;
    }
    w
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_weights_integrate_cubic_exactly() {
        let h = 0.1;
        let w = simpson_weights(11, h);
        let s: f64 = w.iter().enumerate().map(|(i, wi)| wi * (i as f64 * h).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simpson_weights_odd_interval_count_sum_to_length() {
        let w = simpson_weights(8, 0.5);
        let total: f64 = w.iter().sum();
        assert!((total - 3.5).abs() < 1e-14);
    }
}
