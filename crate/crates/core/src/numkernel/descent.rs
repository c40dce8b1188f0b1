//! Normalized (projected) gradient descent on the unit sphere with a halving
//! backtracking line search.

use thiserror::Error;

use super::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// First trial step.
    pub initial_step: f64,
    /// Convergence threshold on `√(gᵀ P g)` for the tangential gradient `g`
    /// and preconditioner `P`; the Euclidean norm when `P` is the identity.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Line search gives up once the step falls below this.
    pub min_step: f64,
    /// Factor applied to the last accepted step before the next line search.
    pub growth: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            grad_tol: 1e-8,
            max_iter: 100_000,
            min_step: 1e-16,
            growth: 2.0,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub state: Vec<f64>,
    pub value: f64,
    /// `√(gᵀ P g)` at `state`.
    pub grad_norm: f64,
    pub iterations: usize,
    /// Functional value after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescentError {
    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("empty state")]
    Empty,
    #[error("gradient inconsistent with energy: directional {analytic:.6e} vs finite difference {numeric:.6e}")]
    GradientMismatch { analytic: f64, numeric: f64 },
    #[error("descent stagnated after {iterations} iterations with gradient norm {grad_norm:.3e}")]
    Stagnated {
        state: Vec<f64>,
        value: f64,
        grad_norm: f64,
        iterations: usize,
    },
}

/// Scales `x` to unit Euclidean norm in place and returns the old norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn project_out(v: &mut [f64], x: &[f64]) {
    let c = dot(v, x);
    v.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
}

/// Minimizes `energy` over the unit sphere starting from `init`.
pub fn minimize_functional<E, G>(
    energy: E,
    gradient: G,
    init: Vec<f64>,
    control: &StepControl,
) -> Result<DescentOutcome, DescentError>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    minimize_preconditioned(energy, gradient, |g: &[f64]| g.to_vec(), init, control)
}

/// As [`minimize_functional`], with the search direction `P g` for a symmetric
/// positive definite `precondition`. The identity recovers plain descent.
pub fn minimize_preconditioned<E, G, P>(
    energy: E,
    gradient: G,
    precondition: P,
    init: Vec<f64>,
    control: &StepControl,
) -> Result<DescentOutcome, DescentError>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    if init.is_empty() {
        return Err(DescentError::Empty);
    }
    let norm = dot(&init, &init).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(DescentError::NotNormalized(norm));
    }
    let mut x = init;
    let mut value = energy(&x);
    probe_gradient(&energy, &gradient, &x, value)?;

    let mut history = vec![value];
    let mut step = control.initial_step;
    let mut grad_norm = f64::INFINITY;
    for iter in 0..control.max_iter {
        let mut g = gradient(&x);
        project_out(&mut g, &x);
        let mut dir = precondition(&g);
        project_out(&mut dir, &x);
        let slope = dot(&g, &dir);
        grad_norm = slope.max(0.0).sqrt();
        if grad_norm <= control.grad_tol {
            return Ok(DescentOutcome {
                state: x,
                value,
                grad_norm,
                iterations: iter,
                history,
            });
        }
        if !(slope > 0.0) {
            return Err(DescentError::Stagnated {
                state: x,
                value,
                grad_norm,
                iterations: iter,
            });
        }
        step *= control.growth;
        let along = |t: f64| -> (Vec<f64>, f64) {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi - t * di).collect();
            normalize(&mut trial);
            let v = energy(&trial);
            (trial, v)
        };
        loop {
            let (mut trial, mut v) = along(step);
            // Minimizer of the parabola through the value and slope at 0 and the value at `step`.
            let curvature = v - value + slope * step;
            if curvature > 0.0 {
                let t = slope * step * step / (2.0 * curvature);
                if t > 0.0 && t < 4.0 * step {
                    let (tt, vt) = along(t);
                    if vt < v {
                        trial = tt;
                        v = vt;
                        step = t;
                    }
                }
            }
            if v <= value - control.armijo * step * slope {
                x = trial;
                value = v;
                history.push(v);
                break;
            }
            step *= 0.5;
            if step < control.min_step {
                return Err(DescentError::Stagnated {
                    state: x,
                    value,
                    grad_norm,
                    iterations: iter,
                });
            }
        }
    }
    Err(DescentError::Stagnated {
        state: x,
        value,
        grad_norm,
        iterations: control.max_iter,
    })
}

/// Central-difference check of the gradient along a fixed mixed direction.
fn probe_gradient<E, G>(energy: &E, gradient: &G, x: &[f64], value: f64) -> Result<(), DescentError>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let g = gradient(x);
    let mut dir: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, gi)| gi + 0.5 * x[i] * ((i as f64) * 0.618_033_988_7).sin())
        .collect();
    if normalize(&mut dir) == 0.0 {
        return Ok(());
    }
    let analytic = dot(&g, &dir);
    let eps = 1e-6;
    let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
    let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - eps * d).collect();
    let numeric = (energy(&plus) - energy(&minus)) / (2.0 * eps);
    let scale = analytic.abs().max(numeric.abs()).max(1e-8 * value.abs().max(1.0));
    // Near a minimum both sides sit at the roundoff level of the energy.
    let noise = 1e-5 * value.abs().max(1.0);
    if (analytic - numeric).abs() > 1e-4 * scale + noise {
        return Err(DescentError::GradientMismatch { analytic, numeric });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::solve_tridiagonal;

    #[test]
    fn diagonal_quadratic_finds_lowest_axis() {
        let a = [1.0, 2.0, 3.0];
        let energy = |u: &[f64]| u.iter().zip(&a).map(|(x, ai)| ai * x * x).sum::<f64>();
        let grad = |u: &[f64]| u.iter().zip(&a).map(|(x, ai)| 2.0 * ai * x).collect::<Vec<_>>();
        let mut init = vec![0.6, 0.5, 0.4];
        normalize(&mut init);
        let out = minimize_functional(energy, grad, init, &StepControl::default()).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12, "{}", out.value);
        assert!((out.state[0].abs() - 1.0).abs() < 1e-8);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_unnormalized_start_and_bad_gradient() {
        let energy = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>();
        let grad = |u: &[f64]| u.iter().map(|x| 2.0 * x).collect::<Vec<_>>();
        assert!(matches!(
            minimize_functional(energy, grad, vec![1.0, 1.0], &StepControl::default()),
            Err(DescentError::NotNormalized(_))
        ));
        let bad_grad = |u: &[f64]| u.iter().map(|x| 5.0 * x + 0.3).collect::<Vec<_>>();
        let mut init = vec![0.3, 0.8, 0.1];
        normalize(&mut init);
        assert!(matches!(
            minimize_functional(energy, bad_grad, init, &StepControl::default()),
            Err(DescentError::GradientMismatch { .. })
        ));
    }

    #[test]
    fn iteration_budget_exhaustion_is_stagnation() {
        let a = [1.0, 1.0001, 50.0];
        let energy = |u: &[f64]| u.iter().zip(&a).map(|(x, ai)| ai * x * x).sum::<f64>();
        let grad = |u: &[f64]| u.iter().zip(&a).map(|(x, ai)| 2.0 * ai * x).collect::<Vec<_>>();
        let mut init = vec![0.5, 0.5, 0.5];
        normalize(&mut init);
        let control = StepControl {
            max_iter: 3,
            grad_tol: 1e-14,
            ..StepControl::default()
        };
        match minimize_functional(energy, grad, init, &control) {
            Err(DescentError::Stagnated { state, grad_norm, .. }) => {
                assert_eq!(state.len(), 3);
                assert!(grad_norm > 0.0);
            }
            other => panic!("expected stagnation, got {other:?}"),
        }
    }

    /// Fourth-order Laplacian on a uniform 1D grid with zero ends.
    fn oscillator_parts(n: usize, h: f64, x0: f64) -> (Vec<f64>, impl Fn(&[f64]) -> Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| x0 + i as f64 * h).collect();
        let pot: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let apply = move |u: &[f64]| {
            let at = |k: isize| if k < 0 || k >= n as isize { 0.0 } else { u[k as usize] };
            (0..n as isize)
                .map(|i| {
                    let lap = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1)
                        - at(i + 2))
                        / (12.0 * h * h);
                    -0.5 * lap + pot[i as usize] * at(i)
                })
                .collect::<Vec<f64>>()
        };
        (xs, apply)
    }

    #[test]
    fn oscillator_rayleigh_quotient_reaches_one_half() {
        let h = 0.02;
        let n = 1001;
        let (xs, apply) = oscillator_parts(n, h, -10.0);
        let energy = |u: &[f64]| dot(u, &apply(u)) / dot(u, u);
        let gradient = |u: &[f64]| {
            let nn = dot(u, u);
            let hu = apply(u);
            let e = dot(u, &hu) / nn;
            hu.iter().zip(u).map(|(a, b)| 2.0 * (a - e * b) / nn).collect::<Vec<_>>()
        };
        // Second-order (-½Δ + 1) as preconditioner.
        let diag = vec![1.0 / (h * h) + 1.0; n];
        let off = vec![-0.5 / (h * h); n - 1];
        let precond = |g: &[f64]| solve_tridiagonal(&diag, &off, 0.0, g).unwrap();
        let mut init: Vec<f64> = xs.iter().map(|x| (-x * x).exp() * (1.0 + 0.3 * x)).collect();
        normalize(&mut init);
        let control = StepControl {
            initial_step: 0.5,
            grad_tol: 1e-6,
            ..StepControl::default()
        };
        let out = minimize_preconditioned(energy, gradient, precond, init, &control).unwrap();
        assert!((out.value - 0.5).abs() < 1e-8, "{}", out.value);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
