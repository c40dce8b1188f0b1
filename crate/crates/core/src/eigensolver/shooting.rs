//! Two-sided Numerov shooting on a logarithmic grid.
//!
//! With `x = ln q` and `u = q^{1/2} y` the radial equation becomes
//! `y'' = K(x) y`, `K = q² (W - λ) + 1/4`, which is regular at the origin
//! end even for `W ~ c/q²`. The outward solution starts from the Frobenius
//! series `u = q^α (1 + b₂ q²)`, the inward one from the Gaussian tail
//! `y ~ q^{λ/2-1} e^{-q²/2}`. The eigenvalue is the root of the normalized
//! Casoratian of the two solutions at the outer turning point.

use super::{EigenError, EigenMethod, EigenResult, RadialGrid, RESIDUAL_Q_MIN};
use crate::numkernel::simpson_weights;
use crate::potentials::{origin_behavior, PotentialSpec};

pub(super) struct LogGrid {
    delta: f64,
    q: Vec<f64>,
    w: Vec<f64>,
}

impl LogGrid {
    pub(super) fn new(spec: &PotentialSpec, grid: &RadialGrid) -> Self {
        let x0 = grid.q_min.ln();
        let delta = (grid.q_max.ln() - x0) / grid.n as f64;
        let q: Vec<f64> = (0..=grid.n).map(|i| (x0 + i as f64 * delta).exp()).collect();
        let w = q.iter().map(|&qi| spec.value_at(qi)).collect();
        Self { delta, q, w }
    }

    fn k(&self, i: usize, lambda: f64) -> f64 {
        self.q[i] * self.q[i] * (self.w[i] - lambda) + 0.25
    }

    fn len(&self) -> usize {
        self.q.len()
    }
}

struct Sweep {
    outward: Vec<f64>,
    inward: Vec<f64>,
}

struct Shooter<'a> {
    grid: &'a LogGrid,
    alpha: f64,
    w0: f64,
    matching: usize,
}

impl<'a> Shooter<'a> {
    fn numerov_coeffs(&self, i: usize, lambda: f64) -> (f64, f64) {
        let h2 = self.grid.delta * self.grid.delta;
        let k = self.grid.k(i, lambda);
        (1.0 - h2 * k / 12.0, 2.0 + 10.0 * h2 * k / 12.0)
    }

    fn series_start(&self, q: f64, lambda: f64) -> f64 {
        let b2 = (self.w0 - lambda) / (4.0 * self.alpha + 2.0);
        // y = u q^{-1/2}
        q.powf(self.alpha - 0.5) * (1.0 + b2 * q * q)
    }

    fn sweep(&self, lambda: f64) -> Sweep {
        let n = self.grid.len() - 1;
        let m = self.matching;
        let q = &self.grid.q;

        let mut out = vec![0.0; m + 2];
        out[0] = self.series_start(q[0], lambda);
        out[1] = self.series_start(q[1], lambda);
        let mut c_prev = self.numerov_coeffs(0, lambda).0;
        let (mut c_cur, mut t_cur) = self.numerov_coeffs(1, lambda);
        for i in 1..=m {
            let (c_next, t_next) = self.numerov_coeffs(i + 1, lambda);
            out[i + 1] = (t_cur * out[i] - c_prev * out[i - 1]) / c_next;
            c_prev = c_cur;
            c_cur = c_next;
            t_cur = t_next;
        }

        let mut inw = vec![0.0; n + 1];
        let tail = |qq: f64| (0.5 * lambda - 1.0) * qq.ln() - 0.5 * qq * qq;
        inw[n - 1] = 1.0;
        inw[n] = (tail(q[n]) - tail(q[n - 1])).exp();
        let mut c_next = self.numerov_coeffs(n, lambda).0;
        let (mut c_cur, mut t_cur) = self.numerov_coeffs(n - 1, lambda);
        for i in (m + 1..n).rev() {
            let (c_prev, t_prev) = self.numerov_coeffs(i - 1, lambda);
            inw[i - 1] = (t_cur * inw[i] - c_next * inw[i + 1]) / c_prev;
            c_next = c_cur;
            c_cur = c_prev;
            t_cur = t_prev;
            if inw[i - 1].abs() > 1e150 {
                inw[i - 1..].iter_mut().for_each(|v| *v *= 1e-150);
            }
        }
        Sweep {
            outward: out,
            inward: inw,
        }
    }

    /// Normalized discrete Wronskian of the outward and inward solutions.
    fn mismatch(&self, lambda: f64) -> f64 {
        let s = self.sweep(lambda);
        let m = self.matching;
        let (cm, _) = self.numerov_coeffs(m, lambda);
        let (cp, _) = self.numerov_coeffs(m + 1, lambda);
        let (om, op) = (cm * s.outward[m], cp * s.outward[m + 1]);
        let (im, ip) = (cm * s.inward[m], cp * s.inward[m + 1]);
        let norm = (om.hypot(op)) * (im.hypot(ip));
        (om * ip - op * im) / norm
    }
}

pub(super) fn shoot(
    spec: &PotentialSpec,
    grid: &RadialGrid,
    tol: f64,
    bracket: (f64, f64),
) -> Result<EigenResult, EigenError> {
    let log_grid = LogGrid::new(spec, grid);
    let n = log_grid.len() - 1;
    let origin = origin_behavior(spec);

    let guess = 0.5 * (bracket.0 + bracket.1);
    // Outer classical turning point for the guessed level.
    let mut matching = (0..=n).rev().find(|&i| log_grid.w[i] < guess).unwrap_or(n / 2);
    matching = matching.clamp(2, n - 3);

    let shooter = Shooter {
        grid: &log_grid,
        alpha: origin.exponent_alpha,
        w0: spec.origin_constant(),
        matching,
    };

    let (mut lo, mut hi) = bracket;
    let mut f_lo = shooter.mismatch(lo);
    let f_hi = shooter.mismatch(hi);
    if !(f_lo * f_hi < 0.0) {
        return Err(EigenError::BracketNotFound { lo, hi });
    }
    while 0.5 * (hi - lo) > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = shooter.mismatch(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);

    // Glue the two halves at the matching node.
    let s = shooter.sweep(lambda);
    let m = matching;
    let scale = s.outward[m] / s.inward[m];
    let y: Vec<f64> = (0..=n)
        .map(|i| if i <= m { s.outward[i] } else { s.inward[i] * scale })
        .collect();
    let q = &log_grid.q;
    let mut u: Vec<f64> = y.iter().zip(q).map(|(yi, qi)| yi * qi.sqrt()).collect();

    // ∫ u² dq = ∫ u² q dx
    let weights: Vec<f64> = simpson_weights(n + 1, log_grid.delta)
        .into_iter()
        .zip(q)
        .map(|(w, qi)| w * qi)
        .collect();
    let norm: f64 = u.iter().zip(&weights).map(|(ui, wi)| wi * ui * ui).sum::<f64>().sqrt();
    let sign = if u[m] < 0.0 { -1.0 } else { 1.0 };
    u.iter_mut().for_each(|v| *v *= sign / norm);

    // Residual of the Numerov recurrence, mapped back to the q-equation.
    let h2 = log_grid.delta * log_grid.delta;
    let yn: Vec<f64> = u.iter().zip(q).map(|(ui, qi)| ui / qi.sqrt()).collect();
    let mut residual: f64 = 0.0;
    for i in 1..n {
        let (cm1, _) = shooter.numerov_coeffs(i - 1, lambda);
        let (_, t0) = shooter.numerov_coeffs(i, lambda);
        let (cp1, _) = shooter.numerov_coeffs(i + 1, lambda);
        let r = (cp1 * yn[i + 1] - t0 * yn[i] + cm1 * yn[i - 1]) / h2;
        if q[i] >= RESIDUAL_Q_MIN {
            residual = residual.max((r * q[i].powf(-1.5)).abs());
        }
    }
    let peak = u.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * lambda.abs();
    Ok(EigenResult {
        gamma: 0.5 * lambda,
        lambda,
        q_samples: q.clone(),
        u_samples: u,
        weights,
        residual: residual / peak,
        method: EigenMethod::Shooting,
        spec: *spec,
        extrapolated_gamma: None,
    })
}
