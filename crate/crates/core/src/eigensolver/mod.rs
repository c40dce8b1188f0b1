//! Ground levels `λ = 2γ` of `-u'' + W(q) u = λ u` on `(0, ∞)`.
//!
//! Two independent routes are provided: Numerov shooting on a logarithmic
//! grid ([`solve_ground_shooting`]) and the 3-point finite-difference matrix
//! with Sturm bisection and Richardson extrapolation ([`solve_ground_fd`]).

mod shooting;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{
    inverse_iteration, simpson_weights, tridiag_ground, TridiagError, TridiagProblem,
};
use crate::potentials::{DValue, PotentialSpec};

/// Residuals are reported over `q ≥ RESIDUAL_Q_MIN`. Below it the `q^α`
/// origin behaviour and cancellation in `q^{-3/2}` dominate.
pub const RESIDUAL_Q_MIN: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no sign change of the matching function in [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("q_max too small: W(q_max) = {w_max:.3} is below λ + 20 = {needed:.3}")]
    GridTooShort { w_max: f64, needed: f64 },
    #[error(transparent)]
    Tridiag(#[from] TridiagError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Start of the outward shooting integration.
    pub q_min: f64,
    pub q_max: f64,
    pub n: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self {
            q_min: 1e-4,
            q_max: 12.0,
            n: 8000,
        }
    }
}

impl RadialGrid {
    pub fn new(q_min: f64, q_max: f64, n: usize) -> Result<Self, EigenError> {
        let g = Self { q_min, q_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), EigenError> {
        if !(self.q_min > 0.0 && self.q_min < self.q_max && self.q_max.is_finite()) {
            return Err(EigenError::InvalidGrid(format!(
                "need 0 < q_min < q_max, got q_min={}, q_max={}",
                self.q_min, self.q_max
            )));
        }
        if self.n < 100 {
            return Err(EigenError::InvalidGrid(format!("need n >= 100, got {}", self.n)));
        }
        Ok(())
    }

    /// Requires `W(q_max) ≥ λ + 20` so the Gaussian tail is resolved.
    pub fn check_decay(&self, spec: &PotentialSpec, lambda: f64) -> Result<(), EigenError> {
        let w_max = spec.value_at(self.q_max);
        if w_max < lambda + 20.0 {
            return Err(EigenError::GridTooShort {
                w_max,
                needed: lambda + 20.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenMethod {
    Shooting,
    FdMatrix,
}

impl EigenMethod {
    pub fn label(&self) -> &'static str {
        match self {
            EigenMethod::Shooting => "shooting",
            EigenMethod::FdMatrix => "fd_matrix",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub gamma: f64,
    pub lambda: f64,
    pub q_samples: Vec<f64>,
    /// Ground-state `u = q f`, normalized so that `Σ weights·u² = 1`.
    pub u_samples: Vec<f64>,
    /// Quadrature weights for `∫ · dq` on `q_samples`.
    pub weights: Vec<f64>,
    /// Max discrete residual of the operator equation relative to `max |λ u|`,
    /// over `q ≥ RESIDUAL_Q_MIN`.
    pub residual: f64,
    pub method: EigenMethod,
    pub spec: PotentialSpec,
    /// Richardson value `(4γ_{h/2} - γ_h)/3` (finite-difference route only).
    pub extrapolated_gamma: Option<f64>,
}

impl EigenResult {
    /// `∫ g(q) u² dq` over the normalized eigenfunction.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.q_samples
            .iter()
            .zip(&self.u_samples)
            .zip(&self.weights)
            .map(|((q, u), w)| w * g(*q) * u * u)
            .sum()
    }

    /// `⟨q²⟩`, the dimensionless momentum dispersion of the ground state.
    pub fn q2_expectation(&self) -> f64 {
        self.expectation(|q| q * q)
    }

    /// True when `u > 0` on every interior sample above `threshold · max u`.
    pub fn is_nodeless(&self, threshold: f64) -> bool {
        let peak = self.u_samples.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let n = self.u_samples.len();
        self.u_samples[1..n - 1]
            .iter()
            .all(|u| *u > 0.0 || u.abs() < threshold * peak)
    }
}

fn fd_operator(spec: &PotentialSpec, q_max: f64, n: usize) -> Result<TridiagProblem, EigenError> {
    Ok(TridiagProblem::dirichlet_operator(
        |q| spec.value_at(q),
        0.0,
        q_max,
        n,
    )?)
}

fn fd_lambda(spec: &PotentialSpec, q_max: f64, n: usize) -> Result<f64, EigenError> {
    Ok(tridiag_ground(&fd_operator(spec, q_max, n)?, 1)?[0])
}

/// Ground level from the 3-point matrix on `(0, q_max)` with `grid.n`
/// interior nodes and Dirichlet ends. `gamma` is the raw value at step `h`;
/// `extrapolated_gamma` combines it with the `h/2` grid.
pub fn solve_ground_fd(spec: &PotentialSpec, grid: &RadialGrid) -> Result<EigenResult, EigenError> {
    grid.validate()?;
    let n = grid.n;
    let problem = fd_operator(spec, grid.q_max, n)?;
    let lambda = tridiag_ground(&problem, 1)?[0];
    let lambda_half = fd_lambda(spec, grid.q_max, 2 * n + 1)?;
    let extrapolated = (4.0 * lambda_half - lambda) / 3.0;

    let h = problem.grid_step();
    let mut u = inverse_iteration(&problem, lambda)?;
    let scale = 1.0 / (u.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    u.iter_mut().for_each(|v| *v *= scale);
    let au = problem.apply(&u);
    let peak = u.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * lambda.abs();
    let residual = au
        .iter()
        .zip(&u)
        .enumerate()
        .filter(|(i, _)| (*i + 1) as f64 * h >= RESIDUAL_Q_MIN)
        .map(|(_, (a, v))| (a - lambda * v).abs())
        .fold(0.0, f64::max)
        / peak;
    let q_samples: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    // The Dirichlet end nodes are zero, so Simpson over 0..=n+1 restricted to the interior.
    let full = simpson_weights(n + 2, h);
    let weights = full[1..=n].to_vec();
    Ok(EigenResult {
        gamma: 0.5 * lambda,
        lambda,
        q_samples,
        u_samples: u,
        weights,
        residual,
        method: EigenMethod::FdMatrix,
        spec: *spec,
        extrapolated_gamma: Some(0.5 * extrapolated),
    })
}

/// Ground level by shooting. The bisection bracket is the finite-difference
/// estimate (on a coarse grid) `± 0.5` in `λ`; `tol` bounds the error in `γ`.
pub fn solve_ground_shooting(
    spec: &PotentialSpec,
    grid: &RadialGrid,
    tol: f64,
) -> Result<EigenResult, EigenError> {
    grid.validate()?;
    let estimate = fd_lambda(spec, grid.q_max, 2000)?;
    solve_ground_shooting_bracketed(spec, grid, tol, (estimate - 0.5, estimate + 0.5))
}

/// Ground level by shooting inside an explicit `λ` bracket.
pub fn solve_ground_shooting_bracketed(
    spec: &PotentialSpec,
    grid: &RadialGrid,
    tol: f64,
    bracket: (f64, f64),
) -> Result<EigenResult, EigenError> {
    grid.validate()?;
    if !(tol > 0.0) {
        return Err(EigenError::InvalidTolerance(tol));
    }
    grid.check_decay(spec, bracket.1)?;
    shooting::shoot(spec, grid, tol, bracket)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub d: DValue,
    pub gamma: Option<f64>,
    /// Richardson-extrapolated finite-difference value.
    pub gamma_fd: Option<f64>,
    /// `|γ_shooting - γ_fd|`.
    pub discrepancy: Option<f64>,
    /// Operator residual of the shooting eigenfunction.
    pub residual: Option<f64>,
    /// `⟨q²⟩` of the shooting eigenfunction.
    pub q2: Option<f64>,
    pub error: Option<String>,
}

impl GammaPoint {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub spec: PotentialSpec,
    pub grid: RadialGrid,
    pub points: Vec<GammaPoint>,
}

impl GammaCurve {
    pub fn any_failed(&self) -> bool {
        self.points.iter().any(GammaPoint::failed)
    }
}

fn gamma_point(spec: PotentialSpec, grid: &RadialGrid, tol: f64) -> GammaPoint {
    let d = spec.d();
    let fd = match solve_ground_fd(&spec, grid) {
        Ok(r) => r,
        Err(e) => {
            return GammaPoint {
                d,
                gamma: None,
                gamma_fd: None,
                discrepancy: None,
                residual: None,
                q2: None,
                error: Some(format!("fd: {e}")),
            }
        }
    };
    let gamma_fd = fd.extrapolated_gamma.unwrap_or(fd.gamma);
    let bracket = (fd.lambda - 0.5, fd.lambda + 0.5);
    match solve_ground_shooting_bracketed(&spec, grid, tol, bracket) {
        Ok(s) => GammaPoint {
            d,
            gamma: Some(s.gamma),
            gamma_fd: Some(gamma_fd),
            discrepancy: Some((s.gamma - gamma_fd).abs()),
            residual: Some(s.residual),
            q2: Some(s.q2_expectation()),
            error: None,
        },
        Err(e) => GammaPoint {
            d,
            gamma: None,
            gamma_fd: Some(gamma_fd),
            discrepancy: None,
            residual: None,
            q2: None,
            error: Some(format!("shooting: {e}")),
        },
    }
}

/// `γ(d)` for each requested `d`, by shooting with a finite-difference
/// cross-check. Points are solved in parallel; output order follows `d_values`.
pub fn gamma_curve(family: &PotentialSpec, d_values: &[DValue], grid: &RadialGrid) -> GammaCurve {
    let points = d_values
        .par_iter()
        .map(|d| gamma_point(family.with_d(*d), grid, 1e-12))
        .collect();
    GammaCurve {
        spec: *family,
        grid: *grid,
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticLimitOptions {
    /// Interior nodes of the uniform grid on `(0, q_max)`.
    pub n: usize,
    pub q_max: f64,
    /// Residuals are taken over nodes with `q ≥ q_min`; the non-smooth
    /// `q^α` origin behaviour is excluded.
    pub q_min: f64,
}

impl Default for AnalyticLimitOptions {
    fn default() -> Self {
        Self {
            n: 8000,
            q_max: 12.0,
            q_min: RESIDUAL_Q_MIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticCheck {
    pub label: &'static str,
    pub spec: PotentialSpec,
    pub gamma: f64,
    /// `max |(-D² + W - λ) u| / max |λ u|` over the window.
    pub residual: f64,
}

/// The closed-form ground states of the four homogeneous limits.
pub fn analytic_limits() -> Vec<(&'static str, PotentialSpec, f64, fn(f64) -> f64)> {
    let massless_lambda = 2.0 + 5f64.sqrt();
    fn nonrel_scalar(q: f64) -> f64 {
        q * (-0.5 * q * q).exp()
    }
    fn massless(q: f64) -> f64 {
        q.powf(0.5 * (1.0 + 5f64.sqrt())) * (-0.5 * q * q).exp()
    }
    fn nonrel_vector(q: f64) -> f64 {
        q * q * (-0.5 * q * q).exp()
    }
    vec![
        ("spin0 d=0", PotentialSpec::scalar(DValue::Finite(0.0)), 3.0, nonrel_scalar),
        ("spin0 d=inf", PotentialSpec::scalar(DValue::Infinite), massless_lambda, massless),
        ("spin1 d=0", PotentialSpec::longitudinal(DValue::Finite(0.0)), 5.0, nonrel_vector),
        ("spin1 d=inf", PotentialSpec::longitudinal(DValue::Infinite), massless_lambda, massless),
    ]
}

/// Applies the 3-point operator to each closed-form eigenfunction and reports
/// the relative residual against `λ u`.
pub fn verify_analytic_limits(options: &AnalyticLimitOptions) -> Vec<AnalyticCheck> {
    analytic_limits()
        .into_iter()
        .map(|(label, spec, lambda, u)| {
            let h = options.q_max / (options.n as f64 + 1.0);
            let mut worst: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for i in 1..=options.n {
                let q = i as f64 * h;
                let ui = u(q);
                peak = peak.max((lambda * ui).abs());
                if q < options.q_min {
                    continue;
                }
                let lap = (u(q - h) - 2.0 * ui + u(q + h)) / (h * h);
                let r = -lap + spec.value_at(q) * ui - lambda * ui;
                worst = worst.max(r.abs());
            }
            AnalyticCheck {
                label,
                spec,
                gamma: 0.5 * lambda,
                residual: worst / peak,
            }
        })
        .collect()
}
