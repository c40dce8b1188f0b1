//! Momentum-space dispersion functionals and direct minimization of the
//! uncertainty product.
//!
//! All quantities are in rescaled units: for a trial amplitude `f`,
//! `Δq² = ⟨q²⟩` and `Δr_q² = ⟨|∇f|²⟩ + ⟨w |f|²⟩`, both divided by
//! `N² = ∫|f|² d³q`, with the functional-specific weight `w`.

mod connection;
mod mesh;
mod minimize;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{integrate_damped, DescentError, QuadratureError, QuadratureSpec};
use crate::potentials::{DValue, PotentialSpec};

pub use connection::{
    check_connection, field_norms, momentum_fields, Ansatz, ConnectionReport, FieldNorms,
    MomentumFields, TransverseDenominator,
};
pub use mesh::{CylGrid, Geometry, RadialMesh};
pub use minimize::{
    minimize_on, minimize_radial, minimize_transverse_massless, random_transverse_init,
    separation_oracle, transverse_readings, MinimizeOptions, Minimized, Objective, ReadingStatus,
    SeparationOracle, TransverseReading,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("weighted integral diverges: trial function does not vanish on the q_perp = 0 axis")]
    DivergentWeight,
    #[error("trial function has zero norm")]
    ZeroNorm,
    #[error("sample count {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("{0} needs a cylindrical grid")]
    NeedsCylindrical(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Descent(#[from] DescentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionalKind {
    Spin0(DValue),
    Spin1Longitudinal(DValue),
    /// Transverse polarization, `m → ∞`: no weight term.
    TransverseNonrel,
    /// Transverse polarization, `m = 0`: weight `1/q_⊥²`.
    TransverseMassless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionFunctional {
    pub kind: FunctionalKind,
}

impl DispersionFunctional {
    pub fn spin0(d: DValue) -> Self {
        Self {
            kind: FunctionalKind::Spin0(d),
        }
    }

    pub fn longitudinal(d: DValue) -> Self {
        Self {
            kind: FunctionalKind::Spin1Longitudinal(d),
        }
    }

    pub fn transverse_nonrel() -> Self {
        Self {
            kind: FunctionalKind::TransverseNonrel,
        }
    }

    pub fn transverse_massless() -> Self {
        Self {
            kind: FunctionalKind::TransverseMassless,
        }
    }

    /// True when the functional has no preferred axis and can be evaluated on
    /// spherically symmetric trial functions.
    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, FunctionalKind::TransverseMassless)
    }

    /// True when the weight is homogeneous of degree −2 or 0, so the product
    /// `Δq² Δr_q²` is invariant under `f(q) → f(sq)`.
    pub fn is_homogeneous(&self) -> bool {
        match self.kind {
            FunctionalKind::Spin0(d) | FunctionalKind::Spin1Longitudinal(d) => {
                d.is_infinite() || d == DValue::Finite(0.0)
            }
            _ => true,
        }
    }

    /// The eigenproblem whose ground level bounds this functional.
    pub fn matching_spec(&self) -> Option<PotentialSpec> {
        match self.kind {
            FunctionalKind::Spin0(d) => Some(PotentialSpec::scalar(d)),
            FunctionalKind::Spin1Longitudinal(d) => Some(PotentialSpec::longitudinal(d)),
            FunctionalKind::TransverseNonrel => Some(PotentialSpec::scalar(DValue::Finite(0.0))),
            FunctionalKind::TransverseMassless => None,
        }
    }

    /// `q² w(q)` for the radial kinds, finite at `q = 0`.
    pub fn radial_q2_weight(&self, q: f64) -> Option<f64> {
        let x = |d: f64| d * d * q * q;
        Some(match self.kind {
            FunctionalKind::Spin0(DValue::Infinite) => 1.0,
            FunctionalKind::Spin0(DValue::Finite(d)) => {
                let s = 1.0 + x(d);
                x(d) / s + x(d) / (2.0 * s * s)
            }
            FunctionalKind::Spin1Longitudinal(DValue::Infinite) => 1.0,
            FunctionalKind::Spin1Longitudinal(DValue::Finite(d)) => {
                let s = 1.0 + x(d);
                1.0 + 1.0 / s + x(d) / (2.0 * s * s)
            }
            FunctionalKind::TransverseNonrel => 0.0,
            FunctionalKind::TransverseMassless => return None,
        })
    }

    /// Multiplicative weight of `|f|²` at `(q_⊥, q_z)`.
    pub fn weight(&self, q_perp: f64, q_z: f64) -> f64 {
        match self.kind {
            FunctionalKind::TransverseMassless => 1.0 / (q_perp * q_perp),
            _ => {
                let q2 = q_perp * q_perp + q_z * q_z;
                self.radial_q2_weight(q2.sqrt()).unwrap_or(0.0) / q2
            }
        }
    }
}

/// Result of a dispersion evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dispersions {
    pub norm_n2: f64,
    pub delta_q2: f64,
    pub delta_rq2: f64,
}

impl Dispersions {
    /// `γ = √(Δq² Δr_q²)`.
    pub fn gamma(&self) -> f64 {
        (self.delta_q2 * self.delta_rq2).sqrt()
    }

    /// `(Δq² + Δr_q²)/2`, the Rayleigh quotient of the matching eigenproblem.
    pub fn mean(&self) -> f64 {
        0.5 * (self.delta_q2 + self.delta_rq2)
    }
}

/// Trial state sampled on a mesh together with its dispersions.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighState {
    pub geometry: Geometry,
    pub f_samples: Vec<f64>,
    pub norm_n2: f64,
    pub delta_q2: f64,
    pub delta_rq2: f64,
    pub gamma: f64,
}

impl RayleighState {
    pub fn new(
        geometry: Geometry,
        f_samples: Vec<f64>,
        functional: &DispersionFunctional,
    ) -> Result<Self, VariationalError> {
        let d = dispersion_pair(&geometry, &f_samples, functional)?;
        Ok(Self {
            geometry,
            f_samples,
            norm_n2: d.norm_n2,
            delta_q2: d.delta_q2,
            delta_rq2: d.delta_rq2,
            gamma: d.gamma(),
        })
    }

    /// Samples `f(q_⊥, q_z)` at the mesh points. Radial meshes use `f(q, 0)`.
    pub fn from_fn(
        geometry: Geometry,
        f: impl Fn(f64, f64) -> f64,
        functional: &DispersionFunctional,
    ) -> Result<Self, VariationalError> {
        let samples = geometry.sample(f);
        Self::new(geometry, samples, functional)
    }
}

/// `(Δq², Δr_q²)` of samples on a mesh, with finite-volume gradients.
pub fn dispersion_pair(
    geometry: &Geometry,
    f_samples: &[f64],
    functional: &DispersionFunctional,
) -> Result<Dispersions, VariationalError> {
    mesh::MeshOperator::new(geometry, functional)?.dispersions(f_samples)
}

/// `√(Δq² Δr_q²)` of samples on a mesh.
pub fn rayleigh_gamma(
    geometry: &Geometry,
    f_samples: &[f64],
    functional: &DispersionFunctional,
) -> Result<f64, VariationalError> {
    Ok(dispersion_pair(geometry, f_samples, functional)?.gamma())
}

fn quad_ok(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        oscillation_wavelength: None,
        ..*spec
    }
}

/// Dispersions of a spherically symmetric `f` with derivative `df`, by
/// adaptive quadrature on `[0, ∞)`. `f` must decay at least exponentially.
pub fn radial_dispersions(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    functional: &DispersionFunctional,
    quad: &QuadratureSpec,
) -> Result<Dispersions, VariationalError> {
    if !functional.is_radial() {
        return Err(VariationalError::NeedsCylindrical("the transverse massless functional"));
    }
    let spec = quad_ok(quad);
    let n = integrate_damped(|q| q * q * f(q).powi(2), 1.0, &spec)?.value;
    if !(n > 0.0) {
        return Err(VariationalError::ZeroNorm);
    }
    let q4 = integrate_damped(|q| q.powi(4) * f(q).powi(2), 1.0, &spec)?.value;
    let grad = integrate_damped(|q| q * q * df(q).powi(2), 1.0, &spec)?.value;
    let weighted = integrate_damped(
        |q| functional.radial_q2_weight(q).unwrap_or(0.0) * f(q).powi(2),
        1.0,
        &spec,
    )?
    .value;
    Ok(Dispersions {
        norm_n2: 4.0 * PI * n,
        delta_q2: q4 / n,
        delta_rq2: (grad + weighted) / n,
    })
}

/// `∫ g d³q` for an axially symmetric `g(q_⊥, q_z)` decaying at least like
/// `e^{-|q|}`, by nested adaptive quadrature.
pub(crate) fn cylinder_integral(
    g: &dyn Fn(f64, f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<f64, VariationalError> {
    let inner = |qp: f64| -> f64 {
        let both = |z: f64| g(qp, z) + g(qp, -z);
        integrate_damped(both, 1.0, spec).map(|e| e.value).unwrap_or(f64::NAN)
    };
    let v = integrate_damped(|qp| 2.0 * PI * qp * inner(qp), 1.0, spec)?.value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(VariationalError::Quadrature(QuadratureError::NotConverged {
            estimate: num_complex::Complex64::new(v, 0.0),
            error: f64::INFINITY,
            intervals: 0,
        }))
    }
}

/// Dispersions of an axially symmetric `f(q_⊥, q_z)` with partial derivatives
/// `d_perp`, `d_z`, by nested adaptive quadrature over `q_⊥ ∈ [0, ∞)`,
/// `q_z ∈ (-∞, ∞)`.
pub fn cylindrical_dispersions(
    f: impl Fn(f64, f64) -> f64,
    d_perp: impl Fn(f64, f64) -> f64,
    d_z: impl Fn(f64, f64) -> f64,
    functional: &DispersionFunctional,
    quad: &QuadratureSpec,
) -> Result<Dispersions, VariationalError> {
    let spec = quad_ok(quad);
    let plane = |g: &dyn Fn(f64, f64) -> f64| cylinder_integral(g, &spec);
    let n = plane(&|qp, z| f(qp, z).powi(2))?;
    if !(n > 0.0) {
        return Err(VariationalError::ZeroNorm);
    }
    let q2 = plane(&|qp, z| (qp * qp + z * z) * f(qp, z).powi(2))?;
    let grad = plane(&|qp, z| d_perp(qp, z).powi(2) + d_z(qp, z).powi(2))?;
    let weighted = plane(&|qp, z| {
        let v = f(qp, z);
        if v == 0.0 {
            0.0
        } else {
            functional.weight(qp, z) * v * v
        }
    })?;
    Ok(Dispersions {
        norm_n2: n,
        delta_q2: q2 / n,
        delta_rq2: (grad + weighted) / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_ground_shooting, RadialGrid};
    use proptest::prelude::*;

    const GOLDEN: f64 = 2.118_033_988_749_895;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn gauss(s: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
        (move |q: f64| (-q * q / (2.0 * s * s)).exp(), move |q: f64| {
            -q / (s * s) * (-q * q / (2.0 * s * s)).exp()
        })
    }

    #[test]
    fn gaussian_is_nonrelativistic_minimum() {
        let (f, df) = gauss(1.0);
        let d = radial_dispersions(f, df, &DispersionFunctional::spin0(DValue::Finite(0.0)), &quad()).unwrap();
        assert!((d.delta_q2 - 1.5).abs() < 1e-10);
        assert!((d.delta_rq2 - 1.5).abs() < 1e-10);
        assert!((d.norm_n2 - PI.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn wrong_width_keeps_product() {
        let (f, df) = gauss(2f64.sqrt());
        let d = radial_dispersions(f, df, &DispersionFunctional::spin0(DValue::Finite(0.0)), &quad()).unwrap();
        assert!((d.delta_q2 - 3.0).abs() < 1e-10);
        assert!((d.delta_rq2 - 0.75).abs() < 1e-10);
        assert!((d.gamma() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn massless_eigenfunction_gives_golden_gamma() {
        let a = 0.5 * (5f64.sqrt() - 1.0);
        let f = move |q: f64| q.powf(a) * (-0.5 * q * q).exp();
        let df = move |q: f64| (a * q.powf(a - 1.0) - q.powf(a + 1.0)) * (-0.5 * q * q).exp();
        let d = radial_dispersions(f, df, &DispersionFunctional::spin0(DValue::Infinite), &quad()).unwrap();
        assert!((d.gamma() - GOLDEN).abs() < 1e-4, "{}", d.gamma());
    }

    #[test]
    fn non_ground_trial_exceeds_bound() {
        let f = |q: f64| (1.0 + q * q) * (-0.5 * q * q).exp();
        let df = |q: f64| (2.0 * q - q * (1.0 + q * q)) * (-0.5 * q * q).exp();
        let d = radial_dispersions(f, df, &DispersionFunctional::spin0(DValue::Finite(0.0)), &quad()).unwrap();
        assert!(d.gamma() > 1.5 + 1e-3);
    }

    #[test]
    fn transverse_separable_state_gives_five_halves() {
        let f = |qp: f64, z: f64| qp * (-0.5 * (qp * qp + z * z)).exp();
        let dp = |qp: f64, z: f64| (1.0 - qp * qp) * (-0.5 * (qp * qp + z * z)).exp();
        let dz = |qp: f64, z: f64| -z * qp * (-0.5 * (qp * qp + z * z)).exp();
        let spec = QuadratureSpec::new(1e-11, 1e-11, 20_000).unwrap();
        let d = cylindrical_dispersions(f, dp, dz, &DispersionFunctional::transverse_massless(), &spec).unwrap();
        assert!((d.gamma() - 2.5).abs() < 1e-8, "{}", d.gamma());
        assert!((d.delta_q2 - 2.5).abs() < 1e-8);
    }

    #[test]
    fn radial_functional_rejects_transverse_massless() {
        let (f, df) = gauss(1.0);
        assert!(matches!(
            radial_dispersions(f, df, &DispersionFunctional::transverse_massless(), &quad()),
            Err(VariationalError::NeedsCylindrical(_))
        ));
    }

    #[test]
    fn weights_match_potentials() {
        for d in [DValue::Finite(0.0), DValue::Finite(0.7), DValue::Infinite] {
            for (func, spec) in [
                (DispersionFunctional::spin0(d), PotentialSpec::scalar(d)),
                (DispersionFunctional::longitudinal(d), PotentialSpec::longitudinal(d)),
            ] {
                for q in [0.3, 1.0, 2.5] {
                    let w = func.weight(q, 0.0) + q * q;
                    assert!((w - spec.value_at(q)).abs() < 1e-12 * w, "{d:?} {q}");
                }
            }
        }
    }

    /// Narrow Gaussians drive the product at finite `d` toward 3/2, below the
    /// eigenvalue at that `d`; the mean stays above it.
    #[test]
    fn product_is_not_bounded_by_eigenvalue_at_finite_d() {
        let d = DValue::Finite(1.0);
        let ground = solve_ground_shooting(&PotentialSpec::scalar(d), &RadialGrid::default(), 1e-12)
            .unwrap()
            .gamma;
        let (f, df) = gauss(0.2);
        let disp = radial_dispersions(f, df, &DispersionFunctional::spin0(d), &quad()).unwrap();
        assert!(disp.gamma() < ground - 0.1, "{} vs {ground}", disp.gamma());
        assert!(disp.mean() >= ground);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn product_is_scale_invariant_for_homogeneous_weights(s in 0.4f64..2.5, b in 0.0f64..1.5) {
            let trial = move |scale: f64| {
                let f = move |q: f64| { let x = q * scale; (1.0 + b * x * x) * (-0.5 * x * x).exp() };
                let df = move |q: f64| {
                    let x = q * scale;
                    scale * (2.0 * b * x - x * (1.0 + b * x * x)) * (-0.5 * x * x).exp()
                };
                (f, df)
            };
            for func in [
                DispersionFunctional::spin0(DValue::Finite(0.0)),
                DispersionFunctional::transverse_nonrel(),
            ] {
                let (f1, d1) = trial(1.0);
                let (fs, ds) = trial(s);
                let g1 = radial_dispersions(f1, d1, &func, &quad()).unwrap().gamma();
                let gs = radial_dispersions(fs, ds, &func, &quad()).unwrap().gamma();
                prop_assert!((g1 - gs).abs() < 1e-8, "{} vs {}", g1, gs);
            }
            let (f1, d1) = trial(1.0);
            let (fs, ds) = trial(s);
            let func = DispersionFunctional::spin0(DValue::Finite(1.0));
            let g1 = radial_dispersions(f1, d1, &func, &quad()).unwrap().gamma();
            let gs = radial_dispersions(fs, ds, &func, &quad()).unwrap().gamma();
            if (s - 1.0).abs() > 0.05 {
                prop_assert!((g1 - gs).abs() > 1e-6);
            }
        }

        #[test]
        fn transverse_massless_product_is_scale_invariant(s in 0.5f64..2.0) {
            let spec = QuadratureSpec::new(1e-10, 1e-10, 20_000).unwrap();
            let eval = |k: f64| {
                let f = move |qp: f64, z: f64| qp * (-0.5 * k * k * (qp * qp + z * z)).exp() * (1.0 + 0.3 * z * z * k * k);
                let dp = move |qp: f64, z: f64| {
                    (1.0 - k * k * qp * qp) * (-0.5 * k * k * (qp * qp + z * z)).exp() * (1.0 + 0.3 * z * z * k * k)
                };
                let dz = move |qp: f64, z: f64| {
                    let e = (-0.5 * k * k * (qp * qp + z * z)).exp();
                    qp * e * (0.6 * z * k * k - k * k * z * (1.0 + 0.3 * z * z * k * k))
                };
                cylindrical_dispersions(f, dp, dz, &DispersionFunctional::transverse_massless(), &spec).unwrap().gamma()
            };
            let (g1, gs) = (eval(1.0), eval(s));
            prop_assert!((g1 - gs).abs() < 1e-8, "{} vs {}", g1, gs);
        }

        /// Variational bound for the homogeneous functionals, and for the
        /// mean `(Δq² + Δr_q²)/2` at finite `d`.
        #[test]
        fn trial_states_respect_bound(sigma in 0.5f64..2.0, b in 0.0f64..1.0, d in prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, f64::INFINITY])) {
            let f = move |q: f64| (1.0 + b * q * q) * (-q * q / (2.0 * sigma * sigma)).exp();
            let df = move |q: f64| (2.0 * b * q - q / (sigma * sigma) * (1.0 + b * q * q)) * (-q * q / (2.0 * sigma * sigma)).exp();
            let dv = if d.is_infinite() { DValue::Infinite } else { DValue::Finite(d) };
            let grid = RadialGrid::new(1e-4, 12.0, 2000).unwrap();
            for func in [DispersionFunctional::spin0(dv), DispersionFunctional::longitudinal(dv)] {
                let ground = solve_ground_shooting(&func.matching_spec().unwrap(), &grid, 1e-10).unwrap().gamma;
                let disp = radial_dispersions(f, df, &func, &quad()).unwrap();
                prop_assert!(disp.mean() >= ground - 1e-6);
                if func.is_homogeneous() {
                    prop_assert!(disp.gamma() >= ground - 1e-6, "{} < {}", disp.gamma(), ground);
                }
            }
        }
    }
}
