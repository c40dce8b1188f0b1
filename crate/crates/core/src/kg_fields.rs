//! Radial Klein-Gordon wavepackets in position space.
//!
//! The damped packet is
//! `φ(r, t) = ∫₀^∞ p² j₀(pr) f(p) e^{-(a+it)E_p} dp`, `E_p = √(m²+p²)`,
//! and the `t = 0` state built from a momentum amplitude `f` is
//! `φ = c ∫ p² j₀(pr) f/E_p dp`, `π = -i c ∫ p² j₀(pr) f dp` with
//! `c = 4π / (√2 (2π)^{3/2})`, so that `∫ε d³r = ∫|f|² d³p`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numkernel::{
    integrate_damped, integrate_finite, simpson_weights, QuadratureError, QuadratureSpec,
};

/// Samples with `|ρ|` below this are treated as zero when locating shells.
pub const SHELL_DEAD_BAND: f64 = 1e-12;

/// `4π / (√2 (2π)^{3/2})`; its square is `1/π`.
pub fn state_prefactor() -> f64 {
    4.0 * PI / (2f64.sqrt() * (2.0 * PI).powf(1.5))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("damping a must be positive and finite, got {0}")]
    InvalidDamping(f64),
    #[error("radius must be finite and nonnegative, got {0}")]
    InvalidRadius(f64),
    #[error("radii must be positive and strictly ascending")]
    InvalidRadii,
    #[error("profile has no finite momentum cutoff; a damped packet is required")]
    UnboundedProfile,
    #[error("invalid tabulated profile: {0}")]
    InvalidTable(&'static str),
    #[error("density scan failed at r = {r}: {message}")]
    ScanFailed { r: f64, message: String },
    #[error("quadrature failed at r = {r}: {source}")]
    Quadrature { r: f64, source: QuadratureError },
}

/// Real spectral amplitude `f(p)` on `[0, ∞)`.
#[derive(Clone)]
pub enum SpectralProfile {
    /// `cos(p/m) / √(m² + p²)`.
    Cosine,
    /// `e^{-p²/(2σ²)}`.
    Gaussian { sigma: f64 },
    /// Piecewise linear through `(p, f)`, zero beyond the last abscissa.
    Tabulated { p: Vec<f64>, f: Vec<f64> },
    /// Arbitrary amplitude, taken as zero beyond `cutoff`.
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        cutoff: f64,
    },
}

impl fmt::Debug for SpectralProfile {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralProfile::Cosine => write!(fm, "Cosine"),
            SpectralProfile::Gaussian { sigma } => write!(fm, "Gaussian {{ sigma: {sigma} }}"),
            SpectralProfile::Tabulated { p, .. } => write!(fm, "Tabulated({} points)", p.len()),
            SpectralProfile::Custom { cutoff, .. } => write!(fm, "Custom {{ cutoff: {cutoff} }}"),
        }
    }
}

impl SpectralProfile {
    pub fn tabulated(p: Vec<f64>, f: Vec<f64>) -> Result<Self, FieldError> {
        if p.len() != f.len() || p.len() < 2 {
            return Err(FieldError::InvalidTable("need at least two (p, f) pairs of equal length"));
        }
        if p[0] < 0.0 || p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FieldError::InvalidTable("abscissae must be nonnegative and ascending"));
        }
        if f.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(FieldError::InvalidTable("non-finite entry"));
        }
        Ok(SpectralProfile::Tabulated { p, f })
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, cutoff: f64) -> Self {
        SpectralProfile::Custom {
            f: Arc::new(f),
            cutoff,
        }
    }

    pub fn zero() -> Self {
        Self::custom(|_| 0.0, 1.0)
    }

    pub fn eval(&self, p: f64, mass: f64) -> f64 {
        match self {
            SpectralProfile::Cosine => (p / mass).cos() / mass.hypot(p),
            SpectralProfile::Gaussian { sigma } => (-0.5 * (p / sigma).powi(2)).exp(),
            SpectralProfile::Tabulated { p: ps, f } => {
                if p < ps[0] || p > ps[ps.len() - 1] {
                    return 0.0;
                }
                let k = ps.partition_point(|x| *x <= p).clamp(1, ps.len() - 1);
                let t = (p - ps[k - 1]) / (ps[k] - ps[k - 1]);
                f[k - 1] + t * (f[k] - f[k - 1])
            }
            SpectralProfile::Custom { f, cutoff } => {
                if p > *cutoff {
                    0.0
                } else {
                    f(p)
                }
            }
        }
    }

    /// Momentum beyond which the amplitude is negligible (below `1e-15` of
    /// its scale for the Gaussian), or `None` when it decays only as a power.
    pub fn cutoff(&self) -> Option<f64> {
        match self {
            SpectralProfile::Cosine => None,
            SpectralProfile::Gaussian { sigma } => Some(sigma * 70f64.sqrt()),
            SpectralProfile::Tabulated { p, .. } => Some(p[p.len() - 1]),
            SpectralProfile::Custom { cutoff, .. } => Some(*cutoff),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WavepacketParams {
    pub mass: f64,
    pub damping_a: f64,
    pub time_t: f64,
    pub profile: SpectralProfile,
}

impl WavepacketParams {
    pub fn new(mass: f64, damping_a: f64, time_t: f64, profile: SpectralProfile) -> Result<Self, FieldError> {
        let p = Self {
            mass,
            damping_a,
            time_t,
            profile,
        };
        p.validate()?;
        Ok(p)
    }

    /// The charge-density demonstration: `m = 1`, `a = 0.5`, `t = 0.05`.
    pub fn reference() -> Self {
        Self {
            mass: 1.0,
            damping_a: 0.5,
            time_t: 0.05,
            profile: SpectralProfile::Cosine,
        }
    }

    pub fn at_time(&self, t: f64) -> Self {
        Self {
            time_t: t,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(FieldError::InvalidMass(self.mass));
        }
        if !(self.damping_a > 0.0 && self.damping_a.is_finite()) {
            return Err(FieldError::InvalidDamping(self.damping_a));
        }
        Ok(())
    }

    fn energy(&self, p: f64) -> f64 {
        self.mass.hypot(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub phi: Complex64,
    pub dt_phi: Complex64,
    pub dr_phi: Complex64,
}

/// `p² j₀(pr)`, finite at `r = 0`.
pub fn radial_kernel(p: f64, r: f64) -> f64 {
    let x = p * r;
    let j0 = if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x.sin() / x
    };
    p * p * j0
}

/// `∂_r [p² j₀(pr)] = -p³ j₁(pr)`.
pub fn radial_kernel_dr(p: f64, r: f64) -> f64 {
    let x = p * r;
    let j1 = if x.abs() < 0.1 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        (x.sin() - x * x.cos()) / (x * x)
    };
    -p * p * p * j1
}

fn oscillatory(quad: &QuadratureSpec, r: f64) -> QuadratureSpec {
    let wavelength = if r > 0.0 { Some(2.0 * PI / r) } else { None };
    quad.with_wavelength(wavelength)
}

fn check_radius(r: f64) -> Result<(), FieldError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(FieldError::InvalidRadius(r));
    }
    Ok(())
}

/// `φ`, `∂ₜφ` and `∂ᵣφ` of the damped packet at radius `r`.
pub fn field_sample(r: f64, params: &WavepacketParams, quad: &QuadratureSpec) -> Result<FieldSample, FieldError> {
    params.validate()?;
    check_radius(r)?;
    let spec = oscillatory(quad, r);
    let (m, a, t) = (params.mass, params.damping_a, params.time_t);
    let amplitude = |p: f64| -> (Complex64, f64) {
        let e = params.energy(p);
        let g = params.profile.eval(p, m) * (-a * e).exp();
        (Complex64::from_polar(g, -t * e), e)
    };
    let wrap = |source| FieldError::Quadrature { r, source };
    let phi = integrate_damped(|p| amplitude(p).0 * radial_kernel(p, r), a, &spec).map_err(wrap)?;
    let dt_phi = integrate_damped(
        |p| {
            let (g, e) = amplitude(p);
            g * Complex64::new(0.0, -e) * radial_kernel(p, r)
        },
        a,
        &spec,
    )
    .map_err(wrap)?;
    let dr_phi =
        integrate_damped(|p| amplitude(p).0 * radial_kernel_dr(p, r), a, &spec).map_err(wrap)?;
    Ok(FieldSample {
        phi: phi.value,
        dt_phi: dt_phi.value,
        dr_phi: dr_phi.value,
    })
}

/// `φ`, `π = ∂ₜφ` and `∂ᵣφ` at `t = 0` of the state with momentum amplitude `f`.
pub fn momentum_state_sample(
    r: f64,
    profile: &SpectralProfile,
    mass: f64,
    quad: &QuadratureSpec,
) -> Result<FieldSample, FieldError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(FieldError::InvalidMass(mass));
    }
    check_radius(r)?;
    let cutoff = profile.cutoff().ok_or(FieldError::UnboundedProfile)?;
    let spec = oscillatory(quad, r);
    let c = state_prefactor();
    let wrap = |source| FieldError::Quadrature { r, source };
    let over_e = |p: f64| profile.eval(p, mass) / mass.hypot(p);
    let phi = integrate_finite(|p| over_e(p) * radial_kernel(p, r), 0.0, cutoff, &spec).map_err(wrap)?;
    let pi = integrate_finite(|p| profile.eval(p, mass) * radial_kernel(p, r), 0.0, cutoff, &spec)
        .map_err(wrap)?;
    let dr = integrate_finite(|p| over_e(p) * radial_kernel_dr(p, r), 0.0, cutoff, &spec).map_err(wrap)?;
    Ok(FieldSample {
        phi: Complex64::new(c * phi.value, 0.0),
        dt_phi: Complex64::new(0.0, -c * pi.value),
        dr_phi: Complex64::new(c * dr.value, 0.0),
    })
}

/// `ρ = (i/2)(φ*∂ₜφ - φ∂ₜφ*) = -Im(φ* ∂ₜφ)`.
pub fn charge_density(sample: &FieldSample) -> f64 {
    -(sample.phi.conj() * sample.dt_phi).im
}

/// `ε = |∂ₜφ|² + |∂ᵣφ|² + m²|φ|²`.
pub fn energy_density(sample: &FieldSample, mass: f64) -> f64 {
    sample.dt_phi.norm_sqr() + sample.dr_phi.norm_sqr() + mass * mass * sample.phi.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativeShell {
    /// Interpolated inner zero crossing of `ρ`.
    pub r_min: f64,
    /// Interpolated outer zero crossing of `ρ`.
    pub r_max: f64,
    pub rho_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityField {
    pub radii: Vec<f64>,
    pub rho: Vec<f64>,
    pub eps: Vec<f64>,
    pub negative_shells: Vec<NegativeShell>,
    /// Radii whose quadrature failed; their `rho` and `eps` are NaN.
    pub failures: Vec<(f64, String)>,
}

fn zero_crossing(r0: f64, v0: f64, r1: f64, v1: f64) -> f64 {
    if v0 == v1 {
        0.5 * (r0 + r1)
    } else {
        r0 + (r1 - r0) * v0 / (v0 - v1)
    }
}

/// Maximal runs of samples with `ρ < -dead_band`, with interpolated edges.
pub fn find_negative_shells(radii: &[f64], rho: &[f64], dead_band: f64) -> Vec<NegativeShell> {
    let mut shells = Vec::new();
    let mut i = 0;
    let n = radii.len();
    while i < n {
        if !(rho[i] < -dead_band) {
            i += 1;
            continue;
        }
        let start = i;
        let mut rho_min = rho[i];
        while i < n && rho[i] < -dead_band {
            rho_min = rho_min.min(rho[i]);
            i += 1;
        }
        let end = i - 1;
        let r_min = if start > 0 && rho[start - 1].is_finite() {
            zero_crossing(radii[start - 1], rho[start - 1], radii[start], rho[start])
        } else {
            radii[start]
        };
        let r_max = if end + 1 < n && rho[end + 1].is_finite() {
            zero_crossing(radii[end], rho[end], radii[end + 1], rho[end + 1])
        } else {
            radii[end]
        };
        shells.push(NegativeShell { r_min, r_max, rho_min });
    }
    shells
}

impl DensityField {
    /// `ρ` on the plane `y = 0`, using `ρ(x, 0, z) = ρ(√(x² + z²))` with
    /// linear interpolation in `r`. Points beyond the last radius are omitted.
    pub fn planar_map(&self, half_width: f64, step: f64) -> Vec<(f64, f64, f64)> {
        let n = (half_width / step).round() as i64;
        let r_last = *self.radii.last().unwrap_or(&0.0);
        let mut out = Vec::new();
        for iz in -n..=n {
            let z = iz as f64 * step;
            for ix in -n..=n {
                let x = ix as f64 * step;
                let r = x.hypot(z);
                if r > r_last + 1e-12 {
                    continue;
                }
                out.push((x, z, self.rho_at(r)));
            }
        }
        out
    }

    fn rho_at(&self, r: f64) -> f64 {
        let radii = &self.radii;
        if r <= radii[0] {
            return self.rho[0];
        }
        let k = radii.partition_point(|x| *x <= r).clamp(1, radii.len() - 1);
        let t = ((r - radii[k - 1]) / (radii[k] - radii[k - 1])).min(1.0);
        self.rho[k - 1] + t * (self.rho[k] - self.rho[k - 1])
    }
}

fn check_radii(radii: &[f64]) -> Result<(), FieldError> {
    if radii.is_empty() || !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FieldError::InvalidRadii);
    }
    Ok(())
}

/// `rmax/dr` equally spaced radii `dr, 2dr, …, rmax`.
pub fn uniform_radii(r_max: f64, dr: f64) -> Vec<f64> {
    let n = (r_max / dr).round() as usize;
    (1..=n).map(|i| i as f64 * dr).collect()
}

/// Samples `ρ` and `ε` at every radius (in parallel) and locates the
/// negative-charge shells. A failed radius is recorded and skipped.
pub fn scan_density(params: &WavepacketParams, radii: &[f64], quad: &QuadratureSpec) -> Result<DensityField, FieldError> {
    params.validate()?;
    check_radii(radii)?;
    let samples: Vec<Result<FieldSample, FieldError>> =
        radii.par_iter().map(|&r| field_sample(r, params, quad)).collect();
    let mut rho = Vec::with_capacity(radii.len());
    let mut eps = Vec::with_capacity(radii.len());
    let mut failures = Vec::new();
    for (r, s) in radii.iter().zip(samples) {
        match s {
            Ok(s) => {
                rho.push(charge_density(&s));
                eps.push(energy_density(&s, params.mass));
            }
            Err(e) => {
                rho.push(f64::NAN);
                eps.push(f64::NAN);
                failures.push((*r, e.to_string()));
            }
        }
    }
    let negative_shells = find_negative_shells(radii, &rho, SHELL_DEAD_BAND);
    Ok(DensityField {
        radii: radii.to_vec(),
        rho,
        eps,
        negative_shells,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeEstimate {
    pub value: f64,
    /// Share of the integral from the outermost tenth of the radial range.
    pub tail_fraction: f64,
    /// Set when `tail_fraction` exceeds the quadrature's relative tolerance.
    pub tail_warning: bool,
}

/// `∫ g(r) 4πr² dr` on `radii` extended by `r = 0`; Simpson when the grid is
/// uniform from the origin, trapezoid otherwise.
fn radial_volume_integral(radii: &[f64], g: &[f64]) -> (f64, f64) {
    let mut r = vec![0.0];
    r.extend_from_slice(radii);
    let mut v = vec![0.0];
    v.extend(radii.iter().zip(g).map(|(ri, gi)| 4.0 * PI * ri * ri * gi));
    let h = r[1];
    let uniform = r.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    let weights = if uniform {
        simpson_weights(r.len(), h)
    } else {
        let mut w = vec![0.0; r.len()];
        for k in 0..r.len() - 1 {
            let dh = r[k + 1] - r[k];
            w[k] += 0.5 * dh;
            w[k + 1] += 0.5 * dh;
        }
        w
    };
    let r_tail = 0.9 * r[r.len() - 1];
    let mut total = 0.0;
    let mut tail = 0.0;
    for ((ri, vi), wi) in r.iter().zip(&v).zip(&weights) {
        total += wi * vi;
        if *ri >= r_tail {
            tail += wi * vi;
        }
    }
    (total, tail)
}

/// `Q = ∫ρ d³r` by radial quadrature on `radii`.
pub fn total_charge(params: &WavepacketParams, radii: &[f64], quad: &QuadratureSpec) -> Result<ChargeEstimate, FieldError> {
    let field = scan_density(params, radii, quad)?;
    if let Some((r, message)) = field.failures.first() {
        return Err(FieldError::ScanFailed {
            r: *r,
            message: message.clone(),
        });
    }
    let (value, tail) = radial_volume_integral(radii, &field.rho);
    let tail_fraction = if value != 0.0 { (tail / value).abs() } else { 0.0 };
    Ok(ChargeEstimate {
        value,
        tail_fraction,
        tail_warning: tail_fraction > quad.rel_tol,
    })
}

/// Momentum-space charge `2π² ∫ p² E_p f² e^{-2aE_p} dp`, independent of `t`.
pub fn momentum_charge(params: &WavepacketParams, quad: &QuadratureSpec) -> Result<f64, FieldError> {
    params.validate()?;
    let (m, a) = (params.mass, params.damping_a);
    let est = integrate_damped(
        |p| {
            let e = m.hypot(p);
            let f = params.profile.eval(p, m);
            p * p * e * f * f * (-2.0 * a * e).exp()
        },
        2.0 * a,
        quad,
    )
    .map_err(|source| FieldError::Quadrature { r: 0.0, source })?;
    Ok(2.0 * PI * PI * est.value)
}

/// Momentum-space energy `4π² ∫ p² E_p² f² e^{-2aE_p} dp` of the packet
/// (equal to `∫ε d³r`, independent of `t`).
pub fn momentum_energy(params: &WavepacketParams, quad: &QuadratureSpec) -> Result<f64, FieldError> {
    params.validate()?;
    let (m, a) = (params.mass, params.damping_a);
    let est = integrate_damped(
        |p| {
            let e = m.hypot(p);
            let f = params.profile.eval(p, m);
            p * p * e * e * f * f * (-2.0 * a * e).exp()
        },
        2.0 * a,
        quad,
    )
    .map_err(|source| FieldError::Quadrature { r: 0.0, source })?;
    Ok(4.0 * PI * PI * est.value)
}

/// `N² = 4π ∫ p² f² dp`.
pub fn momentum_norm(profile: &SpectralProfile, mass: f64, quad: &QuadratureSpec) -> Result<f64, FieldError> {
    let cutoff = profile.cutoff().ok_or(FieldError::UnboundedProfile)?;
    let est = integrate_finite(
        |p| {
            let f = profile.eval(p, mass);
            p * p * f * f
        },
        0.0,
        cutoff,
        quad,
    )
    .map_err(|source| FieldError::Quadrature { r: 0.0, source })?;
    Ok(4.0 * PI * est.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositionDispersion {
    /// `Δr² = ∫ r² ε d³r / N²`.
    pub delta_r2: f64,
    /// `∫ ε d³r`, which equals `N²` for a converged quadrature.
    pub energy: f64,
    /// Momentum-space `N²`.
    pub norm_n2: f64,
    /// Radius where the outer quadrature was truncated.
    pub r_max: f64,
}

/// `Δr²` of the `t = 0` state with amplitude `f` by position-space quadrature
/// of `r² ε(r)`. The outer integral assumes `ε` falls off at least as
/// `e^{-2mr}` and extends its range while sampled values are above tolerance.
pub fn position_dispersion_direct(
    profile: &SpectralProfile,
    mass: f64,
    quad: &QuadratureSpec,
) -> Result<PositionDispersion, FieldError> {
    let norm_n2 = momentum_norm(profile, mass, quad)?;
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 1e-2,
        ..*quad
    };
    let eps = |r: f64| -> f64 {
        momentum_state_sample(r, profile, mass, &inner)
            .map(|s| energy_density(&s, mass))
            .unwrap_or(f64::NAN)
    };
    let outer = QuadratureSpec {
        oscillation_wavelength: None,
        ..*quad
    };
    let decay = (2.0 * mass).min(2.0);
    let scale = 4.0 * PI * norm_n2;
    let weighted = integrate_damped(|r| 4.0 * PI * r.powi(4) * eps(r) / scale, decay, &outer)
        .map_err(|source| FieldError::Quadrature { r: f64::NAN, source })?;
    let energy = integrate_finite(|r| 4.0 * PI * r * r * eps(r) / scale, 0.0, weighted.upper_limit, &outer)
        .map_err(|source| FieldError::Quadrature { r: f64::NAN, source })?;
    if !(weighted.value.is_finite() && energy.value.is_finite()) {
        return Err(FieldError::ScanFailed {
            r: weighted.upper_limit,
            message: "inner quadrature failed inside the radial integral".into(),
        });
    }
    Ok(PositionDispersion {
        delta_r2: weighted.value * scale / norm_n2,
        energy: energy.value * scale,
        norm_n2,
        r_max: weighted.upper_limit,
    })
}
