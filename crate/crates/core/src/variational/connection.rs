//! Fourier-space spin-1 fields at `t = 0` for the longitudinal and transverse
//! ansätze, and their link `-iE π̃ = p × (p × φ̃) - m² φ̃`.
//!
//! Fields are per unit amplitude `f(p)` with the common factor
//! `1/(√2 (2π)^{3/2})` dropped; the energy density in momentum space is then
//! `ε̃ = ½ [|π̃|² + |p·π̃|²/m² + |p × φ̃|² + m² |φ̃|²]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cylinder_integral, VariationalError};
use crate::numkernel::QuadratureSpec;

type CVec = [Complex64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransverseDenominator {
    /// `√(2m² + p_⊥²)`.
    AsPrinted,
    /// `√(m² + p_⊥²)`, for which `ε̃ = |f|²` pointwise.
    #[default]
    EnergyNormalized,
}

impl TransverseDenominator {
    pub fn value(&self, mass: f64, p_perp2: f64) -> f64 {
        match self {
            Self::AsPrinted => (2.0 * mass * mass + p_perp2).sqrt(),
            Self::EnergyNormalized => (mass * mass + p_perp2).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ansatz {
    /// Polarization along `p/|p|`; `π̃` as given alongside `φ̃`.
    Longitudinal,
    /// Polarization along `z`; `π̃` reconstructed from `φ̃`.
    Transverse(TransverseDenominator),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumFields {
    pub phi: CVec,
    pub pi: CVec,
}

fn cross(a: [f64; 3], b: &CVec) -> CVec {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

fn dot_real(a: [f64; 3], b: &CVec) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

fn norm2(v: &CVec) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `p × (p × φ̃) - m² φ̃`.
fn curl_curl_mass(p: [f64; 3], phi: &CVec, mass: f64) -> CVec {
    let cc = cross(p, &cross(p, phi));
    let m2 = mass * mass;
    [cc[0] - phi[0] * m2, cc[1] - phi[1] * m2, cc[2] - phi[2] * m2]
}

/// Fields at momentum `p` for amplitude `f`. At `p = 0` the longitudinal
/// direction is `z`. A transverse field with zero denominator (`m = 0` on the
/// `p_⊥ = 0` axis) is returned as zero; the amplitude must vanish there.
pub fn momentum_fields(ansatz: Ansatz, p: [f64; 3], mass: f64, f: f64) -> MomentumFields {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let energy = (mass * mass + p2).sqrt();
    let zero = Complex64::new(0.0, 0.0);
    match ansatz {
        Ansatz::Longitudinal => {
            let norm = p2.sqrt();
            let dir = if norm > 0.0 {
                [p[0] / norm, p[1] / norm, p[2] / norm]
            } else {
                [0.0, 0.0, 1.0]
            };
            let phi = dir.map(|d| Complex64::new(d * f / mass, 0.0));
            let pi = dir.map(|d| Complex64::new(0.0, -mass * d * f / energy));
            MomentumFields { phi, pi }
        }
        Ansatz::Transverse(denom) => {
            let d = denom.value(mass, p[0] * p[0] + p[1] * p[1]);
            if d == 0.0 || energy == 0.0 {
                return MomentumFields {
                    phi: [zero; 3],
                    pi: [zero; 3],
                };
            }
            let phi = [zero, zero, Complex64::new(f / d, 0.0)];
            let rhs = curl_curl_mass(p, &phi, mass);
            let i_over_e = Complex64::new(0.0, 1.0 / energy);
            let pi = rhs.map(|c| c * i_over_e);
            MomentumFields { phi, pi }
        }
    }
}

/// `ε̃` at momentum `p`. For `m = 0` the `|p·π̃|²/m²` term is dropped; both
/// ansätze give `p·π̃ ∝ m²` there.
pub fn momentum_energy_density(fields: &MomentumFields, p: [f64; 3], mass: f64) -> f64 {
    let div = if mass > 0.0 {
        dot_real(p, &fields.pi).norm_sqr() / (mass * mass)
    } else {
        0.0
    };
    0.5 * (norm2(&fields.pi) + div + norm2(&cross(p, &fields.phi)) + mass * mass * norm2(&fields.phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectionReport {
    pub samples: usize,
    /// `max |−iE π̃ − [p × (p × φ̃) − m² φ̃]|`, relative to
    /// `E|π̃| + (|p|² + m²)|φ̃|` at each momentum.
    pub max_residual: f64,
    /// `max |ε̃/|f|² − 1|` over the samples.
    pub max_density_deviation: f64,
}

/// Evaluates the Fourier-space link for `ansatz` at each momentum with unit
/// amplitude.
pub fn check_connection(
    ansatz: Ansatz,
    momenta: &[[f64; 3]],
    mass: f64,
) -> Result<ConnectionReport, VariationalError> {
    let mass_ok = match ansatz {
        Ansatz::Longitudinal => mass > 0.0,
        Ansatz::Transverse(_) => mass >= 0.0,
    };
    if !(mass_ok && mass.is_finite()) {
        return Err(VariationalError::InvalidArgument(format!("mass {mass} for {ansatz:?}")));
    }
    let mut max_residual: f64 = 0.0;
    let mut max_density_deviation: f64 = 0.0;
    for &p in momenta {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(VariationalError::InvalidArgument(format!("momentum {p:?}")));
        }
        let fields = momentum_fields(ansatz, p, mass, 1.0);
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let energy = (mass * mass + p2).sqrt();
        let rhs = curl_curl_mass(p, &fields.phi, mass);
        let lhs = fields.pi.map(|c| c * Complex64::new(0.0, -energy));
        let r: CVec = [lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2]];
        let scale = energy * norm2(&fields.pi).sqrt() + (p2 + mass * mass) * norm2(&fields.phi).sqrt();
        if scale > 0.0 {
            max_residual = max_residual.max(norm2(&r).sqrt() / scale);
            let eps = momentum_energy_density(&fields, p, mass);
            max_density_deviation = max_density_deviation.max((eps - 1.0).abs());
        }
    }
    Ok(ConnectionReport {
        samples: momenta.len(),
        max_residual,
        max_density_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldNorms {
    /// `∫ ε̃ d³p` from the reconstructed fields.
    pub n2_fields: f64,
    /// `∫ |f|² d³p`.
    pub n2_direct: f64,
    /// `∫ p² ε̃ d³p / ∫ ε̃ d³p`.
    pub dp2_fields: f64,
    /// `∫ p² |f|² d³p / ∫ |f|² d³p`.
    pub dp2_direct: f64,
}

/// Energy-weighted norm and momentum dispersion of an axially symmetric
/// amplitude `f(p_⊥, p_z)`, once through the fields and once directly.
pub fn field_norms(
    ansatz: Ansatz,
    mass: f64,
    f: &dyn Fn(f64, f64) -> f64,
    quad: &QuadratureSpec,
) -> Result<FieldNorms, VariationalError> {
    check_connection(ansatz, &[], mass)?;
    let eps = |pp: f64, pz: f64| {
        let p = [pp, 0.0, pz];
        momentum_energy_density(&momentum_fields(ansatz, p, mass, f(pp, pz)), p, mass)
    };
    let n2_fields = cylinder_integral(&eps, quad)?;
    let n2_direct = cylinder_integral(&|pp, pz| f(pp, pz).powi(2), quad)?;
    if !(n2_direct > 0.0) {
        return Err(VariationalError::ZeroNorm);
    }
    let p2_fields = cylinder_integral(&|pp, pz| (pp * pp + pz * pz) * eps(pp, pz), quad)?;
    let p2_direct = cylinder_integral(&|pp, pz| (pp * pp + pz * pz) * f(pp, pz).powi(2), quad)?;
    Ok(FieldNorms {
        n2_fields,
        n2_direct,
        dp2_fields: p2_fields / n2_fields,
        dp2_direct: p2_direct / n2_direct,
    })
}
