//! Cell-centred finite-volume meshes for the dispersion functionals.
//!
//! Unknowns live at cell centres. In the scaled coordinates
//! `x_k = √μ_k f_k` (`μ_k` the cell volume) the norm is Euclidean,
//! `Δq² = xᵀQx / xᵀx` with diagonal `Q`, and `Δr_q² = xᵀKx / xᵀx` with the
//! symmetric stiffness `K` (face differences plus weight). The mesh edge is a
//! Dirichlet wall; the axis face has zero area.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{DispersionFunctional, Dispersions, FunctionalKind, VariationalError};
use crate::numkernel::solve_tridiagonal;

/// Radial cells `q_i = (i + ½) h`, `i < n`, on `(0, n h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub h: f64,
    pub n: usize,
}

impl RadialMesh {
    pub fn new(h: f64, q_max: f64) -> Result<Self, VariationalError> {
        if !(h > 0.0 && q_max > 4.0 * h && q_max.is_finite()) {
            return Err(VariationalError::InvalidGrid(format!("radial mesh h={h}, q_max={q_max}")));
        }
        Ok(Self {
            h,
            n: (q_max / h).round() as usize,
        })
    }

    pub fn q(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn q_max(&self) -> f64 {
        self.n as f64 * self.h
    }
}

impl Default for RadialMesh {
    fn default() -> Self {
        Self { h: 0.01, n: 1000 }
    }
}

/// Axisymmetric mesh: `q_⊥` cells `(i + ½) h_⊥` on `(0, q_⊥max)`, `q_z` nodes
/// `-L + (j + 1) h_z` strictly inside `(-L, L)`. Samples are stored with `j`
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub h_perp: f64,
    pub n_perp: usize,
    pub h_z: f64,
    pub n_z: usize,
    pub z_half: f64,
}

impl CylGrid {
    pub fn new(h_perp: f64, q_perp_max: f64, h_z: f64, z_half: f64) -> Result<Self, VariationalError> {
        if !(h_perp > 0.0 && h_z > 0.0 && q_perp_max > 4.0 * h_perp && z_half > 2.0 * h_z) {
            return Err(VariationalError::InvalidGrid(format!(
                "cylindrical grid h_perp={h_perp}, q_perp_max={q_perp_max}, h_z={h_z}, z_half={z_half}"
            )));
        }
        let n_perp = (q_perp_max / h_perp).round() as usize;
        let n_z = (2.0 * z_half / h_z).round() as usize - 1;
        Ok(Self {
            h_perp,
            n_perp,
            h_z,
            n_z,
            z_half,
        })
    }

    /// `q_⊥ ∈ (0, 8]`, `q_z ∈ [-8, 8]`, both steps `h`.
    pub fn square(h: f64) -> Self {
        Self::new(h, 8.0, h, 8.0).expect("valid default grid")
    }

    pub fn q_perp(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h_perp
    }

    pub fn z(&self, j: usize) -> f64 {
        -self.z_half + (j as f64 + 1.0) * self.h_z
    }

    pub fn len(&self) -> usize {
        self.n_perp * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for CylGrid {
    fn default() -> Self {
        Self::square(0.02)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Radial(RadialMesh),
    Cylindrical(CylGrid),
}

impl Geometry {
    pub fn len(&self) -> usize {
        match self {
            Geometry::Radial(m) => m.n,
            Geometry::Cylindrical(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(q_⊥, q_z)` of every sample; radial cells report `(q, 0)`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Geometry::Radial(m) => (0..m.n).map(|i| (m.q(i), 0.0)).collect(),
            Geometry::Cylindrical(g) => (0..g.n_perp)
                .flat_map(|i| (0..g.n_z).map(move |j| (g.q_perp(i), g.z(j))))
                .collect(),
        }
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.points().into_iter().map(|(a, b)| f(a, b)).collect()
    }

    /// Cell volumes `μ_k`.
    pub fn volumes(&self) -> Vec<f64> {
        match self {
            Geometry::Radial(m) => (0..m.n).map(|i| 4.0 * PI * m.q(i).powi(2) * m.h).collect(),
            Geometry::Cylindrical(g) => (0..g.n_perp)
                .flat_map(|i| {
                    let v = 2.0 * PI * g.q_perp(i) * g.h_perp * g.h_z;
                    std::iter::repeat_n(v, g.n_z)
                })
                .collect(),
        }
    }

    /// Samples of `f(s q)`, by linear interpolation with the wall value 0.
    pub fn rescale(&self, f: &[f64], s: f64) -> Vec<f64> {
        match self {
            Geometry::Radial(m) => {
                let at = |q: f64| lerp_cells(f, m.h, m.n, q);
                (0..m.n).map(|i| at(s * m.q(i))).collect()
            }
            Geometry::Cylindrical(g) => {
                let row = |i: usize| &f[i * g.n_z..(i + 1) * g.n_z];
                let z_val = |i: usize, z: f64| -> f64 {
                    // Nodes z_j with zero walls at j = -1 and j = n_z.
                    let t = (z + g.z_half) / g.h_z - 1.0;
                    if t <= -1.0 || t >= g.n_z as f64 {
                        return 0.0;
                    }
                    let j0 = t.floor();
                    let w = t - j0;
                    let get = |j: f64| -> f64 {
                        if j < 0.0 || j >= g.n_z as f64 {
                            0.0
                        } else {
                            row(i)[j as usize]
                        }
                    };
                    (1.0 - w) * get(j0) + w * get(j0 + 1.0)
                };
                let nz = g.n_z;
                let mut stretched = vec![0.0; g.len()];
                for i in 0..g.n_perp {
                    for j in 0..nz {
                        stretched[i * nz + j] = z_val(i, s * g.z(j));
                    }
                }
                let mut out = vec![0.0; g.len()];
                for j in 0..nz {
                    let column: Vec<f64> = (0..g.n_perp).map(|k| stretched[k * nz + j]).collect();
                    for i in 0..g.n_perp {
                        out[i * nz + j] = lerp_cells(&column, g.h_perp, g.n_perp, s * g.q_perp(i));
                    }
                }
                out
            }
        }
    }
}

/// Linear interpolation of cell-centred samples at `q`; linear extrapolation
/// below the first centre, zero at the wall `(n + ½) h` and beyond.
fn lerp_cells(f: &[f64], h: f64, n: usize, q: f64) -> f64 {
    let t = q / h - 0.5;
    if t >= n as f64 {
        return 0.0;
    }
    let get = |k: usize| if k < n { f[k] } else { 0.0 };
    if t < 0.0 {
        return f[0] + t * (f[1] - f[0]);
    }
    let k = t.floor() as usize;
    let w = t - k as f64;
    (1.0 - w) * get(k) + w * get(k + 1)
}

/// Discrete `Q` and `K` of a functional on a mesh, in scaled coordinates.
pub(super) struct MeshOperator {
    pub geometry: Geometry,
    pub sqrt_vol: Vec<f64>,
    pub q2: Vec<f64>,
    /// `K` restricted to one `q_z` line (or the whole radial mesh).
    pub line_diag: Vec<f64>,
    pub line_off: Vec<f64>,
    /// Weight `w(q_⊥)` of each `q_⊥` column (cylindrical meshes).
    axis_weight: Vec<f64>,
    fft: Option<Arc<DstPlan>>,
}

impl MeshOperator {
    pub fn new(geometry: &Geometry, functional: &DispersionFunctional) -> Result<Self, VariationalError> {
        let vol = geometry.volumes();
        let sqrt_vol: Vec<f64> = vol.iter().map(|v| v.sqrt()).collect();
        let q2 = geometry.points().iter().map(|(a, b)| a * a + b * b).collect();
        let (line_diag, line_off, axis_weight, fft) = match geometry {
            Geometry::Radial(m) => {
                let q2w = |q: f64| {
                    functional
                        .radial_q2_weight(q)
                        .ok_or(VariationalError::NeedsCylindrical("the transverse massless functional"))
                };
                let face = |k: usize| 4.0 * PI * ((k + 1) as f64 * m.h).powi(2) / m.h;
                let mut diag = vec![0.0; m.n];
                let mut off = vec![0.0; m.n - 1];
                for i in 0..m.n {
                    let left = if i > 0 { face(i - 1) } else { 0.0 };
                    let weight = 4.0 * PI * m.h * q2w(m.q(i))?;
                    diag[i] = (left + face(i) + weight) / vol[i];
                    if i + 1 < m.n {
                        off[i] = -face(i) / (vol[i] * vol[i + 1]).sqrt();
                    }
                }
                (diag, off, Vec::new(), None)
            }
            Geometry::Cylindrical(g) => {
                let face = |k: usize| 2.0 * PI * ((k + 1) as f64 * g.h_perp) * g.h_z / g.h_perp;
                let vol_i = |i: usize| 2.0 * PI * g.q_perp(i) * g.h_perp * g.h_z;
                let mut diag = vec![0.0; g.n_perp];
                let mut off = vec![0.0; g.n_perp - 1];
                let mut axis = vec![0.0; g.n_perp];
                for i in 0..g.n_perp {
                    let left = if i > 0 { face(i - 1) } else { 0.0 };
                    let w = functional.weight(g.q_perp(i), 0.0);
                    axis[i] = w;
                    diag[i] = (left + face(i)) / vol_i(i) + w;
                    if i + 1 < g.n_perp {
                        off[i] = -face(i) / (vol_i(i) * vol_i(i + 1)).sqrt();
                    }
                }
                if !matches!(
                    functional.kind,
                    FunctionalKind::TransverseMassless | FunctionalKind::TransverseNonrel
                ) {
                    return Err(VariationalError::InvalidArgument(
                        "cylindrical meshes support the transverse functionals only".into(),
                    ));
                }
                (diag, off, axis, Some(Arc::new(DstPlan::new(g.n_z))))
            }
        };
        Ok(Self {
            geometry: *geometry,
            sqrt_vol,
            q2,
            line_diag,
            line_off,
            axis_weight,
            fft,
        })
    }

    pub fn len(&self) -> usize {
        self.sqrt_vol.len()
    }

    pub fn to_scaled(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_vol).map(|(a, b)| a * b).collect()
    }

    pub fn to_samples(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sqrt_vol).map(|(a, b)| a / b).collect()
    }

    pub fn apply_q(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.q2).map(|(a, b)| a * b).collect()
    }

    pub fn apply_k(&self, x: &[f64]) -> Vec<f64> {
        let d = &self.line_diag;
        let o = &self.line_off;
        match &self.geometry {
            Geometry::Radial(m) => tridiag_mul(d, o, x, 0, 1, m.n),
            Geometry::Cylindrical(g) => {
                let nz = g.n_z;
                let inv_hz2 = 1.0 / (g.h_z * g.h_z);
                let mut out = vec![0.0; x.len()];
                out.par_chunks_mut(nz).enumerate().for_each(|(i, row)| {
                    for j in 0..nz {
                        let k = i * nz + j;
                        let mut v = d[i] * x[k];
                        if i > 0 {
                            v += o[i - 1] * x[k - nz];
                        }
                        if i + 1 < g.n_perp {
                            v += o[i] * x[k + nz];
                        }
                        let up = if j + 1 < nz { x[k + 1] } else { 0.0 };
                        let down = if j > 0 { x[k - 1] } else { 0.0 };
                        v += (2.0 * x[k] - up - down) * inv_hz2;
                        row[j] = v;
                    }
                });
                out
            }
        }
    }

    /// Applies `(K + Q_⊥ + shift)⁻¹`, where `Q_⊥` omits the `q_z²` part of `Q`
    /// so the operator separates into `q_z` sine modes.
    pub fn precondition(&self, g: &[f64], shift: f64) -> Vec<f64> {
        match &self.geometry {
            Geometry::Radial(m) => {
                let diag: Vec<f64> = (0..m.n).map(|i| self.line_diag[i] + self.q2[i]).collect();
                solve_tridiagonal(&diag, &self.line_off, -shift, g).unwrap_or_else(|_| g.to_vec())
            }
            Geometry::Cylindrical(grid) => {
                let plan = self.fft.as_ref().expect("cylindrical plan");
                let (np, nz) = (grid.n_perp, grid.n_z);
                let mut modes = g.to_vec();
                modes.par_chunks_mut(nz).for_each(|row| plan.transform(row));
                let mut solved = vec![0.0; modes.len()];
                let columns: Vec<Vec<f64>> = (0..nz)
                    .into_par_iter()
                    .map(|k| {
                        let theta = PI * (k + 1) as f64 / (nz + 1) as f64;
                        let lam = (2.0 - 2.0 * theta.cos()) / (grid.h_z * grid.h_z);
                        let diag: Vec<f64> = (0..np)
                            .map(|i| self.line_diag[i] + grid.q_perp(i).powi(2) + lam)
                            .collect();
                        let rhs: Vec<f64> = (0..np).map(|i| modes[i * nz + k]).collect();
                        solve_tridiagonal(&diag, &self.line_off, -shift, &rhs).unwrap_or(rhs)
                    })
                    .collect();
                for (k, col) in columns.iter().enumerate() {
                    for (i, v) in col.iter().enumerate() {
                        solved[i * nz + k] = *v;
                    }
                }
                let scale = 2.0 / (nz + 1) as f64;
                solved.par_chunks_mut(nz).for_each(|row| {
                    plan.transform(row);
                    row.iter_mut().for_each(|v| *v *= scale);
                });
                solved
            }
        }
    }

    pub fn dispersions(&self, f: &[f64]) -> Result<Dispersions, VariationalError> {
        if f.len() != self.len() {
            return Err(VariationalError::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        self.check_axis(f)?;
        let x = self.to_scaled(f);
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if !(n2 > 0.0) {
            return Err(VariationalError::ZeroNorm);
        }
        let a: f64 = x.iter().zip(&self.q2).map(|(v, q)| q * v * v).sum();
        let b: f64 = x.iter().zip(self.apply_k(&x)).map(|(v, k)| v * k).sum();
        Ok(Dispersions {
            norm_n2: n2,
            delta_q2: a / n2,
            delta_rq2: b / n2,
        })
    }

    /// Flags a weight integral that grows without bound as the axis is
    /// resolved: the axis column then carries a finite share of it.
    fn check_axis(&self, f: &[f64]) -> Result<(), VariationalError> {
        let Geometry::Cylindrical(g) = &self.geometry else {
            return Ok(());
        };
        if self.axis_weight.iter().all(|w| *w == 0.0) {
            return Ok(());
        }
        let nz = g.n_z;
        let column = |i: usize| -> f64 {
            let vol = 2.0 * PI * g.q_perp(i) * g.h_perp * g.h_z;
            self.axis_weight[i] * vol * f[i * nz..(i + 1) * nz].iter().map(|v| v * v).sum::<f64>()
        };
        let total: f64 = (0..g.n_perp).map(column).sum();
        if total > 0.0 && column(0) > 0.1 * total {
            return Err(VariationalError::DivergentWeight);
        }
        Ok(())
    }
}

fn tridiag_mul(d: &[f64], o: &[f64], x: &[f64], start: usize, stride: usize, n: usize) -> Vec<f64> {
    let at = |i: usize| x[start + i * stride];
    (0..n)
        .map(|i| {
            let mut v = d[i] * at(i);
            if i > 0 {
                v += o[i - 1] * at(i - 1);
            }
            if i + 1 < n {
                v += o[i] * at(i + 1);
            }
            v
        })
        .collect()
}

/// Type-I discrete sine transform `X_k = Σ_j x_j sin(π j k / (n+1))`
/// through a complex FFT of the odd extension.
pub(super) struct DstPlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl DstPlan {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    pub fn transform(&self, row: &mut [f64]) {
        let n = self.n;
        let m = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        for j in 0..n {
            buf[j + 1] = Complex::new(row[j], 0.0);
            buf[m - 1 - j] = Complex::new(-row[j], 0.0);
        }
        self.fft.process(&mut buf);
        for k in 0..n {
            row[k] = -0.5 * buf[k + 1].im;
        }
    }
}
