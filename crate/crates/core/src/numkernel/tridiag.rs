//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TridiagError {
    #[error("off-diagonal length {off} does not match diagonal length {diag}")]
    ShapeMismatch { diag: usize, off: usize },
    #[error("grid step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("requested {requested} eigenvalues from a matrix of dimension {dim}")]
    InvalidCount { requested: usize, dim: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("shifted system is singular at row {0}")]
    Singular(usize),
}

/// Symmetric tridiagonal matrix, typically the 3-point discretization of
/// `-u'' + W u` on a uniform grid with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagProblem {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
    grid_step: f64,
}

impl TridiagProblem {
    pub fn new(
        diagonal: Vec<f64>,
        off_diagonal: Vec<f64>,
        grid_step: f64,
    ) -> Result<Self, TridiagError> {
        if diagonal.is_empty() || off_diagonal.len() + 1 != diagonal.len() {
            return Err(TridiagError::ShapeMismatch {
                diag: diagonal.len(),
                off: off_diagonal.len(),
            });
        }
        if !(grid_step > 0.0) {
            return Err(TridiagError::InvalidStep(grid_step));
        }
        if diagonal.iter().chain(&off_diagonal).any(|v| !v.is_finite()) {
            return Err(TridiagError::NonFinite);
        }
        Ok(Self {
            diagonal,
            off_diagonal,
            grid_step,
        })
    }

    /// `-u'' + W(q) u` on `(left, right)` with `n` interior nodes
    /// `q_i = left + i h`, `h = (right - left) / (n + 1)`, and `u = 0` at both ends.
    pub fn dirichlet_operator(
        potential: impl Fn(f64) -> f64,
        left: f64,
        right: f64,
        n: usize,
    ) -> Result<Self, TridiagError> {
        let h = (right - left) / (n as f64 + 1.0);
        let inv_h2 = 1.0 / (h * h);
        let diagonal = (1..=n)
            .map(|i| 2.0 * inv_h2 + potential(left + i as f64 * h))
            .collect();
        let off_diagonal = vec![-inv_h2; n.saturating_sub(1)];
        Self::new(diagonal, off_diagonal, h)
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    /// Same matrix with the grid ordering reversed.
    pub fn reversed(&self) -> Self {
        let mut diagonal = self.diagonal.clone();
        let mut off_diagonal = self.off_diagonal.clone();
        diagonal.reverse();
        off_diagonal.reverse();
        Self {
            diagonal,
            off_diagonal,
            grid_step: self.grid_step,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * x[i];
                if i > 0 {
                    s += self.off_diagonal[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off_diagonal[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (negative LDLᵀ pivots).
    pub fn sturm_count(&self, x: f64) -> usize {
        let guard = f64::EPSILON * self.norm_bound().max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut pivot = self.diagonal[0] - x;
        for i in 0..self.dim() {
            if i > 0 {
                let e = self.off_diagonal[i - 1];
                let prev = if pivot.abs() < guard {
                    guard.copysign(pivot)
                } else {
                    pivot
                };
                pivot = self.diagonal[i] - x - e * e / prev;
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off_diagonal[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off_diagonal[i].abs();
            }
            lo = lo.min(self.diagonal[i] - r);
            hi = hi.max(self.diagonal[i] + r);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }
}

/// Lowest `count` eigenvalues in ascending order.
///
/// Each eigenvalue is bisected until its bracket is narrower than
/// `1e-12 · max(|λ|, 1e-300)` or the midpoint stops moving.
pub fn tridiag_ground(problem: &TridiagProblem, count: usize) -> Result<Vec<f64>, TridiagError> {
    let dim = problem.dim();
    if count < 1 || count > dim {
        return Err(TridiagError::InvalidCount {
            requested: count,
            dim,
        });
    }
    let (g_lo, g_hi) = problem.gershgorin();
    let pad = 1e-10 * g_lo.abs().max(g_hi.abs()).max(1.0);
    let mut out = Vec::with_capacity(count);
    let mut floor = g_lo - pad;
    for k in 0..count {
        let mut lo = floor;
        let mut hi = g_hi + pad;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if problem.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            let scale = lo.abs().max(hi.abs()).max(1e-300);
            if hi - lo <= 1e-12 * scale {
                break;
            }
        }
        let lambda = 0.5 * (lo + hi);
        out.push(lambda);
        floor = lo;
    }
    Ok(out)
}

/// Solves `(A - shift) x = rhs` by the Thomas algorithm.
pub fn solve_tridiagonal(
    diagonal: &[f64],
    off_diagonal: &[f64],
    shift: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, TridiagError> {
    let n = diagonal.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diagonal[0] - shift;
    if denom == 0.0 {
        return Err(TridiagError::Singular(0));
    }
    if n > 1 {
        c[0] = off_diagonal[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        let e = off_diagonal[i - 1];
        denom = diagonal[i] - shift - e * c[i - 1];
        if denom == 0.0 {
            return Err(TridiagError::Singular(i));
        }
        if i + 1 < n {
            c[i] = off_diagonal[i] / denom;
        }
        d[i] = (rhs[i] - e * d[i - 1]) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Eigenvector for an eigenvalue already located to high accuracy, by two
/// sweeps of shifted inverse iteration. Returned with unit Euclidean norm and
/// positive sum.
pub fn inverse_iteration(problem: &TridiagProblem, lambda: f64) -> Result<Vec<f64>, TridiagError> {
    let n = problem.dim();
    let shift = lambda - 1e-10 * lambda.abs().max(1.0);
    let mut x = vec![1.0; n];
    for _ in 0..3 {
        let y = solve_tridiagonal(problem.diagonal(), problem.off_diagonal(), shift, &x)?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(x)
}
