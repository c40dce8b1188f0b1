//! Globally adaptive Gauss-Kronrod quadrature over `[0, ∞)` for kernels that
//! carry an exponential damping envelope, optionally oscillatory.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Values the quadrature can accumulate: real or complex.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of subintervals held at once.
    pub max_panels: usize,
    /// Wavelength of an oscillatory factor such as `sin(p r)`; initial panels
    /// are at most half of it wide.
    pub oscillation_wavelength: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 20_000,
            oscillation_wavelength: None,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_panels: usize) -> Result<Self, QuadratureError> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_panels,
            oscillation_wavelength: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_wavelength(mut self, wavelength: Option<f64>) -> Self {
        self.oscillation_wavelength = wavelength;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec("abs_tol must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec("rel_tol must be positive"));
        }
        if self.max_panels < 1 {
            return Err(QuadratureError::InvalidSpec("max_panels must be at least 1"));
        }
        if let Some(w) = self.oscillation_wavelength {
            if !(w > 0.0) {
                return Err(QuadratureError::InvalidSpec(
                    "oscillation_wavelength must be positive",
                ));
            }
        }
        Ok(())
    }

    fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    /// Number of subintervals in the final partition.
    pub intervals: usize,
    /// Point where the semi-infinite range was truncated.
    pub upper_limit: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(&'static str),
    #[error("damping rate must be positive, got {0}")]
    InvalidDamping(f64),
    #[error("invalid integration interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error(
        "quadrature did not converge with {intervals} intervals: estimate {estimate}, error {error:.3e}"
    )]
    NotConverged {
        estimate: Complex64,
        error: f64,
        intervals: usize,
    },
}

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    /// `50 ε ∫|f|` over the panel; no subdivision gets the error below it.
    floor: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss-Kronrod 7/15 step with the usual QUADPACK error rescaling.
fn gk15<T, F>(f: &F, a: f64, b: f64) -> Panel<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.magnitude() * WGK[7];
    let mut fv1 = [T::default(); 7];
    let mut fv2 = [T::default(); 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g = res_g + (f1 + f2) * WG[j];
        res_k = res_k + (f1 + f2) * WGK[jtw];
        res_abs += WGK[jtw] * (f1.magnitude() + f2.magnitude());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k = res_k + (f1 + f2) * WGK[jtwm1];
        res_abs += WGK[jtwm1] * (f1.magnitude() + f2.magnitude());
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let abs_half = half.abs();
    let raw = ((res_k - res_g) * half).magnitude();
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut error = raw;
    if res_asc != 0.0 && raw != 0.0 {
        error = res_asc * (200.0 * raw / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Panel {
        a,
        b,
        value: res_k * half,
        error,
        floor,
    }
}

fn adaptive<T, F>(
    f: &F,
    breaks: &[f64],
    spec: &QuadratureSpec,
    extra_error: f64,
) -> Result<(T, f64, usize), QuadratureError>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let mut heap: BinaryHeap<Panel<T>> = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total = T::default();
    let mut total_err = extra_error;
    let mut total_floor = 0.0;
    for w in breaks.windows(2) {
        let p = gk15(f, w[0], w[1]);
        total = total + p.value;
        total_err += p.error;
        total_floor += p.floor;
        heap.push(p);
    }
    loop {
        // A tolerance below the roundoff floor is met once the error sits at that floor.
        let target = spec.tolerance_for(total.magnitude()).max(2.0 * total_floor + extra_error);
        if total_err <= target {
            break;
        }
        if heap.len() >= spec.max_panels || total_err.is_nan() {
            return Err(QuadratureError::NotConverged {
                estimate: total.to_complex(),
                error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution; its error cannot shrink.
            return Err(QuadratureError::NotConverged {
                estimate: total.to_complex(),
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        total = total - worst.value + left.value + right.value;
        total_err += left.error + right.error - worst.error;
        total_floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift accumulated by the running update.
    let mut value = T::default();
    let mut error = extra_error;
    let count = heap.len();
    for p in heap {
        value = value + p.value;
        error += p.error;
    }
    Ok((value, error, count))
}

fn panel_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let count = ((b - a) / width).ceil().max(1.0) as usize;
    let step = (b - a) / count as f64;
    let mut breaks: Vec<f64> = (0..count).map(|k| a + k as f64 * step).collect();
    breaks.push(b);
    breaks
}

/// Integrates `kernel` over `[a, b]` adaptively.
pub fn integrate_finite<T, F>(
    kernel: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>, QuadratureError>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite() && b >= a) {
        return Err(QuadratureError::InvalidInterval(a, b));
    }
    if b == a {
        return Ok(Estimate {
            value: T::default(),
            error: 0.0,
            intervals: 0,
            upper_limit: b,
        });
    }
    let width = spec
        .oscillation_wavelength
        .map(|w| 0.5 * w)
        .unwrap_or(b - a)
        .min((b - a) / 4.0);
    let breaks = panel_breaks(a, b, width);
    let (value, error, intervals) = adaptive(&kernel, &breaks, spec, 0.0)?;
    Ok(Estimate {
        value,
        error,
        intervals,
        upper_limit: b,
    })
}

/// Integrates `kernel` over `[0, ∞)`.
///
/// The kernel must already include its damping factor; `damping_rate` only
/// sets the truncation point `ln(peak / abs_tol) / damping_rate` (plus one
/// panel), after which the range is extended while sampled kernel values
/// still bound a tail above `abs_tol`. The reported error includes that tail
/// bound.
pub fn integrate_damped<T, F>(
    kernel: F,
    damping_rate: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>, QuadratureError>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    spec.validate()?;
    if !(damping_rate > 0.0 && damping_rate.is_finite()) {
        return Err(QuadratureError::InvalidDamping(damping_rate));
    }
    let decay = 1.0 / damping_rate;

    // Envelope peak of |kernel| e^{damping p} over the bulk of the range.
    let probe_end = 40.0 * decay;
    let mut peak: f64 = 0.0;
    for k in 0..=256 {
        let p = probe_end * k as f64 / 256.0;
        let v = kernel(p).magnitude() * (damping_rate * p).min(700.0).exp();
        if v.is_finite() {
            peak = peak.max(v);
        }
    }
    let panel = spec
        .oscillation_wavelength
        .map(|w| 0.5 * w)
        .unwrap_or(decay)
        .min(decay);
    let mut upper = if peak > spec.abs_tol {
        (peak / spec.abs_tol).ln() * decay
    } else {
        0.0
    };
    upper += panel;

    // Extend while the sampled kernel beyond `upper` still bounds a tail above tolerance.
    let tail_bound = |start: f64| -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..=16 {
            m = m.max(kernel(start + panel * k as f64 / 16.0).magnitude());
        }
        m * decay
    };
    let mut tail = tail_bound(upper);
    let mut extensions = 0;
    while tail > 0.25 * spec.abs_tol && extensions < spec.max_panels {
        upper += panel;
        tail = tail_bound(upper);
        extensions += 1;
    }

    let breaks = panel_breaks(0.0, upper, panel);
    if breaks.len() > spec.max_panels {
        return Err(QuadratureError::NotConverged {
            estimate: Complex64::new(0.0, 0.0),
            error: f64::INFINITY,
            intervals: breaks.len() - 1,
        });
    }
    let (value, error, intervals) = adaptive(&kernel, &breaks, spec, tail)?;
    Ok(Estimate {
        value,
        error,
        intervals,
        upper_limit: upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::new(1e-13, 1e-12, 50_000).unwrap()
    }

    #[test]
    fn damped_sine_matches_closed_form() {
        let spec = tight().with_wavelength(Some(std::f64::consts::PI));
        let est = integrate_damped(|p: f64| (2.0 * p).sin() * (-0.5 * p).exp(), 0.5, &spec).unwrap();
        assert!((est.value - 2.0 / 4.25).abs() < 1e-12);
        assert!((est.value - 0.470_588_24).abs() < 1e-8);
    }

    #[test]
    fn massless_energy_envelope_integrates_to_one() {
        let est = integrate_damped(|p: f64| (-p).exp(), 1.0, &tight()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        assert!(est.error <= 1e-12_f64.max(1e-12 * est.value));
    }

    #[test]
    fn tolerance_below_roundoff_stops_at_the_floor() {
        // Cancelling integral of size 1e-9 with ∫|f| ≈ 5; abs_tol is far below 50ε∫|f|.
        let spec = QuadratureSpec::new(1e-20, 1e-14, 2000).unwrap();
        let f = |p: f64| 10.0 * (p * 8.0).sin() * (-0.5 * p * p).exp();
        let est = integrate_finite(f, 0.0, 12.0, &spec).unwrap();
        let exact = simpson_uniform(f, 12.0, 1 << 16);
        assert!((est.value - exact).abs() < 1e-11, "{} vs {exact}", est.value);
        assert!(est.intervals < 2000);
    }

    fn simpson_uniform(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
        let h = b / n as f64;
        let w = crate::numkernel::simpson_weights(n + 1, h);
        w.iter().enumerate().map(|(i, wi)| wi * f(i as f64 * h)).sum()
    }

    #[test]
    fn relativistic_envelope_matches_refined_simpson() {
        let kernel = |p: f64| (-(1.0 + p * p).sqrt()).exp();
        // Oracle: uniform Simpson on [0, 60] doubled until successive sums agree.
        let mut n = 1024;
        let mut prev = simpson_uniform(kernel, 60.0, n);
        loop {
            n *= 2;
            let next = simpson_uniform(kernel, 60.0, n);
            if (next - prev).abs() < 1e-14 {
                prev = next;
                break;
            }
            prev = next;
        }
        let est = integrate_damped(kernel, 1.0, &tight()).unwrap();
        assert!((est.value - prev).abs() < 1e-10, "{} vs {}", est.value, prev);
    }

    #[test]
    fn complex_kernel_is_supported() {
        // ∫ e^{-(1+i)p} dp = 1/(1+i)
        let est = integrate_damped(
            |p: f64| (Complex64::new(-1.0, -1.0) * p).exp(),
            1.0,
            &tight(),
        )
        .unwrap();
        let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, 1.0);
        assert!((est.value - exact).norm() < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(matches!(
            integrate_damped(|p: f64| p, 0.0, &QuadratureSpec::default()),
            Err(QuadratureError::InvalidDamping(_))
        ));
        assert!(QuadratureSpec::new(0.0, 1e-8, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, -1.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 0).is_err());
        let bad = QuadratureSpec::default().with_wavelength(Some(-1.0));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn panel_budget_exhaustion_reports_best_estimate() {
        let spec = QuadratureSpec::new(1e-15, 1e-15, 3).unwrap();
        let res = integrate_finite(|p: f64| (50.0 * p).sin() / (p + 1e-3), 0.0, 10.0, &spec);
        match res {
            Err(QuadratureError::NotConverged { error, intervals, .. }) => {
                assert!(error.is_finite());
                assert!(intervals >= 3);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn integration_is_linear(a1 in 0.3f64..2.0, a2 in 0.3f64..2.0,
                                 w1 in 0.1f64..5.0, w2 in 0.1f64..5.0,
                                 c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
            let damping = a1.min(a2);
            let spec = QuadratureSpec::default().with_wavelength(Some(std::f64::consts::TAU / w1.max(w2)));
            let f = move |p: f64| c1 * (w1 * p).sin() * (-a1 * p).exp();
            let g = move |p: f64| c2 * p * (w2 * p).cos() * (-a2 * p).exp();
            let rf = integrate_damped(f, a1, &spec).unwrap();
            let rg = integrate_damped(g, a2, &spec).unwrap();
            let rs = integrate_damped(move |p: f64| f(p) + g(p), damping, &spec).unwrap();
            let bound = rf.error + rg.error + rs.error;
            prop_assert!((rs.value - rf.value - rg.value).abs() <= bound + 1e-14,
                "sum {} vs {} + {}, bound {}", rs.value, rf.value, rg.value, bound);
        }
    }
}
