//! Reference checks behind `relbosons verify`.

use crate::eigensolver::{gamma_curve, verify_analytic_limits, AnalyticLimitOptions, RadialGrid};
use crate::kg_fields::{position_dispersion_direct, scan_density, uniform_radii, SpectralProfile, WavepacketParams};
use crate::numkernel::{tridiag_ground, QuadratureSpec, TridiagProblem};
use crate::potentials::{d_parameter, origin_behavior, DValue, PotentialSpec};
use crate::variational::{
    minimize_transverse_massless, radial_dispersions, separation_oracle, transverse_readings, CylGrid,
    DispersionFunctional, Geometry, MinimizeOptions,
};

const GOLDEN: f64 = 2.118_033_988_749_895;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    fn near(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: super::sig9(expected),
            tolerance: format!("{tol:.0e}"),
            pass: (value - expected).abs() <= tol,
        }
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: format!("<= {bound:.0e}"),
            tolerance: "-".into(),
            pass: value <= bound,
        }
    }

    fn holds(name: &str, value: f64, expected: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            expected: expected.into(),
            tolerance: "-".into(),
            pass,
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            expected: format!("error: {err}"),
            tolerance: "-".into(),
            pass: false,
        }
    }
}

fn eigen_checks(out: &mut Vec<Check>) {
    match TridiagProblem::dirichlet_operator(|q| 1.0 / (q * q) + q * q, 0.0, 20.0, 4000)
        .and_then(|p| tridiag_ground(&p, 1))
    {
        Ok(l) => out.push(Check::near("tridiag: -u''+(1/q^2+q^2)u level", l[0], 2.0 + 5f64.sqrt(), 1e-4)),
        Err(e) => out.push(Check::failed("tridiag: -u''+(1/q^2+q^2)u level", e)),
    }

    let grid = RadialGrid::default();
    let ends = [DValue::Finite(0.0), DValue::Infinite];
    let families = [
        ("spin0", PotentialSpec::scalar(DValue::Finite(0.0)), [1.5, GOLDEN], [1e-6, 1e-6]),
        ("spin1 long", PotentialSpec::longitudinal(DValue::Finite(0.0)), [2.5, GOLDEN], [1e-6, 1e-5]),
    ];
    for (label, family, expected, tol) in families {
        let curve = gamma_curve(&family, &ends, &grid);
        for (k, p) in curve.points.iter().enumerate() {
            let name = format!("gamma {label} d={}", p.d);
            match p.gamma {
                Some(g) => out.push(Check::near(&name, g, expected[k], tol[k])),
                None => out.push(Check::failed(&name, p.error.as_deref().unwrap_or("no value"))),
            }
            if let Some(g) = p.gamma_fd {
                out.push(Check::near(&format!("{name} (fd)"), g, expected[k], tol[k]));
            }
        }
    }

    for c in verify_analytic_limits(&AnalyticLimitOptions::default()) {
        let bound = if c.spec.d().is_infinite() { 1e-5 } else { 1e-6 };
        out.push(Check::at_most(&format!("closed-form residual {}", c.label), c.residual, bound));
    }
}

fn potential_checks(out: &mut Vec<Check>) {
    let w = PotentialSpec::longitudinal(DValue::Finite(0.0)).value_at(1.0);
    out.push(Check::near("W spin1 d=0 j=0 at q=1", w, 3.0, 1e-12));

    let b = origin_behavior(&PotentialSpec::scalar(DValue::Infinite));
    out.push(Check::near("origin c spin0 d=inf", b.singular_strength, 1.0, 1e-12));
    out.push(Check::near("origin alpha spin0 d=inf", b.exponent_alpha, 0.5 * (1.0 + 5f64.sqrt()), 1e-12));
    let b = origin_behavior(&PotentialSpec::longitudinal(DValue::Finite(0.0)));
    out.push(Check::near("origin c spin1 d=0", b.singular_strength, 2.0, 1e-12));
    out.push(Check::near("origin alpha spin1 d=0", b.exponent_alpha, 2.0, 1e-12));

    match d_parameter(1.0, 1.0, 1e8) {
        Ok(d) => out.push(Check::at_most("d parameter as m -> inf", d, 1e-6)),
        Err(e) => out.push(Check::failed("d parameter as m -> inf", e)),
    }
}

fn field_checks(out: &mut Vec<Check>) {
    let quad = QuadratureSpec::default();
    match scan_density(&WavepacketParams::reference(), &uniform_radii(6.0, 0.01), &quad) {
        Ok(field) => {
            let rho_min = field.rho.iter().copied().fold(f64::INFINITY, f64::min);
            let eps_min = field.eps.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(Check::holds("density: min rho on (0,6]", rho_min, "< 0", rho_min < 0.0));
            out.push(Check::holds("density: min eps on (0,6]", eps_min, ">= 0", eps_min >= 0.0));
            let n = field.negative_shells.len();
            out.push(Check::holds("density: negative shells", n as f64, ">= 1", n >= 1 && field.failures.is_empty()));
        }
        Err(e) => out.push(Check::failed("density scan", e)),
    }

    match position_dispersion_direct(&SpectralProfile::Gaussian { sigma: 1.0 }, 100.0, &quad) {
        Ok(d) => out.push(Check::near("gaussian dr2*dp2 at m=100", 1.5 * d.delta_r2, 2.25, 1e-3)),
        Err(e) => out.push(Check::failed("gaussian dr2*dp2 at m=100", e)),
    }
}

fn variational_checks(out: &mut Vec<Check>) {
    let quad = QuadratureSpec::new(1e-12, 1e-10, 20_000).expect("valid quadrature");
    let gauss = |q: f64| (-0.5 * q * q).exp();
    let dgauss = |q: f64| -q * (-0.5 * q * q).exp();
    match radial_dispersions(gauss, dgauss, &DispersionFunctional::spin0(DValue::Finite(0.0)), &quad) {
        Ok(d) => {
            out.push(Check::near("gaussian dq2, spin0 d=0", d.delta_q2, 1.5, 1e-8));
            out.push(Check::near("gaussian drq2, spin0 d=0", d.delta_rq2, 1.5, 1e-8));
        }
        Err(e) => out.push(Check::failed("gaussian dispersions", e)),
    }
    let a = 0.5 * (5f64.sqrt() - 1.0);
    let f = move |q: f64| q.powf(a) * (-0.5 * q * q).exp();
    let df = move |q: f64| (a * q.powf(a - 1.0) - q.powf(a + 1.0)) * (-0.5 * q * q).exp();
    match radial_dispersions(f, df, &DispersionFunctional::spin0(DValue::Infinite), &quad) {
        Ok(d) => out.push(Check::near("closed-form gamma, spin0 d=inf", d.gamma(), GOLDEN, 1e-4)),
        Err(e) => out.push(Check::failed("closed-form gamma, spin0 d=inf", e)),
    }

    match separation_oracle(4000) {
        Ok(o) => out.push(Check::near("transverse separation oracle", o.gamma, 2.5, 1e-4)),
        Err(e) => out.push(Check::failed("transverse separation oracle", e)),
    }
    let grid = CylGrid::square(0.02);
    let init = Geometry::Cylindrical(grid).sample(|qp, z| qp * (-(qp * qp + z * z)).exp());
    match minimize_transverse_massless(&grid, &init, &MinimizeOptions::default()) {
        Ok(m) => out.push(Check::near("transverse massless minimum", m.state.gamma, 2.5, 1e-2)),
        Err(e) => out.push(Check::failed("transverse massless minimum", e)),
    }
    match transverse_readings(&grid) {
        Ok(r) => {
            let g = r[0].gamma.unwrap_or(f64::NAN);
            out.push(Check::near("transverse q_perp*exp(-5q^2/4)", g, 2.5, 1e-2));
        }
        Err(e) => out.push(Check::failed("transverse readings", e)),
    }
}

/// Every reference check, in a fixed order.
pub fn run_checks() -> Vec<Check> {
    let mut out = Vec::new();
    eigen_checks(&mut out);
    potential_checks(&mut out);
    field_checks(&mut out);
    variational_checks(&mut out);
    out
}
