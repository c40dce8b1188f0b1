//! Position-space dispersions of Klein-Gordon states against the
//! momentum-space functional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relbosons::kg_fields::{position_dispersion_direct, SpectralProfile};
use relbosons::numkernel::QuadratureSpec;
use relbosons::potentials::DValue;
use relbosons::variational::{radial_dispersions, DispersionFunctional};

fn quad() -> QuadratureSpec {
    QuadratureSpec::new(1e-12, 1e-10, 50_000).unwrap()
}

/// `Δr²` from the momentum-space functional at `d = 1`, i.e. in units `q = p/m`.
fn momentum_delta_r2(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mass: f64) -> f64 {
    let d = radial_dispersions(
        |q| f(mass * q),
        |q| mass * df(mass * q),
        &DispersionFunctional::spin0(DValue::Finite(1.0)),
        &quad(),
    )
    .unwrap();
    d.delta_rq2 / (mass * mass)
}

#[test]
fn position_space_matches_momentum_functional() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let sigma: f64 = rng.gen_range(0.6..1.8);
        let c: f64 = rng.gen_range(0.0..1.0);
        let mass: f64 = rng.gen_range(0.5..2.0);
        let f = move |p: f64| (1.0 + c * p * p) * (-p * p / (2.0 * sigma * sigma)).exp();
        let df = move |p: f64| {
            (2.0 * c * p - p * (1.0 + c * p * p) / (sigma * sigma)) * (-p * p / (2.0 * sigma * sigma)).exp()
        };
        let profile = SpectralProfile::custom(f, 12.0 * sigma);
        let direct = position_dispersion_direct(&profile, mass, &quad()).unwrap();
        let expected = momentum_delta_r2(f, df, mass);
        let rel = (direct.delta_r2 / expected - 1.0).abs();
        assert!(rel < 1e-5, "sigma {sigma} c {c} m {mass}: {} vs {expected}", direct.delta_r2);
    }
}

#[test]
fn heavy_gaussian_reaches_nonrelativistic_product() {
    let mut last = f64::INFINITY;
    for mass in [10.0, 30.0, 100.0] {
        let d = position_dispersion_direct(&SpectralProfile::Gaussian { sigma: 1.0 }, mass, &quad()).unwrap();
        // Δp² = 3/2 for the unit Gaussian amplitude.
        let gap = (1.5 * d.delta_r2 - 2.25).abs();
        assert!(gap < last, "m {mass}: gap {gap}");
        last = gap;
    }
    assert!(last < 1e-3, "{last}");
}

#[test]
fn narrowing_momentum_peak_spreads_in_position() {
    let mut last = 0.0;
    for w in [0.4, 0.2, 0.1] {
        let f = move |p: f64| (-(p - 2.0) * (p - 2.0) / (2.0 * w * w)).exp();
        let d = position_dispersion_direct(&SpectralProfile::custom(f, 2.0 + 12.0 * w), 1.0, &quad()).unwrap();
        assert!(d.delta_r2 > last, "w {w}: {}", d.delta_r2);
        last = d.delta_r2;
    }
}
