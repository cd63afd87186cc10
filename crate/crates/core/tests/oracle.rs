mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use regime_ou_core::model::{LevyMeasureSpec, LevyTriplet, ParetoSide};
use regime_ou_core::oracle::{
    exp_moment, invert_to_cdf, levy_exponent, levy_exponent_real, log_exp_moment, stationary_cf,
    two_sided_exp_moment_bound, InversionOptions, OracleError,
};

use common::*;

fn cfg(seed: u64, cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn measures() -> Vec<LevyMeasureSpec> {
    vec![
        LevyMeasureSpec::Zero,
        gaussian_cp(1.3),
        pareto_cp(1.5, ParetoSide::Both),
        tempered(1.0, 0.5, 3.0),
        tempered(0.7, 1.4, 0.0),
    ]
}

proptest! {
    #![proptest_config(cfg(11, 48))]

    #[test]
    fn stationary_cf_is_hermitian_and_bounded(
        z in -6.0f64..6.0,
        alpha in -3.0f64..-0.2,
        sigma in -2.0f64..2.0,
        which in 0usize..5,
    ) {
        let t = triplet(measures()[which]);
        let a = stationary_cf(z, alpha, sigma, &t).unwrap();
        let b = stationary_cf(-z, alpha, sigma, &t).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-9, "{a} vs {b}");
        prop_assert!(a.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn exponent_is_conjugate_symmetric(u in -20.0f64..20.0, which in 0usize..5) {
        let t = triplet(measures()[which]);
        let a = levy_exponent_real(u, &t).unwrap();
        let b = levy_exponent_real(-u, &t).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-9 * (1.0 + a.norm()));
        prop_assert!(a.re >= -1e-12);
    }

    #[test]
    fn two_sided_bound_dominates(lambda in 0.05f64..2.0, alpha in -3.0f64..-0.3, sigma in 0.2f64..2.0) {
        let t = triplet(tempered(1.0, 0.5, 3.0));
        let bound = two_sided_exp_moment_bound(lambda, alpha, sigma, &t).unwrap();
        let up = exp_moment(lambda, alpha, sigma, &t).unwrap();
        let down = exp_moment(-lambda, alpha, sigma, &t).unwrap();
        prop_assert!(bound >= up && bound >= down);
        // finite exactly when lambda * sigma stays inside the tempering rate
        prop_assert_eq!(up.is_finite(), lambda * sigma <= 3.0);
    }
}

#[test]
fn gaussian_exp_moment_closed_form() {
    let t = LevyTriplet::new(0.3, 2.0, LevyMeasureSpec::Zero).unwrap();
    for (lambda, alpha, sigma) in [(0.5, -1.0, 1.0), (1.5, -0.4, 0.7), (-0.8, -2.0, 1.3)] {
        let c: f64 = lambda * sigma;
        let expected = -t.a * c * c / (4.0 * alpha) - t.b * c / alpha;
        let got = log_exp_moment(lambda, alpha, sigma, &t).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

#[test]
fn pareto_has_no_exponential_moment() {
    let t = triplet(pareto_cp(1.5, ParetoSide::Positive));
    assert!(exp_moment(0.01, -1.0, 1.0, &t).unwrap().is_infinite());
    // the negative side is empty, so the other direction is finite
    assert!(exp_moment(-0.5, -1.0, 1.0, &t).unwrap().is_finite());
}

#[test]
fn exponent_at_zero_vanishes() {
    for m in measures() {
        let phi = levy_exponent(Complex64::new(0.0, 0.0), &triplet(m)).unwrap();
        assert!(phi.norm() < 1e-12, "{m:?}: {phi}");
    }
}

#[test]
fn positive_alpha_is_rejected() {
    let t = LevyTriplet::brownian();
    assert!(matches!(stationary_cf(1.0, 0.5, 1.0, &t), Err(OracleError::PreconditionAlphaSign { .. })));
    assert!(matches!(stationary_cf(1.0, 0.0, 1.0, &t), Err(OracleError::PreconditionAlphaSign { .. })));
}

/// Inverting the characteristic function of a Gaussian-smoothed empirical
/// law must give back its CDF, the mean of `Phi((x - x_k) / h)`.
#[test]
fn inversion_round_trips_smoothed_empirical_law() {
    let mut r = rng(31);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..300)
        .map(|_| {
            if r.random::<f64>() < 0.3 {
                2.0 + 0.5 * normal.sample(&mut r)
            } else {
                -1.0 + normal.sample(&mut r)
            }
        })
        .collect();
    let h = 0.25;
    let cf = |z: f64| -> Result<Complex64, OracleError> {
        let damp = (-0.5 * h * h * z * z).exp();
        let s: Complex64 = xs.iter().map(|&x| Complex64::new(0.0, z * x).exp()).sum();
        Ok(s * damp / xs.len() as f64)
    };
    let grid: Vec<f64> = (0..=100).map(|k| -5.0 + 0.1 * k as f64).collect();
    let table = invert_to_cdf(cf, &grid, InversionOptions::default()).unwrap();
    for (x, f) in table.x.iter().zip(&table.f) {
        let exact = xs.iter().map(|&c| normal_cdf(x - c, h)).sum::<f64>() / xs.len() as f64;
        assert!((f - exact).abs() < 0.01, "x = {x}: {f} vs {exact}");
    }
    assert!(table.f.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn slowly_decaying_cf_is_reported() {
    // a point mass never decays
    let cf = |z: f64| -> Result<Complex64, OracleError> { Ok(Complex64::new(0.0, z).exp()) };
    let err = invert_to_cdf(cf, &[0.0, 1.0], InversionOptions::default()).unwrap_err();
    assert!(matches!(err, OracleError::SlowDecay { .. }), "{err:?}");
}

#[test]
fn compound_poisson_cf_matches_series() {
    // Gaussian jumps at rate r: Phi(u) = r (1 - e^{-u^2/2}) + u^2/2 for a = 1
    let t = triplet(gaussian_cp(0.8));
    for u in [0.2, 1.0, 3.0] {
        let phi = levy_exponent_real(u, &t).unwrap();
        let expected = 0.8 * (1.0 - (-u * u / 2.0f64).exp()) + u * u / 2.0;
        assert!((phi.re - expected).abs() < 1e-10 && phi.im.abs() < 1e-10, "{u}: {phi}");
    }
}
