mod common;

use regime_ou_core::model::{JumpDistribution, LevyMeasureSpec, LevyTriplet};
use regime_ou_core::rng::stream_rng;
use regime_ou_core::simulate::{
    sample_levy_increment, sample_stationary, simulate_batch, simulate_path, simulate_terminal_batch, IncrementPlan,
    NoiseKernel, SeedInfo, SimError, SmallJumpMode,
};

use common::*;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn terminals(model: &regime_ou_core::model::RegimeModel, x0: f64, horizon: f64, seed: u64, n: usize) -> Vec<f64> {
    simulate_terminal_batch(model, x0, 0, horizon, &IncrementPlan::default(), seed, n)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn brownian_increment_variance() {
    let t = LevyTriplet::brownian();
    let plan = IncrementPlan::default();
    let mut r = stream_rng(1, 0);
    let xs: Vec<f64> = (0..400_000)
        .map(|_| sample_levy_increment(&t, 0.01, &plan, &mut r).unwrap().continuous)
        .collect();
    let (mean, var) = mean_var(&xs);
    assert!(mean.abs() < 4.0 * (0.01f64 / xs.len() as f64).sqrt(), "{mean}");
    assert!((var / 0.01 - 1.0).abs() < 0.01, "{var}");
}

#[test]
fn compound_poisson_jump_count() {
    let t = triplet(gaussian_cp(2.0));
    let plan = IncrementPlan {
        dt_max: 0.5,
        ..IncrementPlan::default()
    };
    let kernel = NoiseKernel::new(&t, &plan).unwrap();
    assert_eq!(kernel.jump_rate, 2.0);
    assert_eq!(kernel.b_eff, 0.0);
    let mut r = stream_rng(2, 0);
    let n = 100_000;
    let total: usize = (0..n).map(|_| kernel.increment(0.5, &mut r).unwrap().large_jumps.len()).sum();
    let mean = total as f64 / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn increments_respect_dt_max() {
    let kernel = NoiseKernel::new(&LevyTriplet::brownian(), &IncrementPlan::default()).unwrap();
    let err = kernel.increment(0.1, &mut stream_rng(0, 0)).unwrap_err();
    assert!(matches!(err, SimError::InvalidStep { .. }));
}

/// `2c \int_0^eps z^{1-beta} e^{-theta z} dz` by its power series.
fn tempered_small_variance(c: f64, beta: f64, theta: f64, eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut coef = 1.0;
    for k in 0..60 {
        let e = 2.0 - beta + k as f64;
        sum += coef * eps.powf(e) / e;
        coef *= -theta / (k as f64 + 1.0);
    }
    2.0 * c * sum
}

#[test]
fn tempered_small_jump_variance_is_compensated() {
    for (c, beta, theta, eps) in [(1.0, 0.5, 3.0, 0.01), (0.4, 1.5, 1.0, 0.05), (2.0, 0.9, 0.0, 0.1)] {
        let t = triplet(tempered(c, beta, theta));
        let plan = IncrementPlan {
            epsilon_trunc: eps,
            ..IncrementPlan::default()
        };
        let kernel = NoiseKernel::new(&t, &plan).unwrap();
        let expected = tempered_small_variance(c, beta, theta, eps);
        let got = kernel.a_eff - t.a;
        assert!((got - expected).abs() <= 1e-8 * expected, "{got} vs {expected}");

        let dropped = NoiseKernel::new(
            &t,
            &IncrementPlan {
                small_jump_mode: SmallJumpMode::Drop,
                ..plan
            },
        )
        .unwrap();
        assert_eq!(dropped.a_eff, t.a);
    }
}

#[test]
fn ou_moments_at_unit_time() {
    // alpha = -1 in both states; Gaussian jumps at rate 0.5 add 0.5 to the variance rate
    let m = model(&[-1.0, -1.0], &[1.0, 1.0], triplet(gaussian_cp(0.5)));
    let n = 100_000;
    let xs = terminals(&m, 1.0, 1.0, 3, n);
    let (mean, var) = mean_var(&xs);
    let true_mean = (-1.0f64).exp();
    let true_var = 1.5 * (1.0 - (-2.0f64).exp()) / 2.0;
    let se_mean = (true_var / n as f64).sqrt();
    assert!((mean - true_mean).abs() < 3.0 * se_mean, "{mean} vs {true_mean}");
    // Gaussian jumps keep the terminal law close to normal: var(s^2) ~ 2 var^2 / n
    let kurt_excess = 3.0 * 0.5 * (1.0 - (-4.0f64).exp()) / 4.0 / (true_var * true_var);
    let se_var = true_var * ((2.0 + kurt_excess) / n as f64).sqrt();
    assert!((var - true_var).abs() < 3.0 * se_var, "{var} vs {true_var}");
}

#[test]
fn stationary_gaussian_sample() {
    let m = brownian(&[-1.0, -1.0]);
    let seed = SeedInfo {
        master_seed: 4,
        stream: 0,
    };
    let s = sample_stationary(&m, 20.0, 100_000, 1.0, &IncrementPlan::default(), seed, false).unwrap();
    let (mean, var) = mean_var(&s.xs());
    assert!(mean.abs() < 0.02, "{mean}");
    assert!((var - 0.5).abs() < 0.02, "{var}");
    let freq = s.state_frequencies(2);
    assert!((freq[0] - 2.0 / 3.0).abs() < 0.01, "{freq:?}");
}

#[test]
fn stationary_sampling_refuses_transient_models() {
    let m = brownian(&[2.0, -1.0]);
    let seed = SeedInfo {
        master_seed: 0,
        stream: 0,
    };
    let err = sample_stationary(&m, 1.0, 10, 1.0, &IncrementPlan::default(), seed, false).unwrap_err();
    assert!(matches!(err, SimError::NotPositiveRecurrent { .. }), "{err:?}");
    sample_stationary(&m, 1.0, 10, 1.0, &IncrementPlan::default(), seed, true).unwrap();
}

#[test]
fn logged_jumps_are_consistent_with_the_path() {
    let t = triplet(LevyMeasureSpec::CompoundPoisson {
        rate: 3.0,
        jumps: JumpDistribution::PointMass { z0: 1.5 },
    });
    let m = model(&[-1.0, 0.5], &[1.0, 2.0], t);
    let p = simulate_path(&m, 0.0, 0, 20.0, &IncrementPlan::default(), &mut stream_rng(9, 0)).unwrap();
    assert!(p.large_jump_log.len() > 20);
    for j in &p.large_jump_log {
        assert_eq!(j.size, 1.5 * m.sigma()[j.state]);
        assert!((j.x_after - j.x_before - j.size).abs() < 1e-12 * (1.0 + j.x_after.abs()));
        let k = p.times.iter().position(|&s| s == j.time).expect("jump time recorded");
        let k = (k..p.times.len()).find(|&k| p.x[k] == j.x_after).expect("post-jump value recorded");
        assert_eq!(p.lambda[k], j.state);
    }
    assert!(p.times.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(p.times.len(), p.x.len());
    assert_eq!(p.times.len(), p.lambda.len());
}

#[test]
fn batches_are_reproducible_and_streams_differ() {
    let m = model(&[-1.0, 0.5], &[1.0, 1.0], triplet(tempered(1.0, 0.5, 3.0)));
    let plan = IncrementPlan::default();
    let a = simulate_batch(&m, 0.0, 0, 2.0, &plan, 77, 4).unwrap();
    let b = simulate_batch(&m, 0.0, 0, 2.0, &plan, 77, 4).unwrap();
    assert_eq!(a, b);
    let terminal: Vec<f64> = a.iter().map(|p| p.as_ref().unwrap().terminal()).collect();
    assert!(terminal.windows(2).all(|w| w[0] != w[1]));
    let single = simulate_path(&m, 0.0, 0, 2.0, &plan, &mut stream_rng(77, 2)).unwrap();
    assert_eq!(&single, a[2].as_ref().unwrap());
}

#[test]
fn refinement_keeps_terminal_mean() {
    let m = model(&[-1.0, -0.5], &[1.0, 1.0], triplet(tempered(1.0, 0.7, 2.0)));
    let run = |eps: f64, dt: f64| {
        let plan = IncrementPlan {
            epsilon_trunc: eps,
            dt_max: dt,
            ..IncrementPlan::default()
        };
        let xs: Vec<f64> = simulate_terminal_batch(&m, 1.0, 0, 1.0, &plan, 12, 20_000)
            .unwrap()
            .into_iter()
            .map(Result::unwrap)
            .collect();
        let (mean, var) = mean_var(&xs);
        (mean, var / xs.len() as f64)
    };
    let (m1, v1) = run(0.1, 0.1);
    let (m2, v2) = run(0.02, 0.025);
    assert!((m1 - m2).abs() < 3.0 * (v1 + v2).sqrt(), "{m1} vs {m2}");
}

#[test]
fn overflow_is_reported_with_time_and_state() {
    let m = brownian(&[800.0, 800.0]);
    let err = simulate_path(&m, 1.0, 1, 10.0, &IncrementPlan::default(), &mut stream_rng(0, 0)).unwrap_err();
    match err {
        SimError::NonFiniteState { time, state } => {
            assert!(time > 0.0 && time < 10.0);
            assert!(state < 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_plans_are_rejected() {
    let m = brownian(&[-1.0, -1.0]);
    let bad = IncrementPlan {
        dt_max: 0.0,
        ..IncrementPlan::default()
    };
    assert!(simulate_path(&m, 0.0, 0, 1.0, &bad, &mut stream_rng(0, 0)).is_err());
    let err = simulate_path(&m, 0.0, 5, 1.0, &IncrementPlan::default(), &mut stream_rng(0, 0)).unwrap_err();
    assert!(matches!(err, SimError::StateOutOfRange { .. }), "{err:?}");
}
