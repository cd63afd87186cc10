#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use regime_ou_core::model::{JumpDistribution, LevyMeasureSpec, LevyTriplet, ParetoSide, RegimeModel};

pub fn q2() -> Vec<Vec<f64>> {
    vec![vec![-1.0, 1.0], vec![2.0, -2.0]]
}

pub fn model(alpha: &[f64], sigma: &[f64], triplet: LevyTriplet) -> RegimeModel {
    RegimeModel::new(q2(), alpha.to_vec(), sigma.to_vec(), triplet).unwrap()
}

pub fn brownian(alpha: &[f64]) -> RegimeModel {
    model(alpha, &vec![1.0; alpha.len()], LevyTriplet::brownian())
}

pub fn triplet(measure: LevyMeasureSpec) -> LevyTriplet {
    LevyTriplet::new(0.0, 1.0, measure).unwrap()
}

pub fn pareto_cp(beta: f64, side: ParetoSide) -> LevyMeasureSpec {
    LevyMeasureSpec::CompoundPoisson {
        rate: 1.0,
        jumps: JumpDistribution::Pareto { beta, side, scale: 1.0 },
    }
}

pub fn gaussian_cp(rate: f64) -> LevyMeasureSpec {
    LevyMeasureSpec::CompoundPoisson {
        rate,
        jumps: JumpDistribution::Gaussian { mean: 0.0, sd: 1.0 },
    }
}

pub fn tempered(c: f64, beta: f64, theta: f64) -> LevyMeasureSpec {
    LevyMeasureSpec::TemperedPowerLaw {
        c_pos: c,
        c_neg: c,
        beta_pos: beta,
        beta_neg: beta,
        theta_pos: theta,
        theta_neg: theta,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random irreducible rate matrix: a cycle through all states plus sparse
/// extra transitions, rates in (0.1, 5).
pub fn random_rate_matrix<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (j == (i + 1) % n || rng.random::<f64>() < 0.4) {
                q[i][j] = rng.random_range(0.1..5.0);
            }
        }
        q[i][i] = -q[i].iter().sum::<f64>();
    }
    q
}

pub fn normal_cdf(x: f64, sd: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / (sd * std::f64::consts::SQRT_2))
}

/// `e^{tM}` by scaling and squaring with a Taylor series, as a test oracle.
pub fn expm(m: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm = m.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = t / 2f64.powi(squarings);
    let a: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect())
            .collect()
    };
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = mul(&term, &a);
        term.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v /= k as f64));
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}
