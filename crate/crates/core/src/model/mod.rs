//! Model data: the switching chain's rate matrix, per-regime coefficients
//! and the Levy triplet of the driving noise, together with the integrability
//! classification of the Levy measure.

mod measure;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use measure::{JumpDistribution, LevyMeasureSpec, ParetoSide};
pub(crate) use measure::{standard_normal, Component, JumpSampler, Side};

use crate::chain;

/// Largest supported state space.
pub const MAX_STATES: usize = 64;
/// Absolute tolerance on the row sums of the rate matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("row {row} of the rate matrix sums to {sum:e}, not 0")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("rate matrix entry ({row}, {col}) = {value} is negative off the diagonal")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least 2 and at most {MAX_STATES} states, got {0}")]
    StateCount(usize),
    #[error("gaussian coefficient a must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("invalid Levy measure parameters: {0}")]
    InvalidMeasureParams(String),
    #[error("rate matrix is not irreducible")]
    NotIrreducible,
    #[error("non-finite model coefficient: {0}")]
    NonFinite(String),
}

/// Levy triplet `(b, a, nu)` of `Z_t = b t + sqrt(a) B_t + jumps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub b: f64,
    pub a: f64,
    pub measure: LevyMeasureSpec,
}

impl LevyTriplet {
    pub fn new(b: f64, a: f64, measure: LevyMeasureSpec) -> Result<Self, ModelError> {
        if !b.is_finite() {
            return Err(ModelError::NonFinite(format!("b = {b}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(ModelError::NonPositiveA(a));
        }
        measure.validate()?;
        Ok(LevyTriplet { b, a, measure })
    }

    /// Brownian motion with unit variance and no drift or jumps.
    pub fn brownian() -> Self {
        LevyTriplet {
            b: 0.0,
            a: 1.0,
            measure: LevyMeasureSpec::Zero,
        }
    }
}

/// A validated regime-switching Ornstein-Uhlenbeck model
/// `dX = alpha_{L} X dt + sigma_{L} dZ` with `L` a chain on `N` states.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    q: DMatrix<f64>,
    alpha: Vec<f64>,
    sigma: Vec<f64>,
    triplet: LevyTriplet,
}

impl RegimeModel {
    /// Validates and builds a model. `q` is given row by row.
    pub fn new(q: Vec<Vec<f64>>, alpha: Vec<f64>, sigma: Vec<f64>, triplet: LevyTriplet) -> Result<Self, ModelError> {
        let n = q.len();
        if !(2..=MAX_STATES).contains(&n) {
            return Err(ModelError::StateCount(n));
        }
        if let Some((row, r)) = q.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(ModelError::DimensionMismatch(format!(
                "rate matrix row {row} has {} entries, expected {n}",
                r.len()
            )));
        }
        if alpha.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "alpha has {} entries, expected {n}",
                alpha.len()
            )));
        }
        if sigma.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "sigma has {} entries, expected {n}",
                sigma.len()
            )));
        }
        if let Some(v) = alpha.iter().chain(sigma.iter()).find(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(format!("alpha/sigma entry {v}")));
        }
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite(format!("q[{i}][{j}] = {v}")));
                }
                if i != j && v < 0.0 {
                    return Err(ModelError::NegativeOffDiagonal {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOL {
                return Err(ModelError::RowSumViolation { row: i, sum });
            }
        }
        let triplet = LevyTriplet::new(triplet.b, triplet.a, triplet.measure)?;
        let q = DMatrix::from_fn(n, n, |i, j| q[i][j]);
        if !chain::is_irreducible(&q) {
            return Err(ModelError::NotIrreducible);
        }
        Ok(RegimeModel { q, alpha, sigma, triplet })
    }

    pub fn n_states(&self) -> usize {
        self.alpha.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn q_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states())
            .map(|i| self.q.row(i).iter().copied().collect())
            .collect()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn measure(&self) -> &LevyMeasureSpec {
        &self.triplet.measure
    }

    /// Exit rate `q_i = -q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All regimes share the same coefficients, so the switching is invisible
    /// to `X`.
    pub fn is_equal_regime(&self) -> bool {
        self.alpha.iter().all(|&a| a == self.alpha[0]) && self.sigma.iter().all(|&s| s == self.sigma[0])
    }

    pub fn integrability(&self) -> IntegrabilityReport {
        classify_integrability(&self.triplet.measure, &self.sigma)
    }
}

/// Builds a [`RegimeModel`] from its raw parts; see [`RegimeModel::new`].
pub fn validate_model(
    q: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    sigma: Vec<f64>,
    triplet: LevyTriplet,
) -> Result<RegimeModel, ModelError> {
    RegimeModel::new(q, alpha, sigma, triplet)
}

/// Which integrability conditions the Levy measure satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    /// `\int (1 ^ z^2) nu(dz) < inf`; guaranteed by validation.
    pub levy_measure: bool,
    /// `\int log(1 + |z|) nu(dz) < inf`.
    pub log_moment: bool,
    /// `\int (|z| v |z|^2) nu(dz) < inf`.
    pub first_second_moment: bool,
    /// Per state: `\int_{|z|>=1} (e^{lambda sigma_i z} - 1) nu(dz) = inf` for all `lambda > 0`.
    pub exp_divergent: Vec<bool>,
    /// Largest `lambda_0` in `{2^k : k = -10..=10}` with
    /// `\int_{|z|>=1} (e^{lambda_0 |sigma_i z|} - 1) nu(dz) < inf` for every state.
    pub exp_moment_witness: Option<f64>,
}

/// Dyadic grid searched for an exponential-moment witness, ascending.
pub fn witness_grid() -> impl DoubleEndedIterator<Item = f64> {
    (-10..=10).map(|k| 2f64.powi(k))
}

/// Decides every integrability condition in closed form for the supported
/// families:
///
/// * power components (`c |z|^{-1-beta} e^{-theta |z|}`) starting at 0 lose
///   the log and first moments near the origin when `beta >= 1`;
/// * a power tail without tempering has finite second moment only for
///   `beta > 2` and no exponential moment at all;
/// * an exponential side of rate `r` admits `e^{lambda |z|}` exactly for
///   `lambda < r`; tempering `theta` admits `lambda <= theta`;
/// * Gaussian and atomic jumps have every moment.
pub fn classify_integrability(measure: &LevyMeasureSpec, sigma: &[f64]) -> IntegrabilityReport {
    let exp_divergent = sigma
        .iter()
        .map(|&s| s != 0.0 && measure.exp_divergent_everywhere(Side::of(s)))
        .collect();
    let exp_moment_witness = witness_grid().rev().find(|&lambda| {
        sigma.iter().all(|&s| {
            let c = lambda * s.abs();
            measure.exp_integral_finite(c) && measure.exp_integral_finite(-c)
        })
    });
    IntegrabilityReport {
        levy_measure: true,
        log_moment: measure.log_integrable(),
        first_second_moment: measure.first_second_integrable(),
        exp_divergent,
        exp_moment_witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(q: Vec<Vec<f64>>) -> Result<RegimeModel, ModelError> {
        RegimeModel::new(q, vec![-2.0, 1.0], vec![1.0, 1.0], LevyTriplet::brownian())
    }

    fn pareto(beta: f64, side: ParetoSide) -> LevyMeasureSpec {
        LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jumps: JumpDistribution::Pareto { beta, side, scale: 1.0 },
        }
    }

    #[test]
    fn accepts_reference_model() {
        let m = two_state(vec![vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.exit_rate(1), 2.0);
    }

    #[test]
    fn rejects_bad_rate_matrices() {
        assert!(matches!(
            two_state(vec![vec![-1.0, 0.5], vec![2.0, -2.0]]),
            Err(ModelError::RowSumViolation { row: 0, .. })
        ));
        assert!(matches!(
            two_state(vec![vec![1.0, -1.0], vec![2.0, -2.0]]),
            Err(ModelError::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            two_state(vec![vec![0.0, 0.0], vec![2.0, -2.0]]),
            Err(ModelError::NotIrreducible)
        ));
        assert!(matches!(
            RegimeModel::new(vec![vec![0.0]], vec![1.0], vec![1.0], LevyTriplet::brownian()),
            Err(ModelError::StateCount(1))
        ));
        assert!(matches!(
            RegimeModel::new(
                vec![vec![-1.0, 1.0], vec![2.0, -2.0]],
                vec![1.0],
                vec![1.0, 1.0],
                LevyTriplet::brownian()
            ),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rejects_nonpositive_a() {
        assert!(matches!(
            LevyTriplet::new(0.0, 0.0, LevyMeasureSpec::Zero),
            Err(ModelError::NonPositiveA(_))
        ));
    }

    #[test]
    fn zero_measure_report() {
        let r = classify_integrability(&LevyMeasureSpec::Zero, &[1.0, -3.0]);
        assert!(r.levy_measure && r.log_moment && r.first_second_moment);
        assert_eq!(r.exp_divergent, vec![false, false]);
        assert_eq!(r.exp_moment_witness, Some(1024.0));
    }

    #[test]
    fn two_sided_pareto_report() {
        // \int_1^inf z^{q-1-beta} dz < inf iff q < beta: log (q -> 0) ok, q = 2 fails for beta = 1.5
        let r = classify_integrability(&pareto(1.5, ParetoSide::Both), &[1.0, 1.0]);
        assert!(r.log_moment);
        assert!(!r.first_second_moment);
        assert_eq!(r.exp_divergent, vec![true, true]);
        assert_eq!(r.exp_moment_witness, None);
        let r = classify_integrability(&pareto(2.5, ParetoSide::Both), &[1.0, 1.0]);
        assert!(r.first_second_moment);
    }

    #[test]
    fn one_sided_pareto_depends_on_loading_sign() {
        let r = classify_integrability(&pareto(1.2, ParetoSide::Positive), &[1.0, -1.0, 0.0]);
        assert_eq!(r.exp_divergent, vec![true, false, false]);
        assert_eq!(r.exp_moment_witness, None);
    }

    #[test]
    fn tempered_witness() {
        let m = LevyMeasureSpec::TemperedPowerLaw {
            c_pos: 1.0,
            c_neg: 1.0,
            beta_pos: 0.5,
            beta_neg: 0.5,
            theta_pos: 3.0,
            theta_neg: 3.0,
        };
        let r = classify_integrability(&m, &[1.0, 2.0]);
        assert!(r.first_second_moment && r.log_moment);
        assert_eq!(r.exp_divergent, vec![false, false]);
        assert_eq!(r.exp_moment_witness, Some(1.0));
    }

    #[test]
    fn tempered_near_zero_behaviour() {
        let m = LevyMeasureSpec::TemperedPowerLaw {
            c_pos: 1.0,
            c_neg: 0.0,
            beta_pos: 1.4,
            beta_neg: 0.5,
            theta_pos: 1.0,
            theta_neg: 0.0,
        };
        let r = classify_integrability(&m, &[1.0, 1.0]);
        assert!(!r.log_moment);
        assert!(!r.first_second_moment);
        // the untempered negative side has no mass, so no divergence from it
        assert_eq!(r.exp_divergent, vec![false, false]);
        assert_eq!(r.exp_moment_witness, Some(1.0));
    }
}
