//! The perturbed rate matrix `Q_p = Q + p diag(alpha)`, its negated spectral
//! abscissa `eta_p`, and the moment index `kappa = sup{p > 0 : eta_p > 0}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain;
use crate::model::RegimeModel;

/// Absolute bisection tolerance on `kappa`.
pub const KAPPA_TOL: f64 = 1e-10;
/// Drift indices within this distance of zero count as zero.
pub const DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalue solver did not converge for p = {p}")]
    EigensolverFailure { p: f64 },
    #[error("sign pattern of eta_p inconsistent with a single crossing on (0, {upper}): {detail}")]
    BracketFailure { upper: f64, detail: String },
    #[error(transparent)]
    Chain(#[from] chain::ChainError),
}

/// Value of the moment index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Kappa {
    Finite(f64),
    /// `max alpha_i <= 0`.
    Infinite,
    /// `max alpha_i > 0` but `eta_p <= 0` for every `p > 0` (for instance all
    /// `alpha_i` equal and positive): the set defining `kappa` is empty.
    Degenerate,
}

impl Kappa {
    /// `kappa v 2`, the moment order above which switching forces divergence.
    /// A degenerate index behaves as `kappa -> 0`.
    pub fn moment_threshold(&self) -> f64 {
        match *self {
            Kappa::Finite(k) => k.max(2.0),
            Kappa::Infinite => f64::INFINITY,
            Kappa::Degenerate => 2.0,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Kappa::Finite(k) => Some(k),
            Kappa::Infinite => Some(f64::INFINITY),
            Kappa::Degenerate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub p: f64,
    pub eta_p: f64,
    pub kappa: Kappa,
    /// `min{q_i / alpha_i : alpha_i > 0}`; `None` when no `alpha_i` is positive.
    pub kappa_upper_bound: Option<f64>,
}

pub fn build_qp(q: &DMatrix<f64>, alpha: &[f64], p: f64) -> DMatrix<f64> {
    let mut qp = q.clone();
    for (i, a) in alpha.iter().enumerate() {
        qp[(i, i)] += p * a;
    }
    qp
}

/// Largest real part over the spectrum of a dense real matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n.max(1))?;
    schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .reduce(f64::max)
}

/// `eta_p = -max Re Spec(Q_p)`.
pub fn eta_p(q: &DMatrix<f64>, alpha: &[f64], p: f64) -> Result<f64, SpectralError> {
    spectral_abscissa(&build_qp(q, alpha, p))
        .map(|s| -s)
        .ok_or(SpectralError::EigensolverFailure { p })
}

/// `min{q_i / alpha_i : alpha_i > 0}`.
pub fn kappa_upper_bound(q: &DMatrix<f64>, alpha: &[f64]) -> Option<f64> {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| -q[(i, i)] / a)
        .reduce(f64::min)
}

/// Bisects the sign change of `eta_p` on `(0, min q_i/alpha_i)`.
///
/// `eta_0 = 0` and `d eta_p / dp = -sum mu_i alpha_i` at `p = 0`, with `eta`
/// concave in `p`; so the positivity set is nonempty exactly when the drift
/// index is negative, and otherwise the index is reported as degenerate.
pub fn kappa(q: &DMatrix<f64>, alpha: &[f64]) -> Result<Kappa, SpectralError> {
    let Some(upper) = kappa_upper_bound(q, alpha) else {
        return Ok(Kappa::Infinite);
    };
    let law = chain::stationary_distribution(q)?;
    if law.average(alpha) >= -DRIFT_TOL {
        return Ok(Kappa::Degenerate);
    }
    let at_upper = eta_p(q, alpha, upper)?;
    if at_upper >= 0.0 {
        return Err(SpectralError::BracketFailure {
            upper,
            detail: format!("eta at the upper bracket is {at_upper:e} >= 0"),
        });
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > KAPPA_TOL {
        let mid = 0.5 * (lo + hi);
        if eta_p(q, alpha, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let below = eta_p(q, alpha, (k - KAPPA_TOL).max(0.5 * k))?;
    let above = eta_p(q, alpha, k + KAPPA_TOL)?;
    if !(below > 0.0 && above < 0.0) {
        return Err(SpectralError::BracketFailure {
            upper,
            detail: format!("eta(kappa - tol) = {below:e}, eta(kappa + tol) = {above:e}"),
        });
    }
    Ok(Kappa::Finite(k))
}

/// `eta_p` at `p`, together with `kappa` and its upper bound.
pub fn spectral_report(model: &RegimeModel, p: f64) -> Result<SpectralReport, SpectralError> {
    Ok(SpectralReport {
        p,
        eta_p: eta_p(model.q(), model.alpha(), p)?,
        kappa: kappa(model.q(), model.alpha())?,
        kappa_upper_bound: kappa_upper_bound(model.q(), model.alpha()),
    })
}
