//! Analytic results for the fixed-regime process `dY = alpha Y dt + sigma dZ`:
//! the Levy exponent, the stationary characteristic function, its inversion to
//! a CDF, and exponential moments of the stationary law.

mod exponent;
mod inversion;

use std::cell::Cell;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::LevyTriplet;
use crate::quad::{self, QuadError, QuadOptions};

pub use exponent::{levy_exponent, levy_exponent_real};
pub use inversion::{invert_to_cdf, CdfTable, InversionOptions};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("the stationary law needs alpha < 0, got {alpha}")]
    PreconditionAlphaSign { alpha: f64 },
    #[error("exponential moment of order {lambda} diverges")]
    DivergentExponent { lambda: f64 },
    #[error("the exponent of this measure is only available on the real and imaginary axes, not at {u}")]
    UnsupportedArgument { u: Complex64 },
    #[error("characteristic function still at {bound:e} at the truncation budget z = {z_max}")]
    SlowDecay { z_max: f64, bound: f64 },
    #[error("inversion did not settle: last refinement changed F by {change:e} with {nodes} nodes")]
    RefinementBudget { nodes: usize, change: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Absolute tolerance on the exponent of the characteristic function.
pub const CF_TOL: f64 = 1e-9;
/// Below this `|v|` the integrand `Phi(v) / v` is treated as settled.
const SERIES_CUTOFF: f64 = 1e-6;

/// `\int_0^1 f(u) du` for an integrand that behaves like a power of `u` near
/// zero: dyadic panels `[2^{-k-1}, 2^{-k}]` down to `u = cutoff`, with the
/// remainder below extrapolated geometrically from the last two panels.
fn integrate_unit_from_zero<F>(f: F, cutoff: f64, tol: f64) -> Result<Complex64, OracleError>
where
    F: Fn(f64) -> Result<Complex64, OracleError>,
{
    let failure: Cell<Option<OracleError>> = Cell::new(None);
    let g = |u: f64| match f(u) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            Complex64::new(0.0, 0.0)
        }
    };
    let opts = QuadOptions {
        abs_tol: tol / 64.0,
        rel_tol: 1e-12,
        max_intervals: 2000,
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut previous: Option<Complex64> = None;
    let mut hi = 1.0f64;
    loop {
        let lo = 0.5 * hi;
        let panel = quad::integrate_complex(g, lo, hi, opts)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += panel;
        if lo <= cutoff || lo < 1e-300 {
            let ratio = previous.map(|p| panel.norm() / p.norm()).unwrap_or(0.5);
            let ratio = if ratio.is_finite() && ratio < 0.95 { ratio } else { 0.5 };
            total += panel * (ratio / (1.0 - ratio));
            return Ok(total);
        }
        previous = Some(panel);
        hi = lo;
    }
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if alpha < 0.0 {
        Ok(())
    } else {
        Err(OracleError::PreconditionAlphaSign { alpha })
    }
}

/// Characteristic function of the stationary law of `dY = alpha Y dt + sigma dZ`,
/// `exp(-(1/|alpha|) \int_0^1 Phi(u sigma z) / u du)`.
pub fn stationary_cf(z: f64, alpha: f64, sigma: f64, triplet: &LevyTriplet) -> Result<Complex64, OracleError> {
    check_alpha(alpha)?;
    let w = sigma * z;
    if w == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let integral = integrate_unit_from_zero(
        |u| levy_exponent_real(u * w, triplet).map(|phi| phi / u),
        SERIES_CUTOFF / w.abs(),
        CF_TOL * alpha.abs(),
    )?;
    Ok((-integral / alpha.abs()).exp())
}

/// Logarithm of `\int e^{lambda x} pi(dx)` for the stationary law, `+inf`
/// when the jump measure has no exponential moment of order `lambda sigma`.
pub fn log_exp_moment(lambda: f64, alpha: f64, sigma: f64, triplet: &LevyTriplet) -> Result<f64, OracleError> {
    check_alpha(alpha)?;
    let c = lambda * sigma;
    if c == 0.0 {
        return Ok(0.0);
    }
    if !triplet.measure.exp_integral_finite(c) {
        return Ok(f64::INFINITY);
    }
    let i1 = -triplet.a * c * c / (4.0 * alpha) - triplet.b * c / alpha;
    let jumps = integrate_unit_from_zero(
        |u| exponent::measure_exponent(Complex64::new(0.0, -u * c), &triplet.measure).map(|phi| phi / u),
        SERIES_CUTOFF / c.abs(),
        CF_TOL * alpha.abs(),
    )?;
    let i2 = -jumps.re / alpha.abs();
    Ok(i1 + i2)
}

/// `\int e^{lambda x} pi(dx)` for the stationary law; `+inf` is a valid
/// answer (heavy one-sided tail), and so is overflow of a finite moment.
pub fn exp_moment(lambda: f64, alpha: f64, sigma: f64, triplet: &LevyTriplet) -> Result<f64, OracleError> {
    log_exp_moment(lambda, alpha, sigma, triplet).map(f64::exp)
}

/// Upper bound on `\int e^{lambda |x|} pi(dx)` from `e^{l|x|} <= e^{lx} + e^{-lx}`.
pub fn two_sided_exp_moment_bound(
    lambda: f64,
    alpha: f64,
    sigma: f64,
    triplet: &LevyTriplet,
) -> Result<f64, OracleError> {
    Ok(exp_moment(lambda, alpha, sigma, triplet)? + exp_moment(lambda, alpha, -sigma, triplet)?)
}
