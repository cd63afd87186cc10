//! Levy-Khintchine exponent
//! `Phi(u) = a u^2 / 2 - i b u + \int (1 - e^{iuz} + iuz 1_{|z|<1}) nu(dz)`.
//!
//! Closed forms cover the zero measure, atoms, Gaussian and exponential
//! jumps for any complex `u` where the integral converges. Power components
//! with a positive tempering rate use an incomplete-gamma form; the rest
//! (Pareto tails, untempered or near `beta = 1`) are integrated numerically,
//! for real `u` through a contour rotation of the oscillatory tail and for
//! imaginary `u` as a real integral.

use num_complex::Complex64;

use super::OracleError;
use crate::model::{Component, LevyMeasureSpec, LevyTriplet};
use crate::quad::{self, QuadOptions};
use statrs::function::gamma::{gamma, gamma_ur};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `1 - e^{ix} + ix` for real `x`, without cancellation near zero.
fn one_minus_eix_plus_ix(x: f64) -> Complex64 {
    let half = (0.5 * x).sin();
    let im = if x.abs() < 0.1 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        x - x.sin()
    };
    Complex64::new(2.0 * half * half, im)
}

/// `1 - e^{y} + y` for real `y`, without cancellation near zero.
fn one_minus_ey_plus_y(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        -y * y / 2.0 * (1.0 + y / 3.0 * (1.0 + y / 4.0))
    } else {
        -(y.exp_m1() - y)
    }
}

/// `\int_L^inf (1 - e^{iuz}) z^{-1-beta} e^{-theta z} dz` for real `u > 0`.
fn power_tail_real(u: f64, beta: f64, theta: f64, lower: f64) -> Result<Complex64, OracleError> {
    let weight = |z: Complex64| (-(1.0 + beta) * z.ln() - theta * z).exp();
    // Below z = 1/u the phase is slow; integrate on log scale there.
    let pivot = lower.max(1.0 / u);
    let mut total = Complex64::new(0.0, 0.0);
    if pivot > lower {
        total += quad::integrate_complex(
            |s| {
                let z = s.exp();
                (Complex64::new(1.0, 0.0) - (I * u * z).exp()) * weight(Complex64::new(z, 0.0)) * z
            },
            lower.ln(),
            pivot.ln(),
            opts(),
        )?;
    }
    // \int_P^inf z^{-1-beta} e^{-theta z} dz
    let mass = if theta == 0.0 {
        pivot.powf(-beta) / beta
    } else {
        quad::integrate_power_tail(|z| (-theta * z).exp(), pivot, beta, opts())?
    };
    // \int_P^inf e^{iuz} w(z) dz along z = P + i tau / u
    let rotated = quad::integrate_half_line_complex(
        |tau| (-tau).exp() * weight(Complex64::new(pivot, tau / u)),
        0.0,
        opts(),
    )? * (I * (I * u * pivot).exp() / u);
    total += mass - rotated;
    Ok(total)
}

/// Contribution of a positive-side power component to `Phi(u)`, real `u`.
fn power_component_real(u: f64, c: f64, beta: f64, theta: f64, lower: f64) -> Result<Complex64, OracleError> {
    if u == 0.0 || c == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if u < 0.0 {
        return power_component_real(-u, c, beta, theta, lower).map(|v| v.conj());
    }
    let mut total = Complex64::new(0.0, 0.0);
    let tail_from = lower.max(1.0);
    if lower < 1.0 {
        let head = if lower == 0.0 {
            quad::integrate_power_head_complex(
                |z| one_minus_eix_plus_ix(u * z) * (-theta * z).exp(),
                1.0,
                beta,
                opts(),
            )?
        } else {
            quad::integrate_complex(
                |z| one_minus_eix_plus_ix(u * z) * ((-theta * z).exp() * z.powf(-1.0 - beta)),
                lower,
                1.0,
                opts(),
            )?
        };
        total += head;
    }
    total += power_tail_real(u, beta, theta, tail_from)?;
    Ok(total * c)
}

/// Contribution of a positive-side power component to `Phi(-i y)`, real `y`.
fn power_component_imag(y: f64, c: f64, beta: f64, theta: f64, lower: f64) -> Result<f64, OracleError> {
    if y == 0.0 || c == 0.0 {
        return Ok(0.0);
    }
    if y > theta || (y == theta && theta == 0.0) {
        return Err(OracleError::DivergentExponent { lambda: y });
    }
    let mut total = 0.0;
    if lower < 1.0 {
        total += if lower == 0.0 {
            quad::integrate_power_head(|z| one_minus_ey_plus_y(y * z) * (-theta * z).exp(), 1.0, beta, opts())?
        } else {
            quad::integrate(
                |z| one_minus_ey_plus_y(y * z) * (-theta * z).exp() * z.powf(-1.0 - beta),
                lower,
                1.0,
                opts(),
            )?
        };
    }
    let from = lower.max(1.0);
    // \int_from^inf (e^{-theta z} - e^{(y - theta) z}) z^{-1-beta} dz
    total += quad::integrate_power_tail(
        |z| (-theta * z).exp() - ((y - theta) * z).exp(),
        from,
        beta,
        opts(),
    )?;
    Ok(c * total)
}

/// Upper incomplete gamma `Gamma(s, x)` for `s > -1`, `s != 0`, `x > 0`.
fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    if s > 0.0 {
        gamma(s) * gamma_ur(s, x)
    } else {
        (gamma(s + 1.0) * gamma_ur(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
    }
}

/// Closed form for `c z^{-1-beta} e^{-theta z}` on `z > 0` with `theta > 0`:
/// `-c Gamma(-beta) [(theta - iu)^beta - theta^beta + iu beta theta^{beta-1}]
///  - iu c theta^{beta-1} Gamma(1 - beta, theta)`.
/// Near `beta = 1` the two gamma terms cancel badly and quadrature is used.
fn tempered_closed_form(u: Complex64, c: f64, beta: f64, theta: f64) -> Option<Complex64> {
    if (beta - 1.0).abs() < 0.01 || theta <= 0.0 {
        return None;
    }
    let base = Complex64::new(theta, 0.0) - I * u;
    if base.re <= 0.0 {
        return None;
    }
    let bracket = base.powf(beta) - theta.powf(beta) + I * u * beta * theta.powf(beta - 1.0);
    let tail = I * u * theta.powf(beta - 1.0) * upper_incomplete_gamma(1.0 - beta, theta);
    Some(-(bracket * gamma(-beta) + tail) * c)
}

fn component_exponent(comp: &Component, u: Complex64) -> Result<Complex64, OracleError> {
    let one = Complex64::new(1.0, 0.0);
    match *comp {
        Component::Atom { z, weight } => {
            let comp = if z.abs() < 1.0 { I * u * z } else { Complex64::new(0.0, 0.0) };
            Ok((one - (I * u * z).exp() + comp) * weight)
        }
        Component::Gaussian { rate, mean, sd } => {
            let cf = (I * u * mean - 0.5 * sd * sd * u * u).exp();
            let truncated_mean = comp.first_moment_between(0.0)? / rate;
            Ok((one - cf + I * u * truncated_mean) * rate)
        }
        Component::Exponential { side, mass, r } => {
            if mass == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let s = side.sign();
            // e^{iuz} on side s decays iff r + s Im(u) > 0
            let denom = Complex64::new(r, 0.0) - I * u * s;
            if denom.re <= 0.0 {
                return Err(OracleError::DivergentExponent { lambda: -u.im });
            }
            let truncated_mean = comp.first_moment_between(0.0)? / mass;
            Ok((one - r / denom + I * u * truncated_mean) * mass)
        }
        Component::Power {
            side,
            c,
            beta,
            theta,
            lower,
        } => {
            // reflect the negative side onto the positive one: z -> -z, u -> -u
            let v = u * side.sign();
            if lower == 0.0 {
                if let Some(value) = tempered_closed_form(v, c, beta, theta) {
                    return Ok(value);
                }
            }
            if v.im == 0.0 {
                power_component_real(v.re, c, beta, theta, lower)
            } else if v.re == 0.0 {
                // u = -i y gives e^{iuz} = e^{yz}
                power_component_imag(-v.im, c, beta, theta, lower).map(|x| Complex64::new(x, 0.0))
            } else {
                Err(OracleError::UnsupportedArgument { u })
            }
        }
    }
}

/// Jump part `\int (1 - e^{iuz} + iuz 1_{|z|<1}) nu(dz)` of the exponent.
pub(crate) fn measure_exponent(u: Complex64, measure: &LevyMeasureSpec) -> Result<Complex64, OracleError> {
    if u.im != 0.0 && !measure.exp_integral_finite(-u.im) {
        return Err(OracleError::DivergentExponent { lambda: -u.im });
    }
    let mut value = Complex64::new(0.0, 0.0);
    if u == value {
        return Ok(value);
    }
    for comp in measure.components() {
        value += component_exponent(&comp, u)?;
    }
    Ok(value)
}

/// The Levy-Khintchine exponent at a complex point.
///
/// Real `u` gives the characteristic exponent; `u = -i lambda` gives
/// `-log E e^{lambda Z_1}`, which fails with
/// [`OracleError::DivergentExponent`] when the measure has no exponential
/// moment of that order.
pub fn levy_exponent(u: Complex64, triplet: &LevyTriplet) -> Result<Complex64, OracleError> {
    let jumps = measure_exponent(u, &triplet.measure)?;
    Ok(0.5 * triplet.a * u * u - I * triplet.b * u + jumps)
}

/// Power components evaluated by quadrature, bypassing any closed form.
#[cfg(test)]
pub(crate) fn power_by_quadrature(u: f64, c: f64, beta: f64, theta: f64, lower: f64) -> Complex64 {
    power_component_real(u, c, beta, theta, lower).unwrap()
}

/// Real-argument convenience wrapper.
pub fn levy_exponent_real(u: f64, triplet: &LevyTriplet) -> Result<Complex64, OracleError> {
    levy_exponent(Complex64::new(u, 0.0), triplet)
}
