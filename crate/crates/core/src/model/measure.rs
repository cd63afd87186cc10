//! Parametric Levy measures.
//!
//! Every supported family decomposes into at most a handful of *components*:
//! atoms, Gaussian-distributed compound Poisson jumps, exponential half-line
//! densities, and power-law half-line densities `c |z|^{-1-beta} e^{-theta |z|}`
//! restricted to `|z| >= lower`. Pareto jumps and tempered power laws are both
//! power components, so the analytic criteria and the integrals below are
//! written once per component kind.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr};

use super::ModelError;
use crate::quad::{self, QuadError, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoSide {
    Positive,
    Negative,
    Both,
}

/// Jump-size law of a compound Poisson measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDistribution {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Density `w r+ e^{-r+ z}` on `z > 0` and `(1-w) r- e^{r- z}` on `z < 0`.
    TwoSidedExponential {
        rate_pos: f64,
        rate_neg: f64,
        weight_pos: f64,
    },
    /// Pareto tail `beta scale^beta |z|^{-1-beta}` on `|z| >= scale`, split
    /// evenly between the half-lines when `side = both`.
    Pareto {
        beta: f64,
        side: ParetoSide,
        scale: f64,
    },
    PointMass {
        z0: f64,
    },
}

/// The Levy measure `nu` driving the noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyMeasureSpec {
    Zero,
    CompoundPoisson {
        rate: f64,
        jumps: JumpDistribution,
    },
    /// Density `c± |z|^{-(1+beta±)} e^{-theta± |z|}` on each half-line.
    TemperedPowerLaw {
        c_pos: f64,
        c_neg: f64,
        beta_pos: f64,
        beta_neg: f64,
        theta_pos: f64,
        theta_neg: f64,
    },
}

/// Sign of a half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Pos,
    Neg,
}

impl Side {
    pub(crate) fn sign(self) -> f64 {
        match self {
            Side::Pos => 1.0,
            Side::Neg => -1.0,
        }
    }

    pub(crate) fn of(x: f64) -> Side {
        if x < 0.0 {
            Side::Neg
        } else {
            Side::Pos
        }
    }
}

/// One additive piece of a measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Component {
    Atom { z: f64, weight: f64 },
    Gaussian { rate: f64, mean: f64, sd: f64 },
    /// `mass * r e^{-r |z|}` on one half-line.
    Exponential { side: Side, mass: f64, r: f64 },
    /// `c |z|^{-1-beta} e^{-theta |z|}` on `|z| >= lower` of one half-line.
    Power {
        side: Side,
        c: f64,
        beta: f64,
        theta: f64,
        lower: f64,
    },
}

/// Supremum of exponential rates `lambda >= 0` with finite
/// `\int_{|z|>=1, side} e^{lambda |z|} nu(dz)`, and whether it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ExpAbscissa {
    pub rate: f64,
    pub attained: bool,
}

impl ExpAbscissa {
    const UNBOUNDED: ExpAbscissa = ExpAbscissa {
        rate: f64::INFINITY,
        attained: true,
    };

    pub(crate) fn admits(&self, lambda: f64) -> bool {
        lambda < self.rate || (self.attained && lambda <= self.rate)
    }

    fn min(self, other: ExpAbscissa) -> ExpAbscissa {
        match self.rate.partial_cmp(&other.rate) {
            Some(std::cmp::Ordering::Less) => self,
            Some(std::cmp::Ordering::Greater) => other,
            _ => ExpAbscissa {
                rate: self.rate,
                attained: self.attained && other.attained,
            },
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Partial moments `E[Z^k; lo < Z < hi]` of `N(mean, sd^2)` for `k = 0, 1, 2`.
fn normal_partial_moments(mean: f64, sd: f64, lo: f64, hi: f64) -> [f64; 3] {
    if hi <= lo {
        return [0.0; 3];
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
    let mass = if a > 0.0 {
        // upper-tail form avoids cancellation far to the right
        std_normal_cdf(-a) - std_normal_cdf(-b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    };
    // E[Y; a<Y<b] and E[Y^2; a<Y<b] for standard Y
    let m1 = pa - pb;
    let fin = |v: f64, p: f64| if v.is_finite() { v * p } else { 0.0 };
    let m2 = mass + fin(a, pa) - fin(b, pb);
    [
        mass,
        mean * mass + sd * m1,
        mean * mean * mass + 2.0 * mean * sd * m1 + sd * sd * m2,
    ]
}

impl Component {
    /// Infinite activity near the origin.
    pub(crate) fn infinite_activity(&self) -> bool {
        matches!(*self, Component::Power { c, lower, .. } if c > 0.0 && lower == 0.0)
    }

    fn power_tail_mass(c: f64, beta: f64, theta: f64, from: f64) -> Result<f64, QuadError> {
        if c == 0.0 {
            return Ok(0.0);
        }
        if theta == 0.0 {
            return Ok(c * from.powf(-beta) / beta);
        }
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            ..Default::default()
        };
        quad::integrate_power_tail(|z| (-theta * z).exp(), from, beta, opts).map(|v| c * v)
    }

    /// `nu(|z| >= eps)` restricted to this component.
    pub(crate) fn mass_beyond(&self, eps: f64) -> Result<f64, QuadError> {
        Ok(match *self {
            Component::Atom { z, weight } => {
                if z.abs() >= eps {
                    weight
                } else {
                    0.0
                }
            }
            Component::Gaussian { rate, mean, sd } => {
                let inside = normal_partial_moments(mean, sd, -eps, eps)[0];
                rate * (1.0 - inside).max(0.0)
            }
            Component::Exponential { mass, r, .. } => mass * (-r * eps).exp(),
            Component::Power {
                c,
                beta,
                theta,
                lower,
                ..
            } => {
                let from = lower.max(eps);
                if from == 0.0 {
                    if c > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    Self::power_tail_mass(c, beta, theta, from)?
                }
            }
        })
    }

    /// `\int_{|z| < eps} z^2 nu(dz)`.
    pub(crate) fn second_moment_below(&self, eps: f64) -> f64 {
        match *self {
            Component::Atom { z, weight } => {
                if z.abs() < eps {
                    weight * z * z
                } else {
                    0.0
                }
            }
            Component::Gaussian { rate, mean, sd } => rate * normal_partial_moments(mean, sd, -eps, eps)[2],
            Component::Exponential { mass, r, .. } => mass * 2.0 / (r * r) * gamma_lr(3.0, r * eps),
            Component::Power {
                c,
                beta,
                theta,
                lower,
                ..
            } => {
                if c == 0.0 || lower >= eps {
                    return 0.0;
                }
                let s = 2.0 - beta;
                let upto = |x: f64| {
                    if theta == 0.0 {
                        x.powf(s) / s
                    } else {
                        gamma(s) * gamma_lr(s, theta * x) / theta.powf(s)
                    }
                };
                c * (upto(eps) - if lower > 0.0 { upto(lower) } else { 0.0 })
            }
        }
    }

    /// Signed first moment `\int_{lo <= |z| < 1} z nu(dz)`.
    pub(crate) fn first_moment_between(&self, lo: f64) -> Result<f64, QuadError> {
        if lo >= 1.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Component::Atom { z, weight } => {
                if z.abs() >= lo && z.abs() < 1.0 {
                    weight * z
                } else {
                    0.0
                }
            }
            Component::Gaussian { rate, mean, sd } => {
                let right = normal_partial_moments(mean, sd, lo, 1.0)[1];
                let left = normal_partial_moments(mean, sd, -1.0, -lo)[1];
                rate * (right + left)
            }
            Component::Exponential { side, mass, r } => {
                // \int_lo^1 z r e^{-rz} dz
                let part = ((1.0 + r * lo) * (-r * lo).exp() - (1.0 + r) * (-r).exp()) / r;
                side.sign() * mass * part
            }
            Component::Power {
                side,
                c,
                beta,
                theta,
                lower,
            } => {
                let from = lo.max(lower);
                if c == 0.0 || from >= 1.0 {
                    return Ok(0.0);
                }
                let value = if from == 0.0 {
                    if beta >= 1.0 {
                        f64::INFINITY
                    } else if theta == 0.0 {
                        1.0 / (1.0 - beta)
                    } else {
                        let s = 1.0 - beta;
                        gamma(s) * gamma_lr(s, theta) / theta.powf(s)
                    }
                } else {
                    quad::integrate(
                        |z| z.powf(-beta) * (-theta * z).exp(),
                        from,
                        1.0,
                        QuadOptions::with_abs_tol(1e-13),
                    )?
                };
                side.sign() * c * value
            }
        })
    }

    fn exp_abscissa(&self, side: Side) -> ExpAbscissa {
        match *self {
            Component::Atom { .. } | Component::Gaussian { .. } => ExpAbscissa::UNBOUNDED,
            Component::Exponential { side: s, mass, r } => {
                if s != side || mass == 0.0 {
                    ExpAbscissa::UNBOUNDED
                } else {
                    ExpAbscissa {
                        rate: r,
                        attained: false,
                    }
                }
            }
            Component::Power {
                side: s, c, theta, ..
            } => {
                if s != side || c == 0.0 {
                    ExpAbscissa::UNBOUNDED
                } else {
                    // at theta the integrand is a pure power |z|^{-1-beta},
                    // integrable at infinity; theta = 0 admits no rate at all.
                    ExpAbscissa {
                        rate: theta,
                        attained: theta > 0.0,
                    }
                }
            }
        }
    }

    fn log_integrable(&self) -> bool {
        // Only near-zero behavior can fail: every tail here has a finite log moment.
        !matches!(*self, Component::Power { c, beta, lower, .. } if c > 0.0 && lower == 0.0 && beta >= 1.0)
    }

    fn first_second_integrable(&self) -> bool {
        match *self {
            Component::Power {
                c,
                beta,
                theta,
                lower,
                ..
            } if c > 0.0 => {
                let head_ok = lower > 0.0 || beta < 1.0;
                let tail_ok = theta > 0.0 || beta > 2.0;
                head_ok && tail_ok
            }
            _ => true,
        }
    }

    /// `\int h(z) nu(dz)`, split at `|z| = 1` so that callers may carry the
    /// compensator indicator inside `h`.
    pub(crate) fn integrate<H: Fn(f64) -> f64>(&self, h: &H, opts: QuadOptions) -> Result<f64, QuadError> {
        match *self {
            Component::Atom { z, weight } => Ok(weight * h(z)),
            Component::Gaussian { rate, mean, sd } => {
                let density = |z: f64| {
                    let y = (z - mean) / sd;
                    (-0.5 * y * y).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
                };
                let mut breaks = vec![-1.0, 1.0, mean - 8.0 * sd, mean, mean + 8.0 * sd];
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let g = |z: f64| h(z) * density(z);
                let first = breaks[0];
                let last = *breaks.last().unwrap();
                let mut total = quad::integrate_half_line(|t| g(-t), -first, opts)?;
                for w in breaks.windows(2) {
                    total += quad::integrate(g, w[0], w[1], opts)?;
                }
                total += quad::integrate_half_line(g, last, opts)?;
                Ok(rate * total)
            }
            Component::Exponential { side, mass, r } => {
                let s = side.sign();
                let g = |t: f64| h(s * t) * r * (-r * t).exp();
                let head = quad::integrate(g, 0.0, 1.0, opts)?;
                let tail = quad::integrate_half_line(g, 1.0, opts)?;
                Ok(mass * (head + tail))
            }
            Component::Power {
                side,
                c,
                beta,
                theta,
                lower,
            } => {
                if c == 0.0 {
                    return Ok(0.0);
                }
                let s = side.sign();
                let weight = |t: f64| (-theta * t).exp();
                let mut total = 0.0;
                if lower < 1.0 {
                    if lower == 0.0 {
                        total += quad::integrate_power_head(|t| h(s * t) * weight(t), 1.0, beta, opts)?;
                    } else {
                        total += quad::integrate(
                            |t| h(s * t) * weight(t) * t.powf(-1.0 - beta),
                            lower,
                            1.0,
                            opts,
                        )?;
                    }
                }
                total += quad::integrate_power_tail(|t| h(s * t) * weight(t), lower.max(1.0), beta, opts)?;
                Ok(c * total)
            }
        }
    }

    /// Draw from this component restricted to `|z| >= eps` and normalized.
    fn sample_beyond<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        match *self {
            Component::Atom { z, .. } => z,
            Component::Gaussian { mean, sd, .. } => {
                let normal = Normal::new(mean, sd).expect("validated sd");
                loop {
                    let z = normal.sample(rng);
                    if z.abs() >= eps {
                        return z;
                    }
                }
            }
            Component::Exponential { side, r, .. } => {
                // memoryless: overshoot past eps is again Exp(r)
                let e: f64 = Exp::new(r).expect("validated rate").sample(rng);
                side.sign() * (eps + e)
            }
            Component::Power {
                side,
                beta,
                theta,
                lower,
                ..
            } => {
                let from = lower.max(eps);
                loop {
                    let u: f64 = rng.random();
                    // Pareto(beta, from) proposal; (1-u) lies in (0, 1]
                    let z = from * (1.0 - u).powf(-1.0 / beta);
                    if theta == 0.0 {
                        return side.sign() * z;
                    }
                    let accept: f64 = rng.random();
                    if accept < (-theta * (z - from)).exp() {
                        return side.sign() * z;
                    }
                }
            }
        }
    }
}

impl JumpDistribution {
    fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| Err(ModelError::InvalidMeasureParams(reason));
        match *self {
            JumpDistribution::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
                    return bad(format!("gaussian jumps need finite mean and sd > 0 (mean={mean}, sd={sd})"));
                }
            }
            JumpDistribution::TwoSidedExponential {
                rate_pos,
                rate_neg,
                weight_pos,
            } => {
                if !(rate_pos > 0.0 && rate_neg > 0.0 && rate_pos.is_finite() && rate_neg.is_finite()) {
                    return bad(format!(
                        "two-sided exponential rates must be positive (rate_pos={rate_pos}, rate_neg={rate_neg})"
                    ));
                }
                if !(0.0..=1.0).contains(&weight_pos) {
                    return bad(format!("weight_pos must lie in [0, 1], got {weight_pos}"));
                }
            }
            JumpDistribution::Pareto { beta, scale, .. } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad(format!("pareto tail exponent must be positive, got {beta}"));
                }
                if !(scale >= 1.0 && scale.is_finite()) {
                    return bad(format!("pareto scale must be >= 1, got {scale}"));
                }
            }
            JumpDistribution::PointMass { z0 } => {
                if z0 == 0.0 || !z0.is_finite() {
                    return bad(format!("point-mass jump must be finite and nonzero, got {z0}"));
                }
            }
        }
        Ok(())
    }
}

impl LevyMeasureSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            LevyMeasureSpec::Zero => Ok(()),
            LevyMeasureSpec::CompoundPoisson { rate, jumps } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(ModelError::InvalidMeasureParams(format!(
                        "compound Poisson rate must be positive, got {rate}"
                    )));
                }
                jumps.validate()
            }
            LevyMeasureSpec::TemperedPowerLaw {
                c_pos,
                c_neg,
                beta_pos,
                beta_neg,
                theta_pos,
                theta_neg,
            } => {
                for (name, c) in [("c_pos", c_pos), ("c_neg", c_neg)] {
                    if !(c >= 0.0 && c.is_finite()) {
                        return Err(ModelError::InvalidMeasureParams(format!("{name} must be >= 0, got {c}")));
                    }
                }
                for (name, b) in [("beta_pos", beta_pos), ("beta_neg", beta_neg)] {
                    if !(b > 0.0 && b < 2.0) {
                        return Err(ModelError::InvalidMeasureParams(format!(
                            "{name} must lie in (0, 2) for (1 ^ z^2) integrability, got {b}"
                        )));
                    }
                }
                for (name, t) in [("theta_pos", theta_pos), ("theta_neg", theta_neg)] {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(ModelError::InvalidMeasureParams(format!("{name} must be >= 0, got {t}")));
                    }
                }
                Ok(())
            }
        }
    }

    pub(crate) fn components(&self) -> Vec<Component> {
        match *self {
            LevyMeasureSpec::Zero => Vec::new(),
            LevyMeasureSpec::CompoundPoisson { rate, jumps } => match jumps {
                JumpDistribution::Gaussian { mean, sd } => vec![Component::Gaussian { rate, mean, sd }],
                JumpDistribution::TwoSidedExponential {
                    rate_pos,
                    rate_neg,
                    weight_pos,
                } => vec![
                    Component::Exponential {
                        side: Side::Pos,
                        mass: rate * weight_pos,
                        r: rate_pos,
                    },
                    Component::Exponential {
                        side: Side::Neg,
                        mass: rate * (1.0 - weight_pos),
                        r: rate_neg,
                    },
                ],
                JumpDistribution::Pareto { beta, side, scale } => {
                    let sides: &[Side] = match side {
                        ParetoSide::Positive => &[Side::Pos],
                        ParetoSide::Negative => &[Side::Neg],
                        ParetoSide::Both => &[Side::Pos, Side::Neg],
                    };
                    let share = rate / sides.len() as f64;
                    sides
                        .iter()
                        .map(|&s| Component::Power {
                            side: s,
                            c: share * beta * scale.powf(beta),
                            beta,
                            theta: 0.0,
                            lower: scale,
                        })
                        .collect()
                }
                JumpDistribution::PointMass { z0 } => vec![Component::Atom { z: z0, weight: rate }],
            },
            LevyMeasureSpec::TemperedPowerLaw {
                c_pos,
                c_neg,
                beta_pos,
                beta_neg,
                theta_pos,
                theta_neg,
            } => vec![
                Component::Power {
                    side: Side::Pos,
                    c: c_pos,
                    beta: beta_pos,
                    theta: theta_pos,
                    lower: 0.0,
                },
                Component::Power {
                    side: Side::Neg,
                    c: c_neg,
                    beta: beta_neg,
                    theta: theta_neg,
                    lower: 0.0,
                },
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LevyMeasureSpec::Zero)
    }

    /// True when `nu` has finite total mass (compound Poisson or zero).
    pub fn is_finite_activity(&self) -> bool {
        !self.components().iter().any(Component::infinite_activity)
    }

    /// `nu(|z| >= eps)`; infinite for `eps = 0` under infinite activity.
    pub fn mass_beyond(&self, eps: f64) -> Result<f64, QuadError> {
        self.components().iter().map(|c| c.mass_beyond(eps)).sum()
    }

    /// `\int_{0 < |z| < eps} z^2 nu(dz)`, the variance rate of the jumps below
    /// the cutoff.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        self.components().iter().map(|c| c.second_moment_below(eps)).sum()
    }

    /// `\int_{lo <= |z| < 1} z nu(dz)`: the part of the compensator carried by
    /// jumps in `[lo, 1)`.
    pub fn compensator_drift(&self, lo: f64) -> Result<f64, QuadError> {
        self.components().iter().map(|c| c.first_moment_between(lo)).sum()
    }

    /// `\int h(z) nu(dz)` by quadrature, split at `|z| = 1`.
    pub fn integrate<H: Fn(f64) -> f64>(&self, h: H, opts: QuadOptions) -> Result<f64, QuadError> {
        self.components().iter().map(|c| c.integrate(&h, opts)).sum()
    }

    pub(crate) fn exp_abscissa(&self, side: Side) -> ExpAbscissa {
        self.components()
            .iter()
            .fold(ExpAbscissa::UNBOUNDED, |acc, c| acc.min(c.exp_abscissa(side)))
    }

    /// Whether `\int_{|z|>=1} (e^{c z} - 1) nu(dz)` is finite.
    pub fn exp_integral_finite(&self, c: f64) -> bool {
        if c == 0.0 {
            return true;
        }
        self.exp_abscissa(Side::of(c)).admits(c.abs())
    }

    /// `\int_{|z|>=1} (e^{c z} - 1) nu(dz) = inf` for every `c > 0`, in direction `side`.
    pub(crate) fn exp_divergent_everywhere(&self, side: Side) -> bool {
        let a = self.exp_abscissa(side);
        a.rate == 0.0 && !a.attained
    }

    pub(crate) fn log_integrable(&self) -> bool {
        self.components().iter().all(Component::log_integrable)
    }

    pub(crate) fn first_second_integrable(&self) -> bool {
        self.components().iter().all(Component::first_second_integrable)
    }

    /// Sampler for jumps with `|z| >= eps`; returns `None` if that region
    /// carries no mass.
    pub(crate) fn jump_sampler(&self, eps: f64) -> Result<Option<JumpSampler>, QuadError> {
        let mut comps = Vec::new();
        let mut masses = Vec::new();
        for c in self.components() {
            let m = c.mass_beyond(eps)?;
            if m > 0.0 {
                comps.push(c);
                masses.push(m);
            }
        }
        let total: f64 = masses.iter().sum();
        if total == 0.0 {
            return Ok(None);
        }
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        Ok(Some(JumpSampler {
            components: comps,
            cumulative,
            rate: total,
            eps,
        }))
    }
}

/// Normalized law of the jumps above a cutoff, with their total rate.
#[derive(Debug, Clone)]
pub(crate) struct JumpSampler {
    components: Vec<Component>,
    cumulative: Vec<f64>,
    pub rate: f64,
    eps: f64,
}

impl JumpSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let idx = if self.components.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            self.cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(self.components.len() - 1)
        };
        self.components[idx].sample_beyond(self.eps, rng)
    }
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tempered(c: f64, beta: f64, theta: f64) -> LevyMeasureSpec {
        LevyMeasureSpec::TemperedPowerLaw {
            c_pos: c,
            c_neg: c,
            beta_pos: beta,
            beta_neg: beta,
            theta_pos: theta,
            theta_neg: theta,
        }
    }

    #[test]
    fn rejects_stable_index_two_or_more() {
        let m = LevyMeasureSpec::TemperedPowerLaw {
            c_pos: 1.0,
            c_neg: 1.0,
            beta_pos: 2.3,
            beta_neg: 0.5,
            theta_pos: 1.0,
            theta_neg: 1.0,
        };
        assert!(matches!(m.validate(), Err(ModelError::InvalidMeasureParams(_))));
        assert!(tempered(1.0, 0.5, 3.0).validate().is_ok());
    }

    #[test]
    fn normal_partial_moments_total() {
        let [m0, m1, m2] = normal_partial_moments(0.3, 1.7, f64::NEG_INFINITY, f64::INFINITY);
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!((m1 - 0.3).abs() < 1e-14);
        assert!((m2 - (0.09 + 1.7 * 1.7)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_jump_moments_match_quadrature() {
        let m = LevyMeasureSpec::CompoundPoisson {
            rate: 2.0,
            jumps: JumpDistribution::Gaussian { mean: 0.4, sd: 0.8 },
        };
        let opts = QuadOptions::default();
        let q = m
            .integrate(|z| if z.abs() < 0.3 { z * z } else { 0.0 }, opts)
            .unwrap();
        assert!((q - m.small_jump_variance(0.3)).abs() < 1e-7);
        let q = m
            .integrate(|z| if (0.1..1.0).contains(&z.abs()) { z } else { 0.0 }, opts)
            .unwrap();
        assert!((q - m.compensator_drift(0.1).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn tempered_mass_and_moments() {
        let m = tempered(1.0, 0.5, 3.0);
        let beyond = m.mass_beyond(0.1).unwrap();
        // per side: \int_0.1^inf z^{-1.5} e^{-3z} dz, via direct half-line quadrature
        let side = quad::integrate_half_line(|z| z.powf(-1.5) * (-3.0 * z).exp(), 0.1, QuadOptions::default())
            .unwrap();
        assert!((beyond - 2.0 * side).abs() < 1e-8);
        assert!(m.compensator_drift(0.0).unwrap().abs() < 1e-14);
        assert!(!m.is_finite_activity());
    }

    #[test]
    fn exponential_abscissae() {
        let m = LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jumps: JumpDistribution::TwoSidedExponential {
                rate_pos: 2.0,
                rate_neg: 5.0,
                weight_pos: 0.5,
            },
        };
        assert!(m.exp_integral_finite(1.9));
        assert!(!m.exp_integral_finite(2.0));
        assert!(m.exp_integral_finite(-4.9));
        assert!(!m.exp_integral_finite(-5.0));
        let t = tempered(1.0, 0.5, 3.0);
        assert!(t.exp_integral_finite(3.0));
        assert!(!t.exp_integral_finite(3.01));
    }

    #[test]
    fn tempered_large_jumps_respect_cutoff() {
        let m = tempered(1.0, 0.5, 3.0);
        let sampler = m.jump_sampler(0.1).unwrap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..20_000).map(|_| sampler.sample(&mut rng)).collect();
        assert!(draws.iter().all(|z| z.abs() >= 0.1));
        // empirical mean |z| vs quadrature of |z| against the normalized tail
        let mean_abs = draws.iter().map(|z| z.abs()).sum::<f64>() / draws.len() as f64;
        let num = m
            .integrate(|z| if z.abs() >= 0.1 { z.abs() } else { 0.0 }, QuadOptions::default())
            .unwrap();
        let expected = num / sampler.rate;
        assert!((mean_abs - expected).abs() < 0.02 * expected, "{mean_abs} vs {expected}");
    }
}
