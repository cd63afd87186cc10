//! The per-state generator `L^(i) f = D^(i) f + J^(i) f` and grid checks of
//! the Lyapunov drift inequalities
//! `L^(i) h <= (alpha_i + eps) g` with `h = log(1 + x^2)`, `g = 2x^2 / (1 + x^2)`, and
//! `L^(i) V <= (-2 alpha_i + eps) V` with `V = 1 / (delta + x^2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{drift_index, AnalyzeError};
use crate::model::RegimeModel;
use crate::quad::QuadOptions;

/// A function of `(x, state)` with its first two `x`-derivatives.
pub trait TestFunction: Sync {
    fn value(&self, x: f64, i: usize) -> f64;
    fn d1(&self, x: f64, i: usize) -> f64;
    fn d2(&self, x: f64, i: usize) -> f64;

    /// `f(x + y, i) - f(x, i)`; override when a cancellation-free form exists.
    fn increment(&self, x: f64, y: f64, i: usize) -> f64 {
        self.value(x + y, i) - self.value(x, i)
    }
}

/// Caller-supplied closures `(f, f', f'')`.
pub struct Callables<F, D1, D2>(pub F, pub D1, pub D2);

impl<F, D1, D2> TestFunction for Callables<F, D1, D2>
where
    F: Fn(f64, usize) -> f64 + Sync,
    D1: Fn(f64, usize) -> f64 + Sync,
    D2: Fn(f64, usize) -> f64 + Sync,
{
    fn value(&self, x: f64, i: usize) -> f64 {
        (self.0)(x, i)
    }
    fn d1(&self, x: f64, i: usize) -> f64 {
        (self.1)(x, i)
    }
    fn d2(&self, x: f64, i: usize) -> f64 {
        (self.2)(x, i)
    }
}

/// The two Lyapunov functions used for the certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftFunction {
    /// `h = log(1 + x^2)` against `g = 2x^2 / (1 + x^2)`.
    LogQuadratic,
    /// `V = 1 / (delta + x^2)`.
    ReciprocalQuadratic { delta: f64 },
}

impl DriftFunction {
    /// The comparison function on the right of the inequality.
    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            DriftFunction::LogQuadratic => 2.0 * x * x / (1.0 + x * x),
            DriftFunction::ReciprocalQuadratic { delta } => 1.0 / (delta + x * x),
        }
    }

    /// The per-state coefficient multiplying [`DriftFunction::weight`].
    pub fn coefficient(&self, alpha_i: f64, epsilon: f64) -> f64 {
        match self {
            DriftFunction::LogQuadratic => alpha_i + epsilon,
            DriftFunction::ReciprocalQuadratic { .. } => -2.0 * alpha_i + epsilon,
        }
    }
}

impl TestFunction for DriftFunction {
    fn value(&self, x: f64, _: usize) -> f64 {
        match *self {
            DriftFunction::LogQuadratic => (x * x).ln_1p(),
            DriftFunction::ReciprocalQuadratic { delta } => 1.0 / (delta + x * x),
        }
    }

    fn d1(&self, x: f64, _: usize) -> f64 {
        match *self {
            DriftFunction::LogQuadratic => 2.0 * x / (1.0 + x * x),
            DriftFunction::ReciprocalQuadratic { delta } => {
                let s = delta + x * x;
                -2.0 * x / (s * s)
            }
        }
    }

    fn d2(&self, x: f64, _: usize) -> f64 {
        match *self {
            DriftFunction::LogQuadratic => {
                let s = 1.0 + x * x;
                2.0 * (1.0 - x * x) / (s * s)
            }
            DriftFunction::ReciprocalQuadratic { delta } => {
                let s = delta + x * x;
                (6.0 * x * x - 2.0 * delta) / (s * s * s)
            }
        }
    }

    fn increment(&self, x: f64, y: f64, _: usize) -> f64 {
        let cross = y * (2.0 * x + y);
        match *self {
            DriftFunction::LogQuadratic => (cross / (1.0 + x * x)).ln_1p(),
            DriftFunction::ReciprocalQuadratic { delta } => {
                let z = x + y;
                -cross / ((delta + x * x) * (delta + z * z))
            }
        }
    }
}

/// `D^(i) f + J^(i) f` at `x`: drift and diffusion analytically, the jump
/// integral `\int f(x + sigma_i z) - f(x) - sigma_i z f'(x) 1_{|z|<1} nu(dz)`
/// by quadrature with absolute tolerance `1e-9 (1 + |f(x)|)`.
pub fn generator_apply<T: TestFunction + ?Sized>(
    f: &T,
    x: f64,
    i: usize,
    model: &RegimeModel,
) -> Result<f64, AnalyzeError> {
    let triplet = model.triplet();
    let (alpha, sigma) = (model.alpha()[i], model.sigma()[i]);
    let fx = f.value(x, i);
    let d1 = f.d1(x, i);
    let d2 = f.d2(x, i);
    let diffusion = (alpha * x + triplet.b * sigma) * d1 + 0.5 * triplet.a * sigma * sigma * d2;
    if sigma == 0.0 || triplet.measure.is_zero() {
        return Ok(diffusion);
    }
    let taylor_below = 1e-5 * (1.0 + x.abs());
    let integrand = |z: f64| {
        let y = sigma * z;
        if y.abs() < taylor_below && z.abs() < 1.0 {
            0.5 * y * y * d2
        } else {
            let comp = if z.abs() < 1.0 { y * d1 } else { 0.0 };
            f.increment(x, y, i) - comp
        }
    };
    let opts = QuadOptions {
        abs_tol: 1e-9 * (1.0 + fx.abs()),
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let jumps = triplet.measure.integrate(integrand, opts)?;
    Ok(diffusion + jumps)
}

/// `(Q f(x, .))(i) = sum_j q_ij f(x, j)`, the switching part of the full generator.
pub fn switching_term<T: TestFunction + ?Sized>(f: &T, x: f64, i: usize, model: &RegimeModel) -> f64 {
    (0..model.n_states()).map(|j| model.q()[(i, j)] * f.value(x, j)).sum()
}

/// Log-spaced magnitudes `|x|`, checked with both signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub min_abs: f64,
    pub max_abs: f64,
    pub points_per_decade: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            min_abs: 1.0,
            max_abs: 1e6,
            points_per_decade: 10,
        }
    }
}

impl SearchGrid {
    pub fn magnitudes(&self) -> Vec<f64> {
        let (lo, hi) = (self.min_abs.log10(), self.max_abs.log10());
        let n = (((hi - lo) * self.points_per_decade as f64).round() as usize).max(1);
        (0..=n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCertificate {
    pub function: DriftFunction,
    pub epsilon: f64,
    /// Smallest grid magnitude beyond which the inequality holds at every
    /// grid point and state; `None` when it fails at the largest magnitude.
    pub r0: Option<f64>,
    /// Least slack per state over the certified part of the grid (the whole
    /// grid when `r0` is `None`), divided by the comparison function so
    /// that values are comparable across scales.
    pub per_state_margins: Vec<f64>,
    pub grid: SearchGrid,
}

fn certify(
    model: &RegimeModel,
    function: DriftFunction,
    epsilon: f64,
    grid: SearchGrid,
) -> Result<DriftCertificate, AnalyzeError> {
    let n = model.n_states();
    let mags = grid.magnitudes();
    // margins[k][i]: worst over x = +-mags[k]
    let margins: Vec<Vec<f64>> = mags
        .par_iter()
        .map(|&r| {
            (0..n)
                .map(|i| {
                    let coef = function.coefficient(model.alpha()[i], epsilon);
                    let mut worst = f64::INFINITY;
                    for x in [r, -r] {
                        let w = function.weight(x);
                        let l = generator_apply(&function, x, i, model)?;
                        worst = worst.min(coef - l / w);
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>, AnalyzeError>>()
        })
        .collect::<Result<_, _>>()?;
    let holds = |k: usize| margins[k].iter().all(|&m| m >= 0.0);
    let mut first = mags.len();
    while first > 0 && holds(first - 1) {
        first -= 1;
    }
    let r0 = (first < mags.len()).then(|| mags[first]);
    let from = if r0.is_some() { first } else { 0 };
    let per_state_margins = (0..n)
        .map(|i| margins[from..].iter().map(|m| m[i]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(DriftCertificate {
        function,
        epsilon,
        r0,
        per_state_margins,
        grid,
    })
}

/// Grid check of `L^(i) h <= (alpha_i + eps) g` for large `|x|`.
/// Needs `0 < eps < -sum mu_i alpha_i` and a logarithmic jump moment.
pub fn verify_log_drift(model: &RegimeModel, epsilon: f64, grid: SearchGrid) -> Result<DriftCertificate, AnalyzeError> {
    let bound = -drift_index(model)?;
    if !(epsilon > 0.0 && epsilon < bound) {
        return Err(AnalyzeError::PreconditionEpsilon { epsilon, bound });
    }
    if !model.integrability().log_moment {
        return Err(AnalyzeError::PreconditionCondition("log_moment".into()));
    }
    certify(model, DriftFunction::LogQuadratic, epsilon, grid)
}

/// Grid check of `L^(i) V <= (-2 alpha_i + eps) V` for large `|x|`.
/// Needs `0 < delta < 1`, `eps > 0` (below the drift index when that is
/// positive) and the first/second jump moment condition.
pub fn verify_reciprocal_drift(
    model: &RegimeModel,
    delta: f64,
    epsilon: f64,
    grid: SearchGrid,
) -> Result<DriftCertificate, AnalyzeError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalyzeError::PreconditionDelta(delta));
    }
    let d = drift_index(model)?;
    let bound = if d > 0.0 { d } else { f64::INFINITY };
    if !(epsilon > 0.0 && epsilon < bound) {
        return Err(AnalyzeError::PreconditionEpsilon { epsilon, bound });
    }
    if !model.integrability().first_second_moment {
        return Err(AnalyzeError::PreconditionCondition("first_second_moment".into()));
    }
    certify(model, DriftFunction::ReciprocalQuadratic { delta }, epsilon, grid)
}
