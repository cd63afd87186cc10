//! Adaptive Gauss-Kronrod quadrature.
//!
//! Everything here integrates complex-valued integrands; the real-valued
//! entry points wrap the complex ones. The half-line and power-tail helpers
//! map unbounded domains onto finite intervals so the same adaptive kernel
//! can be used for Levy-measure integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use thiserror::Error;

// 15-point Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature budget exhausted: estimate {estimate:e}, error bound {error:e}")]
    BudgetExceeded { estimate: f64, error: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<Complex64, QuadError> {
        let v = f(x);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    };
    let fc = eval(center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = eval(center - dx)? + eval(center + dx)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).norm();
    Ok(Segment { a, b, value, error })
}

/// Adaptive integration of a complex integrand over a finite interval.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Complex64, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if b < a {
        return integrate_complex(f, b, a, opts).map(|v| -v);
    }
    let first = kronrod(&f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut count = 1usize;
    // Segments too narrow to split further stay out of the heap but keep
    // contributing to the totals.
    let mut frozen_err = 0.0;

    while total_err > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || count >= opts.max_intervals {
            frozen_err += worst.error;
            if count >= opts.max_intervals {
                heap.push(worst);
                break;
            }
            continue;
        }
        let left = kronrod(&f, worst.a, mid)?;
        let right = kronrod(&f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }

    // Re-sum to shed accumulated rounding in the running totals.
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = frozen_err;
    for seg in heap.iter() {
        value += seg.value;
        error += seg.error;
    }
    if error > opts.abs_tol.max(opts.rel_tol * value.norm()) {
        return Err(QuadError::BudgetExceeded {
            estimate: value.norm(),
            error,
        });
    }
    Ok(value)
}

pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, opts).map(|v| v.re)
}

/// Integral over `[a, inf)` through `t = a + s / (1 - s)`.
pub fn integrate_half_line_complex<F>(f: F, a: f64, opts: QuadOptions) -> Result<Complex64, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    integrate_complex(
        |s| {
            let w = 1.0 - s;
            let t = a + s / w;
            if !t.is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            f(t) / (w * w)
        },
        0.0,
        1.0,
        opts,
    )
}

pub fn integrate_half_line<F>(f: F, a: f64, opts: QuadOptions) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate_half_line_complex(|t| Complex64::new(f(t), 0.0), a, opts).map(|v| v.re)
}

/// `\int_lower^inf h(z) z^{-1-beta} dz` via `w = (lower / z)^beta`, which turns
/// the power weight into the uniform density on `(0, 1]`.
///
/// `h` must stay bounded as `z -> inf` (or decay); points that overflow to
/// infinity contribute zero.
pub fn integrate_power_tail_complex<F>(
    h: F,
    lower: f64,
    beta: f64,
    opts: QuadOptions,
) -> Result<Complex64, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    let scale = lower.powf(-beta) / beta;
    let inner = integrate_complex(
        |w| {
            let z = lower * w.powf(-1.0 / beta);
            if !z.is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            h(z)
        },
        0.0,
        1.0,
        QuadOptions {
            abs_tol: opts.abs_tol / scale.max(1e-300),
            ..opts
        },
    )?;
    Ok(inner * scale)
}

pub fn integrate_power_tail<F>(h: F, lower: f64, beta: f64, opts: QuadOptions) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate_power_tail_complex(|z| Complex64::new(h(z), 0.0), lower, beta, opts).map(|v| v.re)
}

/// `\int_0^upper g(z) z^{-1-beta} dz` for `g(z) = O(z^2)` near zero, through
/// `z = upper * w^k` with `k = 1 / (2 - beta)` so the mapped integrand is
/// bounded at `w = 0`.
pub fn integrate_power_head_complex<F>(
    g: F,
    upper: f64,
    beta: f64,
    opts: QuadOptions,
) -> Result<Complex64, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    let k = 1.0 / (2.0 - beta).max(1e-3);
    integrate_complex(
        |w| {
            if w <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let z = upper * w.powf(k);
            if z <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            // dz = upper * k * w^{k-1} dw
            g(z) * (z.powf(-1.0 - beta) * upper * k * w.powf(k - 1.0))
        },
        0.0,
        1.0,
        opts,
    )
}

pub fn integrate_power_head<F>(g: F, upper: f64, beta: f64, opts: QuadOptions) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate_power_head_complex(|z| Complex64::new(g(z), 0.0), upper, beta, opts).map(|v| v.re)
}

/// Outcome of [`probe_tail_divergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailProbe {
    Convergent(f64),
    Divergent { partial: f64, at_power: u32 },
    Inconclusive { partial: f64 },
}

/// Numerical divergence test for `\int_1^inf f(z) dz` with a nonnegative
/// integrand: partial integrals over `[1, 2^m]` are accumulated dyadically.
/// Exceeding `1e12` before `m = 40` declares divergence; a dyadic block
/// contributing less than `1e-12` of the running total after a decreasing run
/// declares convergence; anything else is inconclusive.
pub fn probe_tail_divergence<F>(f: F) -> TailProbe
where
    F: Fn(f64) -> f64,
{
    const DIVERGENCE_LEVEL: f64 = 1e12;
    const MAX_POWER: u32 = 40;
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let mut partial = 0.0;
    let mut last_block = f64::INFINITY;
    let mut shrinking = 0u32;
    for m in 1..=MAX_POWER {
        let lo = 2f64.powi(m as i32 - 1);
        let hi = 2f64.powi(m as i32);
        let block = match integrate(&f, lo, hi, opts) {
            Ok(v) => v,
            Err(QuadError::BudgetExceeded { estimate, .. }) => estimate,
            Err(QuadError::NonFinite { .. }) => {
                return TailProbe::Divergent {
                    partial: f64::INFINITY,
                    at_power: m,
                }
            }
        };
        partial += block;
        if partial > DIVERGENCE_LEVEL {
            return TailProbe::Divergent { partial, at_power: m };
        }
        if block <= last_block {
            shrinking += 1;
        } else {
            shrinking = 0;
        }
        last_block = block;
        if shrinking >= 4 && block.abs() <= 1e-12 * partial.abs().max(1e-300) {
            return TailProbe::Convergent(partial);
        }
    }
    TailProbe::Inconclusive { partial }
}
