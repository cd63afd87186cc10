//! Gil-Pelaez inversion of a characteristic function on a finite grid.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OracleError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Truncate where `|cf| < cf_floor`.
    pub cf_floor: f64,
    /// Largest truncation point tried before reporting slow decay.
    pub z_budget: f64,
    /// Stop refining once successive step halvings move `F` by less than this.
    pub refine_tol: f64,
    /// Largest number of quadrature nodes before giving up on refinement.
    pub max_nodes: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            cf_floor: 1e-10,
            z_budget: 1e4,
            refine_tol: 1e-6,
            max_nodes: 1 << 22,
        }
    }
}

/// CDF values on an increasing grid, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub x: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
}

impl CdfTable {
    /// Interpolated CDF; the end values are extended flat.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if n == 0 {
            return f64::NAN;
        }
        if x <= self.x[0] {
            return self.f[0];
        }
        if x >= self.x[n - 1] {
            return self.f[n - 1];
        }
        let k = self.x.partition_point(|&g| g <= x);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let (f0, f1) = (self.f[k - 1], self.f[k]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["x", "F"])?;
        for (x, f) in self.x.iter().zip(&self.f) {
            w.write_record([x.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_file(&self, path: &Path) -> csv::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Midpoint-rule Gil-Pelaez sum `1/2 - (h/pi) sum Im(e^{-i z x} cf(z)) / z`
/// over nodes `z_k = (k + 1/2) h` below `z_max`.
fn gil_pelaez(nodes: &[(f64, Complex64)], h: f64, x: f64) -> f64 {
    let s: f64 = nodes
        .iter()
        .map(|&(z, c)| (Complex64::from_polar(1.0, -z * x) * c).im / z)
        .sum();
    0.5 - h * s / std::f64::consts::PI
}

fn node_values<F>(cf: &F, h: f64, z_max: f64) -> Result<Vec<(f64, Complex64)>, OracleError>
where
    F: Fn(f64) -> Result<Complex64, OracleError> + Sync,
{
    let n = (z_max / h).ceil() as usize;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let z = (k as f64 + 0.5) * h;
            cf(z).map(|c| (z, c))
        })
        .collect()
}

/// Inverts a characteristic function to CDF values at `x_grid`.
///
/// The truncation point doubles from 1 until `|cf| < cf_floor`, then the step
/// halves until the largest change over the grid drops below `refine_tol`.
/// Output is clamped to `[0, 1]` and made nondecreasing along the sorted grid.
pub fn invert_to_cdf<F>(cf: F, x_grid: &[f64], opts: InversionOptions) -> Result<CdfTable, OracleError>
where
    F: Fn(f64) -> Result<Complex64, OracleError> + Sync,
{
    let mut z_max = 1.0;
    loop {
        let bound = cf(z_max)?.norm();
        if bound < opts.cf_floor {
            break;
        }
        if 2.0 * z_max > opts.z_budget {
            return Err(OracleError::SlowDecay { z_max, bound });
        }
        z_max *= 2.0;
    }

    let mut x: Vec<f64> = x_grid.to_vec();
    x.sort_by(f64::total_cmp);
    let mut h = z_max / 256.0;
    let mut values: Option<Vec<f64>> = None;
    loop {
        let nodes = node_values(&cf, h, z_max)?;
        let current: Vec<f64> = x.par_iter().map(|&xi| gil_pelaez(&nodes, h, xi)).collect();
        if let Some(prev) = &values {
            let change = prev
                .iter()
                .zip(&current)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < opts.refine_tol {
                values = Some(current);
                break;
            }
            if 2 * nodes.len() > opts.max_nodes {
                return Err(OracleError::RefinementBudget {
                    nodes: nodes.len(),
                    change,
                });
            }
        }
        values = Some(current);
        h *= 0.5;
    }

    let mut f = values.unwrap_or_default();
    let mut running = 0.0f64;
    for v in f.iter_mut() {
        running = running.max(v.clamp(0.0, 1.0));
        *v = running;
    }
    Ok(CdfTable { x, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn normal_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    fn grid() -> Vec<f64> {
        (-3..=3).map(f64::from).collect()
    }

    #[test]
    fn standard_normal() {
        let t = invert_to_cdf(|z| Ok(Complex64::new((-z * z / 2.0).exp(), 0.0)), &grid(), Default::default()).unwrap();
        for (x, f) in t.x.iter().zip(&t.f) {
            assert!((f - normal_cdf(*x)).abs() < 1e-6, "{x} {f}");
        }
        assert_eq!(t.f[3], 0.5);
    }

    #[test]
    fn cauchy() {
        let t = invert_to_cdf(|z| Ok(Complex64::new((-z.abs()).exp(), 0.0)), &grid(), Default::default()).unwrap();
        for (x, f) in t.x.iter().zip(&t.f) {
            let exact = 0.5 + x.atan() / std::f64::consts::PI;
            assert!((f - exact).abs() < 1e-6, "{x} {f} {exact}");
        }
    }

    #[test]
    fn atom_does_not_decay() {
        let err = invert_to_cdf(|z| Ok(Complex64::from_polar(1.0, z)), &[0.0], Default::default()).unwrap_err();
        assert!(matches!(err, OracleError::SlowDecay { .. }));
    }

    #[test]
    fn interpolation_and_csv() {
        let t = CdfTable {
            x: vec![0.0, 1.0],
            f: vec![0.2, 0.6],
        };
        assert_eq!(t.eval(-1.0), 0.2);
        assert!((t.eval(0.5) - 0.4).abs() < 1e-15);
        assert_eq!(t.eval(2.0), 0.6);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,F\n0,0.2\n1,0.6\n");
    }
}
