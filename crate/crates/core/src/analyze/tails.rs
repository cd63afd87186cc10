//! Empirical tail diagnostics: Hill estimates, moment curves over nested
//! prefixes, exponential moment probes and the Kolmogorov-Smirnov distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::oracle::CdfTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillPoint {
    pub k: usize,
    pub index: f64,
}

/// Empirical `E|X|^p` over the first `sample_size` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub p: f64,
    pub sample_size: usize,
    pub value: f64,
}

/// `log` of the empirical mean of `e^{lambda |x|}` over the first
/// `sample_size` draws (logged so that heavy samples stay representable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpProbePoint {
    pub lambda: f64,
    pub sample_size: usize,
    pub log_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub hill_estimates: Vec<HillPoint>,
    pub moment_curve: Vec<MomentPoint>,
    pub ks_distance: Option<f64>,
    pub exp_moment_probe: Vec<ExpProbePoint>,
}

/// Hill estimate `k / sum_{j<=k} log(x_(j) / x_(k+1))` from a sample sorted
/// in descending order.
pub fn hill_tail_index(sorted_desc: &[f64], k: usize) -> Result<f64, AnalyzeError> {
    let n = sorted_desc.len();
    if k == 0 || k >= n {
        return Err(AnalyzeError::InvalidOrderStatistic { k, n });
    }
    let threshold = sorted_desc[k];
    if !(threshold > 0.0) {
        return Err(AnalyzeError::DegenerateSample(format!(
            "order statistic {} is {threshold}, not positive",
            k + 1
        )));
    }
    let sum: f64 = sorted_desc[..k].iter().map(|x| (x / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(AnalyzeError::DegenerateSample("the top order statistics are tied".into()));
    }
    Ok(k as f64 / sum)
}

/// Hill estimates of `|x|` at `k = floor(sqrt n)` and ten log-spaced `k` in
/// `[sqrt(n)/10, 10 sqrt(n)]`, skipping values that are invalid or degenerate.
pub fn hill_sweep(samples: &[f64]) -> Vec<HillPoint> {
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.par_sort_unstable_by(|a, b| b.total_cmp(a));
    let n = abs.len();
    let root = (n as f64).sqrt();
    let mut ks: Vec<usize> = (0..10)
        .map(|j| (root / 10.0 * 100f64.powf(j as f64 / 9.0)).round() as usize)
        .chain(std::iter::once(root.floor() as usize))
        .filter(|&k| k >= 1 && k < n)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .filter_map(|k| hill_tail_index(&abs, k).ok().map(|index| HillPoint { k, index }))
        .collect()
}

/// Prefix lengths `10^3, 10^4, ...` below `n`, then `n` itself.
pub fn prefix_sizes(n: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = (3..)
        .map(|e| 10usize.pow(e))
        .take_while(|&s| s < n)
        .collect();
    if n > 0 {
        sizes.push(n);
    }
    sizes
}

/// Running means of `|x|^p` at the nested prefixes of [`prefix_sizes`].
pub fn empirical_moment_curve(samples: &[f64], p_list: &[f64]) -> Vec<MomentPoint> {
    let sizes = prefix_sizes(samples.len());
    p_list
        .iter()
        .flat_map(|&p| {
            let mut out = Vec::with_capacity(sizes.len());
            let mut acc = 0.0;
            let mut done = 0;
            for &s in &sizes {
                acc += samples[done..s].iter().map(|x| x.abs().powf(p)).sum::<f64>();
                done = s;
                out.push(MomentPoint {
                    p,
                    sample_size: s,
                    value: acc / s as f64,
                });
            }
            out
        })
        .collect()
}

/// Running `log mean e^{lambda |x|}` at the nested prefixes.
pub fn exp_moment_probe(samples: &[f64], lambdas: &[f64]) -> Vec<ExpProbePoint> {
    let sizes = prefix_sizes(samples.len());
    lambdas
        .iter()
        .flat_map(|&lambda| {
            let mut out = Vec::with_capacity(sizes.len());
            // log-sum-exp with a running maximum
            let (mut max, mut scaled) = (f64::NEG_INFINITY, 0.0f64);
            let mut done = 0;
            for &s in &sizes {
                for x in &samples[done..s] {
                    let v = lambda * x.abs();
                    if v > max {
                        scaled = scaled * (max - v).exp() + 1.0;
                        max = v;
                    } else {
                        scaled += (v - max).exp();
                    }
                }
                done = s;
                out.push(ExpProbePoint {
                    lambda,
                    sample_size: s,
                    log_mean: max + scaled.ln() - (s as f64).ln(),
                });
            }
            out
        })
        .collect()
}

/// `sup_x |F_n(x) - F(x)|` evaluated at the sample points.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let f = cdf(x);
            ((j + 1) as f64 / n - f).max(f - j as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// All diagnostics for one sample.
pub fn tail_stats(samples: &[f64], p_list: &[f64], lambdas: &[f64], reference: Option<&CdfTable>) -> TailStats {
    TailStats {
        hill_estimates: hill_sweep(samples),
        moment_curve: empirical_moment_curve(samples, p_list),
        ks_distance: reference.map(|t| ks_statistic(samples, |x| t.eval(x))),
        exp_moment_probe: exp_moment_probe(samples, lambdas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hill_on_exact_pareto_quantiles() {
        // deterministic Pareto(2) quantiles: x_j = (n / j)^{1/2}
        let n = 100_000;
        let xs: Vec<f64> = (1..=n).map(|j| (n as f64 / j as f64).sqrt()).collect();
        let est = hill_tail_index(&xs, 1000).unwrap();
        assert!((est - 2.0).abs() < 0.05, "{est}");
    }

    #[test]
    fn hill_rejects_ties_and_bad_k() {
        assert!(matches!(hill_tail_index(&[1.0; 10], 3), Err(AnalyzeError::DegenerateSample(_))));
        assert!(matches!(
            hill_tail_index(&[3.0, 2.0], 2),
            Err(AnalyzeError::InvalidOrderStatistic { .. })
        ));
    }

    #[test]
    fn moment_curve_prefixes() {
        let xs = vec![0.0; 2500];
        let curve = empirical_moment_curve(&xs, &[1.0, 2.0]);
        assert_eq!(curve.len(), 4);
        assert!(curve.iter().all(|m| m.value == 0.0));
        assert_eq!(prefix_sizes(2500), vec![1000, 2500]);
        assert_eq!(prefix_sizes(1000), vec![1000]);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.0], |x| if x < 0.0 { 0.0 } else { 0.5 }), 0.5);
        let xs: Vec<f64> = (0..1000).map(|j| (j as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) <= 0.0005 + 1e-12);
    }

    #[test]
    fn exp_probe_matches_direct_mean() {
        let xs = [0.5, -1.0, 2.0];
        let p = exp_moment_probe(&xs, &[1.0]);
        let direct = ((0.5f64).exp() + 1f64.exp() + 2f64.exp()) / 3.0;
        assert!((p[0].log_mean - direct.ln()).abs() < 1e-14);
    }
}
