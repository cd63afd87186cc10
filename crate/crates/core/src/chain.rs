//! The switching chain: irreducibility, stationary law and path sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChainError {
    #[error("stationary system is singular; the rate matrix is reducible or malformed")]
    SingularSystem,
    #[error("stationary residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
}

/// True iff the directed graph `{(i, j) : q_ij > 0}` is strongly connected.
pub fn is_irreducible(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let rate = if forward { q[(i, j)] } else { q[(j, i)] };
                if i != j && rate > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Stationary distribution `mu` of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryLaw {
    pub mu: Vec<f64>,
}

impl StationaryLaw {
    /// `max_j |(mu Q)_j|`.
    pub fn residual(&self, q: &DMatrix<f64>) -> f64 {
        let n = self.mu.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.mu[i] * q[(i, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// `sum_i mu_i v_i`.
    pub fn average(&self, v: &[f64]) -> f64 {
        self.mu.iter().zip(v).map(|(m, x)| m * x).sum()
    }
}

/// Solves `mu Q = 0`, `sum mu = 1` by a dense LU solve in which the
/// normalization replaces the last balance equation, followed by one step of
/// iterative refinement.
pub fn stationary_distribution(q: &DMatrix<f64>) -> Result<StationaryLaw, ChainError> {
    let n = q.nrows();
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(ChainError::SingularSystem)?;
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(ChainError::SingularSystem);
    }
    let total: f64 = x.iter().sum();
    let law = StationaryLaw {
        mu: x.iter().map(|v| v / total).collect(),
    };
    let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual = law.residual(q);
    if residual > 1e-12 * scale {
        return Err(ChainError::Residual { residual });
    }
    Ok(law)
}

/// One realization of the chain on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPath {
    /// Strictly increasing switch times, all below `horizon`.
    pub switch_times: Vec<f64>,
    /// `states[k]` holds on `[switch_times[k-1], switch_times[k])`.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl ChainPath {
    /// State in force at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.switch_times.partition_point(|&s| s <= t);
        self.states[k]
    }

    /// Time spent in each state up to the horizon.
    pub fn occupation_times(&self, n: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        let mut start = 0.0;
        for (k, &s) in self.states.iter().enumerate() {
            let end = self.switch_times.get(k).copied().unwrap_or(self.horizon);
            occ[s] += end - start;
            start = end;
        }
        occ
    }

    /// `(state, start, end)` for each sojourn, the last truncated at the horizon.
    pub fn intervals(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.states.iter().enumerate().map(move |(k, &s)| {
            let start = if k == 0 { 0.0 } else { self.switch_times[k - 1] };
            let end = self.switch_times.get(k).copied().unwrap_or(self.horizon);
            (s, start, end)
        })
    }
}

/// Jump-chain/holding-time sampler with the per-state tables precomputed.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    holding: Vec<Exp<f64>>,
    // cumulative jump probabilities per row; the diagonal carries no mass
    cumulative: Vec<Vec<f64>>,
}

impl ChainSampler {
    /// `q` must be conservative and irreducible with at least two states.
    pub fn new(q: &DMatrix<f64>) -> Self {
        let n = q.nrows();
        let mut holding = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n);
        for i in 0..n {
            let rate = -q[(i, i)];
            holding.push(Exp::new(rate).expect("irreducible chain has positive exit rates"));
            let mut acc = 0.0;
            let row = (0..n)
                .map(|j| {
                    if j != i {
                        acc += q[(i, j)] / rate;
                    }
                    acc
                })
                .collect();
            cumulative.push(row);
        }
        ChainSampler { holding, cumulative }
    }

    pub fn n_states(&self) -> usize {
        self.holding.len()
    }

    pub fn holding_time<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> f64 {
        self.holding[state].sample(rng)
    }

    pub fn next_state<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let row = &self.cumulative[state];
        let u: f64 = rng.random::<f64>() * row[row.len() - 1];
        row.iter()
            .enumerate()
            .find(|&(j, &c)| j != state && u < c)
            .map(|(j, _)| j)
            .unwrap_or_else(|| (0..row.len()).rev().find(|&j| j != state && row[j] > 0.0).unwrap_or(state))
    }

    /// Draws a state from a probability vector.
    pub fn draw_from<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, i0: usize, horizon: f64, rng: &mut R) -> ChainPath {
        let mut switch_times = Vec::new();
        let mut states = vec![i0];
        let mut t = 0.0;
        let mut state = i0;
        if horizon > 0.0 {
            loop {
                t += self.holding_time(state, rng);
                if t >= horizon {
                    break;
                }
                state = self.next_state(state, rng);
                switch_times.push(t);
                states.push(state);
            }
        }
        ChainPath {
            switch_times,
            states,
            horizon,
        }
    }
}

/// Samples the chain from `i0` up to `horizon`.
pub fn sample_chain_path<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    i0: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<ChainPath, ChainError> {
    let n = q.nrows();
    if i0 >= n {
        return Err(ChainError::StateOutOfRange { state: i0, n });
    }
    Ok(ChainSampler::new(q).sample_path(i0, horizon, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn two_state() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0])
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&two_state()));
        let mut block = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            block[(i, j)] = 1.0;
            block[(i, i)] = -1.0;
        }
        assert!(!is_irreducible(&block));
        let cycle = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]);
        assert!(is_irreducible(&cycle));
    }

    #[test]
    fn two_state_closed_form() {
        let law = stationary_distribution(&two_state()).unwrap();
        assert!((law.mu[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.mu[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_three_state() {
        let q = DMatrix::from_fn(3, 3, |i, j| if i == j { -2.0 } else { 1.0 });
        let law = stationary_distribution(&q).unwrap();
        for m in law.mu {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reducible_is_singular() {
        let mut q = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            q[(i, j)] = 1.0;
            q[(i, i)] = -1.0;
        }
        assert!(stationary_distribution(&q).is_err());
    }

    #[test]
    fn degenerate_horizon() {
        let p = sample_chain_path(&two_state(), 1, 0.0, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(p.states, vec![1]);
        assert!(p.switch_times.is_empty());
    }

    #[test]
    fn holding_times_and_occupation() {
        let q = two_state();
        let sampler = ChainSampler::new(&q);
        let mut rng = stream_rng(11, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sampler.holding_time(0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");

        let path = sampler.sample_path(0, 1e5, &mut rng);
        let occ = path.occupation_times(2);
        assert!((occ[0] / 1e5 - 2.0 / 3.0).abs() < 0.01);
        assert!(path.switch_times.windows(2).all(|w| w[0] < w[1]));
        assert!(path.states.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn paths_are_deterministic() {
        let q = two_state();
        let a = sample_chain_path(&q, 0, 100.0, &mut stream_rng(5, 2)).unwrap();
        let b = sample_chain_path(&q, 0, 100.0, &mut stream_rng(5, 2)).unwrap();
        assert_eq!(a, b);
    }
}
