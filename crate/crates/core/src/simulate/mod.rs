//! Trajectories of `(X_t, Lambda_t)` and approximately stationary draws.
//!
//! Between events (regime switches, large jumps, substep ends) `X` is
//! advanced by the exact Ornstein-Uhlenbeck transition for the Gaussian part
//! of the noise. Jumps with `|z| >= epsilon` are placed as a Poisson process;
//! smaller ones are replaced by extra Gaussian variance or dropped. Finite
//! activity measures have every jump simulated, whatever the cutoff.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::{classify_recurrence, Recurrence};
use crate::chain::{self, ChainPath, ChainSampler};
use crate::model::{standard_normal, JumpSampler, LevyTriplet, RegimeModel};
use crate::quad::QuadError;
use crate::rng::{stream_rng, StreamRng};

/// States with `|X|` above this are reported as overflowed.
pub const OVERFLOW_LEVEL: f64 = 1e300;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("invalid increment plan: {0}")]
    InvalidPlan(String),
    #[error("step {dt} outside (0, dt_max = {dt_max}]")]
    InvalidStep { dt: f64, dt_max: f64 },
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("invalid sampling parameters: {0}")]
    InvalidSampling(String),
    #[error("X left the representable range at t = {time} in state {state}")]
    NonFiniteState { time: f64, state: usize },
    #[error("stationary sampling needs a positive recurrent model: {reason}")]
    NotPositiveRecurrent { reason: String },
    #[error(transparent)]
    Chain(#[from] chain::ChainError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    CompensateGaussian,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementPlan {
    pub epsilon_trunc: f64,
    pub small_jump_mode: SmallJumpMode,
    pub dt_max: f64,
}

impl Default for IncrementPlan {
    fn default() -> Self {
        IncrementPlan {
            epsilon_trunc: 0.01,
            small_jump_mode: SmallJumpMode::CompensateGaussian,
            dt_max: 0.05,
        }
    }
}

impl IncrementPlan {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.epsilon_trunc > 0.0 && self.epsilon_trunc <= 1.0) {
            return Err(SimError::InvalidPlan(format!(
                "epsilon_trunc = {} must lie in (0, 1]",
                self.epsilon_trunc
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(SimError::InvalidPlan(format!("dt_max = {} must be positive", self.dt_max)));
        }
        Ok(())
    }
}

/// The noise `Z` as simulated: a Brownian motion with drift `b_eff` and
/// variance rate `a_eff`, plus a compound Poisson process of large jumps.
#[derive(Debug, Clone)]
pub struct NoiseKernel {
    pub b_eff: f64,
    pub a_eff: f64,
    pub jump_rate: f64,
    jumps: Option<JumpSampler>,
    dt_max: f64,
}

impl NoiseKernel {
    pub fn new(triplet: &LevyTriplet, plan: &IncrementPlan) -> Result<Self, SimError> {
        plan.validate()?;
        let measure = &triplet.measure;
        let eps = if measure.is_finite_activity() {
            0.0
        } else {
            plan.epsilon_trunc
        };
        let jumps = measure.jump_sampler(eps)?;
        let small = if eps > 0.0 && plan.small_jump_mode == SmallJumpMode::CompensateGaussian {
            measure.small_jump_variance(eps)
        } else {
            0.0
        };
        Ok(NoiseKernel {
            b_eff: triplet.b - measure.compensator_drift(eps)?,
            a_eff: triplet.a + small,
            jump_rate: jumps.as_ref().map_or(0.0, |j| j.rate),
            jumps,
            dt_max: plan.dt_max,
        })
    }

    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.jumps.as_ref().map_or(0.0, |j| j.sample(rng))
    }

    fn next_jump_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.jump_rate > 0.0 {
            Exp::new(self.jump_rate).map_or(f64::INFINITY, |e| e.sample(rng))
        } else {
            f64::INFINITY
        }
    }

    /// `Z_{t+dt} - Z_t` split into its continuous part and the large jumps
    /// with their offsets in `(0, dt)`.
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<LevyIncrement, SimError> {
        if !(dt > 0.0 && dt <= self.dt_max) {
            return Err(SimError::InvalidStep { dt, dt_max: self.dt_max });
        }
        let continuous = self.b_eff * dt + (self.a_eff * dt).sqrt() * standard_normal(rng);
        let count = if self.jump_rate > 0.0 {
            Poisson::new(self.jump_rate * dt).map_or(0.0, |p| p.sample(rng)) as usize
        } else {
            0
        };
        let mut large_jumps: Vec<(f64, f64)> = (0..count)
            .map(|_| (dt * rng.random::<f64>(), self.jump_size(rng)))
            .collect();
        large_jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(LevyIncrement { continuous, large_jumps })
    }

    /// Exact transition of `dX = alpha X dt + sigma dW` over `s` with `W` the
    /// Gaussian part of the noise.
    fn evolve<R: Rng + ?Sized>(&self, x: f64, alpha: f64, sigma: f64, s: f64, rng: &mut R) -> f64 {
        let (growth, drift_factor, var_factor) = if alpha == 0.0 {
            (1.0, s, s)
        } else {
            let em1 = (alpha * s).exp_m1();
            (1.0 + em1, em1 / alpha, (2.0 * alpha * s).exp_m1() / (2.0 * alpha))
        };
        let mean = growth * x + sigma * self.b_eff * drift_factor;
        let var = self.a_eff * sigma * sigma * var_factor;
        if var > 0.0 {
            mean + var.sqrt() * standard_normal(rng)
        } else {
            mean
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyIncrement {
    pub continuous: f64,
    pub large_jumps: Vec<(f64, f64)>,
}

/// One increment of the noise over `dt`.
pub fn sample_levy_increment<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    dt: f64,
    plan: &IncrementPlan,
    rng: &mut R,
) -> Result<LevyIncrement, SimError> {
    NoiseKernel::new(triplet, plan)?.increment(dt, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub state: usize,
    /// `sigma_state * z`.
    pub size: f64,
    pub x_before: f64,
    pub x_after: f64,
}

/// A simulated trajectory. A point is recorded at time 0, after every
/// substep, at every switch and after every large jump; `lambda[k]` is the
/// state in force from `times[k]` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub lambda: Vec<usize>,
    pub large_jump_log: Vec<JumpRecord>,
}

impl PathSample {
    pub fn terminal(&self) -> f64 {
        self.x.last().copied().unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["time", "x", "state"])?;
        for k in 0..self.times.len() {
            w.write_record([self.times[k].to_string(), self.x[k].to_string(), self.lambda[k].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_file(&self, path: &Path) -> csv::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// What the driver reports back at each event.
enum Event {
    Step,
    Switch,
    Jump { size: f64, x_before: f64 },
    Observe,
}

/// Runs `X` along a fixed chain path, calling `sink(t, x, state, event)` at
/// every event. Observation times must be sorted and within the horizon.
fn drive<R, S>(
    model: &RegimeModel,
    kernel: &NoiseKernel,
    chain: &ChainPath,
    x0: f64,
    observe_at: &[f64],
    rng: &mut R,
    mut sink: S,
) -> Result<(), SimError>
where
    R: Rng + ?Sized,
    S: FnMut(f64, f64, usize, Event),
{
    let (alpha, sigma) = (model.alpha(), model.sigma());
    let horizon = chain.horizon;
    let mut x = x0;
    let mut t = 0.0;
    let mut next_jump = kernel.next_jump_gap(rng);
    let mut obs = observe_at.iter().copied().peekable();
    for (state, _, end) in chain.intervals() {
        let (a, s) = (alpha[state], sigma[state]);
        if t > 0.0 {
            sink(t, x, state, Event::Switch);
        }
        while t < end {
            let mut target = (t + kernel.dt_max).min(end).min(next_jump);
            if let Some(&o) = obs.peek() {
                target = target.min(o);
            }
            x = kernel.evolve(x, a, s, target - t, rng);
            t = target;
            if !(x.abs() <= OVERFLOW_LEVEL) {
                return Err(SimError::NonFiniteState { time: t, state });
            }
            if t == next_jump && t < horizon {
                let size = s * kernel.jump_size(rng);
                let x_before = x;
                x += size;
                if !(x.abs() <= OVERFLOW_LEVEL) {
                    return Err(SimError::NonFiniteState { time: t, state });
                }
                sink(t, x, state, Event::Jump { size, x_before });
                next_jump = t + kernel.next_jump_gap(rng);
            } else if t < end {
                sink(t, x, state, Event::Step);
            }
            while obs.peek() == Some(&t) {
                obs.next();
                sink(t, x, state, Event::Observe);
            }
        }
    }
    // the final point closes the last interval
    let last_state = chain.states.last().copied().unwrap_or(0);
    sink(horizon, x, last_state, Event::Step);
    Ok(())
}

/// Path simulation with the noise kernel built once for many paths.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m RegimeModel,
    kernel: NoiseKernel,
    chain: ChainSampler,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m RegimeModel, plan: &IncrementPlan) -> Result<Self, SimError> {
        Ok(Simulator {
            model,
            kernel: NoiseKernel::new(model.triplet(), plan)?,
            chain: ChainSampler::new(model.q()),
        })
    }

    pub fn kernel(&self) -> &NoiseKernel {
        &self.kernel
    }

    fn check_state(&self, i0: usize) -> Result<(), SimError> {
        let n = self.model.n_states();
        if i0 >= n {
            return Err(SimError::StateOutOfRange { state: i0, n });
        }
        Ok(())
    }

    pub fn path<R: Rng + ?Sized>(&self, x0: f64, i0: usize, horizon: f64, rng: &mut R) -> Result<PathSample, SimError> {
        self.check_state(i0)?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(SimError::InvalidSampling(format!("horizon = {horizon}")));
        }
        let chain = self.chain.sample_path(i0, horizon, rng);
        let mut out = PathSample {
            times: vec![0.0],
            x: vec![x0],
            lambda: vec![i0],
            large_jump_log: Vec::new(),
        };
        if horizon == 0.0 {
            return Ok(out);
        }
        drive(self.model, &self.kernel, &chain, x0, &[], rng, |t, x, state, ev| {
            if let Event::Jump { size, x_before } = ev {
                out.large_jump_log.push(JumpRecord {
                    time: t,
                    state,
                    size,
                    x_before,
                    x_after: x,
                });
            }
            out.times.push(t);
            out.x.push(x);
            out.lambda.push(state);
        })?;
        Ok(out)
    }

    /// `X_horizon` only, without recording the trajectory.
    pub fn terminal<R: Rng + ?Sized>(&self, x0: f64, i0: usize, horizon: f64, rng: &mut R) -> Result<f64, SimError> {
        self.check_state(i0)?;
        let chain = self.chain.sample_path(i0, horizon, rng);
        let mut last = x0;
        if horizon > 0.0 {
            drive(self.model, &self.kernel, &chain, x0, &[], rng, |_, x, _, _| last = x)?;
        }
        Ok(last)
    }
}

/// Simulates one trajectory from `(x0, i0)` up to `horizon`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &RegimeModel,
    x0: f64,
    i0: usize,
    horizon: f64,
    plan: &IncrementPlan,
    rng: &mut R,
) -> Result<PathSample, SimError> {
    Simulator::new(model, plan)?.path(x0, i0, horizon, rng)
}

/// `n_paths` independent trajectories; path `k` uses stream `k` of `master_seed`.
pub fn simulate_batch(
    model: &RegimeModel,
    x0: f64,
    i0: usize,
    horizon: f64,
    plan: &IncrementPlan,
    master_seed: u64,
    n_paths: usize,
) -> Result<Vec<Result<PathSample, SimError>>, SimError> {
    let sim = Simulator::new(model, plan)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|k| sim.path(x0, i0, horizon, &mut stream_rng(master_seed, k as u64)))
        .collect())
}

/// Terminal values `X_horizon` of `n_paths` trajectories, seeded as in
/// [`simulate_batch`].
pub fn simulate_terminal_batch(
    model: &RegimeModel,
    x0: f64,
    i0: usize,
    horizon: f64,
    plan: &IncrementPlan,
    master_seed: u64,
    n_paths: usize,
) -> Result<Vec<Result<f64, SimError>>, SimError> {
    let sim = Simulator::new(model, plan)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|k| sim.terminal(x0, i0, horizon, &mut stream_rng(master_seed, k as u64)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDraw {
    pub x: f64,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySample {
    pub draws: Vec<StationaryDraw>,
    pub burn_in: f64,
    pub gap: f64,
    pub seed: SeedInfo,
}

impl StationarySample {
    pub fn xs(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.x).collect()
    }

    /// Share of draws in each state.
    pub fn state_frequencies(&self, n_states: usize) -> Vec<f64> {
        let mut freq = vec![0.0; n_states];
        for d in &self.draws {
            freq[d.state] += 1.0;
        }
        let n = self.draws.len().max(1) as f64;
        freq.iter_mut().for_each(|f| *f /= n);
        freq
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["x", "state"])?;
        for d in &self.draws {
            w.write_record([d.x.to_string(), d.state.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_file(&self, path: &Path) -> csv::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Draws along one long trajectory started at `x = 0` with the initial
/// state drawn from the stationary law of the chain, observed at
/// `burn_in + k gap` for `k < n_draws`.
///
/// The model must classify as positive recurrent unless `allow_any_model`.
pub fn sample_stationary(
    model: &RegimeModel,
    burn_in: f64,
    n_draws: usize,
    gap: f64,
    plan: &IncrementPlan,
    seed: SeedInfo,
    allow_any_model: bool,
) -> Result<StationarySample, SimError> {
    if !(burn_in >= 0.0 && burn_in.is_finite()) || !(gap > 0.0 && gap.is_finite()) {
        return Err(SimError::InvalidSampling(format!("burn_in = {burn_in}, gap = {gap}")));
    }
    if !allow_any_model {
        if let Recurrence::Transient | Recurrence::Indeterminate { .. } = classify_recurrence(model).recurrence {
            let verdict = classify_recurrence(model);
            return Err(SimError::NotPositiveRecurrent {
                reason: format!("{:?} (drift index {})", verdict.recurrence, verdict.drift_index),
            });
        }
    }
    let mut out = StationarySample {
        draws: Vec::with_capacity(n_draws),
        burn_in,
        gap,
        seed,
    };
    if n_draws == 0 {
        return Ok(out);
    }
    let sim = Simulator::new(model, plan)?;
    let mut rng: StreamRng = stream_rng(seed.master_seed, seed.stream);
    let mu = chain::stationary_distribution(model.q())?.mu;
    let i0 = ChainSampler::draw_from(&mu, &mut rng);
    let observe_at: Vec<f64> = (0..n_draws).map(|k| burn_in + k as f64 * gap).collect();
    let horizon = observe_at[n_draws - 1];
    let chain = sim.chain.sample_path(i0, horizon, &mut rng);
    if horizon == 0.0 {
        out.draws.push(StationaryDraw { x: 0.0, state: i0 });
        return Ok(out);
    }
    if observe_at[0] == 0.0 {
        out.draws.push(StationaryDraw { x: 0.0, state: i0 });
    }
    let first = usize::from(observe_at[0] == 0.0);
    drive(model, &sim.kernel, &chain, 0.0, &observe_at[first..], &mut rng, |_, x, state, ev| {
        if let Event::Observe = ev {
            out.draws.push(StationaryDraw { x, state });
        }
    })?;
    Ok(out)
}
