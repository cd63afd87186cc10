//! Simulation and long-time analysis of the Levy-driven Ornstein-Uhlenbeck
//! process with Markov regime switching,
//!
//! ```text
//! dX_t = alpha_{L_t} X_t dt + sigma_{L_t} dZ_t,
//! Z_t  = b t + sqrt(a) B_t + compensated small jumps + large jumps,
//! ```
//!
//! where `L_t` is a continuous-time Markov chain on finitely many states.

pub mod analyze;
pub mod chain;
pub mod cli;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod spectral;
