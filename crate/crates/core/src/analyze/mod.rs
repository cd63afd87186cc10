//! Recurrence and tail verdicts, numerical drift certificates and empirical
//! tail statistics.

mod drift;
mod tails;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain;
use crate::model::{IntegrabilityReport, RegimeModel};
use crate::quad::QuadError;
use crate::spectral::{self, Kappa, SpectralError, SpectralReport};

pub use drift::{
    generator_apply, switching_term, verify_log_drift, verify_reciprocal_drift, Callables, DriftCertificate,
    DriftFunction, SearchGrid, TestFunction,
};
pub use tails::{
    empirical_moment_curve, exp_moment_probe, hill_sweep, hill_tail_index, ks_statistic, prefix_sizes, tail_stats,
    ExpProbePoint, HillPoint, MomentPoint, TailStats,
};

/// Drift indices within this distance of zero are treated as zero.
pub const DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("tail classification needs a positive recurrent model, verdict was {0:?}")]
    PreconditionNotRecurrent(Recurrence),
    #[error("epsilon = {epsilon} outside the admissible window (0, {bound})")]
    PreconditionEpsilon { epsilon: f64, bound: f64 },
    #[error("delta = {0} outside (0, 1)")]
    PreconditionDelta(f64),
    #[error("integrability condition `{0}` does not hold")]
    PreconditionCondition(String),
    #[error("quadrature budget exceeded in the jump part of the generator: {0}")]
    QuadratureBudgetExceeded(#[from] QuadError),
    #[error("sample is degenerate: {0}")]
    DegenerateSample(String),
    #[error("order statistic count k = {k} invalid for {n} samples")]
    InvalidOrderStatistic { k: usize, n: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Chain(#[from] chain::ChainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Recurrence {
    PositiveRecurrent,
    Transient,
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum HeavyCause {
    /// The jumps of state `state` alone have no exponential moment.
    JumpDriven { state: usize },
    /// Light jumps, but some regime is expanding.
    SwitchDriven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TailVerdict {
    Heavy { reason: HeavyCause },
    Light,
    Unknown { reason: String },
}

/// A named integrability condition and its truth value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub holds: bool,
}

impl Condition {
    fn new(id: impl Into<String>, holds: bool) -> Self {
        Condition { id: id.into(), holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub drift_index: f64,
    pub recurrence: Recurrence,
    pub conditions_used: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub tail: TailVerdict,
    /// `kappa v 2` for switch-driven heavy tails.
    pub moment_threshold: Option<f64>,
    pub conditions_used: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub drift_index: f64,
    pub recurrence: Recurrence,
    /// `None` unless the model is positive recurrent.
    pub tail: Option<TailVerdict>,
    pub kappa: Kappa,
    pub moment_threshold: Option<f64>,
    pub conditions_used: Vec<Condition>,
}

/// `sum_i mu_i alpha_i`.
pub fn drift_index(model: &RegimeModel) -> Result<f64, chain::ChainError> {
    Ok(chain::stationary_distribution(model.q())?.average(model.alpha()))
}

/// The recurrence verdict from the drift index and the integrability flags.
pub fn recurrence_from(drift_index: f64, integrability: &IntegrabilityReport) -> (Recurrence, Vec<Condition>) {
    if drift_index < -DRIFT_TOL {
        let used = vec![Condition::new("log_moment", integrability.log_moment)];
        if integrability.log_moment {
            (Recurrence::PositiveRecurrent, used)
        } else {
            let reason = "log_moment fails: jumps lack a logarithmic moment".to_string();
            (Recurrence::Indeterminate { reason }, used)
        }
    } else if drift_index > DRIFT_TOL {
        let used = vec![Condition::new("first_second_moment", integrability.first_second_moment)];
        if integrability.first_second_moment {
            (Recurrence::Transient, used)
        } else {
            let reason = "first_second_moment fails: jumps lack the required moments".to_string();
            (Recurrence::Indeterminate { reason }, used)
        }
    } else {
        let reason = "drift index is zero; the criterion is silent".to_string();
        (Recurrence::Indeterminate { reason }, Vec::new())
    }
}

/// Positive recurrence, transience, or neither, from the sign of the drift
/// index under the matching integrability condition.
pub fn classify_recurrence(model: &RegimeModel) -> RecurrenceReport {
    let integrability = model.integrability();
    match drift_index(model) {
        Ok(d) => {
            let (recurrence, conditions_used) = recurrence_from(d, &integrability);
            RecurrenceReport {
                drift_index: d,
                recurrence,
                conditions_used,
            }
        }
        // a validated model is irreducible, so this is a numerical failure
        Err(e) => RecurrenceReport {
            drift_index: f64::NAN,
            recurrence: Recurrence::Indeterminate {
                reason: format!("stationary law of the chain unavailable: {e}"),
            },
            conditions_used: Vec::new(),
        },
    }
}

/// The tail verdict from the integrability flags, `max alpha_i` and `kappa`.
pub fn tail_from(max_alpha: f64, kappa: Kappa, integrability: &IntegrabilityReport) -> TailReport {
    let mut used: Vec<Condition> = integrability
        .exp_divergent
        .iter()
        .enumerate()
        .map(|(i, &d)| Condition::new(format!("exp_divergent[{i}]"), d))
        .collect();
    if let Some(state) = integrability.exp_divergent.iter().position(|&d| d) {
        return TailReport {
            tail: TailVerdict::Heavy {
                reason: HeavyCause::JumpDriven { state },
            },
            moment_threshold: None,
            conditions_used: used,
        };
    }
    let witnessed = integrability.exp_moment_witness.is_some();
    used.push(Condition::new("exp_moment_witness", witnessed));
    let (tail, moment_threshold) = if !witnessed {
        let reason = "no exponential moment witness and no divergent state".to_string();
        (TailVerdict::Unknown { reason }, None)
    } else if max_alpha < 0.0 {
        (TailVerdict::Light, None)
    } else if max_alpha > 0.0 {
        (
            TailVerdict::Heavy {
                reason: HeavyCause::SwitchDriven,
            },
            Some(kappa.moment_threshold()),
        )
    } else {
        let reason = "max alpha is zero; the criterion is silent".to_string();
        (TailVerdict::Unknown { reason }, None)
    };
    TailReport {
        tail,
        moment_threshold,
        conditions_used: used,
    }
}

/// Light or heavy stationary tails; requires positive recurrence.
pub fn classify_tail(model: &RegimeModel, spectral: &SpectralReport) -> Result<TailReport, AnalyzeError> {
    let rec = classify_recurrence(model);
    if rec.recurrence != Recurrence::PositiveRecurrent {
        return Err(AnalyzeError::PreconditionNotRecurrent(rec.recurrence));
    }
    Ok(tail_from(model.max_alpha(), spectral.kappa, &model.integrability()))
}

/// Both verdicts and `kappa`; the tail is left out for models that are not
/// positive recurrent.
pub fn classify(model: &RegimeModel) -> Result<VerdictReport, AnalyzeError> {
    let rec = classify_recurrence(model);
    let kappa = spectral::kappa(model.q(), model.alpha())?;
    let mut conditions_used = rec.conditions_used;
    let (tail, moment_threshold) = if rec.recurrence == Recurrence::PositiveRecurrent {
        let t = tail_from(model.max_alpha(), kappa, &model.integrability());
        conditions_used.extend(t.conditions_used);
        (Some(t.tail), t.moment_threshold)
    } else {
        (None, None)
    };
    Ok(VerdictReport {
        drift_index: rec.drift_index,
        recurrence: rec.recurrence,
        tail,
        kappa,
        moment_threshold,
        conditions_used,
    })
}
