//! The TOML run configuration and `key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::model::{LevyMeasureSpec, LevyTriplet, ModelError, RegimeModel};
use crate::simulate::{IncrementPlan, SmallJumpMode};

use super::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Master seed; `--seed` takes precedence, and 0 is used when neither is given.
    #[serde(default)]
    pub seed: Option<u64>,
    pub chain: ChainSection,
    pub drift: DriftSection,
    pub noise: NoiseSection,
    #[serde(default = "zero_measure")]
    pub levy: LevyMeasureSpec,
    #[serde(default)]
    pub run: RunSection,
}

fn zero_measure() -> LevyMeasureSpec {
    LevyMeasureSpec::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    /// Rate matrix, row by row.
    pub q: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "one")]
    pub a: f64,
}

fn one() -> f64 {
    1.0
}

/// Command parameters. Every field has a default, listed in `--help`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub x0: f64,
    pub i0: usize,
    pub horizon: f64,
    pub n_paths: usize,
    /// `None` means `20 / |drift index|`.
    pub burn_in: Option<f64>,
    pub n_draws: usize,
    pub gap: f64,
    pub dt_max: f64,
    pub epsilon_trunc: f64,
    pub small_jump_mode: SmallJumpMode,
    pub allow_non_recurrent: bool,
    /// Order at which `eta_p` is reported.
    pub p: f64,
    /// Certificate slack; `None` means half of `|drift index|`.
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub grid_min_abs: f64,
    pub grid_max_abs: f64,
    pub grid_points_per_decade: usize,
    /// Extra Hill order statistic count reported besides the default sweep.
    pub hill_k: Option<usize>,
    pub p_list: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let plan = IncrementPlan::default();
        RunSection {
            x0: 0.0,
            i0: 0,
            horizon: 10.0,
            n_paths: 1,
            burn_in: None,
            n_draws: 10_000,
            gap: 1.0,
            dt_max: plan.dt_max,
            epsilon_trunc: plan.epsilon_trunc,
            small_jump_mode: plan.small_jump_mode,
            allow_non_recurrent: false,
            p: 1.0,
            epsilon: None,
            delta: 0.5,
            grid_min_abs: 1.0,
            grid_max_abs: 1e6,
            grid_points_per_decade: 10,
            hill_k: None,
            p_list: vec![1.0, 2.0, 3.0],
            lambdas: vec![0.1, 0.5, 1.0],
            x_min: -4.0,
            x_max: 4.0,
            x_points: 81,
        }
    }
}

/// Keys and defaults, shown in `--help`.
pub const CONFIG_HELP: &str = "\
Configuration (TOML):
  schema = 1                      required
  seed = <u64>                    optional, overridden by --seed; default 0
  [chain]  q = [[..], ..]         rate matrix, rows sum to 0, irreducible, 2..64 states
  [drift]  alpha = [..]           one entry per state
  [noise]  sigma = [..]           one entry per state
           b = 0.0, a = 1.0       drift and Gaussian variance of the noise (a > 0)
  [levy]   kind = \"zero\"          default; or
           kind = \"compound_poisson\", rate, jumps = { kind = \"gaussian\", mean, sd }
                                    | { kind = \"two_sided_exponential\", rate_pos, rate_neg, weight_pos }
                                    | { kind = \"pareto\", beta, side = \"positive\"|\"negative\"|\"both\", scale }
                                    | { kind = \"point_mass\", z0 }
           kind = \"tempered_power_law\", c_pos, c_neg, beta_pos, beta_neg, theta_pos, theta_neg
  [run]    x0 = 0.0, i0 = 0, horizon = 10.0, n_paths = 1
           burn_in = 20/|drift index|, n_draws = 10000, gap = 1.0
           dt_max = 0.05, epsilon_trunc = 0.01, small_jump_mode = \"compensate_gaussian\" | \"drop\"
           allow_non_recurrent = false, p = 1.0
           epsilon = |drift index|/2, delta = 0.5
           grid_min_abs = 1.0, grid_max_abs = 1e6, grid_points_per_decade = 10
           hill_k = floor(sqrt n) sweep only, p_list = [1, 2, 3], lambdas = [0.1, 0.5, 1.0]
           x_min = -4.0, x_max = 4.0, x_points = 81
States are numbered from 0.
Overrides: --override run.horizon=5 --override levy.rate=2 (values parsed as TOML).";

impl RunConfig {
    /// Parses a config text after applying `key=value` overrides.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema: unsupported version {}, expected {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<RegimeModel, CliError> {
        let triplet = LevyTriplet {
            b: self.noise.b,
            a: self.noise.a,
            measure: self.levy,
        };
        RegimeModel::new(
            self.chain.q.clone(),
            self.drift.alpha.clone(),
            self.noise.sigma.clone(),
            triplet,
        )
        .map_err(|e| CliError::Config(format!("{}: {e}", model_error_key(&e))))
    }

    pub fn plan(&self) -> IncrementPlan {
        IncrementPlan {
            epsilon_trunc: self.run.epsilon_trunc,
            small_jump_mode: self.run.small_jump_mode,
            dt_max: self.run.dt_max,
        }
    }
}

fn model_error_key(e: &ModelError) -> &'static str {
    match e {
        ModelError::RowSumViolation { .. }
        | ModelError::NegativeOffDiagonal { .. }
        | ModelError::StateCount(_)
        | ModelError::NotIrreducible => "chain.q",
        ModelError::DimensionMismatch(msg) if msg.starts_with("alpha") => "drift.alpha",
        ModelError::DimensionMismatch(msg) if msg.starts_with("sigma") => "noise.sigma",
        ModelError::DimensionMismatch(_) => "chain.q",
        ModelError::NonPositiveA(_) => "noise.a",
        ModelError::InvalidMeasureParams(_) => "levy",
        ModelError::NonFinite(_) => "model",
    }
}

/// Sets `a.b.c = value` in the table, parsing `value` as a TOML value and
/// falling back to a plain string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}`: expected key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override `{assignment}`: malformed key `{key}`")));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{assignment}`: `{p}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "schema = 1\n[chain]\nq = [[-1, 1], [2, -2]]\n[drift]\nalpha = [-2, 1]\n[noise]\nsigma = [1, 1]\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(BASE, &[]).unwrap();
        assert_eq!(cfg.levy, LevyMeasureSpec::Zero);
        assert_eq!(cfg.noise.a, 1.0);
        assert_eq!(cfg.run, RunSection::default());
        cfg.model().unwrap();
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse(&format!("{BASE}[run]\nhorizn = 3\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
        let err = RunConfig::parse(BASE, &["run.n_drawz=5".into()]).unwrap_err();
        assert!(err.to_string().contains("n_drawz"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::parse(
            BASE,
            &[
                "run.horizon=2.5".into(),
                "run.small_jump_mode=drop".into(),
                "levy.kind=\"compound_poisson\"".into(),
                "levy.rate=2".into(),
                "levy.jumps={ kind = \"point_mass\", z0 = 1.0 }".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.run.horizon, 2.5);
        assert_eq!(cfg.run.small_jump_mode, SmallJumpMode::Drop);
        assert!(matches!(cfg.levy, LevyMeasureSpec::CompoundPoisson { rate, .. } if rate == 2.0));
    }

    #[test]
    fn schema_version_is_checked() {
        let err = RunConfig::parse(&BASE.replace("schema = 1", "schema = 2"), &[]).unwrap_err();
        assert!(err.to_string().contains("schema"));
    }
}
