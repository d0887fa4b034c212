//! TOML run configuration with `[market]`, `[utility]` and `[run]` sections.
//!
//! Coefficients accept a number, `{ table = [[t, v], ...] }` for a
//! piecewise-constant schedule, or `{ u_shape = { a = .., b = .. } }`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use lqp_core::{Coefficient, ExponentialMixture, ModelConfig, UtilitySpec};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    market: MarketSection,
    utility: UtilitySection,
    #[serde(default)]
    run: RunSettings,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSection {
    epsilon: f64,
    vartheta: f64,
    #[serde(default)]
    kappa: f64,
    horizon: f64,
    #[serde(default = "default_s0")]
    s0: f64,
    #[serde(default)]
    x0: f64,
    sigma: toml::Value,
    #[serde(default = "unit_value")]
    spread_factor: toml::Value,
    lambda1: toml::Value,
    lambda2: toml::Value,
}

fn default_s0() -> f64 {
    100.0
}

fn unit_value() -> toml::Value {
    toml::Value::Float(1.0)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum UtilitySection {
    Exponential { risk_aversion: f64 },
    Mixture { weights: Vec<f64>, risk_aversions: Vec<f64> },
}

/// Experiment settings; command-line flags override them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub substeps: usize,
    pub eps_ladder: Vec<f64>,
    pub kappa_ladder: Vec<f64>,
    /// Band half-width for the occupation diagnostic, in units of `ε^{1-ϑ}`.
    pub delta: f64,
    pub oracle_periods: usize,
    /// Oracle position step as a fraction of the larger candidate target.
    pub oracle_grid_fraction: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            n_paths: 10_000,
            n_steps: 1024,
            substeps: 1,
            eps_ladder: vec![0.04, 0.02, 0.01, 0.005],
            kappa_ladder: vec![0.0, 0.25, 0.5, 0.75],
            delta: 0.5,
            oracle_periods: 6,
            oracle_grid_fraction: 0.2,
        }
    }
}

fn coefficient(field: &str, value: &toml::Value) -> Result<Coefficient> {
    let number = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
    if let Some(x) = number(value) {
        return Ok(Coefficient::Constant(x));
    }
    let bad = || anyhow!("invalid config field `{field}`: expected a number, {{ table = [[t, v], ...] }} or {{ u_shape = {{ a, b }} }}");
    let table = value.as_table().ok_or_else(bad)?;
    if table.len() != 1 {
        return Err(bad());
    }
    if let Some(rows) = table.get("table") {
        let rows = rows.as_array().ok_or_else(bad)?;
        let mut knots = Vec::with_capacity(rows.len());
        for row in rows {
            match row.as_array().map(|r| r.as_slice()) {
                Some([t, v]) => knots.push((number(t).ok_or_else(bad)?, number(v).ok_or_else(bad)?)),
                _ => bail!("invalid config field `{field}`: table rows must be [time, value] pairs"),
            }
        }
        return Ok(Coefficient::PiecewiseConstant(knots));
    }
    if let Some(u) = table.get("u_shape") {
        let get = |k: &str| {
            u.get(k)
                .and_then(number)
                .ok_or_else(|| anyhow!("invalid config field `{field}`: u_shape needs numeric `{k}`"))
        };
        return Ok(Coefficient::UShape { a: get("a")?, b: get("b")? });
    }
    Err(bad())
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<(ModelConfig, RunSettings)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config_str(text: &str) -> Result<(ModelConfig, RunSettings)> {
    let file: FileConfig = toml::from_str(text)?;
    let m = file.market;
    let utility = match file.utility {
        UtilitySection::Exponential { risk_aversion } => UtilitySpec::exponential(risk_aversion),
        UtilitySection::Mixture {
            weights,
            risk_aversions,
        } => UtilitySpec::Mixture(ExponentialMixture::new(weights, risk_aversions)?),
    };
    let config = ModelConfig {
        sigma: coefficient("sigma", &m.sigma)?,
        spread_factor: coefficient("spread_factor", &m.spread_factor)?,
        lambda1: coefficient("lambda1", &m.lambda1)?,
        lambda2: coefficient("lambda2", &m.lambda2)?,
        epsilon: m.epsilon,
        vartheta: m.vartheta,
        kappa: m.kappa,
        horizon: m.horizon,
        s0: m.s0,
        x0: m.x0,
        utility,
    };
    config.validate()?;
    check_run(&file.run)?;
    Ok((config, file.run))
}

pub fn check_run(run: &RunSettings) -> Result<()> {
    if run.n_steps == 0 || run.substeps == 0 {
        bail!("invalid config field `n_steps`: steps and substeps must be positive");
    }
    if !(run.delta > 0.0) {
        bail!("invalid config field `delta`: must be positive");
    }
    if !(run.oracle_grid_fraction > 0.0) {
        bail!("invalid config field `oracle_grid_fraction`: must be positive");
    }
    if run.eps_ladder.iter().any(|e| !(*e > 0.0)) {
        bail!("invalid config field `eps_ladder`: entries must be positive");
    }
    if run.kappa_ladder.iter().any(|k| !(0.0..1.0).contains(k)) {
        bail!("invalid config field `kappa_ladder`: entries must lie in [0, 1)");
    }
    Ok(())
}
