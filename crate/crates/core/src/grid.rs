//! Time discretisation and per-grid coefficient tables.

use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t: Vec<f64>,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Uniform grid `t_k = T k / n`, with both endpoints exact.
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let t = (0..=n_steps)
            .map(|k| horizon * k as f64 / n_steps as f64)
            .collect();
        Ok(TimeGrid { t, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.t[self.n_steps]
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.t[k + 1] - self.t[k]
    }

    /// Index `k` of the grid point with `t_{k-1} < time <= t_k`.
    pub fn containing_step(&self, time: f64) -> usize {
        self.t
            .partition_point(|&tk| tk < time)
            .clamp(1, self.n_steps)
    }
}

pub fn build_time_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(horizon, n_steps)
}

/// Coefficients sampled at every grid point, so per-path loops avoid
/// re-evaluating the coefficient functions.
#[derive(Debug, Clone)]
pub struct MarketCoefficients {
    pub sigma: Vec<f64>,
    pub half_spread: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
}

impl MarketCoefficients {
    pub fn sample(config: &ModelConfig, grid: &TimeGrid) -> Self {
        let h = config.horizon;
        MarketCoefficients {
            sigma: grid.t.iter().map(|&t| config.sigma.eval(t, h)).collect(),
            half_spread: grid.t.iter().map(|&t| config.half_spread(t)).collect(),
            alpha1: grid.t.iter().map(|&t| config.alpha(Side::A1, t)).collect(),
            alpha2: grid.t.iter().map(|&t| config.alpha(Side::A2, t)).collect(),
        }
    }
}
