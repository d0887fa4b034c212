//! Market and preference parameters.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::utility::UtilitySpec;

/// A deterministic coefficient `t -> value` on `[0, T]`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Knots `(t_i, v_i)` sorted by time; the value at `t` is `v_i` for the
    /// last knot with `t_i <= t` (the first value before the first knot).
    PiecewiseConstant(Vec<(f64, f64)>),
    /// `a + b (2t/T - 1)^2`, high at both ends of the session when `b > 0`.
    UShape { a: f64, b: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Coefficient::PiecewiseConstant(k) => f.debug_tuple("PiecewiseConstant").field(k).finish(),
            Coefficient::UShape { a, b } => f.debug_struct("UShape").field("a", a).field("b", b).finish(),
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

impl Coefficient {
    pub fn eval(&self, t: f64, horizon: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::PiecewiseConstant(knots) => {
                let idx = knots.partition_point(|(ti, _)| *ti <= t);
                knots[idx.saturating_sub(1)].1
            }
            Coefficient::UShape { a, b } => {
                let z = 2.0 * t / horizon - 1.0;
                a + b * z * z
            }
            Coefficient::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    /// An upper bound on the coefficient over `[0, horizon]`, exact for the
    /// built-in forms. Custom functions are sampled densely and padded.
    pub fn sup_bound(&self, horizon: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::PiecewiseConstant(knots) => {
                knots.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max)
            }
            Coefficient::UShape { a, b } => a + b.max(0.0),
            Coefficient::Custom(f) => {
                let n = 10_000;
                let m = (0..=n)
                    .map(|i| f(horizon * i as f64 / n as f64))
                    .fold(f64::NEG_INFINITY, f64::max);
                m * 1.05
            }
        }
    }

    fn check_positive(&self, name: &str, grid: &TimeGrid, horizon: f64) -> Result<()> {
        if let Coefficient::PiecewiseConstant(knots) = self {
            if knots.is_empty() {
                return Err(Error::config(name, "piecewise table has no knots"));
            }
            if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::config(name, "knot times must be strictly increasing"));
            }
        }
        for &t in &grid.t {
            let v = self.eval(t, horizon);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("must be positive and finite on [0, T], got {v} at t = {t}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub sigma: Coefficient,
    pub spread_factor: Coefficient,
    pub lambda1: Coefficient,
    pub lambda2: Coefficient,
    pub epsilon: f64,
    pub vartheta: f64,
    pub kappa: f64,
    pub horizon: f64,
    pub s0: f64,
    pub x0: f64,
    pub utility: UtilitySpec,
}

/// Grid resolution used when a config is validated without a run grid.
pub const DEFAULT_VALIDATION_STEPS: usize = 1024;

impl ModelConfig {
    /// Constant coefficients `σ = 𝓔 = λ⁽¹⁾ = λ⁽²⁾ = 1`, exponential utility with
    /// unit risk aversion, `T = 1`, `ϑ = 1/2`, `κ = 0`, `S₀ = 100`, `x₀ = 0`.
    pub fn symmetric_benchmark(epsilon: f64) -> Self {
        ModelConfig {
            sigma: Coefficient::Constant(1.0),
            spread_factor: Coefficient::Constant(1.0),
            lambda1: Coefficient::Constant(1.0),
            lambda2: Coefficient::Constant(1.0),
            epsilon,
            vartheta: 0.5,
            kappa: 0.0,
            horizon: 1.0,
            s0: 100.0,
            x0: 0.0,
            utility: UtilitySpec::exponential(1.0),
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ModelConfig {
            epsilon,
            ..self.clone()
        }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        ModelConfig {
            kappa,
            ..self.clone()
        }
    }

    /// True when all four coefficient functions are declared constant.
    pub fn has_constant_coefficients(&self) -> bool {
        self.sigma.is_constant()
            && self.spread_factor.is_constant()
            && self.lambda1.is_constant()
            && self.lambda2.is_constant()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be positive"));
        }
        let grid = TimeGrid::uniform(self.horizon, DEFAULT_VALIDATION_STEPS)?;
        self.validate_on(&grid)
    }

    /// Checks parameter ranges and samples every coefficient on `grid`.
    pub fn validate_on(&self, grid: &TimeGrid) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(self.vartheta > 0.0 && self.vartheta < 1.0) {
            return Err(Error::config(
                "vartheta",
                format!("must lie in (0, 1), got {}", self.vartheta),
            ));
        }
        if !(self.kappa >= 0.0 && self.kappa < 1.0) {
            return Err(Error::config(
                "kappa",
                format!("must lie in [0, 1), got {}", self.kappa),
            ));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::config("s0", "must be positive"));
        }
        if !self.x0.is_finite() {
            return Err(Error::config("x0", "must be finite"));
        }
        self.sigma.check_positive("sigma", grid, self.horizon)?;
        self.spread_factor.check_positive("spread_factor", grid, self.horizon)?;
        self.lambda1.check_positive("lambda1", grid, self.horizon)?;
        self.lambda2.check_positive("lambda2", grid, self.horizon)?;
        for &t in &grid.t {
            let half = self.epsilon * self.spread_factor.eval(t, self.horizon);
            if half >= 1.0 {
                return Err(Error::config(
                    "spread_factor",
                    format!("epsilon * spread_factor = {half} at t = {t}; must stay below 1"),
                ));
            }
        }
        self.utility.validate(self.x0).map_err(|e| match e {
            Error::InvalidUtility(reason) => Error::config("utility", reason),
            other => other,
        })
    }

    /// Arrival intensity `α⁽ⁱ⁾_t = λ⁽ⁱ⁾_t ε^{-ϑ}` for side 1 or 2.
    pub fn alpha(&self, side: Side, t: f64) -> f64 {
        let lambda = match side {
            Side::A1 => &self.lambda1,
            Side::A2 => &self.lambda2,
        };
        lambda.eval(t, self.horizon) * self.epsilon.powf(-self.vartheta)
    }

    /// Relative half-spread `ε_t = ε 𝓔_t`.
    pub fn half_spread(&self, t: f64) -> f64 {
        self.epsilon * self.spread_factor.eval(t, self.horizon)
    }

    /// Absolute risk aversion at initial wealth.
    pub fn ara0(&self) -> f64 {
        self.utility.ara(self.x0)
    }

    /// The leading-order welfare scale `ε^{2(1-ϑ)}`.
    pub fn leading_scale(&self) -> f64 {
        self.epsilon.powf(2.0 * (1.0 - self.vartheta))
    }
}

/// Which side of the book executed most recently: `A1` after a purchase by the
/// provider (an `N⁽¹⁾` arrival), `A2` after a sale or before any execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    A1,
    A2,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::A1 => 0,
            Side::A2 => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_forms() {
        let pw = Coefficient::PiecewiseConstant(vec![(0.0, 1.0), (0.5, 3.0)]);
        assert_eq!(pw.eval(0.0, 1.0), 1.0);
        assert_eq!(pw.eval(0.49, 1.0), 1.0);
        assert_eq!(pw.eval(0.5, 1.0), 3.0);
        assert_eq!(pw.sup_bound(1.0), 3.0);
        let u = Coefficient::UShape { a: 1.0, b: 2.0 };
        assert_eq!(u.eval(0.0, 2.0), 3.0);
        assert_eq!(u.eval(1.0, 2.0), 1.0);
        assert_eq!(u.eval(2.0, 2.0), 3.0);
        assert_eq!(u.sup_bound(2.0), 3.0);
    }

    #[test]
    fn benchmark_is_valid() {
        ModelConfig::symmetric_benchmark(0.01).validate().unwrap();
    }

    #[test]
    fn range_violations_name_the_field() {
        let base = ModelConfig::symmetric_benchmark(0.01);
        let cases: Vec<(ModelConfig, &str)> = vec![
            (ModelConfig { vartheta: 1.2, ..base.clone() }, "vartheta"),
            (ModelConfig { vartheta: 0.0, ..base.clone() }, "vartheta"),
            (base.with_kappa(1.0), "kappa"),
            (base.with_kappa(-0.1), "kappa"),
            (base.with_epsilon(0.0), "epsilon"),
            (base.with_epsilon(1.5), "spread_factor"),
            (ModelConfig { sigma: Coefficient::Constant(0.0), ..base.clone() }, "sigma"),
            (
                ModelConfig {
                    lambda2: Coefficient::UShape { a: 1.0, b: -2.0 },
                    ..base.clone()
                },
                "lambda2",
            ),
            (ModelConfig { utility: UtilitySpec::exponential(-1.0), ..base.clone() }, "utility"),
        ];
        for (cfg, field) in cases {
            match cfg.validate() {
                Err(Error::InvalidConfig { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn intensity_scaling() {
        let cfg = ModelConfig::symmetric_benchmark(0.01);
        assert!((cfg.alpha(Side::A1, 0.3) - 10.0).abs() < 1e-12);
        assert!((cfg.leading_scale() - 0.01).abs() < 1e-15);
    }
}
