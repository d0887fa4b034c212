//! Target-position boundaries, the reflected inventory process, and the
//! limit/market-order strategies derived from it.

mod impact;
mod perturb;
mod reflection;
mod strategy;

pub use impact::{impact_policy, ImpactOutcome};
pub use perturb::{random_admissible_strategy, BandPerturbation};
pub use reflection::{candidate_inventory, reflected_inventory, InventoryPath, JumpMark};
pub use strategy::{strategy_from_inventory, Strategy};

use serde::Serialize;

use crate::config::ModelConfig;
use crate::grid::MarketCoefficients;

/// Monetary position limits at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundaries {
    pub lower: f64,
    pub upper: f64,
    /// The upper numerator `(1-κ/2)α⁽²⁾ - (κ/2)α⁽¹⁾` is not positive.
    pub upper_degenerate: bool,
    /// The lower numerator `(1-κ/2)α⁽¹⁾ - (κ/2)α⁽²⁾` is not positive.
    pub lower_degenerate: bool,
}

impl Boundaries {
    /// Degenerate sides set to 0: nothing is quoted there.
    pub fn clamped(self) -> (f64, f64) {
        let lower = if self.lower_degenerate { 0.0 } else { self.lower };
        let upper = if self.upper_degenerate { 0.0 } else { self.upper };
        (lower, upper)
    }
}

/// `β̄ = 2ε_t((1-κ/2)α⁽²⁾ - (κ/2)α⁽¹⁾)/(ARA σ²)` and
/// `β̲ = -2ε_t((1-κ/2)α⁽¹⁾ - (κ/2)α⁽²⁾)/(ARA σ²)`.
pub fn boundaries_from(half_spread: f64, alpha1: f64, alpha2: f64, sigma: f64, ara: f64, kappa: f64) -> Boundaries {
    let up_num = (1.0 - kappa / 2.0) * alpha2 - (kappa / 2.0) * alpha1;
    let lo_num = (1.0 - kappa / 2.0) * alpha1 - (kappa / 2.0) * alpha2;
    let denom = ara * sigma * sigma;
    Boundaries {
        upper: 2.0 * half_spread * up_num / denom,
        lower: -2.0 * half_spread * lo_num / denom,
        upper_degenerate: !(up_num > 0.0),
        lower_degenerate: !(lo_num > 0.0),
    }
}

/// Boundaries at time `t` with risk aversion frozen at initial wealth.
pub fn trading_boundaries(t: f64, config: &ModelConfig) -> Boundaries {
    use crate::config::Side;
    boundaries_from(
        config.half_spread(t),
        config.alpha(Side::A1, t),
        config.alpha(Side::A2, t),
        config.sigma.eval(t, config.horizon),
        config.ara0(),
        config.kappa,
    )
}

/// Clamped boundaries on every grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPath {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundaryPath {
    pub fn from_coefficients(coeffs: &MarketCoefficients, ara: f64, kappa: f64) -> Self {
        let n = coeffs.sigma.len();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for k in 0..n {
            let b = boundaries_from(
                coeffs.half_spread[k],
                coeffs.alpha1[k],
                coeffs.alpha2[k],
                coeffs.sigma[k],
                ara,
                kappa,
            );
            let (lo, up) = b.clamped();
            lower.push(lo);
            upper.push(up);
        }
        BoundaryPath { lower, upper }
    }

    pub fn for_setup(setup: &crate::market::MarketSetup) -> Self {
        Self::from_coefficients(&setup.coeffs, setup.config.ara0(), setup.config.kappa)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BoundaryPath {
            lower: self.lower.iter().map(|v| v * factor).collect(),
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest absolute boundary over the grid.
    pub fn max_abs(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Coefficient;

    #[test]
    fn base_boundary_substitution() {
        let b = boundaries_from(0.01, 10.0, 10.0, 1.0, 1.0, 0.0);
        assert!((b.upper - 0.2).abs() < 1e-15);
        assert!((b.lower + 0.2).abs() < 1e-15);
        assert!(!b.upper_degenerate && !b.lower_degenerate);
    }

    #[test]
    fn impact_boundary_substitution() {
        // 2·(0.75·1 - 0.25·2) = 0.5 and -2·(0.75·2 - 0.25·1) = -2.5
        let b = boundaries_from(1.0, 2.0, 1.0, 1.0, 1.0, 0.5);
        assert!((b.upper - 0.5).abs() < 1e-15);
        assert!((b.lower + 2.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_impact_halves_boundaries() {
        let b0 = boundaries_from(0.01, 7.0, 7.0, 0.8, 1.3, 0.0);
        let b1 = boundaries_from(0.01, 7.0, 7.0, 0.8, 1.3, 0.5);
        assert!((b1.upper - 0.5 * b0.upper).abs() <= 1e-15 * b0.upper);
        assert!((b1.lower - 0.5 * b0.lower).abs() <= 1e-15 * b0.upper);
    }

    #[test]
    fn strong_impact_is_degenerate() {
        // (1 - 0.45)·1 - 0.45·3 < 0 on the upper side
        let b = boundaries_from(0.01, 3.0, 1.0, 1.0, 1.0, 0.9);
        assert!(b.upper_degenerate);
        assert!(!b.lower_degenerate);
        let (lo, up) = b.clamped();
        assert_eq!(up, 0.0);
        assert!(lo < 0.0);
    }

    #[test]
    fn config_level_boundaries() {
        let cfg = ModelConfig {
            lambda2: Coefficient::Constant(1.0),
            ..ModelConfig::symmetric_benchmark(0.01)
        };
        let b = trading_boundaries(0.5, &cfg);
        // α = 10, ε = 0.01, ARA = σ = 1
        assert!((b.upper - 0.2).abs() < 1e-14);
    }
}
