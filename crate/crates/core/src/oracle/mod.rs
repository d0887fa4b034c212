//! Exact backward induction on small discrete surrogates of the market.
//!
//! A [`DiscreteInstance`] replaces the diffusion by a martingale binomial
//! tree and each arrival stream by at most one Bernoulli arrival per period.
//! Positions are held in units on a fixed grid (monetary step `h` at the
//! initial price), so every price move and fill maps grid positions to grid
//! positions and the optimization is exhaustive.
//!
//! Period timeline, starting from units `φ` at price `S`:
//! 1. market order to `m`, paying `ε|m - φ|S`;
//! 2. arrivals: the buy side fills with probability `p₁`, buying up to the
//!    buy target at the bid, then the price drops by `κε`; the sell side
//!    fills with probability `p₂`, selling down to the sell target at the
//!    ask, then the price rises by `κε`. When both arrive, each order comes
//!    first with probability ½;
//! 3. the price moves by the factor `u` or `d` with probability ½ each.
//!
//! At the horizon the position is liquidated at the unfavourable quote.

mod dp;
mod enumerate;

pub use dp::dp_optimal_utility;
pub use enumerate::enumerate_one_period;

use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, Side};
use crate::error::{Error, Result};
use crate::policy::boundaries_from;
use crate::utility::UtilitySpec;

/// Longest supported horizon in periods.
pub const MAX_PERIODS: usize = 12;
/// Largest value table the solver will allocate.
pub const STATE_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub n_periods: usize,
    pub dt: f64,
    /// Up factor `u = exp(σ√Δt)`.
    pub up: f64,
    /// Down factor `d = 2 - u`, so the mid is a martingale under equal
    /// probabilities.
    pub down: f64,
    pub fill_prob1: f64,
    pub fill_prob2: f64,
    pub half_spread: f64,
    pub kappa: f64,
    /// Monetary grid step `h` at the initial price.
    pub grid_step: f64,
    /// Grid indices run over `-grid_points..=grid_points`; the bound is
    /// `B = grid_points · h`.
    pub grid_points: usize,
    pub s0: f64,
    pub x0: f64,
    pub utility: UtilitySpec,
    /// Monetary buy target of the candidate policy.
    pub upper_target: f64,
    /// Monetary sell target of the candidate policy.
    pub lower_target: f64,
    /// Wealth bucket width for non-exponential utilities; `None` picks
    /// [`DiscreteInstance::default_wealth_step`].
    #[serde(default)]
    pub wealth_step: Option<f64>,
}

/// Grid indices: `market` is the position after the market order, `buy` the
/// target a buy fill trades up to, `sell` the target a sell fill trades down
/// to. `buy = -grid_points` never buys and `sell = grid_points` never sells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub market: i32,
    pub buy: i32,
    pub sell: i32,
}

/// Price node: `j` up moves, `a` buy-side and `b` sell-side impact jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceNode {
    pub ups: usize,
    pub buy_impacts: usize,
    pub sell_impacts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub period: usize,
    pub side: Side,
    pub position_index: i32,
    pub price_node: PriceNode,
    /// Always 0 for exponential utility, whose value factorizes in wealth.
    pub wealth_bucket: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPResult {
    pub optimal_value: f64,
    pub optimal_policy: Vec<PolicyEntry>,
    pub candidate_value: f64,
    /// `optimal_value - candidate_value`.
    pub gap: f64,
    /// Action taken at the root (period 0, no position, initial price).
    pub root_action: Action,
    /// Value-table entries per period.
    pub state_entries: usize,
}

/// Instance and result together, as written by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub instance: DiscreteInstance,
    pub result: DPResult,
}

impl DiscreteInstance {
    pub fn unit_step(&self) -> f64 {
        self.grid_step / self.s0
    }

    /// Units held at grid index `i`.
    pub fn units(&self, i: i32) -> f64 {
        i as f64 * self.unit_step()
    }

    pub fn bound(&self) -> f64 {
        self.grid_points as f64 * self.grid_step
    }

    pub fn grid_len(&self) -> usize {
        2 * self.grid_points + 1
    }

    pub fn with_grid(&self, grid_step: f64, grid_points: usize) -> Self {
        DiscreteInstance {
            grid_step,
            grid_points,
            ..self.clone()
        }
    }

    /// Same step, bound widened to `grid_points · h`.
    pub fn with_bound(&self, grid_points: usize) -> Self {
        self.with_grid(self.grid_step, grid_points)
    }

    /// Swaps the two arrival streams and negates the candidate targets.
    pub fn mirrored(&self) -> Self {
        DiscreteInstance {
            fill_prob1: self.fill_prob2,
            fill_prob2: self.fill_prob1,
            upper_target: -self.lower_target,
            lower_target: -self.upper_target,
            ..self.clone()
        }
    }

    /// Number of impact counters tracked per side at `period`.
    pub(crate) fn impact_levels(&self, period: usize) -> usize {
        if self.kappa == 0.0 || self.half_spread == 0.0 {
            1
        } else {
            period + 1
        }
    }

    pub(crate) fn node_count(&self, period: usize) -> usize {
        let i = self.impact_levels(period);
        (period + 1) * i * i
    }

    pub(crate) fn node_index(&self, period: usize, node: PriceNode) -> usize {
        let i = self.impact_levels(period);
        (node.ups * i + node.buy_impacts) * i + node.sell_impacts
    }

    pub(crate) fn node_at(&self, period: usize, index: usize) -> PriceNode {
        let i = self.impact_levels(period);
        PriceNode {
            ups: index / (i * i),
            buy_impacts: (index / i) % i,
            sell_impacts: index % i,
        }
    }

    pub fn price(&self, period: usize, node: PriceNode) -> f64 {
        let ke = self.kappa * self.half_spread;
        self.s0
            * self.up.powi(node.ups as i32)
            * self.down.powi((period - node.ups) as i32)
            * (1.0 - ke).powi(node.buy_impacts as i32)
            * (1.0 + ke).powi(node.sell_impacts as i32)
    }

    /// Bound on `|wealth - x₀|` over the tree: every position is at most
    /// `B/s₀` units and every price at most `s₀ uⁿ (1+κε)ⁿ`.
    pub fn wealth_radius(&self) -> f64 {
        let n = self.n_periods as i32;
        let ke = self.kappa * self.half_spread;
        let s_max = self.s0 * self.up.powi(n) * (1.0 + ke).powi(n);
        let units = self.bound() / self.s0;
        let per_period = units * s_max * ((self.up - 1.0).max(1.0 - self.down) + 6.0 * self.half_spread + 2.0 * ke);
        n as f64 * per_period + units * s_max * self.half_spread
    }

    /// Splits the wealth radius into 200 buckets on each side of `x₀`.
    /// Linear interpolation then errs by at most
    /// `step²·max|U''|/8` per period.
    pub fn default_wealth_step(&self) -> f64 {
        self.wealth_radius() / 200.0
    }

    /// Number of wealth buckets on each side of `x₀` (0 for exponential
    /// utility).
    pub fn wealth_half_buckets(&self) -> usize {
        if self.utility.is_exponential() {
            0
        } else {
            let step = self.wealth_step.unwrap_or_else(|| self.default_wealth_step());
            (self.wealth_radius() / step).ceil() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_periods == 0 || self.n_periods > MAX_PERIODS {
            return Err(Error::InvalidArgument(format!(
                "n_periods must lie in 1..={MAX_PERIODS}, got {}",
                self.n_periods
            )));
        }
        if !(self.up >= 1.0 && self.up < 2.0 && (self.up + self.down - 2.0).abs() < 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= u < 2 and d = 2 - u for a martingale tree, got u = {}, d = {}",
                self.up, self.down
            )));
        }
        for (name, p) in [("fill_prob1", self.fill_prob1), ("fill_prob2", self.fill_prob2)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        if !(self.grid_step > 0.0 && self.grid_points > 0) {
            return Err(Error::InvalidArgument("position grid needs a positive step and bound".into()));
        }
        if !(0.0..1.0).contains(&self.half_spread) || !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::InvalidArgument("half_spread and kappa must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Total value-table entries, checked against [`STATE_LIMIT`].
    pub fn check_state_space(&self) -> Result<usize> {
        let per_state = 2 * self.grid_len() * (2 * self.wealth_half_buckets() + 1);
        let entries: usize = (0..=self.n_periods).map(|p| self.node_count(p) * per_state).sum();
        if entries > STATE_LIMIT {
            let shrink = entries as f64 / STATE_LIMIT as f64;
            // entries grow at least linearly in 1/h (quadratically with buckets)
            let power = if self.utility.is_exponential() { 1.0 } else { 0.5 };
            return Err(Error::StateSpace {
                entries,
                limit: STATE_LIMIT,
                suggested_step: self.grid_step * shrink.powf(power) * 1.01,
            });
        }
        Ok(entries)
    }

    /// The candidate action: buy and sell targets are the boundaries in
    /// units at the current price rounded to the grid, and the market order
    /// clamps the position between them.
    pub fn candidate_action(&self, position: i32, price: f64) -> Action {
        let m = self.grid_points as i32;
        let to_index = |target: f64| ((target / price) / self.unit_step()).round().clamp(-m as f64, m as f64) as i32;
        let buy = to_index(self.upper_target);
        let sell = to_index(self.lower_target);
        Action {
            market: position.clamp(sell.min(buy), buy.max(sell)),
            buy,
            sell,
        }
    }
}

/// Binomial surrogate of a constant-coefficient configuration with
/// `n_periods` periods over `[0, T]`. Arrival probabilities are
/// `1 - exp(-λ⁽ⁱ⁾ε^{-ϑ}Δt)`. The position bound is the smallest multiple of
/// `grid_step` above `2.4·max(|β̄|, |β̲|)`, and at least two steps.
pub fn discretize_instance(config: &ModelConfig, n_periods: usize, grid_step: f64) -> Result<DiscreteInstance> {
    if !config.has_constant_coefficients() {
        return Err(Error::InvalidArgument(
            "the discrete surrogate needs constant sigma, spread factor and arrival rates".into(),
        ));
    }
    if n_periods == 0 || n_periods > MAX_PERIODS {
        return Err(Error::InvalidArgument(format!(
            "n_periods must lie in 1..={MAX_PERIODS}, got {n_periods}"
        )));
    }
    let dt = config.horizon / n_periods as f64;
    if ((n_periods as f64) * dt - config.horizon).abs() > 1e-12 * config.horizon {
        return Err(Error::InvalidArgument("periods do not tile the horizon".into()));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid_step must be positive, got {grid_step}")));
    }
    let h = config.horizon;
    let sigma = config.sigma.eval(0.0, h);
    let up = (sigma * dt.sqrt()).exp();
    let eps = config.half_spread(0.0);
    let fill = |side: Side| {
        if config.epsilon == 0.0 {
            // ε^{-ϑ} is infinite at ε = 0; no spread means nothing to earn anyway
            0.0
        } else {
            1.0 - (-config.alpha(side, 0.0) * dt).exp()
        }
    };
    let (lower_target, upper_target) = if eps == 0.0 {
        (0.0, 0.0)
    } else {
        boundaries_from(
            eps,
            config.alpha(Side::A1, 0.0),
            config.alpha(Side::A2, 0.0),
            sigma,
            config.ara0(),
            config.kappa,
        )
        .clamped()
    };
    let reach = upper_target.abs().max(lower_target.abs());
    let grid_points = ((2.4 * reach / grid_step).ceil() as usize).max(2);
    let inst = DiscreteInstance {
        n_periods,
        dt,
        up,
        down: 2.0 - up,
        fill_prob1: fill(Side::A1),
        fill_prob2: fill(Side::A2),
        half_spread: eps,
        kappa: config.kappa,
        grid_step,
        grid_points,
        s0: config.s0,
        x0: config.x0,
        utility: config.utility.clone(),
        upper_target,
        lower_target,
        wealth_step: None,
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Coefficient;

    #[test]
    fn substitution() {
        let cfg = ModelConfig::symmetric_benchmark(0.04);
        let inst = discretize_instance(&cfg, 4, 0.01).unwrap();
        assert!((inst.up - 0.5f64.exp()).abs() < 1e-15);
        assert!((inst.down - (2.0 - 0.5f64.exp())).abs() < 1e-15);
        assert!((inst.fill_prob1 - (1.0 - (-1.25f64).exp())).abs() < 1e-15);
        assert_eq!(inst.half_spread, 0.04);
        assert_eq!(inst.dt, 0.25);
    }

    #[test]
    fn rejects_time_varying_coefficients() {
        let cfg = ModelConfig {
            sigma: Coefficient::UShape { a: 1.0, b: 0.2 },
            ..ModelConfig::symmetric_benchmark(0.04)
        };
        assert!(matches!(discretize_instance(&cfg, 4, 0.01), Err(Error::InvalidArgument(_))));
        let cfg = ModelConfig::symmetric_benchmark(0.04);
        assert!(discretize_instance(&cfg, 0, 0.01).is_err());
        assert!(discretize_instance(&cfg, 13, 0.01).is_err());
    }

    #[test]
    fn martingale_tree() {
        let inst = discretize_instance(&ModelConfig::symmetric_benchmark(0.04), 6, 0.05).unwrap();
        assert!((0.5 * (inst.up + inst.down) - 1.0).abs() < 1e-15);
        assert!(inst.grid_len() % 2 == 1);
    }

    #[test]
    fn candidate_targets_at_initial_price() {
        let inst = discretize_instance(&ModelConfig::symmetric_benchmark(0.04), 6, 0.08).unwrap();
        // β̄ = 2·0.04·5 = 0.4 → 5 grid steps of 0.08
        let a = inst.candidate_action(0, inst.s0);
        assert_eq!((a.market, a.buy, a.sell), (0, 5, -5));
        assert_eq!(inst.candidate_action(9, inst.s0).market, 5);
        assert_eq!(inst.grid_points, 12);
    }

    #[test]
    fn node_indexing_round_trips() {
        let inst = discretize_instance(&ModelConfig::symmetric_benchmark(0.04).with_kappa(0.5), 3, 0.1).unwrap();
        for p in 0..=3 {
            for i in 0..inst.node_count(p) {
                assert_eq!(inst.node_index(p, inst.node_at(p, i)), i);
            }
        }
    }

    #[test]
    fn state_limit() {
        let inst = discretize_instance(&ModelConfig::symmetric_benchmark(0.04).with_kappa(0.5), 12, 1e-6).unwrap();
        match inst.check_state_space() {
            Err(Error::StateSpace { suggested_step, .. }) => {
                let coarser = inst.with_grid(suggested_step, (inst.bound() / suggested_step).ceil() as usize);
                assert!(coarser.check_state_space().is_ok());
            }
            other => panic!("expected a state-space error, got {other:?}"),
        }
    }
}
