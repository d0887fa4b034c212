//! The frictionless shadow market.
//!
//! The shadow price `S̃` lives inside the spread: it sits at the bid after the
//! provider's bid was hit and at the ask after its ask was lifted. Trading at
//! `S̃` without costs is at least as good as trading in the limit order
//! market, with equality for the reflected band policy.

use serde::Serialize;

use crate::config::{ModelConfig, Side};
use crate::market::MarketPath;
use crate::policy::{boundaries_from, Strategy};

/// Ratio `S̃/S` in a regime: `(1-ε)/(1-κε)` after a bid execution and
/// `(1+ε)/(1+κε)` after an ask execution. The denominators undo the impact
/// jump, so right after a fill `S̃` equals the execution price.
pub fn shadow_ratio(side: Side, half_spread: f64, kappa: f64) -> f64 {
    match side {
        Side::A1 => (1.0 - half_spread) / (1.0 - kappa * half_spread),
        Side::A2 => (1.0 + half_spread) / (1.0 + kappa * half_spread),
    }
}

/// Shadow price just before an arrival and at its execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShadowJump {
    pub before: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowPath {
    /// `S̃` at `t_k` after every event at `t_k`.
    pub s_tilde: Vec<f64>,
    /// `S̃` at `t_k` before the arrivals snapped to `t_k`.
    pub s_tilde_pre: Vec<f64>,
    pub at_arrival: Vec<ShadowJump>,
    /// Regime after every event at `t_k`; `A2` before the first arrival.
    pub regime: Vec<Side>,
}

pub fn shadow_price_path(path: &MarketPath, config: &ModelConfig) -> ShadowPath {
    let n = path.n_steps();
    let eps = path.half_spread();
    let kappa = config.kappa;
    let mut regime = Side::A2;
    let mut out = ShadowPath {
        s_tilde: Vec::with_capacity(n + 1),
        s_tilde_pre: Vec::with_capacity(n + 1),
        at_arrival: Vec::with_capacity(path.arrivals.len()),
        regime: Vec::with_capacity(n + 1),
    };
    let mut next = 0;
    for k in 0..=n {
        out.s_tilde_pre.push(shadow_ratio(regime, eps[k], kappa) * path.mid_pre[k]);
        while next < path.arrivals.len() && path.arrivals[next].step == k {
            let a = &path.arrivals[next];
            let before = shadow_ratio(regime, eps[k], kappa) * a.pre_mid;
            let at = match a.side {
                Side::A1 => (1.0 - eps[k]) * a.pre_mid,
                Side::A2 => (1.0 + eps[k]) * a.pre_mid,
            };
            out.at_arrival.push(ShadowJump { before, at });
            regime = a.side;
            next += 1;
        }
        out.s_tilde.push(shadow_ratio(regime, eps[k], kappa) * path.mid[k]);
        out.regime.push(regime);
    }
    out
}

/// Monetary position in the shadow market, `η = φ S̃`, on each segment over
/// which `φ` is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowPosition {
    /// `diffusive[k]` is held from `t_k` (after its events) to `t_{k+1}`
    /// (before its arrivals).
    pub diffusive: Vec<f64>,
    /// Held across each arrival's jump, just before its fill.
    pub at_arrival: Vec<f64>,
}

impl ShadowPosition {
    pub fn zero(path: &MarketPath) -> Self {
        ShadowPosition {
            diffusive: vec![0.0; path.n_steps()],
            at_arrival: vec![0.0; path.arrivals.len()],
        }
    }

    /// The positions generated by `strategy`, with units updated in the same
    /// order as the ledger.
    pub fn from_strategy(strategy: &Strategy, path: &MarketPath, shadow: &ShadowPath) -> Self {
        let n = path.n_steps();
        let mut out = ShadowPosition {
            diffusive: Vec::with_capacity(n),
            at_arrival: Vec::with_capacity(path.arrivals.len()),
        };
        let mut units = 0.0;
        let mut next = 0;
        for k in 0..=n {
            if strategy.liquidation_step == Some(k) {
                units = 0.0;
            } else {
                units += strategy.market_buy_at(k);
                units -= strategy.market_sell_at(k);
            }
            while next < path.arrivals.len() && path.arrivals[next].step == k {
                out.at_arrival.push(units * shadow.at_arrival[next].before);
                units += match path.arrivals[next].side {
                    Side::A1 => strategy.fill_units[next],
                    Side::A2 => -strategy.fill_units[next],
                };
                next += 1;
            }
            if k < n {
                out.diffusive.push(units * shadow.s_tilde[k]);
            }
        }
        out
    }
}

/// `X̃_T = x₀ + ∫ η dS̃/S̃`, summed over diffusive segments and arrival jumps.
pub fn frictionless_wealth(x0: f64, eta: &ShadowPosition, shadow: &ShadowPath) -> f64 {
    let mut x = x0;
    for (k, &e) in eta.diffusive.iter().enumerate() {
        if e != 0.0 {
            x += e * (shadow.s_tilde_pre[k + 1] / shadow.s_tilde[k] - 1.0);
        }
    }
    for (j, &e) in eta.at_arrival.iter().enumerate() {
        if e != 0.0 {
            let jump = shadow.at_arrival[j];
            x += e * (jump.at / jump.before - 1.0);
        }
    }
    x
}

/// Feedback target `η̃* = 2ε^{1-ϑ}𝓔_t λ⁽²⁾_t / (ARA(X̃) σ_t²)` on `A1` and
/// `-2ε^{1-ϑ}𝓔_t λ⁽¹⁾_t / (ARA(X̃) σ_t²)` on `A2`, with risk aversion taken
/// at current shadow wealth.
pub fn feedback_policy(shadow_wealth: f64, t: f64, side: Side, config: &ModelConfig) -> f64 {
    let b = boundaries_from(
        config.half_spread(t),
        config.alpha(Side::A1, t),
        config.alpha(Side::A2, t),
        config.sigma.eval(t, config.horizon),
        config.utility.ara(shadow_wealth),
        0.0,
    );
    match side {
        Side::A1 => b.upper,
        Side::A2 => b.lower,
    }
}
