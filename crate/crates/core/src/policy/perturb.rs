//! Competitor strategies for optimality and dominance checks.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use super::{BoundaryPath, Strategy};
use crate::config::Side;
use crate::market::MarketPath;

/// A band policy whose boundaries are rescaled and modulated in time:
/// `β̄'_t = β̄_t · upper_scale · (1 + amplitude · sin(2π frequency t/T + phase))`,
/// likewise for `β̲`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPerturbation {
    pub upper_scale: f64,
    pub lower_scale: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl BandPerturbation {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        BandPerturbation {
            upper_scale: rng.random_range(0.5..1.5),
            lower_scale: rng.random_range(0.5..1.5),
            amplitude: rng.random_range(0.0..0.5),
            frequency: rng.random_range(1..=4) as f64,
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    pub fn apply(&self, base: &BoundaryPath, times: &[f64]) -> BoundaryPath {
        let horizon = *times.last().unwrap_or(&1.0);
        let wobble = |t: f64| 1.0 + self.amplitude * (2.0 * PI * self.frequency * t / horizon + self.phase).sin();
        BoundaryPath {
            upper: base
                .upper
                .iter()
                .zip(times)
                .map(|(u, &t)| u * self.upper_scale * wobble(t))
                .collect(),
            lower: base
                .lower
                .iter()
                .zip(times)
                .map(|(l, &t)| l * self.lower_scale * wobble(t))
                .collect(),
        }
    }
}

/// An arbitrary bounded strategy: occasional market orders to random
/// positions in `[-bound, bound]` and random partial fills at arrivals that
/// never push `|φ S|` past `bound`.
pub fn random_admissible_strategy<R: Rng>(path: &MarketPath, bound: f64, rng: &mut R) -> Strategy {
    let n = path.n_steps();
    let mut s = Strategy::idle(path);
    let trade_prob = rng.random_range(0.0..0.2);
    let mut units = 0.0;
    let (mut cum_buy, mut cum_sell) = (0.0, 0.0);
    let mut next = 0;
    for k in 0..=n {
        if k > 0 && rng.random::<f64>() < trade_prob {
            let target = rng.random_range(-bound..bound) / path.mid_pre[k];
            let d = target - units;
            if d > 0.0 {
                cum_buy += d;
            } else {
                cum_sell -= d;
            }
            units = target;
        }
        s.market_buys[k] = cum_buy;
        s.market_sells[k] = cum_sell;
        while next < path.arrivals.len() && path.arrivals[next].step == k {
            let a = &path.arrivals[next];
            let room = match a.side {
                Side::A1 => (bound / a.pre_mid - units).max(0.0),
                Side::A2 => (units + bound / a.pre_mid).max(0.0),
            };
            let fill = room * rng.random::<f64>();
            s.fill_units[next] = fill;
            units += match a.side {
                Side::A1 => fill,
                Side::A2 => -fill,
            };
            next += 1;
        }
        let m = path.mid[k];
        s.limit_buy_size[k] = (bound / m - units).max(0.0);
        s.limit_sell_size[k] = (units + bound / m).max(0.0);
    }
    s
}
