use super::InventoryPath;
use crate::config::Side;
use crate::market::MarketPath;

/// A unit-denominated trading strategy on a path's grid.
///
/// Market orders counted in `market_buys`/`market_sells` at index `k` execute
/// at `t_k` before the arrivals snapped to `t_k`. Limit quotes at index `k` are
/// those standing after every event at `t_k`; `fill_units[j]` is what the
/// `j`-th merged arrival actually executes (bought for `N⁽¹⁾`, sold for
/// `N⁽²⁾`).
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub market_buys: Vec<f64>,
    pub market_sells: Vec<f64>,
    pub limit_buy_size: Vec<f64>,
    pub limit_sell_size: Vec<f64>,
    pub fill_units: Vec<f64>,
    /// Grid index of a final liquidating market order, after which nothing
    /// trades.
    pub liquidation_step: Option<usize>,
}

impl Strategy {
    /// The strategy that never trades.
    pub fn idle(path: &MarketPath) -> Self {
        let n = path.n_steps() + 1;
        Strategy {
            market_buys: vec![0.0; n],
            market_sells: vec![0.0; n],
            limit_buy_size: vec![0.0; n],
            limit_sell_size: vec![0.0; n],
            fill_units: vec![0.0; path.arrivals.len()],
            liquidation_step: None,
        }
    }

    pub fn market_buy_at(&self, k: usize) -> f64 {
        if k == 0 {
            self.market_buys[0]
        } else {
            self.market_buys[k] - self.market_buys[k - 1]
        }
    }

    pub fn market_sell_at(&self, k: usize) -> f64 {
        if k == 0 {
            self.market_sells[0]
        } else {
            self.market_sells[k] - self.market_sells[k - 1]
        }
    }
}

/// Converts a reflected inventory into market orders (the reflection pushes)
/// and limit orders sized to reach the opposite target.
pub fn strategy_from_inventory(inv: &InventoryPath, path: &MarketPath) -> Strategy {
    let n = path.n_steps();
    let mut s = Strategy::idle(path);
    let (mut cum_buy, mut cum_sell) = (0.0, 0.0);
    let mut units = 0.0;
    let mut next = 0;
    for k in 0..=n {
        if k > 0 {
            let pushed_up = inv.psi_plus[k] > inv.psi_plus[k - 1];
            let pushed_down = inv.psi_minus[k] > inv.psi_minus[k - 1];
            if pushed_up || pushed_down {
                let target = inv.beta_pre[k] / path.mid_pre[k];
                let d = target - units;
                if d > 0.0 {
                    cum_buy += d;
                } else {
                    cum_sell -= d;
                }
                units = target;
            }
        }
        s.market_buys[k] = cum_buy;
        s.market_sells[k] = cum_sell;
        while next < path.arrivals.len() && path.arrivals[next].step == k {
            let a = &path.arrivals[next];
            let target = inv.jump_marks[next].beta_after / a.post_mid;
            s.fill_units[next] = match a.side {
                Side::A1 => (target - units).max(0.0),
                Side::A2 => (units - target).max(0.0),
            };
            units = target;
            next += 1;
        }
        let (lo, up) = (inv.boundaries.lower[k], inv.boundaries.upper[k]);
        s.limit_buy_size[k] = ((up - inv.beta[k]) / path.mid[k]).max(0.0);
        s.limit_sell_size[k] = ((inv.beta[k] - lo) / path.mid[k]).max(0.0);
    }
    s
}
