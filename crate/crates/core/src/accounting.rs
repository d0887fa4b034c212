//! Self-financing bookkeeping in the limit order market.

use serde::Serialize;

use crate::config::Side;
use crate::market::MarketPath;
use crate::policy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeKind {
    MarketBuy,
    MarketSell,
    LimitBuyFill,
    LimitSellFill,
    Liquidation,
}

impl TradeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TradeKind::MarketBuy => "market_buy",
            TradeKind::MarketSell => "market_sell",
            TradeKind::LimitBuyFill => "limit_buy_fill",
            TradeKind::LimitSellFill => "limit_sell_fill",
            TradeKind::Liquidation => "liquidation",
        }
    }
}

/// One execution. `units` is signed: positive for purchases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trade {
    pub time: f64,
    pub step: usize,
    pub kind: TradeKind,
    pub units: f64,
    pub price: f64,
    pub cash_after: f64,
    pub units_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioLedger {
    pub x0: f64,
    /// Cash `φ⁰` at `t_k` after every event at `t_k`.
    pub cash: Vec<f64>,
    /// Units `φ` at `t_k` after every event at `t_k`.
    pub units: Vec<f64>,
    pub trades: Vec<Trade>,
    /// Liquidation wealth `X̂` at every grid point.
    pub liquidation_wealth: Vec<f64>,
    /// Mid price the ledger marks against (impact included).
    pub mid: Vec<f64>,
}

/// Cash plus the position marked at the bid when long and at the ask when
/// short.
pub fn liquidation_value(cash: f64, units: f64, mid: f64, half_spread: f64) -> f64 {
    if units >= 0.0 {
        cash + units * (1.0 - half_spread) * mid
    } else {
        cash + units * (1.0 + half_spread) * mid
    }
}

trait Recorder {
    fn trade(&mut self, trade: Trade);
    fn grid_point(&mut self, cash: f64, units: f64, wealth: f64);
}

struct Discard;

impl Recorder for Discard {
    fn trade(&mut self, _: Trade) {}
    fn grid_point(&mut self, _: f64, _: f64, _: f64) {}
}

impl Recorder for PortfolioLedger {
    fn trade(&mut self, trade: Trade) {
        self.trades.push(trade);
    }
    fn grid_point(&mut self, cash: f64, units: f64, wealth: f64) {
        self.cash.push(cash);
        self.units.push(units);
        self.liquidation_wealth.push(wealth);
    }
}

/// Executes `strategy` along `path` and returns final `(cash, units)`.
fn execute<R: Recorder>(strategy: &Strategy, path: &MarketPath, x0: f64, rec: &mut R) -> (f64, f64) {
    let eps = path.half_spread();
    let mut cash = x0;
    let mut units = 0.0;
    let mut next = 0;
    for k in 0..=path.n_steps() {
        let t = path.grid.t[k];
        if strategy.liquidation_step == Some(k) {
            // closes the position exactly, whatever the cumulative counters say
            if units != 0.0 {
                let d = -units;
                let price = if d > 0.0 { 1.0 + eps[k] } else { 1.0 - eps[k] } * path.mid_pre[k];
                cash -= d * price;
                units = 0.0;
                rec.trade(Trade {
                    time: t,
                    step: k,
                    kind: TradeKind::Liquidation,
                    units: d,
                    price,
                    cash_after: cash,
                    units_after: units,
                });
            }
        } else {
            let buy = strategy.market_buy_at(k);
            if buy != 0.0 {
                let price = (1.0 + eps[k]) * path.mid_pre[k];
                cash -= buy * price;
                units += buy;
                rec.trade(Trade {
                    time: t,
                    step: k,
                    kind: TradeKind::MarketBuy,
                    units: buy,
                    price,
                    cash_after: cash,
                    units_after: units,
                });
            }
            let sell = strategy.market_sell_at(k);
            if sell != 0.0 {
                let price = (1.0 - eps[k]) * path.mid_pre[k];
                cash += sell * price;
                units -= sell;
                rec.trade(Trade {
                    time: t,
                    step: k,
                    kind: TradeKind::MarketSell,
                    units: -sell,
                    price,
                    cash_after: cash,
                    units_after: units,
                });
            }
        }
        while next < path.arrivals.len() && path.arrivals[next].step == k {
            let a = &path.arrivals[next];
            let size = strategy.fill_units[next];
            if size != 0.0 {
                let (price, signed, kind) = match a.side {
                    Side::A1 => ((1.0 - eps[k]) * a.pre_mid, size, TradeKind::LimitBuyFill),
                    Side::A2 => ((1.0 + eps[k]) * a.pre_mid, -size, TradeKind::LimitSellFill),
                };
                cash -= signed * price;
                units += signed;
                rec.trade(Trade {
                    time: a.time,
                    step: k,
                    kind,
                    units: signed,
                    price,
                    cash_after: cash,
                    units_after: units,
                });
            }
            next += 1;
        }
        rec.grid_point(cash, units, liquidation_value(cash, units, path.mid[k], eps[k]));
    }
    (cash, units)
}

pub fn evolve_portfolio(strategy: &Strategy, path: &MarketPath, x0: f64) -> PortfolioLedger {
    let n = path.n_steps() + 1;
    let mut ledger = PortfolioLedger {
        x0,
        cash: Vec::with_capacity(n),
        units: Vec::with_capacity(n),
        trades: Vec::new(),
        liquidation_wealth: Vec::with_capacity(n),
        mid: path.mid.clone(),
    };
    execute(strategy, path, x0, &mut ledger);
    ledger
}

/// Terminal liquidation wealth without building a ledger; bit-identical to
/// the last entry of [`evolve_portfolio`].
pub fn terminal_liquidation_wealth(strategy: &Strategy, path: &MarketPath, x0: f64) -> f64 {
    let (cash, units) = execute(strategy, path, x0, &mut Discard);
    let n = path.n_steps();
    liquidation_value(cash, units, path.mid[n], path.half_spread()[n])
}

/// Liquidation wealth of a ledger at grid index `k`.
pub fn liquidation_wealth(ledger: &PortfolioLedger, path: &MarketPath, k: usize) -> f64 {
    liquidation_value(ledger.cash[k], ledger.units[k], path.mid[k], path.half_spread()[k])
}

impl PortfolioLedger {
    /// Rebuilds cash after each trade from the log alone.
    pub fn replay_cash(&self) -> Vec<f64> {
        let mut cash = self.x0;
        self.trades
            .iter()
            .map(|t| {
                cash -= t.units * t.price;
                cash
            })
            .collect()
    }

    pub fn max_abs_exposure(&self) -> f64 {
        self.units
            .iter()
            .zip(&self.mid)
            .fold(0.0, |m, (u, s)| m.max((u * s).abs()))
    }

    pub fn terminal_wealth(&self) -> f64 {
        *self.liquidation_wealth.last().expect("ledger has grid points")
    }
}
