use super::{BoundaryPath, Strategy};
use crate::config::Side;
use crate::market::MarketPath;

#[derive(Debug, Clone)]
pub struct ImpactOutcome {
    pub strategy: Strategy,
    pub stop_time: Option<f64>,
    /// Monetary position `φ S` at `t_k` after every event at `t_k`.
    pub beta: Vec<f64>,
}

/// Limit orders only: the position floats with the mid between arrivals and
/// is reset to the target at each fill. If the position leaves
/// `[2β̲_t, 2β̄_t]` it is liquidated by one market order and trading stops.
pub fn impact_policy(path: &MarketPath, boundaries: &BoundaryPath) -> ImpactOutcome {
    let n = path.n_steps();
    let mut s = Strategy::idle(path);
    let mut beta = Vec::with_capacity(n + 1);
    let mut units = 0.0;
    let (mut cum_buy, mut cum_sell) = (0.0, 0.0);
    let mut stop: Option<usize> = None;
    let mut next = 0;
    for k in 0..=n {
        let (lo, up) = (boundaries.lower[k], boundaries.upper[k]);
        if stop.is_none() {
            let pre = units * path.mid_pre[k];
            if pre > 2.0 * up || pre < 2.0 * lo {
                if units > 0.0 {
                    cum_sell += units;
                } else {
                    cum_buy -= units;
                }
                units = 0.0;
                stop = Some(k);
            }
        }
        s.market_buys[k] = cum_buy;
        s.market_sells[k] = cum_sell;
        while next < path.arrivals.len() && path.arrivals[next].step == k {
            if stop.is_none() {
                let a = &path.arrivals[next];
                let fill = match a.side {
                    Side::A1 => (up / a.post_mid - units).max(0.0),
                    Side::A2 => (units - lo / a.post_mid).max(0.0),
                };
                s.fill_units[next] = fill;
                units += match a.side {
                    Side::A1 => fill,
                    Side::A2 => -fill,
                };
            }
            next += 1;
        }
        let m = path.mid[k];
        beta.push(units * m);
        if stop.is_none() {
            s.limit_buy_size[k] = ((up - units * m) / m).max(0.0);
            s.limit_sell_size[k] = ((units * m - lo) / m).max(0.0);
        }
    }
    s.liquidation_step = stop;
    ImpactOutcome {
        strategy: s,
        stop_time: stop.map(|k| path.grid.t[k]),
        beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Coefficient, ModelConfig};
    use crate::market::MarketSetup;

    #[test]
    fn quiet_path_never_stops() {
        let cfg = ModelConfig {
            sigma: Coefficient::Constant(1e-3),
            ..ModelConfig::symmetric_benchmark(0.01).with_kappa(0.5)
        };
        let s = MarketSetup::new(&cfg, 64).unwrap();
        let b = BoundaryPath::for_setup(&s);
        let p = s.path_from_parts(s.simulate_path(1, 0).dw, &[], &[]);
        let out = impact_policy(&p, &b);
        assert!(out.stop_time.is_none());
        assert!(out.strategy.market_buys.iter().all(|&v| v == 0.0));
        assert!(out.strategy.market_sells.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forced_trigger_flattens_and_freezes() {
        let cfg = ModelConfig::symmetric_benchmark(0.02).with_kappa(0.5);
        let s = MarketSetup::new(&cfg, 100).unwrap();
        let mut b = BoundaryPath::for_setup(&s);
        for k in 60..=100 {
            b.upper[k] = 0.0;
            b.lower[k] = 0.0;
        }
        let p = s.path_from_parts(s.simulate_path(2, 0).dw, &[0.1, 0.7], &[0.8]);
        let out = impact_policy(&p, &b);
        assert_eq!(out.stop_time, Some(p.grid.t[60]));
        for k in 60..=100 {
            assert_eq!(out.beta[k], 0.0);
            assert_eq!(out.strategy.limit_buy_size[k], 0.0);
            assert_eq!(out.strategy.limit_sell_size[k], 0.0);
        }
        assert_eq!(out.strategy.fill_units[1], 0.0);
        assert_eq!(out.strategy.fill_units[2], 0.0);
        assert!(out.strategy.market_sell_at(60) > 0.0);
    }

    #[test]
    fn fills_reach_targets_at_post_impact_mid() {
        let cfg = ModelConfig::symmetric_benchmark(0.02).with_kappa(0.5);
        let s = MarketSetup::new(&cfg, 100).unwrap();
        let b = BoundaryPath::for_setup(&s);
        let p = s.path_from_parts(vec![0.0; 100], &[0.3], &[0.6]);
        let out = impact_policy(&p, &b);
        assert!((out.beta[30] - b.upper[30]).abs() < 1e-15);
        assert!((out.beta[60] - b.lower[60]).abs() < 1e-15);
    }
}
