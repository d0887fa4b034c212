use super::{Action, DiscreteInstance};
use crate::error::{Error, Result};

/// Terminal wealth of a one-period instance for one action and outcome.
/// `arrivals` lists the executed sides in order: `true` for the buy side.
fn terminal_wealth(inst: &DiscreteInstance, a: Action, up: bool, arrivals: &[bool]) -> f64 {
    let eps = inst.half_spread;
    let unit = inst.grid_step / inst.s0;
    let mut price = inst.s0;
    let mut units = 0.0;
    let mut cash = inst.x0;
    // market order at the quote that pays the spread
    let target = a.market as f64 * unit;
    let traded = target - units;
    cash -= traded * price + eps * traded.abs() * price;
    units = target;
    for &buy_side in arrivals {
        if buy_side {
            let want = a.buy as f64 * unit;
            if want > units {
                cash -= (want - units) * (1.0 - eps) * price;
                units = want;
            }
            price *= 1.0 - inst.kappa * eps;
        } else {
            let want = a.sell as f64 * unit;
            if want < units {
                cash += (units - want) * (1.0 + eps) * price;
                units = want;
            }
            price *= 1.0 + inst.kappa * eps;
        }
    }
    price *= if up { inst.up } else { inst.down };
    let quote = if units >= 0.0 { 1.0 - eps } else { 1.0 + eps };
    cash + units * quote * price
}

fn expected_utility(inst: &DiscreteInstance, a: Action) -> f64 {
    let (p1, p2) = (inst.fill_prob1, inst.fill_prob2);
    let u = |up: bool, arr: &[bool]| inst.utility.value(terminal_wealth(inst, a, up, arr));
    let mut total = 0.0;
    for up in [true, false] {
        let outcomes = [
            ((1.0 - p1) * (1.0 - p2), u(up, &[])),
            (p1 * (1.0 - p2), u(up, &[true])),
            ((1.0 - p1) * p2, u(up, &[false])),
            (0.5 * p1 * p2, u(up, &[true, false])),
            (0.5 * p1 * p2, u(up, &[false, true])),
        ];
        total += 0.5 * outcomes.iter().map(|(p, v)| p * v).sum::<f64>();
    }
    total
}

/// Scans every action of a one-period instance in the same canonical order
/// as the backward induction and returns the best with its expected utility.
pub fn enumerate_one_period(instance: &DiscreteInstance) -> Result<(Action, f64)> {
    if instance.n_periods != 1 {
        return Err(Error::InvalidArgument(format!(
            "enumeration needs a one-period instance, got {} periods",
            instance.n_periods
        )));
    }
    let m = instance.grid_points as i32;
    let mut markets: Vec<i32> = (-m..=m).collect();
    markets.sort_by_key(|&x| (x.abs(), x));
    let mut best = (Action { market: 0, buy: -m, sell: m }, f64::NEG_INFINITY);
    for &market in &markets {
        for buy in -m..=m {
            for sell in (-m..=m).rev() {
                let a = Action { market, buy, sell };
                let v = expected_utility(instance, a);
                if best.1 == f64::NEG_INFINITY || v > best.1 + 1e-12 * best.1.abs() {
                    best = (a, v);
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Coefficient, ModelConfig};
    use crate::oracle::discretize_instance;

    fn instance(eps: f64) -> DiscreteInstance {
        let cfg = ModelConfig {
            sigma: Coefficient::Constant(0.3),
            ..ModelConfig::symmetric_benchmark(eps)
        };
        let step = if eps == 0.0 { 0.05 } else { 2.0 * eps.sqrt() / 0.09 / 4.0 };
        let mut inst = discretize_instance(&cfg, 1, step).unwrap();
        if eps == 0.0 {
            inst.fill_prob1 = 0.4;
            inst.fill_prob2 = 0.4;
        }
        inst.with_bound(6)
    }

    #[test]
    fn no_spread_no_position() {
        let (a, v) = enumerate_one_period(&instance(0.0)).unwrap();
        assert_eq!(a.market, 0);
        assert!(a.buy <= 0 && a.sell >= 0);
        assert!((v + 1.0).abs() < 1e-15);
    }

    #[test]
    fn wider_bound_keeps_interior_optimum() {
        let inst = instance(0.04);
        let (a, _) = enumerate_one_period(&inst).unwrap();
        assert!(a.buy.abs() < inst.grid_points as i32 && a.sell.abs() < inst.grid_points as i32);
        let (b, _) = enumerate_one_period(&inst.with_bound(inst.grid_points + 4)).unwrap();
        assert_eq!((a.market, a.buy, a.sell), (b.market, b.buy, b.sell));
    }

    #[test]
    fn rejects_longer_instances() {
        let cfg = ModelConfig::symmetric_benchmark(0.04);
        assert!(enumerate_one_period(&discretize_instance(&cfg, 4, 0.1).unwrap()).is_err());
    }
}
