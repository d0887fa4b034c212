use rayon::prelude::*;

use super::{Action, DPResult, DiscreteInstance, PolicyEntry, PriceNode};
use crate::config::Side;
use crate::error::Result;

/// How continuation values depend on wealth.
#[derive(Clone, Copy)]
enum WealthModel {
    /// `V(state, w) = e^{-c w} · V̂(state)`; one entry per state.
    Exponential { c: f64 },
    /// `V(state, ·)` tabulated on `x₀ + (i - half)·step`, linear in between.
    Buckets { x0: f64, step: f64, half: usize },
}

impl WealthModel {
    fn width(&self) -> usize {
        match self {
            WealthModel::Exponential { .. } => 1,
            WealthModel::Buckets { half, .. } => 2 * half + 1,
        }
    }

    fn wealth(&self, bucket: usize) -> f64 {
        match *self {
            WealthModel::Exponential { .. } => 0.0,
            WealthModel::Buckets { x0, step, half } => x0 + (bucket as f64 - half as f64) * step,
        }
    }

    /// Value of reaching the state whose row is `row` with wealth raised by
    /// `dw` from bucket `bucket`.
    fn continuation(&self, row: &[f64], bucket: usize, dw: f64) -> f64 {
        match *self {
            WealthModel::Exponential { c } => (-c * dw).exp() * row[0],
            WealthModel::Buckets { step, half, .. } => {
                let t = bucket as f64 + dw / step;
                let last = 2 * half;
                let i0 = (t.floor().max(0.0) as usize).min(last - 1);
                let frac = t - i0 as f64;
                row[i0] + frac * (row[i0 + 1] - row[i0])
            }
        }
    }
}

/// Value table of one period, laid out `[side][node][position][bucket]`.
struct Table {
    nodes: usize,
    grid: usize,
    width: usize,
    values: Vec<f64>,
}

impl Table {
    fn row_start(&self, side: Side, node: usize, pos: usize) -> usize {
        ((side.index() * self.nodes + node) * self.grid + pos) * self.width
    }

    fn row(&self, side: Side, node: usize, pos: usize) -> &[f64] {
        let s = self.row_start(side, node, pos);
        &self.values[s..s + self.width]
    }
}

const SIDES: [Side; 2] = [Side::A1, Side::A2];

struct Solver<'a> {
    inst: &'a DiscreteInstance,
    model: WealthModel,
    m: i32,
}

impl Solver<'_> {
    fn pos_index(&self, i: i32) -> usize {
        (i + self.m) as usize
    }

    /// Expected continuation value of `action` from the given state.
    #[allow(clippy::too_many_arguments)]
    fn action_value(&self, next: &Table, period: usize, side: Side, node: PriceNode, pos: i32, bucket: usize, a: Action) -> f64 {
        let inst = self.inst;
        let eps = inst.half_spread;
        let ke = inst.kappa * eps;
        let unit = inst.unit_step();
        let tracked = inst.impact_levels(period + 1) > 1;
        let s = inst.price(period, node);
        let dw_market = -eps * ((a.market - pos).abs() as f64) * unit * s;
        let (p1, p2) = (inst.fill_prob1, inst.fill_prob2);
        // runs the arrivals in `order`, then the price move, and returns the
        // continuation value
        let run = |order: &[Side]| -> f64 {
            let mut x = a.market;
            let mut price = s;
            let mut nd = node;
            let mut sd = side;
            let mut dw = dw_market;
            for &arr in order {
                match arr {
                    Side::A1 => {
                        let new = x.max(a.buy);
                        dw += eps * (new - x) as f64 * unit * price;
                        x = new;
                        let after = price * (1.0 - ke);
                        dw += x as f64 * unit * (after - price);
                        price = after;
                        if tracked {
                            nd.buy_impacts += 1;
                        }
                    }
                    Side::A2 => {
                        let new = x.min(a.sell);
                        dw += eps * (x - new) as f64 * unit * price;
                        x = new;
                        let after = price * (1.0 + ke);
                        dw += x as f64 * unit * (after - price);
                        price = after;
                        if tracked {
                            nd.sell_impacts += 1;
                        }
                    }
                }
                sd = arr;
            }
            let units = x as f64 * unit;
            let pos = self.pos_index(x);
            let up_node = PriceNode { ups: nd.ups + 1, ..nd };
            let v_up = self.model.continuation(
                next.row(sd, inst.node_index(period + 1, up_node), pos),
                bucket,
                dw + units * price * (inst.up - 1.0),
            );
            let v_down = self.model.continuation(
                next.row(sd, inst.node_index(period + 1, nd), pos),
                bucket,
                dw + units * price * (inst.down - 1.0),
            );
            0.5 * (v_up + v_down)
        };
        let mut total = (1.0 - p1) * (1.0 - p2) * run(&[]);
        if p1 > 0.0 {
            total += p1 * (1.0 - p2) * run(&[Side::A1]);
        }
        if p2 > 0.0 {
            total += (1.0 - p1) * p2 * run(&[Side::A2]);
        }
        if p1 > 0.0 && p2 > 0.0 {
            total += p1 * p2 * 0.5 * (run(&[Side::A1, Side::A2]) + run(&[Side::A2, Side::A1]));
        }
        total
    }

    /// Best action in canonical order: market target by distance from the
    /// current position (smaller index first on ties), buy target upward from
    /// "never", sell target downward from "never". Later actions replace the
    /// incumbent only on a strict relative improvement above 1e-12.
    #[allow(clippy::too_many_arguments)]
    fn best_action(&self, next: &Table, period: usize, side: Side, node: PriceNode, pos: i32, bucket: usize) -> (f64, Action) {
        let m = self.m;
        let mut markets: Vec<i32> = (-m..=m).collect();
        markets.sort_by_key(|&x| ((x - pos).abs(), x));
        let mut best = (f64::NEG_INFINITY, Action { market: pos, buy: -m, sell: m });
        for &mk in &markets {
            for buy in -m..=m {
                for sell in (-m..=m).rev() {
                    let a = Action { market: mk, buy, sell };
                    let v = self.action_value(next, period, side, node, pos, bucket, a);
                    if best.0 == f64::NEG_INFINITY || v > best.0 + 1e-12 * best.0.abs() {
                        best = (v, a);
                    }
                }
            }
        }
        best
    }

    fn terminal(&self) -> Table {
        let inst = self.inst;
        let n = inst.n_periods;
        let nodes = inst.node_count(n);
        let grid = inst.grid_len();
        let width = self.model.width();
        let mut values = Vec::with_capacity(2 * nodes * grid * width);
        for _side in SIDES {
            for node in 0..nodes {
                let s = inst.price(n, inst.node_at(n, node));
                for i in -self.m..=self.m {
                    let cost = inst.half_spread * (i.abs() as f64) * inst.unit_step() * s;
                    for b in 0..width {
                        values.push(match self.model {
                            WealthModel::Exponential { c } => -(c * cost).exp(),
                            WealthModel::Buckets { .. } => inst.utility.value(self.model.wealth(b) - cost),
                        });
                    }
                }
            }
        }
        Table {
            nodes,
            grid,
            width,
            values,
        }
    }

    /// Backward induction. With `optimize` false the candidate action is
    /// forced everywhere. Returns the period-0 table and, when optimizing,
    /// the policy entries of every state.
    fn solve(&self, optimize: bool) -> (Table, Vec<PolicyEntry>) {
        let inst = self.inst;
        let grid = inst.grid_len();
        let width = self.model.width();
        let mut next = self.terminal();
        let mut entries = Vec::new();
        for period in (0..inst.n_periods).rev() {
            let nodes = inst.node_count(period);
            let n_states = 2 * nodes * grid * width;
            let cells: Vec<(f64, Action)> = (0..n_states)
                .into_par_iter()
                .map(|flat| {
                    let bucket = flat % width;
                    let pos = ((flat / width) % grid) as i32 - self.m;
                    let node_idx = (flat / (width * grid)) % nodes;
                    let side = SIDES[flat / (width * grid * nodes)];
                    let node = inst.node_at(period, node_idx);
                    if optimize {
                        self.best_action(&next, period, side, node, pos, bucket)
                    } else {
                        let a = inst.candidate_action(pos, inst.price(period, node));
                        (self.action_value(&next, period, side, node, pos, bucket, a), a)
                    }
                })
                .collect();
            if optimize {
                for (flat, (_, a)) in cells.iter().enumerate() {
                    entries.push(PolicyEntry {
                        period,
                        side: SIDES[flat / (width * grid * nodes)],
                        position_index: ((flat / width) % grid) as i32 - self.m,
                        price_node: inst.node_at(period, (flat / (width * grid)) % nodes),
                        wealth_bucket: flat % width,
                        action: *a,
                    });
                }
            }
            next = Table {
                nodes,
                grid,
                width,
                values: cells.into_iter().map(|(v, _)| v).collect(),
            };
        }
        entries.sort_by_key(|e| e.period);
        (next, entries)
    }

    fn root_value(&self, table: &Table) -> f64 {
        let row = table.row(Side::A2, 0, self.pos_index(0));
        match self.model {
            WealthModel::Exponential { c } => (-c * self.inst.x0).exp() * row[0],
            WealthModel::Buckets { half, .. } => row[half],
        }
    }
}

/// Exact optimal expected utility of the instance by exhaustive backward
/// induction over (period, side, price node, position, wealth bucket), and
/// the expected utility of the candidate policy on the same tree.
///
/// The start state is period 0, side `A2`, no position, wealth `x₀`.
pub fn dp_optimal_utility(instance: &DiscreteInstance) -> Result<DPResult> {
    instance.validate()?;
    let entries = instance.check_state_space()?;
    let model = match instance.utility {
        crate::utility::UtilitySpec::Exponential { risk_aversion } => WealthModel::Exponential { c: risk_aversion },
        _ => WealthModel::Buckets {
            x0: instance.x0,
            step: instance.wealth_step.unwrap_or_else(|| instance.default_wealth_step()),
            half: instance.wealth_half_buckets(),
        },
    };
    let solver = Solver {
        inst: instance,
        model,
        m: instance.grid_points as i32,
    };
    let (opt_table, policy) = solver.solve(true);
    let (cand_table, _) = solver.solve(false);
    let optimal_value = solver.root_value(&opt_table);
    let candidate_value = solver.root_value(&cand_table);
    let root_bucket = match model {
        WealthModel::Exponential { .. } => 0,
        WealthModel::Buckets { half, .. } => half,
    };
    let root_action = policy
        .iter()
        .find(|e| {
            e.period == 0 && e.side == Side::A2 && e.position_index == 0 && e.wealth_bucket == root_bucket
        })
        .map(|e| e.action)
        .expect("root state is in the table");
    Ok(DPResult {
        optimal_value,
        optimal_policy: policy,
        candidate_value,
        gap: optimal_value - candidate_value,
        root_action,
        state_entries: entries,
    })
}
