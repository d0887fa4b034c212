//! Path simulation of the exogenous market: mid price, spread, order arrivals
//! and the side state.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::config::{ModelConfig, Side};
use crate::error::Result;
use crate::grid::{MarketCoefficients, TimeGrid};
use crate::rng::{path_stream, StreamRole};

/// An arrival of an exogenous market order, tagged with the grid point
/// `step` such that `t_{step-1} < time <= t_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub step: usize,
}

/// A merged arrival with the mid price just before and just after its impact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arrival {
    pub time: f64,
    pub step: usize,
    /// `A1` for an `N⁽¹⁾` arrival (the provider's bid is hit), `A2` otherwise.
    pub side: Side,
    pub pre_mid: f64,
    pub post_mid: f64,
}

/// Diffusive mid price by exact log stepping with coefficients frozen at the
/// left grid point. Returns `(mid, dW)`.
pub fn simulate_mid_price<R: Rng>(
    s0: f64,
    sigma: &[f64],
    grid: &TimeGrid,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let dw: Vec<f64> = (0..grid.n_steps)
        .map(|k| {
            let z: f64 = StandardNormal.sample(rng);
            z * grid.dt(k).sqrt()
        })
        .collect();
    (mid_from_increments(s0, sigma, grid, &dw), dw)
}

pub fn mid_from_increments(s0: f64, sigma: &[f64], grid: &TimeGrid, dw: &[f64]) -> Vec<f64> {
    let mut mid = Vec::with_capacity(grid.n_steps + 1);
    let mut s = s0;
    mid.push(s);
    for k in 0..grid.n_steps {
        let sg = sigma[k];
        s *= (sg * dw[k] - 0.5 * sg * sg * grid.dt(k)).exp();
        mid.push(s);
    }
    mid
}

/// Arrival times of one counting process with intensity `rate(t)` on
/// `[0, T]`, by thinning against the constant majorant `rate_max`.
pub fn thinned_arrivals<R: Rng, F: Fn(f64) -> f64>(
    rate: F,
    rate_max: f64,
    grid: &TimeGrid,
    rng: &mut R,
) -> Vec<Jump> {
    let horizon = grid.horizon();
    let mut out = Vec::new();
    if !(rate_max > 0.0) {
        return out;
    }
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / rate_max;
        if t > horizon {
            break;
        }
        let u: f64 = rng.random();
        if u * rate_max < rate(t) {
            out.push(Jump {
                time: t,
                step: grid.containing_step(t),
            });
        }
    }
    out
}

/// Draws both arrival streams from independent sub-streams. A second-stream
/// time coinciding exactly with a first-stream time is discarded by redrawing
/// the whole second stream.
pub fn simulate_arrivals<R: Rng>(
    config: &ModelConfig,
    grid: &TimeGrid,
    rng1: &mut R,
    rng2: &mut R,
) -> (Vec<Jump>, Vec<Jump>) {
    let h = config.horizon;
    let scale = config.epsilon.powf(-config.vartheta);
    let max1 = config.lambda1.sup_bound(h) * scale;
    let max2 = config.lambda2.sup_bound(h) * scale;
    let jumps1 = thinned_arrivals(|t| config.lambda1.eval(t, h) * scale, max1, grid, rng1);
    loop {
        let jumps2 = thinned_arrivals(|t| config.lambda2.eval(t, h) * scale, max2, grid, rng2);
        let collides = jumps2
            .iter()
            .any(|j| jumps1.binary_search_by(|a| a.time.total_cmp(&j.time)).is_ok());
        if !collides {
            return (jumps1, jumps2);
        }
    }
}

fn merge_jumps(jumps1: &[Jump], jumps2: &[Jump]) -> Vec<(Jump, Side)> {
    let mut merged: Vec<(Jump, Side)> = jumps1
        .iter()
        .map(|j| (*j, Side::A1))
        .chain(jumps2.iter().map(|j| (*j, Side::A2)))
        .collect();
    merged.sort_by(|a, b| a.0.time.total_cmp(&b.0.time));
    merged
}

/// `side[k] = A1` iff the most recent arrival strictly before `t_k` came from
/// the first stream; `A2` before any arrival.
pub fn compute_side_state(jumps1: &[Jump], jumps2: &[Jump], grid: &TimeGrid) -> Vec<Side> {
    let merged = merge_jumps(jumps1, jumps2);
    let mut side = Vec::with_capacity(grid.n_steps + 1);
    let mut current = Side::A2;
    let mut next = 0;
    for &tk in &grid.t {
        while next < merged.len() && merged[next].0.time < tk {
            current = merged[next].1;
            next += 1;
        }
        side.push(current);
    }
    side
}

/// Multiplies the mid by `1 - κε` after each first-stream arrival and by
/// `1 + κε` after each second-stream arrival, `ε` taken at the arrival's grid
/// point.
pub fn apply_impact_jumps(
    mid: &[f64],
    jumps1: &[Jump],
    jumps2: &[Jump],
    half_spread: &[f64],
    kappa: f64,
) -> Vec<f64> {
    if kappa == 0.0 {
        return mid.to_vec();
    }
    let merged = merge_jumps(jumps1, jumps2);
    let mut out = Vec::with_capacity(mid.len());
    let mut factor = 1.0;
    let mut next = 0;
    for (k, &m) in mid.iter().enumerate() {
        while next < merged.len() && merged[next].0.step == k {
            let (j, side) = merged[next];
            factor *= impact_factor(side, half_spread[j.step], kappa);
            next += 1;
        }
        out.push(m * factor);
    }
    out
}

pub fn impact_factor(side: Side, half_spread: f64, kappa: f64) -> f64 {
    match side {
        Side::A1 => 1.0 - kappa * half_spread,
        Side::A2 => 1.0 + kappa * half_spread,
    }
}

/// Everything needed to simulate paths for one configuration and grid.
#[derive(Debug, Clone)]
pub struct MarketSetup {
    pub config: ModelConfig,
    pub grid: Arc<TimeGrid>,
    pub coeffs: Arc<MarketCoefficients>,
}

impl MarketSetup {
    pub fn new(config: &ModelConfig, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid::uniform(config.horizon, n_steps)?;
        config.validate_on(&grid)?;
        Ok(Self::from_grid(config, grid))
    }

    /// Skips validation; used for edge cases such as a vanishing intensity.
    pub fn without_validation(config: &ModelConfig, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid::uniform(config.horizon, n_steps)?;
        Ok(Self::from_grid(config, grid))
    }

    fn from_grid(config: &ModelConfig, grid: TimeGrid) -> Self {
        let coeffs = MarketCoefficients::sample(config, &grid);
        MarketSetup {
            config: config.clone(),
            grid: Arc::new(grid),
            coeffs: Arc::new(coeffs),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn simulate_path(&self, seed: u64, path_index: u64) -> MarketPath {
        self.simulate_path_with_substeps(seed, path_index, 1)
    }

    /// Draws `substeps` Gaussian increments per grid step and sums them, so a
    /// grid of `n` steps with `2m` substeps sees exactly the Brownian path of
    /// a grid of `2n` steps with `m` substeps. Arrival streams do not depend
    /// on the grid at all.
    pub fn simulate_path_with_substeps(&self, seed: u64, path_index: u64, substeps: usize) -> MarketPath {
        let mut rw = path_stream(seed, path_index, StreamRole::Brownian);
        let mut r1 = path_stream(seed, path_index, StreamRole::Arrivals1);
        let mut r2 = path_stream(seed, path_index, StreamRole::Arrivals2);
        let dw: Vec<f64> = if substeps <= 1 {
            simulate_mid_price(self.config.s0, &self.coeffs.sigma, &self.grid, &mut rw).1
        } else {
            (0..self.grid.n_steps)
                .map(|k| {
                    let h = (self.grid.dt(k) / substeps as f64).sqrt();
                    (0..substeps)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rw);
                            z * h
                        })
                        .sum()
                })
                .collect()
        };
        let mid = mid_from_increments(self.config.s0, &self.coeffs.sigma, &self.grid, &dw);
        let (jumps1, jumps2) = simulate_arrivals(&self.config, &self.grid, &mut r1, &mut r2);
        self.assemble(dw, mid, jumps1, jumps2)
    }

    /// Builds a path from given Brownian increments and arrival times.
    pub fn path_from_parts(&self, dw: Vec<f64>, times1: &[f64], times2: &[f64]) -> MarketPath {
        let tag = |ts: &[f64]| -> Vec<Jump> {
            let mut v: Vec<Jump> = ts
                .iter()
                .map(|&t| Jump {
                    time: t,
                    step: self.grid.containing_step(t),
                })
                .collect();
            v.sort_by(|a, b| a.time.total_cmp(&b.time));
            v
        };
        let mid = mid_from_increments(self.config.s0, &self.coeffs.sigma, &self.grid, &dw);
        self.assemble(dw, mid, tag(times1), tag(times2))
    }

    fn assemble(&self, dw: Vec<f64>, mid_diffusive: Vec<f64>, jumps1: Vec<Jump>, jumps2: Vec<Jump>) -> MarketPath {
        let n = self.grid.n_steps;
        let kappa = self.config.kappa;
        let merged = merge_jumps(&jumps1, &jumps2);
        let mut arrivals = Vec::with_capacity(merged.len());
        let mut mid = Vec::with_capacity(n + 1);
        let mut mid_pre = Vec::with_capacity(n + 1);
        let mut factor = 1.0;
        let mut next = 0;
        for k in 0..=n {
            let pre = mid_diffusive[k] * factor;
            mid_pre.push(pre);
            let mut s = pre;
            while next < merged.len() && merged[next].0.step == k {
                let (j, side) = merged[next];
                let f = impact_factor(side, self.coeffs.half_spread[k], kappa);
                let post = if kappa == 0.0 { s } else { s * f };
                arrivals.push(Arrival {
                    time: j.time,
                    step: k,
                    side,
                    pre_mid: s,
                    post_mid: post,
                });
                if kappa != 0.0 {
                    factor *= f;
                }
                s = post;
                next += 1;
            }
            mid.push(s);
        }
        let side = compute_side_state(&jumps1, &jumps2, &self.grid);
        MarketPath {
            grid: Arc::clone(&self.grid),
            coeffs: Arc::clone(&self.coeffs),
            dw,
            mid_diffusive,
            mid_pre,
            mid,
            jumps1,
            jumps2,
            arrivals,
            side,
        }
    }
}

/// One simulated realisation of the market.
#[derive(Debug, Clone)]
pub struct MarketPath {
    pub grid: Arc<TimeGrid>,
    pub coeffs: Arc<MarketCoefficients>,
    pub dw: Vec<f64>,
    /// Mid price without impact jumps.
    pub mid_diffusive: Vec<f64>,
    /// Mid at `t_k` before the arrivals snapped to `t_k` act.
    pub mid_pre: Vec<f64>,
    /// Mid at `t_k` after all arrivals snapped to `t_k`.
    pub mid: Vec<f64>,
    pub jumps1: Vec<Jump>,
    pub jumps2: Vec<Jump>,
    /// Both streams merged in time order.
    pub arrivals: Vec<Arrival>,
    pub side: Vec<Side>,
}

impl MarketPath {
    pub fn half_spread(&self) -> &[f64] {
        &self.coeffs.half_spread
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    /// Range of indices into `arrivals` snapped to each grid point.
    pub fn arrivals_by_step(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.grid.n_steps;
        let mut ranges = Vec::with_capacity(n + 1);
        let mut start = 0;
        for k in 0..=n {
            let mut end = start;
            while end < self.arrivals.len() && self.arrivals[end].step == k {
                end += 1;
            }
            ranges.push(start..end);
            start = end;
        }
        ranges
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Coefficient;
    use crate::stats::mean_and_se;

    #[test]
    fn zero_volatility_freezes_mid() {
        let cfg = ModelConfig {
            sigma: Coefficient::Constant(0.0),
            ..ModelConfig::symmetric_benchmark(0.01)
        };
        let setup = MarketSetup::without_validation(&cfg, 64).unwrap();
        let path = setup.simulate_path(1, 0);
        assert!(path.mid_diffusive.iter().all(|&s| s == cfg.s0));
    }

    #[test]
    fn mid_is_a_martingale_with_unit_log_variance() {
        let cfg = ModelConfig {
            s0: 1.0,
            ..ModelConfig::symmetric_benchmark(0.01)
        };
        let setup = MarketSetup::new(&cfg, 8).unwrap();
        let n = 100_000u64;
        let mut terminal = Vec::with_capacity(n as usize);
        let mut logs = Vec::with_capacity(n as usize);
        for i in 0..n {
            let mut rng = path_stream(11, i, StreamRole::Brownian);
            let (mid, _) = simulate_mid_price(1.0, &setup.coeffs.sigma, &setup.grid, &mut rng);
            terminal.push(mid[8]);
            logs.push(mid[8].ln());
        }
        let (m, se) = mean_and_se(&terminal);
        assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
        // Var(log S_T) = 1; the sample variance has standard error ≈ √(2/n).
        let (lm, _) = mean_and_se(&logs);
        let var = logs.iter().map(|x| (x - lm).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn zero_intensity_gives_no_arrivals() {
        let cfg = ModelConfig {
            lambda1: Coefficient::Constant(0.0),
            ..ModelConfig::symmetric_benchmark(0.01)
        };
        let setup = MarketSetup::without_validation(&cfg, 16).unwrap();
        for i in 0..50 {
            let p = setup.simulate_path(3, i);
            assert!(p.jumps1.is_empty());
            assert!(!p.jumps2.is_empty() || i > 0);
        }
    }

    #[test]
    fn poisson_counts_have_expected_moments() {
        let cfg = ModelConfig::symmetric_benchmark(0.01);
        let setup = MarketSetup::new(&cfg, 16).unwrap();
        let counts: Vec<f64> = (0..10_000)
            .map(|i| setup.simulate_path(5, i).jumps1.len() as f64)
            .collect();
        let (m, se) = mean_and_se(&counts);
        assert!((m - 10.0).abs() < 3.0 * se, "mean {m}");
        let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / 9_999.0;
        // Var of the sample variance of Poisson(μ) ≈ (μ + 2μ²)/n.
        let se_var = ((10.0 + 200.0) / 10_000.0f64).sqrt();
        assert!((var - 10.0).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn streams_disjoint_and_tagged() {
        let setup = MarketSetup::new(&ModelConfig::symmetric_benchmark(0.001), 100).unwrap();
        for i in 0..200 {
            let p = setup.simulate_path(9, i);
            for j in &p.jumps2 {
                assert!(p.jumps1.iter().all(|a| a.time != j.time));
            }
            for j in p.jumps1.iter().chain(&p.jumps2) {
                assert!(p.grid.t[j.step - 1] < j.time && j.time <= p.grid.t[j.step]);
            }
            assert!(p.arrivals.windows(2).all(|w| w[0].time < w[1].time));
        }
    }

    #[test]
    fn side_state_convention() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let none = compute_side_state(&[], &[], &grid);
        assert!(none.iter().all(|&s| s == Side::A2));
        let j1 = [Jump { time: 0.3, step: 3 }];
        let side = compute_side_state(&j1, &[], &grid);
        for (k, s) in side.iter().enumerate() {
            let expect = if grid.t[k] > 0.3 { Side::A1 } else { Side::A2 };
            assert_eq!(*s, expect, "k = {k}");
        }
    }

    #[test]
    fn symmetric_side_fraction_is_one_half() {
        let cfg = ModelConfig::symmetric_benchmark(0.01);
        let setup = MarketSetup::new(&cfg, 200).unwrap();
        let fr: Vec<f64> = (0..4000)
            .map(|i| {
                let p = setup.simulate_path(21, i);
                // discard the start-up interval before the chain mixes
                let tail = &p.side[100..];
                tail.iter().filter(|&&s| s == Side::A1).count() as f64 / tail.len() as f64
            })
            .collect();
        let (m, se) = mean_and_se(&fr);
        assert!((m - 0.5).abs() < 3.0 * se, "fraction {m} se {se}");
    }

    #[test]
    fn impact_jumps() {
        let j2 = [Jump { time: 0.5, step: 1 }];
        let out = apply_impact_jumps(&[100.0, 100.0], &[], &j2, &[0.01, 0.01], 0.5);
        assert!((out[1] - 100.5).abs() < 1e-12);
        assert_eq!(out[0], 100.0);
        let same = apply_impact_jumps(&[100.0, 101.0], &[], &j2, &[0.01, 0.01], 0.0);
        assert_eq!(same, vec![100.0, 101.0]);
        let j1 = [Jump { time: 0.2, step: 1 }];
        let j2 = [Jump { time: 0.7, step: 2 }];
        let out = apply_impact_jumps(&[1.0, 1.0, 1.0], &j1, &j2, &[0.1; 3], 0.5);
        assert!((out[2] - 0.95 * 1.05).abs() < 1e-15);
        assert!(out[2] < 1.0);
    }

    #[test]
    fn path_mid_matches_impact_transform() {
        let cfg = ModelConfig::symmetric_benchmark(0.02).with_kappa(0.4);
        let setup = MarketSetup::new(&cfg, 128).unwrap();
        let p = setup.simulate_path(2, 7);
        let direct = apply_impact_jumps(&p.mid_diffusive, &p.jumps1, &p.jumps2, p.half_spread(), 0.4);
        for (a, b) in p.mid.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn substeps_share_the_fine_brownian_path() {
        let cfg = ModelConfig::symmetric_benchmark(0.01);
        let fine = MarketSetup::new(&cfg, 64).unwrap();
        let coarse = MarketSetup::new(&cfg, 32).unwrap();
        let a = fine.simulate_path_with_substeps(3, 5, 2);
        let b = coarse.simulate_path_with_substeps(3, 5, 4);
        let c = fine.simulate_path_with_substeps(3, 5, 1);
        assert!((a.mid[64] - b.mid[32]).abs() < 1e-12 * a.mid[64]);
        assert_eq!(a.jumps1, c.jumps1);
        assert_eq!(c.dw, fine.simulate_path(3, 5).dw);
    }

    #[test]
    fn refinement_with_aggregated_increments() {
        let cfg = ModelConfig::symmetric_benchmark(0.01);
        let fine = MarketSetup::new(&cfg, 256).unwrap();
        let coarse = MarketSetup::new(&cfg, 128).unwrap();
        let p = fine.simulate_path(4, 0);
        let dw: Vec<f64> = p.dw.chunks(2).map(|c| c[0] + c[1]).collect();
        let q = coarse.path_from_parts(dw, &[], &[]);
        let a = p.mid_diffusive[256];
        let b = q.mid_diffusive[128];
        assert!((a - b).abs() <= 1e-12 * a);
    }
}
