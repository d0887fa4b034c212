use serde::Serialize;

use crate::config::{ModelConfig, Side};
use crate::error::Result;
use crate::grid::{MarketCoefficients, TimeGrid};
use crate::market::{simulate_arrivals, Jump};
use crate::policy::BoundaryPath;
use crate::rng::{path_stream, StreamRole};
use crate::stats::mean_and_se;

use super::parallel_map;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareEstimate {
    pub ce: f64,
    /// Zero when the closed form applies.
    pub std_error: f64,
    pub closed_form: bool,
}

/// Per-unit-time certainty-equivalent gain `(ARA/2)·β²·σ²` on each side,
/// with degenerate boundaries clamped to zero.
fn gain_rates(coeffs: &MarketCoefficients, ara: f64, kappa: f64) -> (Vec<f64>, Vec<f64>) {
    let b = BoundaryPath::from_coefficients(coeffs, ara, kappa);
    let rate = |beta: &[f64]| -> Vec<f64> {
        beta.iter()
            .zip(&coeffs.sigma)
            .map(|(x, s)| 0.5 * ara * x * x * s * s)
            .collect()
    };
    (rate(&b.upper), rate(&b.lower))
}

/// `x₀ + (ε^{2(1-ϑ)}/ARA(x₀))·E[∫₀ᵀ (2𝓔²λ⁽²⁾²/σ²·1_{A1} + 2𝓔²λ⁽¹⁾²/σ²·1_{A2}) dt]`,
/// with the boundaries of the impact model substituted when `κ > 0`.
///
/// Constant coefficients use the stationary closed form
/// `x₀ + 2λ⁽¹⁾λ⁽²⁾T ε^{2(1-ϑ)}/(ARA σ²)`. Otherwise the side process alone is
/// simulated on `n_paths` paths, with the coefficients frozen at the left
/// point of each of `n_steps` cells and the time spent on each side inside a
/// cell integrated exactly.
pub fn welfare_formula_ce(config: &ModelConfig, n_paths: usize, seed: u64, n_steps: usize) -> Result<WelfareEstimate> {
    config.validate()?;
    if config.has_constant_coefficients() {
        return Ok(WelfareEstimate {
            ce: closed_form(config),
            std_error: 0.0,
            closed_form: true,
        });
    }
    let (ce, std_error) = monte_carlo(config, n_paths, seed, n_steps)?;
    Ok(WelfareEstimate {
        ce,
        std_error,
        closed_form: false,
    })
}

fn closed_form(config: &ModelConfig) -> f64 {
    let h = config.horizon;
    let ara = config.ara0();
    let sigma = config.sigma.eval(0.0, h);
    if config.kappa == 0.0 {
        let l1 = config.lambda1.eval(0.0, h);
        let l2 = config.lambda2.eval(0.0, h);
        let e = config.spread_factor.eval(0.0, h);
        // ε_t = ε𝓔 contributes the 𝓔² factor
        config.x0 + 2.0 * e * e * l1 * l2 * h * config.leading_scale() / (ara * sigma * sigma)
    } else {
        let grid = TimeGrid::uniform(h, 1).expect("valid horizon");
        let coeffs = MarketCoefficients::sample(config, &grid);
        let (g_up, g_lo) = gain_rates(&coeffs, ara, config.kappa);
        let (a1, a2) = (coeffs.alpha1[0], coeffs.alpha2[0]);
        let p1 = a1 / (a1 + a2);
        config.x0 + h * (p1 * g_up[0] + (1.0 - p1) * g_lo[0])
    }
}

fn monte_carlo(config: &ModelConfig, n_paths: usize, seed: u64, n_steps: usize) -> Result<(f64, f64)> {
    let grid = TimeGrid::uniform(config.horizon, n_steps)?;
    let coeffs = MarketCoefficients::sample(config, &grid);
    let (g_up, g_lo) = gain_rates(&coeffs, config.ara0(), config.kappa);
    let gains = parallel_map(None, n_paths, |i| {
        let mut r1 = path_stream(seed, i, StreamRole::Arrivals1);
        let mut r2 = path_stream(seed, i, StreamRole::Arrivals2);
        let (j1, j2) = simulate_arrivals(config, &grid, &mut r1, &mut r2);
        side_integral(&grid, &g_up, &g_lo, &j1, &j2)
    });
    let (m, se) = mean_and_se(&gains);
    Ok((config.x0 + m, se))
}

/// `∫ (g_up 1_{A1} + g_lo 1_{A2}) dt` with `g` frozen at the left point of
/// each cell and the side starting in `A2`.
pub(crate) fn side_integral(grid: &TimeGrid, g_up: &[f64], g_lo: &[f64], j1: &[Jump], j2: &[Jump]) -> f64 {
    let mut switches: Vec<(f64, Side)> = j1
        .iter()
        .map(|j| (j.time, Side::A1))
        .chain(j2.iter().map(|j| (j.time, Side::A2)))
        .collect();
    switches.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut side = Side::A2;
    let mut next = 0;
    let mut total = 0.0;
    for k in 0..grid.n_steps {
        let (lo, hi) = (grid.t[k], grid.t[k + 1]);
        let mut t = lo;
        let mut time_up = 0.0;
        let mut time_lo = 0.0;
        while next < switches.len() && switches[next].0 <= hi {
            let s = switches[next].0;
            match side {
                Side::A1 => time_up += s - t,
                Side::A2 => time_lo += s - t,
            }
            t = s;
            side = switches[next].1;
            next += 1;
        }
        match side {
            Side::A1 => time_up += hi - t,
            Side::A2 => time_lo += hi - t,
        }
        total += g_up[k] * time_up + g_lo[k] * time_lo;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Coefficient;

    #[test]
    fn closed_form_benchmark() {
        let w = welfare_formula_ce(&ModelConfig::symmetric_benchmark(0.01), 0, 0, 16).unwrap();
        assert!(w.closed_form);
        assert!((w.ce - 0.02).abs() < 1e-15);
    }

    #[test]
    fn asymmetry_lowers_welfare() {
        let cfg = ModelConfig {
            lambda1: Coefficient::Constant(1.5),
            lambda2: Coefficient::Constant(0.5),
            ..ModelConfig::symmetric_benchmark(0.01)
        };
        let w = welfare_formula_ce(&cfg, 0, 0, 16).unwrap();
        assert!((w.ce - 0.015).abs() < 1e-15);
    }

    #[test]
    fn impact_closed_form_uses_substituted_boundaries() {
        // symmetric κ: both boundaries scale by 1 - κ, so the gain by (1 - κ)²
        let cfg = ModelConfig::symmetric_benchmark(0.01).with_kappa(0.5);
        let w = welfare_formula_ce(&cfg, 0, 0, 16).unwrap();
        assert!((w.ce - 0.25 * 0.02).abs() < 1e-15);
    }

    #[test]
    fn side_integral_of_unit_rates_is_horizon() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let j = |t: f64| Jump {
            time: t,
            step: grid.containing_step(t),
        };
        let ones = vec![1.0; 9];
        let v = side_integral(&grid, &ones, &ones, &[j(0.1), j(0.33)], &[j(0.2), j(0.9)]);
        assert!((v - 1.0).abs() < 1e-15);
        let zeros = vec![0.0; 9];
        // A1 on [0.1, 0.2) and [0.33, 0.9)
        let v = side_integral(&grid, &ones, &zeros, &[j(0.1), j(0.33)], &[j(0.2), j(0.9)]);
        assert!((v - 0.67).abs() < 1e-14);
    }

    /// `E[∫₀ᵀ 1_{A1} dt]` for a two-state chain started in `A2`:
    /// `p₁(T - (1 - e^{-aT})/a)` with `a = α⁽¹⁾ + α⁽²⁾` and `p₁ = α⁽¹⁾/a`.
    fn expected_time_in_a1(a1: f64, a2: f64, horizon: f64) -> f64 {
        let a = a1 + a2;
        a1 / a * (horizon - (1.0 - (-a * horizon).exp()) / a)
    }

    #[test]
    fn monte_carlo_matches_transient_oracle() {
        // a one-knot table is constant in value but forces the Monte Carlo route
        let cfg = ModelConfig {
            lambda1: Coefficient::PiecewiseConstant(vec![(0.0, 1.5)]),
            lambda2: Coefficient::Constant(0.5),
            ..ModelConfig::symmetric_benchmark(0.04)
        };
        let w = welfare_formula_ce(&cfg, 20_000, 5, 64).unwrap();
        assert!(!w.closed_form);
        let a1 = 1.5 / 0.2;
        let a2 = 0.5 / 0.2;
        let t1 = expected_time_in_a1(a1, a2, 1.0);
        let scale = cfg.leading_scale();
        // A1 pays 2λ⁽²⁾² and A2 pays 2λ⁽¹⁾² (σ = ARA = 𝓔 = 1)
        let oracle = scale * (2.0 * 0.25 * t1 + 2.0 * 2.25 * (1.0 - t1));
        assert!((w.ce - oracle).abs() < 3.5 * w.std_error, "{} vs {oracle} ± {}", w.ce, w.std_error);
    }

    #[test]
    fn monte_carlo_mode_agrees_with_closed_form() {
        let cfg = ModelConfig {
            lambda1: Coefficient::PiecewiseConstant(vec![(0.0, 1.0)]),
            ..ModelConfig::symmetric_benchmark(0.02)
        };
        let w = welfare_formula_ce(&cfg, 2_000, 1, 32).unwrap();
        let closed = welfare_formula_ce(&ModelConfig::symmetric_benchmark(0.02), 0, 0, 32).unwrap();
        // symmetric rates make the side irrelevant, so MC is exact here
        assert!((w.ce - closed.ce).abs() < 1e-12 + 3.0 * w.std_error);
    }
}
