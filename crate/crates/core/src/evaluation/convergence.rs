use serde::Serialize;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::stats::log_log_slope;

use super::{welfare_formula_ce, EvalOptions, Evaluator, MCEstimate, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub ce_mc: MCEstimate,
    pub ce_formula: f64,
    /// `(CE_MC - x₀)/ε^{2(1-ϑ)}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    /// Sorted by decreasing `ε`.
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slope of `CE_MC - x₀` against `ε`; `None` when some gain is
    /// not positive.
    pub slope: Option<f64>,
}

impl ConvergenceStudy {
    /// `ratio · ε^{2(1-ϑ)}` predicted by the welfare formula, per row.
    pub fn formula_ratios(&self, template: &ModelConfig) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| (r.ce_formula - template.x0) / template.with_epsilon(r.epsilon).leading_scale())
            .collect()
    }
}

pub(crate) fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "epsilon ladder needs at least 3 points, got {}",
            ladder.len()
        )));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("epsilon ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Certainty equivalent of `policy` on each rung of `ladder`, all rungs
/// sharing `seed` so the Brownian paths are common.
pub fn convergence_study(
    template: &ModelConfig,
    ladder: &[f64],
    policy: &Policy,
    n_paths: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<ConvergenceStudy> {
    check_ladder(ladder)?;
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let cfg = template.with_epsilon(eps);
        let ev = Evaluator::new(&cfg, options)?;
        let ce = ev.certainty_equivalents(std::slice::from_ref(policy), n_paths, seed)?[0];
        let formula = welfare_formula_ce(&cfg, n_paths, seed, options.n_steps)?;
        rows.push(ConvergenceRow {
            epsilon: eps,
            ce_mc: ce,
            ce_formula: formula.ce,
            ratio: (ce.mean - cfg.x0) / cfg.leading_scale(),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let gains: Vec<f64> = rows.iter().map(|r| r.ce_mc.mean - template.x0).collect();
    Ok(ConvergenceStudy {
        slope: log_log_slope(&eps, &gains),
        rows,
    })
}

/// Time-discretization allowance `C·Δt` for a certainty equivalent: the
/// change in CE when the grid is coarsened to half as many steps on the same
/// Brownian path (each coarse step sums twice as many draws).
pub fn discretization_allowance(
    config: &ModelConfig,
    policy: &Policy,
    n_paths: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<f64> {
    let fine = Evaluator::new(config, options)?;
    let coarse_opts = EvalOptions {
        n_steps: options.n_steps / 2,
        substeps: options.substeps.max(1) * 2,
        ..options
    };
    let coarse = Evaluator::new(config, coarse_opts)?;
    let a = fine.certainty_equivalents(std::slice::from_ref(policy), n_paths, seed)?[0];
    let b = coarse.certainty_equivalents(std::slice::from_ref(policy), n_paths, seed)?[0];
    Ok((a.mean - b.mean).abs())
}
