//! Monte Carlo evaluation of policies, the welfare formula, and convergence
//! studies over a ladder of spreads.

mod convergence;
mod occupation;
mod welfare;

pub use convergence::{convergence_study, discretization_allowance, ConvergenceRow, ConvergenceStudy};
pub use occupation::{boundary_occupation, mean_occupation};
pub use welfare::{welfare_formula_ce, WelfareEstimate};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::accounting::terminal_liquidation_wealth;
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::market::{MarketPath, MarketSetup};
use crate::policy::{
    impact_policy, reflected_inventory, strategy_from_inventory, BandPerturbation, BoundaryPath, Strategy,
};
use crate::stats::mean_and_se;
use crate::utility::UtilitySpec;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "LQP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub ci95: (f64, f64),
}

impl MCEstimate {
    pub fn new(mean: f64, std_error: f64, n_paths: usize, seed: u64) -> Self {
        MCEstimate {
            mean,
            std_error,
            n_paths,
            seed,
            ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
        }
    }

    /// Mean and standard error of `samples`, accumulated in order relative
    /// to the first sample so identical samples give an exact mean and zero
    /// error.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let base = samples.first().copied().unwrap_or(0.0);
        let shifted: Vec<f64> = samples.iter().map(|x| x - base).collect();
        let (m, se) = mean_and_se(&shifted);
        MCEstimate::new(base + m, se, samples.len(), seed)
    }
}

/// Supplies a strategy for each simulated path.
pub trait StrategySource: Send + Sync {
    fn strategy(&self, path: &MarketPath, path_index: u64) -> Strategy;
}

#[derive(Clone)]
pub enum Policy {
    /// Reflection inside the boundaries of the config.
    Candidate,
    /// Reflection inside the boundaries multiplied by a factor.
    Scaled(f64),
    Zero,
    /// Limit orders only with a liquidation stop outside twice the band.
    Impact,
    Band(BandPerturbation),
    External(Arc<dyn StrategySource>),
}

impl std::fmt::Debug for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::Candidate => f.write_str("Candidate"),
            Policy::Scaled(s) => f.debug_tuple("Scaled").field(s).finish(),
            Policy::Zero => f.write_str("Zero"),
            Policy::Impact => f.write_str("Impact"),
            Policy::Band(b) => f.debug_tuple("Band").field(b).finish(),
            Policy::External(_) => f.write_str("External(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub n_steps: usize,
    /// Gaussian draws per grid step (see
    /// [`MarketSetup::simulate_path_with_substeps`]).
    pub substeps: usize,
    /// Worker count; falls back to `LQP_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            n_steps: 1024,
            substeps: 1,
            threads: None,
        }
    }
}

impl EvalOptions {
    pub fn with_steps(n_steps: usize) -> Self {
        EvalOptions {
            n_steps,
            ..Default::default()
        }
    }
}

fn worker_count(requested: Option<usize>) -> Option<usize> {
    requested.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Maps `f` over `0..n` on the worker pool, returning results in index
/// order.
pub fn parallel_map<T, F>(threads: Option<usize>, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || (0..n as u64).into_par_iter().map(&f).collect::<Vec<T>>();
    match worker_count(threads) {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

enum Prepared {
    Reflect(Arc<BoundaryPath>),
    Zero,
    Impact(Arc<BoundaryPath>),
    External(Arc<dyn StrategySource>),
}

/// Simulates paths for one configuration and evaluates policies on them.
pub struct Evaluator {
    pub setup: MarketSetup,
    pub boundaries: Arc<BoundaryPath>,
    pub options: EvalOptions,
}

impl Evaluator {
    pub fn new(config: &ModelConfig, options: EvalOptions) -> Result<Self> {
        let setup = MarketSetup::new(config, options.n_steps)?;
        let boundaries = Arc::new(BoundaryPath::for_setup(&setup));
        Ok(Evaluator {
            setup,
            boundaries,
            options,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.setup.config
    }

    pub fn path(&self, seed: u64, path_index: u64) -> MarketPath {
        self.setup
            .simulate_path_with_substeps(seed, path_index, self.options.substeps)
    }

    fn prepare(&self, policy: &Policy) -> Prepared {
        match policy {
            Policy::Candidate => Prepared::Reflect(Arc::clone(&self.boundaries)),
            Policy::Scaled(f) => Prepared::Reflect(Arc::new(self.boundaries.scaled(*f))),
            Policy::Zero => Prepared::Zero,
            Policy::Impact => Prepared::Impact(Arc::clone(&self.boundaries)),
            Policy::Band(p) => Prepared::Reflect(Arc::new(p.apply(&self.boundaries, &self.setup.grid.t))),
            Policy::External(s) => Prepared::External(Arc::clone(s)),
        }
    }

    fn wealth(&self, prepared: &Prepared, path: &MarketPath, path_index: u64) -> f64 {
        let x0 = self.config().x0;
        match prepared {
            Prepared::Zero => x0,
            Prepared::Reflect(b) => {
                let inv = reflected_inventory(path, b);
                terminal_liquidation_wealth(&strategy_from_inventory(&inv, path), path, x0)
            }
            Prepared::Impact(b) => terminal_liquidation_wealth(&impact_policy(path, b).strategy, path, x0),
            Prepared::External(s) => terminal_liquidation_wealth(&s.strategy(path, path_index), path, x0),
        }
    }

    /// Terminal liquidation wealth of every policy on every path, with all
    /// policies sharing each path. Indexed `[policy][path]`.
    pub fn terminal_wealths(&self, policies: &[Policy], n_paths: usize, seed: u64) -> Vec<Vec<f64>> {
        let prepared: Vec<Prepared> = policies.iter().map(|p| self.prepare(p)).collect();
        let per_path = parallel_map(self.options.threads, n_paths, |i| {
            let path = self.path(seed, i);
            prepared
                .iter()
                .map(|p| self.wealth(p, &path, i))
                .collect::<Vec<f64>>()
        });
        (0..policies.len())
            .map(|j| per_path.iter().map(|w| w[j]).collect())
            .collect()
    }

    pub fn expected_utility(&self, policy: &Policy, n_paths: usize, seed: u64) -> Result<MCEstimate> {
        check_paths(n_paths)?;
        let w = self.terminal_wealths(std::slice::from_ref(policy), n_paths, seed);
        let u: Vec<f64> = w[0].iter().map(|&x| self.config().utility.value(x)).collect();
        Ok(MCEstimate::from_samples(&u, seed))
    }

    /// Fraction of paths on which the impact policy hits its liquidation
    /// stop, with its binomial standard error.
    pub fn impact_stop_probability(&self, n_paths: usize, seed: u64) -> Result<(f64, f64)> {
        check_paths(n_paths)?;
        let hits = parallel_map(self.options.threads, n_paths, |i| {
            let path = self.path(seed, i);
            impact_policy(&path, &self.boundaries).stop_time.is_some()
        });
        let p = hits.iter().filter(|&&h| h).count() as f64 / n_paths as f64;
        Ok((p, (p * (1.0 - p) / n_paths as f64).sqrt()))
    }

    /// Certainty equivalents of several policies on common paths.
    pub fn certainty_equivalents(&self, policies: &[Policy], n_paths: usize, seed: u64) -> Result<Vec<MCEstimate>> {
        check_paths(n_paths)?;
        self.terminal_wealths(policies, n_paths, seed)
            .iter()
            .map(|w| certainty_equivalent_estimate(&self.config().utility, self.config().x0, w, seed))
            .collect()
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 paths, got {n_paths}")));
    }
    Ok(())
}

/// Certainty equivalent of a wealth sample with a delta-method standard
/// error. Exponential utilities are evaluated relative to `reference` so
/// large wealth levels do not underflow.
pub fn certainty_equivalent_estimate(
    utility: &UtilitySpec,
    reference: f64,
    wealth: &[f64],
    seed: u64,
) -> Result<MCEstimate> {
    match utility {
        UtilitySpec::Exponential { risk_aversion: c } => {
            let u: Vec<f64> = wealth.iter().map(|&x| -(-c * (x - reference)).exp()).collect();
            let eu = MCEstimate::from_samples(&u, seed);
            if eu.mean >= 0.0 {
                return Err(Error::Domain(eu.mean));
            }
            let ce = reference - (-eu.mean).ln() / c;
            // U'(CE) = c·(-E[U]) in the shifted scale
            let se = eu.std_error / (c * -eu.mean);
            Ok(MCEstimate::new(ce, se, wealth.len(), seed))
        }
        _ => {
            let u: Vec<f64> = wealth.iter().map(|&x| utility.value(x)).collect();
            let eu = MCEstimate::from_samples(&u, seed);
            let ce = utility.certainty_equivalent(eu.mean)?;
            let se = eu.std_error / utility.first_derivative(ce);
            Ok(MCEstimate::new(ce, se, wealth.len(), seed))
        }
    }
}

/// `E[U(X̂_T)]` of `policy` over `n_paths` simulated paths.
pub fn mc_expected_utility(
    config: &ModelConfig,
    policy: &Policy,
    n_paths: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<MCEstimate> {
    Evaluator::new(config, options)?.expected_utility(policy, n_paths, seed)
}

/// Certainty equivalent of `policy` over `n_paths` simulated paths.
pub fn mc_certainty_equivalent(
    config: &ModelConfig,
    policy: &Policy,
    n_paths: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<MCEstimate> {
    let ev = Evaluator::new(config, options)?;
    Ok(ev.certainty_equivalents(std::slice::from_ref(policy), n_paths, seed)?[0])
}
