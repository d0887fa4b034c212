use crate::config::ModelConfig;
use crate::error::Result;
use crate::policy::{reflected_inventory, InventoryPath};
use crate::market::MarketPath;

use super::{parallel_map, Evaluator};

/// Fraction of grid points from the first arrival on at which
/// `|β - target|·ε^{ϑ-1} ≤ delta`. `None` when the path has no arrival.
pub fn boundary_occupation(inv: &InventoryPath, path: &MarketPath, delta: f64, config: &ModelConfig) -> Option<f64> {
    let first = path.arrivals.first()?.step;
    let tol = delta * config.epsilon.powf(1.0 - config.vartheta);
    let targets = inv.targets(path);
    let mut inside = 0usize;
    for k in first..inv.beta.len() {
        let target = targets[k].expect("target defined after the first arrival");
        if (inv.beta[k] - target).abs() <= tol {
            inside += 1;
        }
    }
    Some(inside as f64 / (inv.beta.len() - first) as f64)
}

/// Mean occupation of the candidate over the paths with at least one
/// arrival, and the number of such paths.
pub fn mean_occupation(ev: &Evaluator, delta: f64, n_paths: usize, seed: u64) -> Result<(f64, usize)> {
    let cfg = ev.config();
    let values = parallel_map(ev.options.threads, n_paths, |i| {
        let path = ev.path(seed, i);
        let inv = reflected_inventory(&path, &ev.boundaries);
        boundary_occupation(&inv, &path, delta, cfg)
    });
    let kept: Vec<f64> = values.into_iter().flatten().collect();
    let n = kept.len();
    Ok((kept.iter().sum::<f64>() / n as f64, n))
}
