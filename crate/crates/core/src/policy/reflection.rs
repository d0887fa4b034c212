use std::sync::Arc;

use serde::Serialize;

use super::BoundaryPath;
use crate::config::{ModelConfig, Side};
use crate::market::MarketPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpMark {
    pub time: f64,
    pub step: usize,
    pub side: Side,
    pub beta_before: f64,
    pub beta_after: f64,
}

/// The reflected monetary position `β` with its reflection pushes.
#[derive(Debug, Clone)]
pub struct InventoryPath {
    pub boundaries: Arc<BoundaryPath>,
    /// `β` at `t_k` after every event at `t_k`.
    pub beta: Vec<f64>,
    /// `β` at `t_k` after reflection, before the arrivals snapped to `t_k`.
    pub beta_pre: Vec<f64>,
    /// Cumulative monetary push upward `Ψ⁺` (market buys).
    pub psi_plus: Vec<f64>,
    /// Cumulative monetary push downward `Ψ⁻` (market sells).
    pub psi_minus: Vec<f64>,
    pub jump_marks: Vec<JumpMark>,
}

/// Running-supremum state of one excursion between arrivals.
///
/// After an `N⁽¹⁾` arrival at `τ`, `ln β_t = Y_t - sup_{τ≤s≤t}(Y_s - ln β̄_s)`
/// where `Y` is the log-return of the mid since `τ` (`Y_τ = 0`); after an
/// `N⁽²⁾` arrival the same holds for `|β|` and `|β̲|`.
#[derive(Debug, Clone, Copy)]
enum Excursion {
    BeforeFirstArrival,
    Long { y: f64, sup: f64 },
    Short { y: f64, sup: f64 },
}

/// Solves the reflection problem on the grid of `path` inside `boundaries`.
pub fn reflected_inventory(path: &MarketPath, boundaries: &Arc<BoundaryPath>) -> InventoryPath {
    let n = path.n_steps();
    let grid = &path.grid;
    let sigma = &path.coeffs.sigma;
    let upper = &boundaries.upper;
    let lower = &boundaries.lower;

    let mut beta = Vec::with_capacity(n + 1);
    let mut beta_pre = Vec::with_capacity(n + 1);
    let mut psi_plus = Vec::with_capacity(n + 1);
    let mut psi_minus = Vec::with_capacity(n + 1);
    let mut jump_marks = Vec::with_capacity(path.arrivals.len());

    let mut state = Excursion::BeforeFirstArrival;
    let mut b = 0.0;
    let (mut pp, mut pm) = (0.0, 0.0);
    beta.push(0.0);
    beta_pre.push(0.0);
    psi_plus.push(0.0);
    psi_minus.push(0.0);

    let mut next = 0;
    for k in 1..=n {
        let sg = sigma[k - 1];
        let dx = sg * path.dw[k - 1] - 0.5 * sg * sg * grid.dt(k - 1);
        let free = b * (path.mid_pre[k] / path.mid[k - 1]);
        match &mut state {
            Excursion::BeforeFirstArrival => {}
            Excursion::Long { y, sup } => {
                *y += dx;
                let c = *y - upper[k].ln();
                if c >= *sup {
                    *sup = c;
                    b = upper[k];
                    pm += (free - b).max(0.0);
                } else {
                    b = (*y - *sup).exp();
                }
            }
            Excursion::Short { y, sup } => {
                *y += dx;
                let c = *y - (-lower[k]).ln();
                if c >= *sup {
                    *sup = c;
                    b = lower[k];
                    pp += (b - free).max(0.0);
                } else {
                    b = -(*y - *sup).exp();
                }
            }
        }
        beta_pre.push(b);
        psi_plus.push(pp);
        psi_minus.push(pm);

        while next < path.arrivals.len() && path.arrivals[next].step == k {
            let a = &path.arrivals[next];
            let before = b;
            let (target, s) = match a.side {
                Side::A1 => (upper[k], Excursion::Long { y: 0.0, sup: -upper[k].ln() }),
                Side::A2 => (lower[k], Excursion::Short { y: 0.0, sup: -(-lower[k]).ln() }),
            };
            b = target;
            state = s;
            jump_marks.push(JumpMark {
                time: a.time,
                step: k,
                side: a.side,
                beta_before: before,
                beta_after: b,
            });
            next += 1;
        }
        beta.push(b);
    }

    InventoryPath {
        boundaries: Arc::clone(boundaries),
        beta,
        beta_pre,
        psi_plus,
        psi_minus,
        jump_marks,
    }
}

/// The candidate policy: reflection inside the boundaries of `config`.
pub fn candidate_inventory(path: &MarketPath, config: &ModelConfig) -> InventoryPath {
    let b = BoundaryPath::from_coefficients(&path.coeffs, config.ara0(), config.kappa);
    reflected_inventory(path, &Arc::new(b))
}

impl InventoryPath {
    /// Largest boundary violation relative to the local boundary magnitude.
    pub fn max_containment_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, (&bp, &bt)) in self.beta_pre.iter().zip(&self.beta).enumerate() {
            let up = self.boundaries.upper[k];
            let lo = self.boundaries.lower[k];
            let scale = up.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
            for v in [bp, bt] {
                worst = worst.max((v - up).max(0.0) / scale);
                worst = worst.max((lo - v).max(0.0) / scale);
            }
        }
        worst
    }

    /// `(∫ 1{β < β̄ - tol} dΨ⁻, ∫ 1{β > β̲ + tol} dΨ⁺)` with `tol` relative to
    /// the boundary magnitude.
    pub fn reflection_minimality(&self, tol: f64) -> (f64, f64) {
        let (mut off_upper, mut off_lower) = (0.0, 0.0);
        for k in 1..self.beta.len() {
            let b = self.beta_pre[k];
            let up = self.boundaries.upper[k];
            let lo = self.boundaries.lower[k];
            let dm = self.psi_minus[k] - self.psi_minus[k - 1];
            let dp = self.psi_plus[k] - self.psi_plus[k - 1];
            if b < up - tol * up.abs() {
                off_upper += dm;
            }
            if b > lo + tol * lo.abs() {
                off_lower += dp;
            }
        }
        (off_upper, off_lower)
    }

    /// Target position at each grid point: `β̄` after an `N⁽¹⁾` fill, `β̲`
    /// after an `N⁽²⁾` fill, `None` before the first arrival.
    pub fn targets(&self, path: &MarketPath) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(self.beta.len());
        let mut regime: Option<Side> = None;
        let mut next = 0;
        for k in 0..self.beta.len() {
            while next < path.arrivals.len() && path.arrivals[next].step == k {
                regime = Some(path.arrivals[next].side);
                next += 1;
            }
            out.push(regime.map(|s| match s {
                Side::A1 => self.boundaries.upper[k],
                Side::A2 => self.boundaries.lower[k],
            }));
        }
        out
    }
}
