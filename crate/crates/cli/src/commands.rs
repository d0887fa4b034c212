use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lqp_core::accounting::evolve_portfolio;
use lqp_core::evaluation::{
    convergence_study, mean_occupation, parallel_map, welfare_formula_ce, EvalOptions, Evaluator, Policy,
};
use lqp_core::oracle::{discretize_instance, dp_optimal_utility, OracleReport};
use lqp_core::policy::{impact_policy, reflected_inventory, strategy_from_inventory, trading_boundaries};
use lqp_core::ModelConfig;

use crate::config_file::RunSettings;

/// A CSV cell with 12 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "NaN".to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub struct Job<'a> {
    pub config: &'a ModelConfig,
    pub run: &'a RunSettings,
    pub out: &'a Path,
}

impl Job<'_> {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            n_steps: self.run.n_steps,
            substeps: self.run.substeps,
            threads: None,
        }
    }

    /// The band policy when there is no impact, else the impact policy.
    fn policy(&self, config: &ModelConfig) -> Policy {
        if config.kappa > 0.0 {
            Policy::Impact
        } else {
            Policy::Candidate
        }
    }
}

pub fn simulate(cx: &Job) -> Result<Vec<PathBuf>> {
    let ev = Evaluator::new(cx.config, cx.options())?;
    let seed = cx.run.seed;
    let impact = cx.config.kappa > 0.0;
    let ledgers = parallel_map(None, cx.run.n_paths, |i| {
        let path = ev.path(seed, i);
        let (strategy, stop) = if impact {
            let out = impact_policy(&path, &ev.boundaries);
            (out.strategy, out.stop_time)
        } else {
            let inv = reflected_inventory(&path, &ev.boundaries);
            (strategy_from_inventory(&inv, &path), None)
        };
        (evolve_portfolio(&strategy, &path, cx.config.x0), path.arrivals.len(), stop)
    });

    let trades_path = cx.out.join("trades.csv");
    let mut w = csv_writer(&trades_path)?;
    w.write_record(["path", "time", "step", "kind", "units", "price", "cash_after", "units_after"])?;
    for (i, (ledger, _, _)) in ledgers.iter().enumerate() {
        for t in &ledger.trades {
            w.write_record([
                i.to_string(),
                num(t.time),
                t.step.to_string(),
                t.kind.as_str().to_string(),
                num(t.units),
                num(t.price),
                num(t.cash_after),
                num(t.units_after),
            ])?;
        }
    }
    w.flush()?;

    let summary_path = cx.out.join("summary.csv");
    let mut w = csv_writer(&summary_path)?;
    w.write_record(["path", "arrivals", "trades", "terminal_wealth", "max_abs_exposure", "stop_time"])?;
    for (i, (ledger, arrivals, stop)) in ledgers.iter().enumerate() {
        w.write_record([
            i.to_string(),
            arrivals.to_string(),
            ledger.trades.len().to_string(),
            num(ledger.terminal_wealth()),
            num(ledger.max_abs_exposure()),
            stop.map(num).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(vec![trades_path, summary_path])
}

pub fn converge(cx: &Job) -> Result<Vec<PathBuf>> {
    let study = convergence_study(
        cx.config,
        &cx.run.eps_ladder,
        &cx.policy(cx.config),
        cx.run.n_paths,
        cx.run.seed,
        cx.options(),
    )?;
    let path = cx.out.join("convergence.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["epsilon", "ce_mc", "ce_se", "ce_formula", "ratio"])?;
    for r in &study.rows {
        w.write_record([num(r.epsilon), num(r.ce_mc.mean), num(r.ce_mc.std_error), num(r.ce_formula), num(r.ratio)])?;
    }
    let mut file = w.into_inner().map_err(|e| e.into_error())?;
    writeln!(file, "# slope={}", study.slope.map(num).unwrap_or_else(|| "NA".into()))?;
    Ok(vec![path])
}

pub fn welfare(cx: &Job) -> Result<Vec<PathBuf>> {
    let path = cx.out.join("welfare.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["epsilon", "ce_formula", "formula_se", "closed_form", "ce_mc", "ce_se", "z"])?;
    for &eps in &cx.run.eps_ladder {
        let cfg = cx.config.with_epsilon(eps);
        let formula = welfare_formula_ce(&cfg, cx.run.n_paths, cx.run.seed, cx.run.n_steps)?;
        let ev = Evaluator::new(&cfg, cx.options())?;
        let mc = ev.certainty_equivalents(&[cx.policy(&cfg)], cx.run.n_paths, cx.run.seed)?[0];
        let se = (mc.std_error.powi(2) + formula.std_error.powi(2)).sqrt();
        w.write_record([
            num(eps),
            num(formula.ce),
            num(formula.std_error),
            formula.closed_form.to_string(),
            num(mc.mean),
            num(mc.std_error),
            num((mc.mean - formula.ce) / se),
        ])?;
    }
    w.flush()?;
    Ok(vec![path])
}

pub fn occupation(cx: &Job) -> Result<Vec<PathBuf>> {
    let path = cx.out.join("occupation.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["epsilon", "delta", "occupation", "paths_with_arrivals"])?;
    for &eps in &cx.run.eps_ladder {
        let ev = Evaluator::new(&cx.config.with_epsilon(eps), cx.options())?;
        let (m, n) = mean_occupation(&ev, cx.run.delta, cx.run.n_paths, cx.run.seed)?;
        w.write_record([num(eps), num(cx.run.delta), num(m), n.to_string()])?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// Oracle position step for `config`: a fixed fraction of the larger
/// candidate target at time zero.
pub fn oracle_grid_step(config: &ModelConfig, fraction: f64) -> f64 {
    let (lower, upper) = trading_boundaries(0.0, config).clamped();
    fraction * upper.max(-lower)
}

pub fn oracle(cx: &Job) -> Result<Vec<PathBuf>> {
    let mut reports = Vec::with_capacity(cx.run.eps_ladder.len());
    for &eps in &cx.run.eps_ladder {
        let cfg = cx.config.with_epsilon(eps);
        let step = oracle_grid_step(&cfg, cx.run.oracle_grid_fraction);
        let instance = discretize_instance(&cfg, cx.run.oracle_periods, step)?;
        let result = dp_optimal_utility(&instance)?;
        reports.push(OracleReport { instance, result });
    }
    let path = cx.out.join("oracle.json");
    std::fs::write(&path, serde_json::to_string_pretty(&reports)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(vec![path])
}

pub fn impact_study(cx: &Job) -> Result<Vec<PathBuf>> {
    let base = trading_boundaries(0.0, &cx.config.with_kappa(0.0));
    let path = cx.out.join("impact.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "kappa",
        "upper",
        "lower",
        "upper_ratio",
        "lower_ratio",
        "ce_mc",
        "ce_se",
        "ce_formula",
        "stop_probability",
    ])?;
    for &kappa in &cx.run.kappa_ladder {
        let cfg = cx.config.with_kappa(kappa);
        let b = trading_boundaries(0.0, &cfg);
        let ev = Evaluator::new(&cfg, cx.options())?;
        let mc = ev.certainty_equivalents(&[Policy::Impact], cx.run.n_paths, cx.run.seed)?[0];
        let formula = welfare_formula_ce(&cfg, cx.run.n_paths, cx.run.seed, cx.run.n_steps)?;
        let (stop, _) = ev.impact_stop_probability(cx.run.n_paths, cx.run.seed)?;
        w.write_record([
            num(kappa),
            num(b.upper),
            num(b.lower),
            num(b.upper / base.upper),
            num(b.lower / base.lower),
            num(mc.mean),
            num(mc.std_error),
            num(formula.ce),
            num(stop),
        ])?;
    }
    w.flush()?;
    Ok(vec![path])
}
