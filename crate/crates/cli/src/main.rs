//! `lqp`: experiments for the small-spread liquidity provision model.
//!
//! Every run writes its outputs plus `manifest.json` (inputs and SHA-256 of
//! every emitted file) into `--out`. `LQP_THREADS` sets the worker count and
//! never changes the output.

mod commands;
mod config_file;
mod manifest;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::Job;
use config_file::{check_run, parse_config};
use manifest::{digest_file, RunManifest};

#[derive(Parser)]
#[command(name = "lqp", version, about = "Liquidity provision experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config with [market], [utility] and optional [run] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_delimiter = ',')]
    eps_ladder: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    kappa_ladder: Option<Vec<f64>>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Per-path trade logs and ledger summaries.
    Simulate,
    /// Certainty equivalents down the epsilon ladder with the fitted slope.
    Converge,
    /// Welfare formula against Monte Carlo.
    Welfare,
    /// Time spent near the target position.
    Occupation,
    /// Exact dynamic program on discretised instances.
    Oracle,
    /// Boundaries, welfare and stop frequency across the kappa ladder.
    ImpactStudy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Welfare => "welfare",
            Command::Occupation => "occupation",
            Command::Oracle => "oracle",
            Command::ImpactStudy => "impact-study",
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let c = cli.common;
    let Some(config_path) = c.config else {
        bail!("--config is required");
    };
    let (config, mut run) = parse_config(&config_path)?;
    if let Some(seed) = c.seed {
        run.seed = seed;
    }
    if let Some(paths) = c.paths {
        run.n_paths = paths;
    }
    if let Some(l) = c.eps_ladder {
        run.eps_ladder = l;
    }
    if let Some(l) = c.kappa_ladder {
        run.kappa_ladder = l;
    }
    check_run(&run)?;
    std::fs::create_dir_all(&c.out).with_context(|| format!("creating output directory {}", c.out.display()))?;

    let job = Job {
        config: &config,
        run: &run,
        out: &c.out,
    };
    let files = match cli.command {
        Command::Simulate => commands::simulate(&job),
        Command::Converge => commands::converge(&job),
        Command::Welfare => commands::welfare(&job),
        Command::Occupation => commands::occupation(&job),
        Command::Oracle => commands::oracle(&job),
        Command::ImpactStudy => commands::impact_study(&job),
    }?;

    let mut manifest = RunManifest {
        config_path: config_path.clone(),
        config_sha256: digest_file(&config_path)?,
        subcommand: cli.command.name().to_string(),
        seed: run.seed,
        output_dir: c.out.clone(),
        n_paths: run.n_paths,
        epsilon_ladder: run.eps_ladder.clone(),
        kappa_ladder: run.kappa_ladder.clone(),
        files: Vec::new(),
    };
    for f in &files {
        manifest.record(f)?;
    }
    let path = manifest.write(&c.out)?;
    for d in &manifest.files {
        println!("{}  {}", d.sha256, d.file);
    }
    println!("manifest: {}", path.display());
    Ok(())
}
