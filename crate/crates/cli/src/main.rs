//! `homoclinic-gate`: condition reports, shooting sweeps and bifurcation scans
//! for planar systems with a homoclinic loop.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "homoclinic-gate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON or TOML run configuration (flags override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// powerlaw, powerlaw-damped or powerlaw-rotated.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// a1, none, const:<c> or cos:<amplitude>:<frequency>.
    #[arg(long, global = true)]
    forcing: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Zero threshold for condition verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Half-width T of the time window.
    #[arg(long, global = true)]
    window: Option<f64>,
    /// A phase shift or a grid lo:hi:n.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Comma-separated ε values (empty for none).
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<String>,
    /// Scan slice variable:lo:hi:samples, variable one of xi, alpha, beta.
    #[arg(long, global = true, allow_hyphen_values = true)]
    slice: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for inner scans.
    #[arg(long, global = true, env = "HOMOCLINIC_GATE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate the persistence conditions and write a report.
    Analyze,
    /// Solve the perturbed boundary-value problem for each ε.
    Verify,
    /// Scan the reduced bifurcation function along a slice.
    Scan,
    /// Dump the fundamental frame along the loop.
    Frame,
}

impl Cli {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.field = config::field_preset(p)?;
        }
        if let Some(f) = &self.forcing {
            cfg.forcing = config::forcing_preset(f)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.tol {
            cfg.tolerances.zero = t;
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(b) = &self.beta {
            cfg.beta = config::beta_grid(b)?;
        }
        if let Some(e) = &self.eps {
            cfg.epsilons = config::eps_list(e)?;
        }
        if let Some(s) = &self.slice {
            cfg.slice = Some(config::slice_spec(s)?);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate().context("invalid configuration")?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = cli.resolve()?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    match cli.command {
        Command::Analyze => commands::analyze(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Scan => commands::scan(&cfg),
        Command::Frame => commands::frame(&cfg),
    }
}
