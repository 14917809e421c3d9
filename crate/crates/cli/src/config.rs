use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "amvp-lab", version, about = "Adaptive minimum-risk portfolios and shadow risk-free rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-asset return statistics
    Summary(Flags),
    /// Long-only efficient frontier
    Frontier(Flags),
    /// Adaptive minimum-variance loop on historical returns
    Amvp(Flags),
    /// Adaptive minimum-CVaR loop on scenarios or historical returns
    Amcvar(Flags),
    /// Fit ARFIMA-FIGARCH/NIG models and simulate a scenario panel
    Simulate(Flags),
    /// Rolling-window AMRR series
    Amrr(Flags),
    /// Chow structural-break scan of a rate series
    Chow(Flags),
    /// Long-memory (d_v, Hurst) estimate of a rate series
    Lrd(Flags),
    /// Per-iteration frontiers and the capital market line
    Report(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Summary(_) => "summary",
            Command::Frontier(_) => "frontier",
            Command::Amvp(_) => "amvp",
            Command::Amcvar(_) => "amcvar",
            Command::Simulate(_) => "simulate",
            Command::Amrr(_) => "amrr",
            Command::Chow(_) => "chow",
            Command::Lrd(_) => "lrd",
            Command::Report(_) => "report",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Summary(f)
            | Command::Frontier(f)
            | Command::Amvp(f)
            | Command::Amcvar(f)
            | Command::Simulate(f)
            | Command::Amrr(f)
            | Command::Chow(f)
            | Command::Lrd(f)
            | Command::Report(f) => f,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Input CSV (prices, scenarios or a rate series depending on the subcommand)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Periods per year: 252 (trading days) or 365 (calendar days)
    #[arg(long)]
    pub calendar: Option<u32>,
    /// Convergence threshold on the change in risk
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// CVaR confidence level
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Rolling window length in periods
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Simulated periods per path
    #[arg(long)]
    pub t_len: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Use only the first solve of each rolling window
    #[arg(long)]
    pub single_shot: bool,
    /// Bonferroni-adjust Chow p-values
    #[arg(long)]
    pub bonferroni: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub calendar: u32,
    /// Defaults to 1e-20 for historical runs and 1e-6 for scenario runs.
    pub epsilon: Option<f64>,
    pub max_iterations: usize,
    pub alpha: f64,
    pub window: usize,
    pub seed: u64,
    pub t_len: usize,
    pub paths: usize,
    pub out: Option<PathBuf>,
    pub single_shot: bool,
    pub bonferroni: bool,
    pub frontier_points: usize,
    /// Chow trimming; defaults to max(30, ceil(0.1 n)).
    pub min_segment: Option<usize>,
    /// Apply sign(x)·ln(1+|x|) before the long-memory fit.
    pub log_transform: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            calendar: 252,
            epsilon: None,
            max_iterations: amvp_core::adaptive::DEFAULT_MAX_ITERATIONS,
            alpha: amvp_core::adaptive::DEFAULT_ALPHA,
            window: 252,
            seed: 0,
            t_len: 2000,
            paths: 1,
            out: None,
            single_shot: false,
            bonferroni: false,
            frontier_points: amvp_core::optimize::DEFAULT_FRONTIER_POINTS,
            min_segment: None,
            log_transform: true,
        }
    }
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &flags.$f { cfg.$f = v.clone().into(); } )* };
        }
        take!(input, out, epsilon);
        macro_rules! take_plain {
            ($($f:ident),*) => { $( if let Some(v) = flags.$f { cfg.$f = v; } )* };
        }
        take_plain!(calendar, alpha, window, seed, max_iterations, t_len, paths);
        cfg.single_shot |= flags.single_shot;
        cfg.bonferroni |= flags.bonferroni;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.calendar != 252 && self.calendar != 365 {
            return bad(format!("--calendar must be 252 or 365, got {}", self.calendar));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("--epsilon must be > 0, got {e}"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("--alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.max_iterations < 1 {
            return bad("--max-iterations must be at least 1".into());
        }
        if self.window < 3 {
            return bad(format!("--window must be at least 3, got {}", self.window));
        }
        if self.t_len < 1 || self.paths < 1 {
            return bad("--t-len and --paths must be at least 1".into());
        }
        if self.frontier_points < 2 {
            return bad("frontier_points must be at least 2".into());
        }
        if self.input.is_none() {
            return bad("--input is required".into());
        }
        if self.out.is_none() {
            return bad("--out is required".into());
        }
        Ok(())
    }

    pub fn input(&self) -> &Path {
        self.input.as_deref().expect("validated")
    }

    pub fn out(&self) -> &Path {
        self.out.as_deref().expect("validated")
    }
}
