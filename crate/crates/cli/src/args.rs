use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use swipt_core::{EvenPolynomial, OopProblem, Problem, RdpProblem, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "swipt", version, about = "Capacity-achieving amplitude inputs under energy-harvesting constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write a JSON solution document.
    Solve(SolveArgs),
    /// Sweep the floor parameter and write CSV.
    Sweep(SweepArgs),
    /// Print closed-form reference values.
    Baseline(BaselineArgs),
    /// Run the invariant suite, optionally against a solution file.
    Validate(ValidateArgs),
    /// Monte-Carlo estimates for a law.
    Mc(McArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(subcommand)]
    pub kind: ProblemKind,
}

#[derive(Debug, Subcommand)]
pub enum ProblemKind {
    /// Average power, peak amplitude and delivered power.
    Rdp {
        #[command(flatten)]
        rdp: RdpArgs,
        /// Delivered-power floor.
        #[arg(long, default_value_t = 0.0)]
        pd: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Average power, peak amplitude and output coverage.
    Oop {
        #[command(flatten)]
        oop: OopArgs,
        /// Required coverage probability.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Clone)]
pub struct RdpArgs {
    #[arg(long)]
    pub pa: f64,
    #[arg(long)]
    pub rp: f64,
    /// Coefficients α_0, α_1, ... of g(r) = Σ α_i r^{2i}.
    #[arg(long, value_delimiter = ',', required = true)]
    pub g: Vec<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct OopArgs {
    #[arg(long)]
    pub pa: f64,
    #[arg(long)]
    pub rp: f64,
    #[arg(long)]
    pub al: f64,
    #[arg(long)]
    pub au: f64,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub m_max: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Tolerance of both certificate checks.
    #[arg(long, default_value_t = 1e-4)]
    pub tol_kkt: f64,
    /// Record wall-clock times (outputs are then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl Common {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            m_max: self.m_max,
            restarts: self.restarts,
            tol_eq: self.tol_kkt,
            tol_ineq: self.tol_kkt,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(subcommand)]
    pub kind: SweepKind,
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// Sweep the delivered-power floor.
    Rdp {
        #[command(flatten)]
        rdp: RdpArgs,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the coverage requirement.
    Oop {
        #[command(flatten)]
        oop: OopArgs,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Clone)]
pub struct Range {
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    /// Number of swept values, endpoints included.
    #[arg(long)]
    pub steps: usize,
    /// Solve points independently instead of warm-starting.
    #[arg(long)]
    pub parallel: bool,
}

impl Range {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        if !(self.from <= self.to) || self.steps == 0 {
            anyhow::bail!("need from ≤ to and steps ≥ 1, got {}..{} in {} steps", self.from, self.to, self.steps);
        }
        if self.steps == 1 {
            return Ok(vec![self.from]);
        }
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| if k + 1 == self.steps { self.to } else { self.from + (self.to - self.from) * k as f64 / n })
            .collect())
    }
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub pa: f64,
    #[arg(long, value_delimiter = ',')]
    pub g: Option<Vec<f64>>,
    #[arg(long)]
    pub rp: Option<f64>,
    #[arg(long)]
    pub pd: Option<f64>,
    /// Tail indices of the time-sharing table.
    #[arg(long, value_delimiter = ',', default_value = "2,8,32,128")]
    pub ts_l: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Solution document to check; without one a few small problems are solved.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Take the law from a solution document.
    #[arg(long, conflicts_with_all = ["points", "probs"])]
    pub solution: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', requires = "probs")]
    pub points: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "points")]
    pub probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also estimate the coverage of [A_l, A_u].
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn rdp_problem(a: &RdpArgs, pd: f64) -> swipt_core::Result<Problem> {
    Ok(RdpProblem::new(a.pa, pd, a.rp, EvenPolynomial::new(a.g.clone())?)?.into())
}

pub fn oop_problem(a: &OopArgs, eps: f64) -> swipt_core::Result<Problem> {
    Ok(OopProblem::new(a.pa, a.rp, a.al, a.au, eps)?.into())
}
