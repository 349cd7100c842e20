//! The JSON solution document.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use swipt_core::{DiscreteAmplitudeDistribution, EvenPolynomial, OopProblem, Problem, RdpProblem, Solution, SolverConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemDoc {
    Rdp { pa: f64, pd: f64, rp: f64, g: Vec<f64> },
    /// `au: null` stands for an unbounded window.
    Oop { pa: f64, rp: f64, al: f64, au: Option<f64>, eps: f64 },
}

impl ProblemDoc {
    pub fn from_problem(p: &Problem) -> Self {
        match p {
            Problem::Rdp(r) => ProblemDoc::Rdp { pa: r.pa, pd: r.pd, rp: r.rp, g: r.g.alphas().to_vec() },
            Problem::Oop(o) => ProblemDoc::Oop {
                pa: o.pa,
                rp: o.rp,
                al: o.al,
                au: o.au.is_finite().then_some(o.au),
                eps: o.eps,
            },
        }
    }

    pub fn to_problem(&self) -> swipt_core::Result<Problem> {
        Ok(match self {
            ProblemDoc::Rdp { pa, pd, rp, g } => RdpProblem::new(*pa, *pd, *rp, EvenPolynomial::new(g.clone())?)?.into(),
            ProblemDoc::Oop { pa, rp, al, au, eps } => {
                OopProblem::new(*pa, *rp, *al, au.unwrap_or(f64::INFINITY), *eps)?.into()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipliersDoc {
    /// Average-power multiplier.
    pub power: f64,
    /// Delivered-power or coverage multiplier.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktDoc {
    /// Largest |Φ| on the support.
    pub residual: f64,
    /// Largest Φ on the refined grid of [0, r_p].
    pub violation: f64,
    pub passed: bool,
    pub grid_points: usize,
    pub argmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub seed: u64,
    pub m_max: usize,
    pub restarts: usize,
    pub tol_kkt: f64,
    pub kkt_grid: usize,
    pub tol_constraint: f64,
}

impl ConfigDoc {
    pub fn from_config(c: &SolverConfig) -> Self {
        ConfigDoc {
            seed: c.seed,
            m_max: c.m_max,
            restarts: c.restarts,
            tol_kkt: c.tol_eq.max(c.tol_ineq),
            kkt_grid: c.kkt_grid,
            tol_constraint: c.tol_constraint,
        }
    }

    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            m_max: self.m_max,
            restarts: self.restarts,
            tol_eq: self.tol_kkt,
            tol_ineq: self.tol_kkt,
            kkt_grid: self.kkt_grid,
            tol_constraint: self.tol_constraint,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub problem: ProblemDoc,
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    pub mi_nats: f64,
    pub mi_bits: f64,
    pub average_power: f64,
    pub floor_value: f64,
    pub at_feasibility_wall: bool,
    pub multipliers: MultipliersDoc,
    pub kkt: KktDoc,
    pub config: ConfigDoc,
    pub version: String,
}

impl SolutionDoc {
    pub fn from_solution(s: &Solution) -> Self {
        SolutionDoc {
            problem: ProblemDoc::from_problem(&s.problem),
            points: s.distribution.points().to_vec(),
            probs: s.distribution.probs().to_vec(),
            mi_nats: s.mi_nats,
            mi_bits: s.mi_nats / std::f64::consts::LN_2,
            average_power: s.average_power,
            floor_value: s.floor_value,
            at_feasibility_wall: s.at_feasibility_wall,
            multipliers: MultipliersDoc { power: s.kkt.multipliers.power, floor: s.kkt.multipliers.floor },
            kkt: KktDoc {
                residual: s.kkt.max_support_residual,
                violation: s.kkt.max_grid_violation,
                passed: s.kkt.passed,
                grid_points: s.kkt.grid_points,
                argmax: s.kkt.argmax,
            },
            config: ConfigDoc::from_config(&s.config),
            version: VERSION.to_string(),
        }
    }

    pub fn distribution(&self) -> swipt_core::Result<DiscreteAmplitudeDistribution> {
        DiscreteAmplitudeDistribution::new(self.points.clone(), self.probs.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("finite values serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: SolutionDoc =
            serde_json::from_str(&text).with_context(|| format!("parsing solution document {}", path.display()))?;
        if doc.points.len() != doc.probs.len() {
            bail!("solution document has {} points but {} probabilities", doc.points.len(), doc.probs.len());
        }
        Ok(doc)
    }
}
