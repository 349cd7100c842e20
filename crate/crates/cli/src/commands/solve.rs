use std::fmt::Write;
use std::time::Instant;

use swipt_core::{solver, Error, Problem, Solution, SolverConfig};

use crate::args::{oop_problem, rdp_problem, ProblemKind, SolveArgs};
use crate::doc::SolutionDoc;
use crate::{Exit, Failure};

/// Solves `problem`, turning an empty constraint set into an exit-2 failure
/// that names the largest feasible floor.
pub fn solve(problem: &Problem, config: &SolverConfig, warm: Option<&swipt_core::DiscreteAmplitudeDistribution>) -> Result<Solution, Failure> {
    solver::solve(problem, config, warm).map_err(|e| match e {
        Error::Infeasible { requested, bound, .. } => {
            let name = match problem {
                Problem::Rdp(_) => "feasible_pd_max",
                Problem::Oop(_) => "feasible_coverage_max",
            };
            Failure {
                code: Exit::Infeasible,
                error: anyhow::anyhow!("infeasible: requested floor {requested} exceeds {name} = {bound:.6}"),
            }
        }
        other => other.into(),
    })
}

pub fn summary(s: &Solution) -> String {
    let mut out = String::new();
    let (m1, m2) = match s.problem {
        Problem::Rdp(_) => ("mu1", "mu2"),
        Problem::Oop(_) => ("lambda1", "lambda2"),
    };
    let _ = writeln!(out, "mutual information: {:.9} nats = {:.9} bits", s.mi_nats, s.mi_nats / std::f64::consts::LN_2);
    let _ = writeln!(out, "support ({} points):", s.distribution.len());
    for (r, p) in s.distribution.iter() {
        let _ = writeln!(out, "  r = {r:>12.8}  p = {p:.10}");
    }
    let _ = writeln!(out, "E[r^2] = {:.10}, floor functional = {:.10}", s.average_power, s.floor_value);
    let _ = writeln!(out, "{m1} = {:.10}, {m2} = {:.10}", s.kkt.multipliers.power, s.kkt.multipliers.floor);
    let _ = writeln!(
        out,
        "KKT {}: support residual {:.3e}, grid violation {:.3e} at r = {:.6} ({} points)",
        if s.kkt.passed { "passed" } else { "NOT VERIFIED" },
        s.kkt.max_support_residual,
        s.kkt.max_grid_violation,
        s.kkt.argmax,
        s.kkt.grid_points
    );
    if s.at_feasibility_wall {
        let _ = writeln!(out, "floor equals its largest feasible value; the law is forced");
    }
    out
}

pub fn run(args: SolveArgs) -> Result<Exit, Failure> {
    let (problem, common) = match args.kind {
        ProblemKind::Rdp { rdp, pd, common } => (rdp_problem(&rdp, pd)?, common),
        ProblemKind::Oop { oop, eps, common } => (oop_problem(&oop, eps)?, common),
    };
    let start = Instant::now();
    let sol = solve(&problem, &common.config(), None)?;
    let json = SolutionDoc::from_solution(&sol).to_json();
    let mut text = summary(&sol);
    if common.timing {
        let _ = writeln!(text, "runtime: {:.3} s", start.elapsed().as_secs_f64());
    }
    match &common.out {
        Some(path) => {
            std::fs::write(path, json)?;
            print!("{text}");
        }
        None => {
            eprint!("{text}");
            print!("{json}");
        }
    }
    Ok(if sol.kkt.passed { Exit::Ok } else { Exit::Unverified })
}
