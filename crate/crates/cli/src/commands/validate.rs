use swipt_core::channel::{entropy_h, log_kernel, marginal_entropy_density, mutual_information};
use swipt_core::constraints::average_power;
use swipt_core::mc_oracle::estimate_mi;
use swipt_core::quadrature::{integrate, QuadOptions};
use swipt_core::solver::{self, entropy_gradient, restart_seed};
use swipt_core::specfun::{log_bessel_i0, marcum_q1};
use swipt_core::{DiscreteAmplitudeDistribution, EvenPolynomial, OopProblem, Problem, RdpProblem, SolverConfig};

use crate::args::ValidateArgs;
use crate::doc::SolutionDoc;
use crate::{Exit, Failure};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

fn kernel_normalization() -> Check {
    let opts = QuadOptions { abs_tol: 1e-13, ..QuadOptions::default() };
    let mut worst: f64 = 0.0;
    for k in 0..=20 {
        let r = 0.5 * k as f64;
        let total = integrate(|x| if x > 0.0 { log_kernel(x, r).map_or(0.0, f64::exp) } else { 0.0 }, 0.0, r + 12.0, &opts)
            .map_or(f64::INFINITY, |q| q.value);
        worst = worst.max((total - 1.0).abs());
    }
    Check::new("kernel_normalization", worst < 1e-10, format!("max |∫K − 1| = {worst:.2e}"))
}

/// Deterministic laws for the gradient check, drawn from the restart
/// seed sequence.
fn test_laws(seed: u64, count: usize) -> Vec<DiscreteAmplitudeDistribution> {
    (0..count)
        .map(|k| {
            let mut s = restart_seed(seed, 1000, k);
            let mut next = || {
                s = restart_seed(s, 1001, k);
                (s >> 11) as f64 / (1u64 << 53) as f64
            };
            let m = 1 + (next() * 4.0) as usize;
            let mut pts: Vec<f64> = (0..m).map(|i| 0.1 + 1.1 * i as f64 + 0.8 * next()).collect();
            pts.sort_by(f64::total_cmp);
            let w: Vec<f64> = pts.iter().map(|_| 0.2 + next()).collect();
            let t: f64 = w.iter().sum();
            DiscreteAmplitudeDistribution::new(pts, w.iter().map(|x| x / t).collect()).expect("valid law")
        })
        .collect()
}

fn gradient(seed: u64) -> Check {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for law in test_laws(seed, 5) {
        let Ok((_, dr)) = entropy_gradient(&law) else {
            return Check::new("gradient", false, "gradient evaluation failed".into());
        };
        for i in 0..law.len() {
            let shifted = |d: f64| {
                let mut p = law.points().to_vec();
                p[i] += d;
                entropy_h(&DiscreteAmplitudeDistribution::new(p, law.probs().to_vec()).expect("valid law")).unwrap_or(f64::NAN)
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            worst = worst.max((fd - dr[i]).abs() / dr[i].abs().max(1e-2));
        }
    }
    Check::new("gradient", worst < 1e-5, format!("max relative error vs central differences {worst:.2e}"))
}

fn marcum() -> Check {
    let mut worst: f64 = 0.0;
    for &x in &[0.2, 1.0, 2.5, 6.0] {
        worst = worst.max((marcum_q1(x, 0.0).unwrap_or(f64::NAN) - 1.0).abs());
        worst = worst.max((marcum_q1(0.0, x).unwrap_or(f64::NAN) - (-x * x / 2.0).exp()).abs());
        let want = 0.5 * (1.0 + (log_bessel_i0(x * x).unwrap_or(f64::NAN) - x * x).exp());
        worst = worst.max((marcum_q1(x, x).unwrap_or(f64::NAN) - want).abs());
    }
    Check::new("marcum_identities", worst < 1e-8, format!("max deviation {worst:.2e}"))
}

fn marginal_bound(seed: u64) -> Check {
    let mut lowest = f64::INFINITY;
    for law in test_laws(seed, 5) {
        for i in 0..50 {
            let r = 8.0 * i as f64 / 49.0;
            lowest = lowest.min(marginal_entropy_density(r, &law).unwrap_or(f64::NEG_INFINITY));
        }
    }
    Check::new("marginal_lower_bound", lowest > -2.0, format!("min h(r) = {lowest:.6}"))
}

pub fn invariant_checks(seed: u64) -> Vec<Check> {
    vec![kernel_normalization(), gradient(seed), marcum(), marginal_bound(seed)]
}

/// Checks a solution document against its own problem: feasibility,
/// reported MI, the optimality certificate and the Monte-Carlo MI.
pub fn solution_checks(label: &str, doc: &SolutionDoc, mc_samples: u64, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let name = |s: &str| format!("{label}.{s}");
    let (problem, law) = match (doc.problem.to_problem(), doc.distribution()) {
        (Ok(p), Ok(d)) => (p, d),
        (Err(e), _) | (_, Err(e)) => {
            out.push(Check::new(name("document"), false, e.to_string()));
            return out;
        }
    };
    let power = average_power(&law);
    let floor = problem.floor_value(&law);
    let tol = 1e-7;
    let ok = power <= problem.pa() * (1.0 + tol)
        && floor >= problem.floor() - tol * problem.floor().max(1.0)
        && law.max_point() <= problem.rp() + 1e-12;
    out.push(Check::new(
        name("constraints"),
        ok,
        format!("E[r²] = {power:.10} (P_a {}), floor {floor:.10} (need {}), max r {}", problem.pa(), problem.floor(), law.max_point()),
    ));
    match mutual_information(&law) {
        Ok(mi) => out.push(Check::new(
            name("mi"),
            (mi - doc.mi_nats).abs() <= 1e-8,
            format!("recomputed {mi:.12} vs reported {:.12}", doc.mi_nats),
        )),
        Err(e) => out.push(Check::new(name("mi"), false, e.to_string())),
    }
    match solver::certify(&law, &problem, &doc.config.to_config()) {
        Ok(rep) => out.push(Check::new(
            name("kkt"),
            rep.passed && doc.kkt.passed,
            format!(
                "support residual {:.3e}, grid violation {:.3e} at r = {:.6}, reported passed = {}",
                rep.max_support_residual, rep.max_grid_violation, rep.argmax, doc.kkt.passed
            ),
        )),
        Err(e) => out.push(Check::new(name("kkt"), false, e.to_string())),
    }
    match estimate_mi(&law, mc_samples, seed) {
        Ok(e) => {
            let allowed = (3.0 * e.std_error).max(5e-3);
            out.push(Check::new(
                name("mc_mi"),
                (e.mean - doc.mi_nats).abs() <= allowed,
                format!("Monte-Carlo {:.6} ± {:.1e} vs {:.6} ({} samples)", e.mean, e.std_error, doc.mi_nats, mc_samples),
            ))
        }
        Err(e) => out.push(Check::new(name("mc_mi"), false, e.to_string())),
    }
    out
}

/// Small problems solved when no solution file is given.
fn default_solutions() -> Result<Vec<(String, SolutionDoc)>, Failure> {
    let cfg = SolverConfig { restarts: 5, ..SolverConfig::default() };
    let g = EvenPolynomial::new(vec![0.01, 0.01, 0.01])?;
    let problems: Vec<(&str, Problem)> = vec![
        ("rdp", RdpProblem::new(5.0, 0.7, 4.0, g)?.into()),
        ("oop", OopProblem::new(10.0, 5.0, 1.0, 4.0, 0.7)?.into()),
    ];
    problems
        .into_iter()
        .map(|(label, p)| Ok((label.to_string(), SolutionDoc::from_solution(&solver::solve(&p, &cfg, None)?))))
        .collect()
}

pub fn run(args: ValidateArgs) -> Result<Exit, Failure> {
    let mut checks = invariant_checks(args.seed);
    let docs = match &args.solution {
        Some(path) => vec![("solution".to_string(), SolutionDoc::read(path)?)],
        None => default_solutions()?,
    };
    for (label, doc) in &docs {
        checks.extend(solution_checks(label, doc, args.mc_samples, args.seed));
    }
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(Exit::Ok)
    } else {
        eprintln!("validation failed: {}", failed.join(", "));
        Ok(Exit::Validation)
    }
}
