//! Capacity-achieving input search for a finite peak amplitude.
//!
//! The optimal law is discrete with finitely many mass points. For each
//! support size `m = m_init, m_init + 1, …` the solver runs seeded random
//! restarts of an augmented-Lagrangian ascent on `H(F)`, polishes the best
//! candidate and tries to certify it with the KKT conditions. Since `I(F)`
//! is concave and the constraints are linear in `F`, a passing certificate
//! proves global optimality and ends the search.

mod kkt;
mod newton;
mod optimizer;

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::channel::{self, DiscreteAmplitudeDistribution, OutputGrid};
use crate::constraints::{average_power, Problem};
use crate::{Error, Result};

pub use kkt::{recover_multipliers, verify_kkt, KktReport, Multipliers, MULTIPLIER_FLOOR, REFINEMENT};

use optimizer::{AlOptions, AlResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub m_init: usize,
    pub m_max: usize,
    pub restarts: usize,
    pub kkt_grid: usize,
    pub tol_eq: f64,
    pub tol_ineq: f64,
    pub tol_constraint: f64,
    /// A constraint with slack below this (relative) counts as active when
    /// recovering multipliers.
    pub tol_active: f64,
    pub prune_prob: f64,
    pub merge_distance: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m_init: 2,
            m_max: 12,
            restarts: 50,
            kkt_grid: 2000,
            tol_eq: 1e-4,
            tol_ineq: 1e-4,
            tol_constraint: 1e-8,
            tol_active: 1e-6,
            prune_prob: 1e-6,
            merge_distance: 1e-4,
            seed: 1,
        }
    }
}

impl SolverConfig {
    fn check(&self) -> Result<()> {
        if self.m_init == 0 || self.m_max < self.m_init {
            return Err(Error::domain(alloc::format!(
                "need 1 ≤ m_init ≤ m_max, got {} and {}",
                self.m_init,
                self.m_max
            )));
        }
        if self.restarts == 0 || self.kkt_grid < 2 {
            return Err(Error::domain("restarts must be positive and the KKT grid at least 2"));
        }
        if !(self.tol_eq > 0.0 && self.tol_ineq > 0.0 && self.tol_constraint > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        Ok(())
    }
}

/// One local ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub distribution: DiscreteAmplitudeDistribution,
    /// `H(F) − 1` on the optimizer's integration grid.
    pub mi_nats: f64,
    /// Largest constraint violation, in the constraint's own units.
    pub violation: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Summary of one support size.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub m: usize,
    pub restarts: usize,
    /// Restart whose polished law was kept; `None` when the law grown from
    /// the previous level won.
    pub best_restart: Option<usize>,
    /// Support size and mutual information after polishing.
    pub polished_m: usize,
    pub mi_nats: f64,
    pub kkt_passed: bool,
    pub max_support_residual: f64,
    pub max_grid_violation: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub problem: Problem,
    pub distribution: DiscreteAmplitudeDistribution,
    pub mi_nats: f64,
    pub kkt: KktReport,
    pub average_power: f64,
    /// `E[g(r)]` or the coverage, whichever the problem constrains.
    pub floor_value: f64,
    pub config: SolverConfig,
    /// The law was forced because the floor sits at its largest feasible value.
    pub at_feasibility_wall: bool,
    pub trace: Vec<LevelTrace>,
}

impl Solution {
    pub fn support_size(&self) -> usize {
        self.distribution.len()
    }
}

fn restart_options(tol_constraint: f64) -> AlOptions {
    AlOptions { tol_grad: 1e-4, tol_constraint: tol_constraint.max(1e-6), max_outer: 8, max_inner: 120 }
}

fn polish_options(tol_constraint: f64) -> AlOptions {
    AlOptions { tol_grad: 1e-6, tol_constraint, max_outer: 15, max_inner: 400 }
}

/// Largest violation of the power and floor constraints.
fn violation(problem: &Problem, dist: &DiscreteAmplitudeDistribution) -> f64 {
    let power = (average_power(dist) - problem.pa()).max(0.0);
    let floor = problem.floor();
    let short = if floor > 0.0 { (floor - problem.floor_value(dist)).max(0.0) } else { 0.0 };
    power.max(short)
}

/// `∂H/∂p_i` (free coordinates, `h(r_i) − 1`) and `∂H/∂r_i`.
pub fn entropy_gradient(dist: &DiscreteAmplitudeDistribution) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = OutputGrid::new(dist.max_point());
    let ev = grid.evaluate(dist.points(), dist.probs(), true);
    Ok((ev.marginal.iter().map(|h| h - 1.0).collect(), ev.d_points))
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of restart `k` at support size `m`.
pub fn restart_seed(base: u64, m: usize, k: usize) -> u64 {
    mix(mix(base) ^ mix(((m as u64) << 32) | k as u64))
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Random start: uniform locations in `[0, r_p]` pulled inside the power
/// budget, flat Dirichlet masses.
fn random_start(problem: &Problem, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rp = problem.rp();
    let mut points: Vec<f64> = (0..m).map(|_| rp * unit(&mut rng)).collect();
    let mut probs: Vec<f64> = (0..m).map(|_| -libm::log(unit(&mut rng))).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let power: f64 = points.iter().zip(&probs).map(|(r, p)| p * r * r).sum();
    if power > problem.pa() {
        let s = libm::sqrt(0.9 * problem.pa() / power);
        points.iter_mut().for_each(|r| *r *= s);
    }
    (points, probs)
}

fn to_candidate(res: AlResult) -> Candidate {
    let distribution = DiscreteAmplitudeDistribution::from_masses(res.points.into_iter().zip(res.probs))
        .expect("optimizer keeps masses on the simplex");
    Candidate {
        distribution,
        mi_nats: res.entropy - 1.0,
        violation: res.violation,
        converged: res.converged,
        evaluations: res.evaluations,
    }
}

/// One seeded local ascent with `m` mass points.
pub fn maximize_entropy(problem: &Problem, m: usize, seed: u64, config: &SolverConfig) -> Result<Candidate> {
    check_peak(problem)?;
    if m == 0 {
        return Err(Error::domain("need at least one mass point"));
    }
    let grid = OutputGrid::new(problem.rp());
    let (points, probs) = random_start(problem, m, seed);
    Ok(to_candidate(optimizer::maximize(problem, &grid, &points, &probs, &restart_options(config.tol_constraint))))
}

fn check_peak(problem: &Problem) -> Result<()> {
    if !problem.rp().is_finite() {
        return Err(Error::domain(
            "the solver needs a finite peak amplitude; see the theory module for r_p = ∞",
        ));
    }
    Ok(())
}

/// Drops tiny masses and merges near-coincident points.
pub fn prune(dist: &DiscreteAmplitudeDistribution, min_prob: f64, merge_distance: f64) -> DiscreteAmplitudeDistribution {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (r, p) in dist.iter().filter(|&(_, p)| p >= min_prob) {
        // H is flat in r at the origin, so round-off there is snapped away
        let r = if r < 1e-12 { 0.0 } else { r };
        match merged.last_mut() {
            Some((r0, p0)) if r - *r0 < merge_distance => {
                *r0 = (*r0 * *p0 + r * p) / (*p0 + p);
                *p0 += p;
            }
            _ => merged.push((r, p)),
        }
    }
    if merged.is_empty() {
        return dist.clone();
    }
    DiscreteAmplitudeDistribution::from_masses(merged).expect("nonempty positive masses")
}

/// Orders candidates best first: feasible, higher MI, fewer points, then
/// lexicographically smaller support.
fn compare(a: &Candidate, b: &Candidate, tol: f64) -> Ordering {
    let fa = a.violation <= tol;
    let fb = b.violation <= tol;
    fb.cmp(&fa)
        .then_with(|| {
            if !fa {
                return a.violation.total_cmp(&b.violation);
            }
            if (a.mi_nats - b.mi_nats).abs() > 1e-10 {
                b.mi_nats.total_cmp(&a.mi_nats)
            } else {
                Ordering::Equal
            }
        })
        .then_with(|| a.distribution.len().cmp(&b.distribution.len()))
        .then_with(|| {
            for (x, y) in a.distribution.points().iter().zip(b.distribution.points()) {
                match x.total_cmp(y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
        .then_with(|| b.mi_nats.total_cmp(&a.mi_nats))
}

#[derive(Clone)]
struct Polished {
    candidate: Candidate,
    kkt: KktReport,
}

fn polish(problem: &Problem, grid: &OutputGrid, start: &DiscreteAmplitudeDistribution, config: &SolverConfig) -> Result<Polished> {
    let opts = polish_options(config.tol_constraint);
    let dist = prune(start, config.prune_prob, config.merge_distance);
    let res = optimizer::maximize(problem, grid, dist.points(), dist.probs(), &opts);
    let mut cand = to_candidate(res);
    cand.distribution = prune(&cand.distribution, config.prune_prob, config.merge_distance);

    let active = kkt::activity(&cand.distribution, problem, config.tol_active);
    if let Some(nr) =
        newton::refine(problem, grid, cand.distribution.points(), cand.distribution.probs(), active)
    {
        cand.evaluations += nr.evaluations;
        if let Ok(d) = DiscreteAmplitudeDistribution::from_masses(nr.points.into_iter().zip(nr.probs)) {
            let v = violation(problem, &d);
            if v <= config.tol_constraint && nr.entropy - 1.0 >= cand.mi_nats - 1e-9 {
                cand = Candidate { distribution: d, mi_nats: nr.entropy - 1.0, violation: v, converged: true, ..cand };
            }
        }
    }
    let kkt = kkt::certify(
        &cand.distribution,
        problem,
        config.tol_active,
        config.kkt_grid,
        config.tol_eq,
        config.tol_ineq,
    )?;
    Ok(Polished { candidate: cand, kkt })
}

/// Previous level's law plus new points at the largest positive peaks of
/// its certificate function.
fn grown(prev: &Polished, m: usize, tol: f64) -> Option<DiscreteAmplitudeDistribution> {
    let law = &prev.candidate.distribution;
    if law.len() >= m {
        return None;
    }
    let new: Vec<f64> = prev
        .kkt
        .peaks
        .iter()
        .filter(|&&(r, v)| v > 0.1 * tol && law.points().iter().all(|&x| (x - r).abs() > 0.05))
        .map(|&(r, _)| r)
        .take(m - law.len())
        .collect();
    if new.is_empty() {
        return None;
    }
    let mass = 0.02;
    let keep = 1.0 - mass * new.len() as f64;
    DiscreteAmplitudeDistribution::from_masses(
        law.iter().map(|(r, p)| (r, p * keep)).chain(new.into_iter().map(|r| (r, mass))),
    )
    .ok()
}

fn finish(
    problem: &Problem,
    polished: Polished,
    config: &SolverConfig,
    wall: bool,
    trace: Vec<LevelTrace>,
) -> Result<Solution> {
    let dist = polished.candidate.distribution;
    Ok(Solution {
        mi_nats: channel::mutual_information(&dist)?,
        average_power: average_power(&dist),
        floor_value: problem.floor_value(&dist),
        problem: problem.clone(),
        distribution: dist,
        kkt: polished.kkt,
        config: config.clone(),
        at_feasibility_wall: wall,
        trace,
    })
}

/// Checks that the floor is attainable. Returns the forced law when the
/// floor equals its largest feasible value.
fn feasibility(problem: &Problem) -> Result<Option<DiscreteAmplitudeDistribution>> {
    let floor = problem.floor();
    if floor <= 0.0 {
        return Ok(None);
    }
    let best = problem.floor_max();
    let slack = 1e-9 * floor.max(1.0);
    if floor > best.value + slack {
        return Err(Error::Infeasible { constraint: problem.floor_name(), requested: floor, bound: best.value });
    }
    if floor >= best.value - slack {
        return Ok(Some(best.law));
    }
    Ok(None)
}

/// Recovers multipliers for `dist` and checks the optimality conditions
/// with the tolerances and grid of `config`.
pub fn certify(dist: &DiscreteAmplitudeDistribution, problem: &Problem, config: &SolverConfig) -> Result<KktReport> {
    config.check()?;
    kkt::certify(dist, problem, config.tol_active, config.kkt_grid, config.tol_eq, config.tol_ineq)
}

/// Searches for the capacity-achieving input, certifying the result with
/// the KKT conditions. A `warm_start` is polished and certified first.
///
/// A solution whose certificate fails is still returned, with
/// `kkt.passed == false`, holding the best law found.
pub fn solve(problem: &Problem, config: &SolverConfig, warm_start: Option<&DiscreteAmplitudeDistribution>) -> Result<Solution> {
    config.check()?;
    check_peak(problem)?;
    if let Some(law) = feasibility(problem)? {
        let kkt = kkt::certify(&law, problem, config.tol_active, config.kkt_grid, config.tol_eq, config.tol_ineq)?;
        let mi = channel::mutual_information(&law)?;
        let polished = Polished {
            candidate: Candidate { distribution: law, mi_nats: mi, violation: 0.0, converged: true, evaluations: 0 },
            kkt,
        };
        return finish(problem, polished, config, true, Vec::new());
    }

    let grid = OutputGrid::new(problem.rp());
    let mut trace = Vec::new();
    let mut best: Option<Polished> = None;
    let feasible_tol = 10.0 * config.tol_constraint;

    let keep = |p: Polished, best: &mut Option<Polished>| {
        let better = match best {
            None => true,
            Some(b) => compare(&p.candidate, &b.candidate, feasible_tol) == Ordering::Less,
        };
        if better {
            *best = Some(p);
        }
    };

    if let Some(ws) = warm_start {
        let p = polish(problem, &grid, ws, config)?;
        trace.push(LevelTrace {
            m: ws.len(),
            restarts: 0,
            best_restart: None,
            polished_m: p.candidate.distribution.len(),
            mi_nats: p.candidate.mi_nats,
            kkt_passed: p.kkt.passed,
            max_support_residual: p.kkt.max_support_residual,
            max_grid_violation: p.kkt.max_grid_violation,
            evaluations: p.candidate.evaluations,
        });
        if p.kkt.passed {
            return finish(problem, p, config, false, trace);
        }
        keep(p, &mut best);
    }

    let mut previous: Option<Polished> = None;
    for m in config.m_init..=config.m_max {
        let mut level_best: Option<(Option<usize>, Candidate)> = None;
        let mut evaluations = 0;
        let restart_tol = 10.0 * restart_options(config.tol_constraint).tol_constraint;
        let offer = |k: Option<usize>, cand: Candidate, level_best: &mut Option<(Option<usize>, Candidate)>| {
            let cand = Candidate {
                distribution: prune(&cand.distribution, config.prune_prob, config.merge_distance),
                ..cand
            };
            let better = match level_best {
                None => true,
                Some((_, b)) => compare(&cand, b, restart_tol) == Ordering::Less,
            };
            if better {
                *level_best = Some((k, cand));
            }
        };
        for k in 0..config.restarts {
            let cand = maximize_entropy(problem, m, restart_seed(config.seed, m, k), config)?;
            evaluations += cand.evaluations;
            offer(Some(k), cand, &mut level_best);
        }
        let (k, start) = level_best.expect("at least one restart");
        let mut p = polish(problem, &grid, &start.distribution, config)?;
        let mut winner = k;
        // the grown law is already close to a KKT point, so it skips the
        // loose restart pass and goes straight to the polish
        if let Some(start) = previous.as_ref().and_then(|prev| grown(prev, m, config.tol_ineq)) {
            let q = polish(problem, &grid, &start, config)?;
            evaluations += q.candidate.evaluations;
            let q_wins = match (q.kkt.passed, p.kkt.passed) {
                (true, false) => true,
                (false, true) => false,
                _ => compare(&q.candidate, &p.candidate, feasible_tol) == Ordering::Less,
            };
            if q_wins {
                p = q;
                winner = None;
            }
        }
        trace.push(LevelTrace {
            m,
            restarts: config.restarts,
            best_restart: winner,
            polished_m: p.candidate.distribution.len(),
            mi_nats: p.candidate.mi_nats,
            kkt_passed: p.kkt.passed,
            max_support_residual: p.kkt.max_support_residual,
            max_grid_violation: p.kkt.max_grid_violation,
            evaluations: evaluations + p.candidate.evaluations,
        });
        if p.kkt.passed {
            return finish(problem, p, config, false, trace);
        }
        let better = match &previous {
            None => true,
            Some(b) => compare(&p.candidate, &b.candidate, feasible_tol) != Ordering::Greater,
        };
        if better || previous.is_none() {
            previous = Some(p.clone());
        }
        keep(p, &mut best);
    }
    finish(problem, best.expect("at least one level ran"), config, false, trace)
}
