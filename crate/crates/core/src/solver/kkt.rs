//! Multiplier recovery and the KKT certificate.
//!
//! For multipliers `μ = (μ_1, μ_2)` the certificate function is
//! `Φ(r) = h(r) − μ_1 (r² − P_a) + μ_2 (φ(r) − floor) − H`, where `φ` is the
//! floor integrand. An input is optimal iff `Φ ≤ 0` on `[0, r_p]` with
//! equality on the support.

use alloc::vec::Vec;

use crate::channel::{DiscreteAmplitudeDistribution, OutputGrid};
use crate::constraints::{average_power, Problem};
use crate::{Error, Result};

/// Multipliers of the power constraint and of the floor constraint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Multipliers {
    pub power: f64,
    pub floor: f64,
}

/// Outcome of [`verify_kkt`].
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub multipliers: Multipliers,
    /// `H(F)` in nats.
    pub entropy: f64,
    /// `max_i |Φ(r_i)|` over the support.
    pub max_support_residual: f64,
    /// `max Φ` over the verification grid, refined near local maxima.
    pub max_grid_violation: f64,
    /// Where the grid maximum occurs.
    pub argmax: f64,
    /// Local maxima `(r, Φ(r))` of the refined grid scan, largest first.
    pub peaks: Vec<(f64, f64)>,
    pub grid_points: usize,
    /// The support equations did not pin down the multipliers.
    pub rank_deficient: bool,
    pub tol_eq: f64,
    pub tol_ineq: f64,
    pub passed: bool,
}

/// Multipliers below this are treated as negative when certifying.
pub const MULTIPLIER_FLOOR: f64 = -1e-12;
/// Refinement factor around local maxima of `Φ` on the verification grid.
pub const REFINEMENT: usize = 10;
const RANK_TOL: f64 = 1e-10;
const SEARCH_ITERATIONS: usize = 200;
const SEARCH_LIMIT: f64 = 1e3;

/// Support and grid data that `Φ` is affine in.
struct System {
    entropy: f64,
    pa: f64,
    floor: f64,
    support: Vec<SupportRow>,
    grid_r: Vec<f64>,
    grid_h: Vec<f64>,
    grid_phi: Vec<f64>,
}

struct SupportRow {
    r: f64,
    h: f64,
    dh: f64,
    phi: f64,
    dphi: f64,
}

impl System {
    fn build(dist: &DiscreteAmplitudeDistribution, problem: &Problem, grid_size: usize) -> Result<Self> {
        let rp = problem.rp();
        if !rp.is_finite() {
            return Err(Error::domain("the KKT certificate needs a finite peak amplitude"));
        }
        let out = OutputGrid::fine(rp.max(dist.max_point()));
        let profile = out.marginal_profile(dist);
        let support: Vec<SupportRow> = dist
            .iter()
            .map(|(r, _)| {
                let (h, dh) = profile.marginal_and_slope(r);
                SupportRow {
                    r,
                    h,
                    dh,
                    phi: problem.floor_integrand(r),
                    dphi: problem.floor_integrand_dr(r),
                }
            })
            .collect();
        let entropy = dist.probs().iter().zip(&support).map(|(p, s)| p * s.h).sum();
        let n = grid_size.max(2);
        let grid_r: Vec<f64> = (0..n).map(|k| rp * k as f64 / (n - 1) as f64).collect();
        let grid_h = grid_r.iter().map(|&r| profile.marginal(r)).collect();
        let grid_phi = grid_r.iter().map(|&r| problem.floor_integrand(r)).collect();
        Ok(System { entropy, pa: problem.pa(), floor: problem.floor(), support, grid_r, grid_h, grid_phi })
    }

    fn phi(&self, mu: Multipliers, r: f64, h: f64, phi: f64) -> f64 {
        h - self.entropy - mu.power * (r * r - self.pa) + mu.floor * (phi - self.floor)
    }

    fn grid_max(&self, mu: Multipliers) -> f64 {
        (0..self.grid_r.len())
            .map(|k| self.phi(mu, self.grid_r[k], self.grid_h[k], self.grid_phi[k]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Which multipliers are free to be nonzero.
pub(crate) fn activity(dist: &DiscreteAmplitudeDistribution, problem: &Problem, tol_active: f64) -> [bool; 2] {
    let pa = problem.pa();
    let power_active = pa - average_power(dist) <= tol_active * pa.max(1.0);
    let floor = problem.floor();
    let floor_active = floor > 0.0 && problem.floor_value(dist) - floor <= tol_active * floor.max(1.0);
    [power_active, floor_active]
}

/// Least squares `A μ ≈ c` over the columns in `cols`, with nonnegativity by
/// enumeration of subsets. Returns the solution and whether `A[:, cols]` is
/// numerically rank deficient.
fn nnls(rows: &[([f64; 2], f64)], cols: [bool; 2]) -> ([f64; 2], bool) {
    let gram = |a: usize, b: usize| rows.iter().map(|(x, _)| x[a] * x[b]).sum::<f64>();
    let rhs = |a: usize| rows.iter().map(|(x, c)| x[a] * c).sum::<f64>();
    let resid = |mu: [f64; 2]| rows.iter().map(|(x, c)| { let e = x[0] * mu[0] + x[1] * mu[1] - c; e * e }).sum::<f64>();

    let (g00, g01, g11) = (gram(0, 0), gram(0, 1), gram(1, 1));
    let (b0, b1) = (rhs(0), rhs(1));
    let deficient = match cols {
        [true, true] => {
            let det = g00 * g11 - g01 * g01;
            det <= RANK_TOL * (g00 * g11).max(f64::MIN_POSITIVE)
        }
        [true, false] => g00 <= f64::MIN_POSITIVE,
        [false, true] => g11 <= f64::MIN_POSITIVE,
        [false, false] => false,
    };

    let mut best = [0.0, 0.0];
    let mut best_res = resid(best);
    let mut consider = |mu: [f64; 2]| {
        if mu[0] >= 0.0 && mu[1] >= 0.0 && mu.iter().all(|v| v.is_finite()) {
            let r = resid(mu);
            if r < best_res {
                best = mu;
                best_res = r;
            }
        }
    };
    if cols[0] && g00 > 0.0 {
        consider([b0 / g00, 0.0]);
    }
    if cols[1] && g11 > 0.0 {
        consider([0.0, b1 / g11]);
    }
    if cols[0] && cols[1] && !deficient {
        let det = g00 * g11 - g01 * g01;
        consider([(g11 * b0 - g01 * b1) / det, (g00 * b1 - g01 * b0) / det]);
    }
    (best, deficient)
}

/// Recovers nonnegative multipliers from the support conditions.
///
/// The multiplier of a slack constraint is zero. The active ones solve
/// `Φ(r_i) = 0` on the support in the least-squares sense. When those
/// equations are degenerate, the stationarity conditions `Φ'(r_i) = 0` at
/// interior support points are added; if the system is still degenerate the
/// remaining freedom is spent minimizing the largest grid value of `Φ`.
pub fn recover_multipliers(
    dist: &DiscreteAmplitudeDistribution,
    problem: &Problem,
    tol_active: f64,
    grid_size: usize,
) -> Result<(Multipliers, bool)> {
    let sys = System::build(dist, problem, grid_size)?;
    Ok(recover_on(&sys, activity(dist, problem, tol_active)))
}

fn recover_on(sys: &System, cols: [bool; 2]) -> (Multipliers, bool) {
    let mask = |x: [f64; 2]| [if cols[0] { x[0] } else { 0.0 }, if cols[1] { x[1] } else { 0.0 }];
    let mut rows: Vec<([f64; 2], f64)> = sys
        .support
        .iter()
        .map(|s| (mask([s.r * s.r - sys.pa, -(s.phi - sys.floor)]), s.h - sys.entropy))
        .collect();
    let (mu, deficient) = nnls(&rows, cols);
    if !deficient {
        return (Multipliers { power: mu[0], floor: mu[1] }, false);
    }
    let rp = *sys.grid_r.last().expect("grid is nonempty");
    let interior = 1e-6 * rp.max(1.0);
    rows.extend(
        sys.support
            .iter()
            .filter(|s| s.r > interior && s.r < rp - interior)
            .map(|s| (mask([2.0 * s.r, -s.dphi]), s.dh)),
    );
    let (mu, deficient) = nnls(&rows, cols);
    if !deficient {
        return (Multipliers { power: mu[0], floor: mu[1] }, false);
    }
    (null_space_search(sys, &rows, cols, mu), true)
}

/// Minimizes the grid maximum of `Φ` along the least-squares solution set.
/// That maximum is convex in `μ`, so a ternary search suffices.
fn null_space_search(sys: &System, rows: &[([f64; 2], f64)], cols: [bool; 2], start: [f64; 2]) -> Multipliers {
    // direction along which A μ is (nearly) constant
    let (g00, g01) = (
        rows.iter().map(|(x, _)| x[0] * x[0]).sum::<f64>(),
        rows.iter().map(|(x, _)| x[0] * x[1]).sum::<f64>(),
    );
    let g11 = rows.iter().map(|(x, _)| x[1] * x[1]).sum::<f64>();
    let mut dirs: Vec<[f64; 2]> = Vec::new();
    match cols {
        [true, true] => {
            if g00 == 0.0 && g11 == 0.0 {
                dirs.push([1.0, 0.0]);
                dirs.push([0.0, 1.0]);
            } else if g00 >= g11 {
                dirs.push([-g01 / g00, 1.0]);
            } else {
                dirs.push([1.0, -g01 / g11]);
            }
        }
        [true, false] => dirs.push([1.0, 0.0]),
        [false, true] => dirs.push([0.0, 1.0]),
        [false, false] => {}
    }
    let eval = |mu: [f64; 2]| sys.grid_max(Multipliers { power: mu[0], floor: mu[1] });
    let mut best = start;
    let mut best_val = eval(start);
    for d in dirs {
        // t range keeping both multipliers in [0, SEARCH_LIMIT]
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            if d[k] > 0.0 {
                lo = lo.max(-start[k] / d[k]);
                hi = hi.min((SEARCH_LIMIT - start[k]) / d[k]);
            } else if d[k] < 0.0 {
                hi = hi.min(-start[k] / d[k]);
                lo = lo.max((SEARCH_LIMIT - start[k]) / d[k]);
            }
        }
        if !(lo <= hi) {
            continue;
        }
        let at = |t: f64| [(start[0] + t * d[0]).max(0.0), (start[1] + t * d[1]).max(0.0)];
        let (mut a, mut b) = (lo, hi);
        for _ in 0..SEARCH_ITERATIONS {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if eval(at(m1)) <= eval(at(m2)) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let mu = at(0.5 * (a + b));
        let v = eval(mu);
        if v < best_val {
            best = mu;
            best_val = v;
        }
    }
    Multipliers { power: best[0], floor: best[1] }
}

/// Checks `Φ = 0` on the support and `Φ ≤ 0` on a uniform grid of `[0, r_p]`
/// refined tenfold around each local maximum.
pub fn verify_kkt(
    dist: &DiscreteAmplitudeDistribution,
    multipliers: Multipliers,
    problem: &Problem,
    grid_size: usize,
    tol_eq: f64,
    tol_ineq: f64,
) -> Result<KktReport> {
    let sys = System::build(dist, problem, grid_size)?;
    Ok(verify_on(&sys, dist, problem, multipliers, false, tol_eq, tol_ineq))
}

fn verify_on(
    sys: &System,
    dist: &DiscreteAmplitudeDistribution,
    problem: &Problem,
    mu: Multipliers,
    rank_deficient: bool,
    tol_eq: f64,
    tol_ineq: f64,
) -> KktReport {
    let residual = sys
        .support
        .iter()
        .map(|s| sys.phi(mu, s.r, s.h, s.phi).abs())
        .fold(0.0, f64::max);
    let n = sys.grid_r.len();
    let values: Vec<f64> = (0..n).map(|k| sys.phi(mu, sys.grid_r[k], sys.grid_h[k], sys.grid_phi[k])).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut argmax = 0.0;
    for k in 0..n {
        if values[k] > worst {
            worst = values[k];
            argmax = sys.grid_r[k];
        }
    }

    let rp = problem.rp();
    let out = OutputGrid::fine(rp.max(dist.max_point()));
    let profile = out.marginal_profile(dist);
    let mut evaluated = n;
    let spacing = rp / (n - 1) as f64;
    let mut peaks = Vec::new();
    for k in 0..n {
        let left = k == 0 || values[k] >= values[k - 1];
        let right = k + 1 == n || values[k] >= values[k + 1];
        if !(left && right) {
            continue;
        }
        let mut peak = (sys.grid_r[k], values[k]);
        for j in 1..2 * REFINEMENT {
            let r = sys.grid_r[k] + spacing * (j as f64 / REFINEMENT as f64 - 1.0);
            if !(0.0..=rp).contains(&r) {
                continue;
            }
            let v = sys.phi(mu, r, profile.marginal(r), problem.floor_integrand(r));
            evaluated += 1;
            if v > peak.1 {
                peak = (r, v);
            }
        }
        if peak.1 > worst {
            worst = peak.1;
            argmax = peak.0;
        }
        peaks.push(peak);
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));

    let nonneg = mu.power >= MULTIPLIER_FLOOR && mu.floor >= MULTIPLIER_FLOOR;
    KktReport {
        multipliers: mu,
        entropy: sys.entropy,
        max_support_residual: residual,
        max_grid_violation: worst,
        argmax,
        peaks,
        grid_points: evaluated,
        rank_deficient,
        tol_eq,
        tol_ineq,
        passed: residual <= tol_eq && worst <= tol_ineq && nonneg,
    }
}

/// Recovers multipliers and certifies in one pass.
pub(crate) fn certify(
    dist: &DiscreteAmplitudeDistribution,
    problem: &Problem,
    tol_active: f64,
    grid_size: usize,
    tol_eq: f64,
    tol_ineq: f64,
) -> Result<KktReport> {
    let sys = System::build(dist, problem, grid_size)?;
    let (mu, deficient) = recover_on(&sys, activity(dist, problem, tol_active));
    Ok(verify_on(&sys, dist, problem, mu, deficient, tol_eq, tol_ineq))
}
