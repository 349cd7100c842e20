//! Augmented Lagrangian over point locations and masses.
//!
//! Variables are `x = (r_1..r_m, p_1..p_m)` on the box `[0, r_p]^m` times the
//! probability simplex. The two inequality constraints are folded into a
//! PHR augmented Lagrangian whose bound-constrained subproblems are solved by
//! a nonmonotone spectral projected gradient method.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::OutputGrid;
use crate::constraints::Problem;

#[derive(Debug, Clone, Copy)]
pub(crate) struct AlOptions {
    /// Stop the subproblem when the projected gradient step is this small.
    pub tol_grad: f64,
    /// Allowed violation of each constraint, in its own units.
    pub tol_constraint: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct AlResult {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    pub entropy: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Largest unscaled violation over both constraints.
    pub violation: f64,
}

const NONMONOTONE_MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const STEP_MIN: f64 = 1e-10;
const STEP_MAX: f64 = 1e10;
const RHO_INIT: f64 = 10.0;
const RHO_MAX: f64 = 1e10;

struct Objective<'a> {
    problem: &'a Problem,
    grid: &'a OutputGrid,
    m: usize,
    pa: f64,
    floor: f64,
    /// Constraints are divided by these before entering the penalty.
    scales: [f64; 2],
    use_floor: bool,
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    entropy: f64,
    /// Scaled constraint values, feasible when `≥ 0`.
    c: [f64; 2],
}

impl Objective<'_> {
    fn constraints(&self, x: &[f64]) -> [f64; 2] {
        let (r, p) = x.split_at(self.m);
        let power: f64 = r.iter().zip(p).map(|(&r, &p)| p * r * r).sum();
        let c0 = (self.pa - power) / self.scales[0];
        let c1 = if self.use_floor {
            let v: f64 = r.iter().zip(p).map(|(&r, &p)| p * self.problem.floor_integrand(r)).sum();
            (v - self.floor) / self.scales[1]
        } else {
            0.0
        };
        [c0, c1]
    }

    fn eval(&self, x: &[f64], lambda: [f64; 2], rho: f64) -> Eval {
        let m = self.m;
        let (r, p) = x.split_at(m);
        let ev = self.grid.evaluate(r, p, true);
        let mut grad = vec![0.0; 2 * m];
        for i in 0..m {
            grad[i] = -ev.d_points[i];
            grad[m + i] = -(ev.marginal[i] - 1.0);
        }
        let c = self.constraints(x);
        let mut value = -ev.entropy;
        for j in 0..2 {
            if j == 1 && !self.use_floor {
                continue;
            }
            let shifted = lambda[j] - rho * c[j];
            if shifted > 0.0 {
                value += -lambda[j] * c[j] + 0.5 * rho * c[j] * c[j];
                // ∇ψ = −max(0, λ − ρc) ∇c
                let s = shifted / self.scales[j];
                for i in 0..m {
                    let (dc_dr, dc_dp) = if j == 0 {
                        (-2.0 * p[i] * r[i], -r[i] * r[i])
                    } else {
                        (
                            p[i] * self.problem.floor_integrand_dr(r[i]),
                            self.problem.floor_integrand(r[i]),
                        )
                    };
                    grad[i] -= s * dc_dr;
                    grad[m + i] -= s * dc_dp;
                }
            } else {
                value -= 0.5 * lambda[j] * lambda[j] / rho;
            }
        }
        Eval { value, grad, entropy: ev.entropy, c }
    }

    fn project(&self, x: &mut [f64]) {
        let rp = self.problem.rp();
        let (r, p) = x.split_at_mut(self.m);
        for v in r.iter_mut() {
            *v = v.clamp(0.0, rp);
        }
        project_simplex(p);
    }

    fn violation(&self, c: [f64; 2]) -> f64 {
        let v0 = (-c[0]).max(0.0) * self.scales[0];
        let v1 = if self.use_floor { (-c[1]).max(0.0) * self.scales[1] } else { 0.0 };
        v0.max(v1)
    }
}

/// Euclidean projection onto `{p ≥ 0, Σ p = 1}`.
pub(crate) fn project_simplex(p: &mut [f64]) {
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for v in p.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the augmented Lagrangian from `(points, probs)`.
pub(crate) fn maximize(
    problem: &Problem,
    grid: &OutputGrid,
    points: &[f64],
    probs: &[f64],
    opts: &AlOptions,
) -> AlResult {
    let m = points.len();
    let floor = problem.floor();
    let obj = Objective {
        problem,
        grid,
        m,
        pa: problem.pa(),
        floor,
        scales: [problem.pa(), floor.max(1e-2)],
        use_floor: floor > 0.0,
    };
    let mut x: Vec<f64> = points.iter().chain(probs).copied().collect();
    obj.project(&mut x);

    let mut lambda = [0.0; 2];
    let mut rho = RHO_INIT;
    let mut evaluations = 0;
    let mut prev_measure = f64::INFINITY;
    let mut converged = false;
    let mut last = obj.eval(&x, lambda, rho);
    for _ in 0..opts.max_outer {
        let (xn, ev, inner_ok, n) = spg(&obj, x, lambda, rho, opts);
        evaluations += n;
        x = xn;
        last = ev;
        let c = last.c;
        let mut measure: f64 = 0.0;
        for j in 0..2 {
            if j == 1 && !obj.use_floor {
                continue;
            }
            measure = measure.max(c[j].min(lambda[j] / rho).abs());
        }
        if inner_ok && obj.violation(c) <= opts.tol_constraint && measure <= 1e-6 {
            converged = true;
            break;
        }
        for j in 0..2 {
            lambda[j] = (lambda[j] - rho * c[j]).max(0.0);
        }
        if measure > 0.25 * prev_measure {
            rho = (rho * 10.0).min(RHO_MAX);
        }
        prev_measure = measure;
        last = obj.eval(&x, lambda, rho);
    }
    let violation = obj.violation(last.c);
    let (r, p) = x.split_at(m);
    AlResult {
        points: r.to_vec(),
        probs: p.to_vec(),
        entropy: last.entropy,
        evaluations,
        converged,
        violation,
    }
}

fn spg(
    obj: &Objective<'_>,
    mut x: Vec<f64>,
    lambda: [f64; 2],
    rho: f64,
    opts: &AlOptions,
) -> (Vec<f64>, Eval, bool, usize) {
    let n = x.len();
    let mut cur = obj.eval(&x, lambda, rho);
    let mut evals = 1;
    let mut history = vec![cur.value; NONMONOTONE_MEMORY];
    let mut trial = vec![0.0; n];

    let pg_norm = |x: &[f64], g: &[f64], buf: &mut Vec<f64>| -> f64 {
        for k in 0..n {
            buf[k] = x[k] - g[k];
        }
        obj.project(buf);
        buf.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };

    let mut step = {
        let norm = pg_norm(&x, &cur.grad, &mut trial);
        if norm > 0.0 { (1.0 / norm).clamp(STEP_MIN, STEP_MAX) } else { 1.0 }
    };
    for it in 0..opts.max_inner {
        if pg_norm(&x, &cur.grad, &mut trial) <= opts.tol_grad {
            return (x, cur, true, evals);
        }
        for k in 0..n {
            trial[k] = x[k] - step * cur.grad[k];
        }
        obj.project(&mut trial);
        let d: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let gd = dot(&cur.grad, &d);
        if !(gd < 0.0) {
            return (x, cur, true, evals);
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let (xn, next) = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let next = obj.eval(&xn, lambda, rho);
            evals += 1;
            if next.value <= f_ref + ARMIJO * t * gd || t < 1e-12 {
                break (xn, next);
            }
            // safeguarded quadratic backtracking
            let q = -0.5 * gd * t * t / (next.value - cur.value - t * gd);
            t = if q.is_finite() { q.clamp(0.1 * t, 0.5 * t) } else { 0.5 * t };
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 { (dot(&s, &s) / sy).clamp(STEP_MIN, STEP_MAX) } else { STEP_MAX };
        x = xn;
        cur = next;
        history[it % NONMONOTONE_MEMORY] = cur.value;
    }
    let ok = pg_norm(&x, &cur.grad, &mut trial) <= opts.tol_grad;
    (x, cur, ok, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut p = vec![0.5, 0.5];
        project_simplex(&mut p);
        assert_eq!(p, vec![0.5, 0.5]);
        let mut p = vec![2.0, 0.0, -1.0];
        project_simplex(&mut p);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let mut p = vec![0.3, 0.3, 0.6];
        project_simplex(&mut p);
        let s: f64 = p.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((p[2] - p[0] - 0.3).abs() < 1e-15);
    }
}
