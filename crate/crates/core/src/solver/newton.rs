//! Newton refinement of the masses for fixed locations.
//!
//! With the locations frozen, `H` is concave in the masses and optimality is
//! the square system
//!
//! * `h(r_i) − ν − μ_1 r_i² + μ_2 φ(r_i) = 0` for every point,
//! * `Σ p_i = 1` and each active constraint holding with equality,
//!
//! in the masses, the simplex multiplier `ν` and the active constraint
//! multipliers. Its Jacobian is available in closed form.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::channel::OutputGrid;
use crate::constraints::Problem;

const MAX_ITERATIONS: usize = 40;
const TARGET: f64 = 1e-13;
/// Accept the refined law only if the system is solved to this level.
const ACCEPT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct Refined {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    pub entropy: f64,
    pub evaluations: usize,
}

struct Setup<'a> {
    problem: &'a Problem,
    grid: &'a OutputGrid,
    pa: f64,
    floor: f64,
    active: [bool; 2],
}

impl Setup<'_> {
    fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Constraint rows `∂/∂p` of `Σp`, `Σ p r²`, `Σ p φ(r)` restricted to the
    /// active ones.
    fn rows(&self, r: &[f64]) -> Vec<Vec<f64>> {
        let mut rows = alloc::vec![r.iter().map(|_| 1.0).collect::<Vec<f64>>()];
        if self.active[0] {
            rows.push(r.iter().map(|&x| x * x).collect());
        }
        if self.active[1] {
            rows.push(r.iter().map(|&x| self.problem.floor_integrand(x)).collect());
        }
        rows
    }

    fn targets(&self) -> Vec<f64> {
        let mut t = alloc::vec![1.0];
        if self.active[0] {
            t.push(self.pa);
        }
        if self.active[1] {
            t.push(self.floor);
        }
        t
    }

    /// Residual, Jacobian and entropy at `(p, λ)` where `λ = (ν, μ_active)`.
    fn system(&self, r: &[f64], p: &[f64], lam: &[f64]) -> (Vec<f64>, DMatrix<f64>, f64) {
        let m = r.len();
        let rows = self.rows(r);
        let targets = self.targets();
        let c = rows.len();
        let (ev, hess) = self.grid.marginals_and_mass_hessian(r, p);
        let n = m + c;
        let mut f = alloc::vec![0.0; n];
        let mut jac = DMatrix::zeros(n, n);
        // sign pattern: ν enters as −ν, μ_1 as −μ_1 r², μ_2 as +μ_2 φ
        let signs: Vec<f64> = core::iter::once(-1.0)
            .chain(self.active[0].then_some(-1.0))
            .chain(self.active[1].then_some(1.0))
            .collect();
        for i in 0..m {
            let mut v = ev.marginal[i];
            for k in 0..c {
                let coef = if k == 0 { 1.0 } else { rows[k][i] };
                v += signs[k] * lam[k] * coef;
                jac[(i, m + k)] = signs[k] * coef;
            }
            f[i] = v;
            for j in 0..m {
                jac[(i, j)] = hess[i * m + j];
            }
        }
        for k in 0..c {
            f[m + k] = rows[k].iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - targets[k];
            for j in 0..m {
                jac[(m + k, j)] = rows[k][j];
            }
        }
        (f, jac, ev.entropy)
    }

    /// Least-squares multipliers for fixed masses.
    fn multipliers(&self, r: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        let m = r.len();
        let zero = alloc::vec![0.0; 1 + self.n_active()];
        let (f, jac, _) = self.system(r, p, &zero);
        let c = zero.len();
        let a = jac.view((0, m), (m, c)).into_owned();
        let b = DVector::from_iterator(m, f[..m].iter().map(|v| -v));
        let sol = a.svd(true, true).solve(&b, 1e-13).ok()?;
        Some(sol.iter().copied().collect())
    }
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Refines the masses of `(points, probs)` with the given constraints
/// treated as equalities. Points whose mass is driven to zero are dropped.
/// Returns `None` when Newton's method does not reach a valid KKT point.
pub(crate) fn refine(
    problem: &Problem,
    grid: &OutputGrid,
    points: &[f64],
    probs: &[f64],
    active: [bool; 2],
) -> Option<Refined> {
    let setup = Setup { problem, grid, pa: problem.pa(), floor: problem.floor(), active };
    let mut r = points.to_vec();
    let mut p = probs.to_vec();
    let mut lam = setup.multipliers(&r, &p)?;
    let mut evaluations = 1;
    let mut iterations = 0;
    loop {
        let m = r.len();
        let (f, jac, mut entropy) = setup.system(&r, &p, &lam);
        evaluations += 1;
        let mut norm = norm2(&f);
        let mut f = f;
        let mut jac = jac;
        let mut dropped = false;
        while norm > TARGET && iterations < MAX_ITERATIONS {
            iterations += 1;
            let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
            let step = match jac.clone().lu().solve(&rhs) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => jac.clone().svd(true, true).solve(&rhs, 1e-14).ok()?,
            };
            // a mass that would turn negative leaves the support
            let mut frac = 1.0;
            let mut blocker = None;
            for i in 0..m {
                if p[i] + step[i] < 0.0 {
                    let t = -p[i] / step[i];
                    if t < frac {
                        frac = t;
                        blocker = Some(i);
                    }
                }
            }
            if let Some(i) = blocker {
                for k in 0..m {
                    p[k] = (p[k] + frac * step[k]).max(0.0);
                }
                r.remove(i);
                p.remove(i);
                if r.is_empty() {
                    return None;
                }
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= s);
                lam = setup.multipliers(&r, &p)?;
                dropped = true;
                break;
            }
            let mut t = 1.0;
            loop {
                let pt: Vec<f64> = (0..m).map(|k| p[k] + t * step[k]).collect();
                let lt: Vec<f64> = (0..lam.len()).map(|k| lam[k] + t * step[m + k]).collect();
                let (ft, jt, ht) = setup.system(&r, &pt, &lt);
                evaluations += 1;
                let nt = norm2(&ft);
                if nt < (1.0 - 1e-4 * t) * norm || t < 1e-4 {
                    p = pt;
                    lam = lt;
                    f = ft;
                    jac = jt;
                    entropy = ht;
                    norm = nt;
                    break;
                }
                t *= 0.5;
            }
        }
        if dropped {
            continue;
        }
        if norm > ACCEPT || p.iter().any(|&v| v <= 0.0) || lam[1..].iter().any(|&v| v < -1e-12) {
            return None;
        }
        return Some(Refined { points: r, probs: p, entropy, evaluations });
    }
}
