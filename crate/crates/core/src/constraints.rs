//! Constraint functionals on amplitude laws: average power, delivered power
//! through an even-polynomial harvester model, and output-amplitude coverage
//! of a harvester operating window.

use alloc::vec::Vec;

use crate::channel::DiscreteAmplitudeDistribution;
use crate::specfun::{marcum_q1_dr, marcum_q1_unchecked};
use crate::{Error, Result};

/// Positivity of `g` is checked on `[0, max(r_p, POSITIVITY_RANGE)]`.
pub const POSITIVITY_RANGE: f64 = 20.0;
const POSITIVITY_GRID: usize = 4001;

/// Harvested power model `g(r) = Σ_{i=0}^{n} α_i r^{2i}` with `n ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenPolynomial {
    alphas: Vec<f64>,
}

impl EvenPolynomial {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 3 {
            return Err(Error::domain(alloc::format!(
                "need at least α_0, α_1, α_2 (degree n ≥ 2), got {} coefficients",
                alphas.len()
            )));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        if !(*alphas.last().expect("len ≥ 3") > 0.0) {
            return Err(Error::domain("leading coefficient α_n must be positive"));
        }
        let g = EvenPolynomial { alphas };
        g.check_positive_on(POSITIVITY_RANGE)?;
        Ok(g)
    }

    /// Rejects `g` that is not strictly positive on a dense grid of
    /// `[0, r_max]`.
    pub fn check_positive_on(&self, r_max: f64) -> Result<()> {
        let hi = r_max.max(POSITIVITY_RANGE);
        for k in 0..POSITIVITY_GRID {
            let r = hi * k as f64 / (POSITIVITY_GRID - 1) as f64;
            let v = self.eval(r);
            if !(v > 0.0) {
                return Err(Error::domain(alloc::format!("g({r}) = {v} is not positive")));
            }
        }
        Ok(())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Degree in `r²`.
    pub fn degree(&self) -> usize {
        self.alphas.len() - 1
    }

    /// `g` as a polynomial in `s = r²`.
    pub fn eval_sq(&self, s: f64) -> f64 {
        self.alphas.iter().rev().fold(0.0, |acc, &a| acc * s + a)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_sq(r * r)
    }

    /// `dg/dr = Σ 2i α_i r^{2i−1}`.
    pub fn derivative(&self, r: f64) -> f64 {
        let s = r * r;
        let ds = self
            .alphas
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * s + i as f64 * a);
        2.0 * r * ds
    }
}

/// Average power, peak amplitude and delivered power constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct RdpProblem {
    pub pa: f64,
    pub pd: f64,
    /// May be `f64::INFINITY`.
    pub rp: f64,
    pub g: EvenPolynomial,
}

impl RdpProblem {
    pub fn new(pa: f64, pd: f64, rp: f64, g: EvenPolynomial) -> Result<Self> {
        if !(pa > 0.0) || !pa.is_finite() {
            return Err(Error::domain(alloc::format!("P_a must be positive, got {pa}")));
        }
        if !(pd >= 0.0) || !pd.is_finite() {
            return Err(Error::domain(alloc::format!("P_d must be nonnegative, got {pd}")));
        }
        if !(rp > 0.0) {
            return Err(Error::domain(alloc::format!("r_p must be positive, got {rp}")));
        }
        if rp.is_finite() {
            g.check_positive_on(rp)?;
        }
        Ok(RdpProblem { pa, pd, rp, g })
    }
}

/// Average power, finite peak amplitude and output coverage constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct OopProblem {
    pub pa: f64,
    pub rp: f64,
    pub al: f64,
    /// May be `f64::INFINITY`.
    pub au: f64,
    pub eps: f64,
}

impl OopProblem {
    pub fn new(pa: f64, rp: f64, al: f64, au: f64, eps: f64) -> Result<Self> {
        if !(pa > 0.0) || !pa.is_finite() {
            return Err(Error::domain(alloc::format!("P_a must be positive, got {pa}")));
        }
        if !(rp > 0.0) || !rp.is_finite() {
            return Err(Error::domain(alloc::format!("r_p must be positive and finite, got {rp}")));
        }
        check_window(al, au)?;
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::domain(alloc::format!("ε must lie in [0, 1), got {eps}")));
        }
        Ok(OopProblem { pa, rp, al, au, eps })
    }

    /// `Q(r, A_l) − Q(r, A_u)`.
    pub fn window_probability(&self, r: f64) -> f64 {
        marcum_q1_unchecked(r, self.al) - marcum_q1_unchecked(r, self.au)
    }

    pub fn window_probability_dr(&self, r: f64) -> f64 {
        marcum_q1_dr(r, self.al) - marcum_q1_dr(r, self.au)
    }
}

fn check_window(al: f64, au: f64) -> Result<()> {
    if !(al >= 0.0) || !al.is_finite() || au.is_nan() || !(al < au) {
        return Err(Error::domain(alloc::format!("need 0 ≤ A_l < A_u ≤ ∞, got [{al}, {au}]")));
    }
    Ok(())
}

/// Either constraint bundle. Both share the average-power and peak
/// constraints and add one more "floor" constraint `E[φ(r)] ≥ floor`.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Rdp(RdpProblem),
    Oop(OopProblem),
}

impl From<RdpProblem> for Problem {
    fn from(p: RdpProblem) -> Self {
        Problem::Rdp(p)
    }
}

impl From<OopProblem> for Problem {
    fn from(p: OopProblem) -> Self {
        Problem::Oop(p)
    }
}

impl Problem {
    pub fn pa(&self) -> f64 {
        match self {
            Problem::Rdp(p) => p.pa,
            Problem::Oop(p) => p.pa,
        }
    }

    pub fn rp(&self) -> f64 {
        match self {
            Problem::Rdp(p) => p.rp,
            Problem::Oop(p) => p.rp,
        }
    }

    /// `P_d` or `ε`.
    pub fn floor(&self) -> f64 {
        match self {
            Problem::Rdp(p) => p.pd,
            Problem::Oop(p) => p.eps,
        }
    }

    /// `g(r)` or `Q(r, A_l) − Q(r, A_u)`.
    pub fn floor_integrand(&self, r: f64) -> f64 {
        match self {
            Problem::Rdp(p) => p.g.eval(r),
            Problem::Oop(p) => p.window_probability(r),
        }
    }

    pub fn floor_integrand_dr(&self, r: f64) -> f64 {
        match self {
            Problem::Rdp(p) => p.g.derivative(r),
            Problem::Oop(p) => p.window_probability_dr(r),
        }
    }

    pub fn floor_name(&self) -> &'static str {
        match self {
            Problem::Rdp(_) => "delivered power",
            Problem::Oop(_) => "output coverage",
        }
    }

    /// `E_F[φ(r)]` for the floor constraint.
    pub fn floor_value(&self, dist: &DiscreteAmplitudeDistribution) -> f64 {
        dist.iter().map(|(r, p)| p * self.floor_integrand(r)).sum()
    }

    /// Largest attainable `E[φ(r)]` under the power and peak constraints.
    pub fn floor_max(&self) -> PowerLimitedOptimum {
        let rp = self.rp();
        assert!(rp.is_finite(), "floor_max needs a finite peak amplitude");
        max_expectation_under_power(|r| self.floor_integrand(r), self.pa(), rp, SCAN_GRID)
    }
}

/// `E[r²]`.
pub fn average_power(dist: &DiscreteAmplitudeDistribution) -> f64 {
    dist.iter().map(|(r, p)| p * r * r).sum()
}

/// `E[g(r)]`.
pub fn delivered_power(dist: &DiscreteAmplitudeDistribution, g: &EvenPolynomial) -> f64 {
    dist.iter().map(|(r, p)| p * g.eval(r)).sum()
}

/// `Pr(A_l ≤ R ≤ A_u) = Σ p_i (Q(r_i, A_l) − Q(r_i, A_u))`.
pub fn oop_coverage(dist: &DiscreteAmplitudeDistribution, al: f64, au: f64) -> Result<f64> {
    check_window(al, au)?;
    Ok(dist
        .iter()
        .map(|(r, p)| p * (marcum_q1_unchecked(r, al) - marcum_q1_unchecked(r, au)))
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// Grid size of the two-point scan.
pub const SCAN_GRID: usize = 2000;

/// Maximizer of a linear functional under `E[r²] ≤ P_a`, support in
/// `[0, r_p]`, attained on at most two points.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLimitedOptimum {
    pub value: f64,
    pub law: DiscreteAmplitudeDistribution,
}

/// Maximizes `E[f(r)]` over laws on `[0, r_p]` with `E[r²] ≤ P_a`.
///
/// One moment constraint plus normalization means an optimal law with at
/// most two points exists: a single point with `r² ≤ P_a`, or a pair
/// straddling `P_a` that spends the whole budget. Both families are scanned
/// exhaustively on a uniform grid, then the best pair is refined locally.
pub fn max_expectation_under_power<F: Fn(f64) -> f64>(
    f: F,
    pa: f64,
    rp: f64,
    grid: usize,
) -> PowerLimitedOptimum {
    let grid = grid.max(2);
    let rs: Vec<f64> = (0..grid).map(|k| rp * k as f64 / (grid - 1) as f64).collect();
    let fs: Vec<f64> = rs.iter().map(|&r| f(r)).collect();

    let mut best = Candidate::Single { r: 0.0, value: fs[0] };
    for (k, &r) in rs.iter().enumerate() {
        if r * r <= pa && fs[k] > best.value() {
            best = Candidate::Single { r, value: fs[k] };
        }
    }
    let split = rs.partition_point(|&r| r * r <= pa);
    for a in 0..split {
        for b in split..grid {
            let c = Candidate::pair(rs[a], fs[a], rs[b], fs[b], pa);
            if c.value() > best.value() {
                best = c;
            }
        }
    }

    // local refinement around the best pair
    let mut h = rp / (grid - 1) as f64;
    for _ in 0..3 {
        if let Candidate::Pair { lo, hi, .. } = best {
            let steps = 10;
            let sub = h / steps as f64;
            for i in -steps..=steps {
                let a = (lo + i as f64 * sub).clamp(0.0, rp);
                if a * a > pa {
                    continue;
                }
                let fa = f(a);
                for j in -steps..=steps {
                    let b = (hi + j as f64 * sub).clamp(0.0, rp);
                    if b * b < pa {
                        continue;
                    }
                    let c = Candidate::pair(a, fa, b, f(b), pa);
                    if c.value() > best.value() {
                        best = c;
                    }
                }
            }
            h = sub;
        }
    }

    let law = match best {
        Candidate::Single { r, .. } => DiscreteAmplitudeDistribution::point_mass(r),
        Candidate::Pair { lo, hi, p_hi, .. } => {
            DiscreteAmplitudeDistribution::from_masses([(lo, 1.0 - p_hi), (hi, p_hi)])
        }
    }
    .expect("scan produces a valid law");
    PowerLimitedOptimum { value: best.value(), law }
}

#[derive(Debug, Clone, Copy)]
enum Candidate {
    Single { r: f64, value: f64 },
    Pair { lo: f64, hi: f64, p_hi: f64, value: f64 },
}

impl Candidate {
    fn pair(lo: f64, f_lo: f64, hi: f64, f_hi: f64, pa: f64) -> Self {
        let (s_lo, s_hi) = (lo * lo, hi * hi);
        if s_hi <= s_lo {
            return Candidate::Single { r: lo, value: f_lo };
        }
        let p_hi = ((pa - s_lo) / (s_hi - s_lo)).clamp(0.0, 1.0);
        Candidate::Pair { lo, hi, p_hi, value: (1.0 - p_hi) * f_lo + p_hi * f_hi }
    }

    fn value(&self) -> f64 {
        match *self {
            Candidate::Single { value, .. } | Candidate::Pair { value, .. } => value,
        }
    }
}

/// Largest delivered power `E[g(r)]` reachable under `E[r²] ≤ P_a` and
/// `r ≤ r_p`.
pub fn feasible_pd_max(pa: f64, rp: f64, g: &EvenPolynomial) -> f64 {
    max_expectation_under_power(|r| g.eval(r), pa, rp, SCAN_GRID).value
}

/// Largest coverage of `[A_l, A_u]` reachable under the same constraints.
pub fn feasible_coverage_max(pa: f64, rp: f64, al: f64, au: f64) -> f64 {
    max_expectation_under_power(
        |r| marcum_q1_unchecked(r, al) - marcum_q1_unchecked(r, au),
        pa,
        rp,
        SCAN_GRID,
    )
    .value
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn g_fig() -> EvenPolynomial {
        EvenPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap()
    }

    fn dist(points: &[f64], probs: &[f64]) -> DiscreteAmplitudeDistribution {
        DiscreteAmplitudeDistribution::new(points.to_vec(), probs.to_vec()).unwrap()
    }

    #[test]
    fn polynomial_validation() {
        assert!(EvenPolynomial::new(vec![0.0, 1.0]).is_err());
        assert!(EvenPolynomial::new(vec![1.0, 1.0, -1.0]).is_err());
        assert!(EvenPolynomial::new(vec![1.0, -3.0, 1.0]).is_err());
        assert!(EvenPolynomial::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(EvenPolynomial::new(vec![2.0, -1.0, 1.0]).is_ok());
        let g = g_fig();
        assert!((g.eval(2.0) - 0.21).abs() < 1e-15);
        assert_eq!(g.degree(), 2);
        for &r in &[0.0, 0.7, 3.0] {
            let h = 1e-6;
            let fd = (g.eval(r + h) - g.eval(r - h)) / (2.0 * h);
            assert!((fd - g.derivative(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn problem_validation() {
        assert!(RdpProblem::new(0.0, 0.1, 4.0, g_fig()).is_err());
        assert!(RdpProblem::new(5.0, -0.1, 4.0, g_fig()).is_err());
        assert!(RdpProblem::new(5.0, 0.1, 0.0, g_fig()).is_err());
        assert!(RdpProblem::new(5.0, 0.1, f64::INFINITY, g_fig()).is_ok());
        assert!(OopProblem::new(10.0, 6.0, 4.0, 1.0, 0.5).is_err());
        assert!(OopProblem::new(10.0, 6.0, 1.0, 4.0, 1.0).is_err());
        assert!(OopProblem::new(10.0, f64::INFINITY, 1.0, 4.0, 0.5).is_err());
        assert!(OopProblem::new(10.0, 6.0, 1.0, f64::INFINITY, 0.5).is_ok());
    }

    #[test]
    fn moments() {
        let d0 = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
        assert_eq!(average_power(&d0), 0.0);
        assert_eq!(average_power(&dist(&[0.0, 2.0], &[0.75, 0.25])), 1.0);
        assert!((delivered_power(&d0, &g_fig()) - 0.01).abs() < 1e-16);
        let tail = dist(&[0.0, 20f64.sqrt()], &[0.75, 0.25]);
        assert!((delivered_power(&tail, &g_fig()) - 1.06).abs() < 1e-12);
        // Rayleigh even moments E[r^{2i}] = i! P_a^i
        let q = DiscreteAmplitudeDistribution::rayleigh_quantized(5.0, 2000).unwrap();
        assert!((delivered_power(&q, &g_fig()) - 0.56).abs() < 1e-3);
    }

    #[test]
    fn coverage_values() {
        let d = dist(&[0.0, 3.0], &[0.5, 0.5]);
        assert!((oop_coverage(&d, 0.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let d0 = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
        for &a in &[0.5, 1.0, 3.0] {
            let want = 1.0 - (-a * a / 2.0f64).exp();
            assert!((oop_coverage(&d0, 0.0, a).unwrap() - want).abs() < 1e-14);
        }
        let want = 0.5 * (marcum_q1_unchecked(0.0, 1.0) - marcum_q1_unchecked(0.0, 4.0))
            + 0.5 * (marcum_q1_unchecked(3.0, 1.0) - marcum_q1_unchecked(3.0, 4.0));
        assert!((oop_coverage(&d, 1.0, 4.0).unwrap() - want).abs() < 1e-15);
        assert!(oop_coverage(&d, 4.0, 1.0).is_err());
    }

    #[test]
    fn delivered_power_wall() {
        let g = g_fig();
        let chord = 5.0 / 16.0 * g.eval(4.0) + 11.0 / 16.0 * g.eval(0.0);
        assert!((chord - 0.86).abs() < 1e-12);
        let opt = max_expectation_under_power(|r| g.eval(r), 5.0, 4.0, SCAN_GRID);
        assert!((opt.value - chord).abs() < 1e-12);
        assert_eq!(opt.law.points(), &[0.0, 4.0]);
        assert!((opt.law.probs()[1] - 5.0 / 16.0).abs() < 1e-12);
        // {0, r_p} is optimal since g is convex in r²
        let at5 = feasible_pd_max(5.0, 5.0, &g);
        assert!((at5 - (0.2 * g.eval(5.0) + 0.8 * g.eval(0.0))).abs() < 1e-12);
        assert!((at5 - 1.31).abs() < 1e-12);
        // whole mass at the peak when the budget allows it
        assert!((feasible_pd_max(20.0, 4.0, &g) - g.eval(4.0)).abs() < 1e-12);
    }

    #[test]
    fn coverage_wall() {
        // a single ring near r = 2.2 is the best the (1, 4) window allows
        let best = feasible_coverage_max(10.0, 6.0, 1.0, 4.0);
        assert!((best - 0.890_008).abs() < 1e-5, "{best}");
        assert!(best < 0.9);
    }

    fn arb_dist(rp: f64) -> impl Strategy<Value = DiscreteAmplitudeDistribution> {
        proptest::collection::vec((0.0..rp, 0.01f64..1.0), 1..6).prop_map(|v| {
            DiscreteAmplitudeDistribution::from_masses(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn feasible_laws_stay_below_the_wall(d in arb_dist(4.0)) {
            let g = g_fig();
            // scale into the power budget
            let p = average_power(&d);
            let scale = if p > 5.0 { (5.0 / p).sqrt() } else { 1.0 };
            let scaled = DiscreteAmplitudeDistribution::from_masses(
                d.iter().map(|(r, q)| (r * scale, q))).unwrap();
            prop_assert!(delivered_power(&scaled, &g) <= feasible_pd_max(5.0, 4.0, &g) + 1e-12);
        }

        #[test]
        fn coverage_grows_with_window(d in arb_dist(6.0), al in 0.0f64..3.0, w in 0.1f64..3.0, grow in 0.0f64..2.0) {
            let inner = oop_coverage(&d, al + grow.min(al), al + grow.min(al) + w).unwrap();
            let outer = oop_coverage(&d, al, al + grow.min(al) + w + grow).unwrap();
            prop_assert!(outer >= inner - 1e-12);
        }

        #[test]
        fn spreading_toward_extremes_raises_delivered_power(s in 0.5f64..15.0, t in 0.0f64..1.0) {
            // same E[r²] = s: point mass at sqrt(s) vs. a {sqrt(lo), 4} pair
            let g = g_fig();
            let lo = s * t;
            let p_hi = (s - lo) / (16.0 - lo);
            let spread = (1.0 - p_hi) * g.eval_sq(lo) + p_hi * g.eval(4.0);
            prop_assert!(spread >= g.eval_sq(s) - 1e-12);
        }
    }
}
