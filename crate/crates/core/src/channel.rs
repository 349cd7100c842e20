//! The amplitude channel induced by `y = x + n`, `n ~ CN(0, 2)`.
//!
//! Given input amplitude `r`, the output amplitude `R` has the Rician density
//! `K(R, r) = R exp(−(R² + r²)/2) I0(rR)`. For an input amplitude law `F`
//! with uniform independent phase the output amplitude density is
//! `f_R(R; F) = ∫ K(R, r) dF(r)` and
//!
//! ```text
//! H(F)    = −∫ f_R(R; F) ln(f_R(R; F) / R) dR
//! h(r; F) = −∫ K(R, r)   ln(f_R(R; F) / R) dR
//! I(x; y) = H(F) − 1   (nats)
//! ```
//!
//! All densities are evaluated in the log domain; the only place a density
//! is exponentiated is the final integrand.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::quadrature::{self, CompositeRule, QuadOptions};
use crate::specfun::{ln_kernel, KernelTable};
use crate::{Error, Result};

/// Output amplitudes beyond the largest input amplitude plus this margin
/// carry less than 1e-14 of the kernel mass.
pub const TRUNCATION_MARGIN: f64 = 8.0;

/// Densities below this are treated as exactly zero in `f ln f` integrands.
const DENSITY_FLOOR: f64 = 1e-300;

const NORMALIZATION_TOL: f64 = 1e-12;

/// A finitely supported law of the input amplitude.
///
/// Points are strictly increasing, nonnegative and finite; every probability
/// is positive and they sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAmplitudeDistribution {
    points: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteAmplitudeDistribution {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::domain(alloc::format!(
                "need matching nonempty points/probs, got {} and {}",
                points.len(),
                probs.len()
            )));
        }
        if let Some(r) = points.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::domain(alloc::format!("invalid mass point {r}")));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("mass points must be strictly increasing"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::domain(alloc::format!("probabilities must be positive, got {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(alloc::format!("probabilities sum to {total}")));
        }
        Ok(DiscreteAmplitudeDistribution { points, probs })
    }

    /// Builds a law from arbitrary `(point, weight)` pairs: drops
    /// nonpositive weights, merges equal points and renormalizes.
    pub fn from_masses<I: IntoIterator<Item = (f64, f64)>>(masses: I) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = masses.into_iter().filter(|&(_, p)| p > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (r, p) in pairs {
            match points.last() {
                Some(&last) if last == r => *probs.last_mut().expect("nonempty") += p,
                _ => {
                    points.push(r);
                    probs.push(p);
                }
            }
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::domain("no positive probability mass"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(points, probs)
    }

    pub fn point_mass(r: f64) -> Result<Self> {
        Self::new(alloc::vec![r], alloc::vec![1.0])
    }

    /// Equiprobable quantization of the Rayleigh amplitude law with
    /// `E[r²] = mean_square` (the amplitude of `CN(0, mean_square)`).
    /// Points sit at the bin midpoint quantiles and are rescaled so the
    /// second moment is exact.
    pub fn rayleigh_quantized(mean_square: f64, n: usize) -> Result<Self> {
        if !(mean_square > 0.0) || n == 0 {
            return Err(Error::domain("need positive mean square and n ≥ 1"));
        }
        let mut points: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                sqrt(-mean_square * libm::log1p(-u))
            })
            .collect();
        let power: f64 = points.iter().map(|r| r * r).sum::<f64>() / n as f64;
        let scale = sqrt(mean_square / power);
        points.iter_mut().for_each(|r| *r *= scale);
        Self::new(points, alloc::vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn max_point(&self) -> f64 {
        *self.points.last().expect("nonempty by construction")
    }

    /// `ln f_R(R; F)`; `-∞` at `R = 0`.
    pub fn log_output_density(&self, big_r: f64) -> f64 {
        log_mixture_density(&self.points, &self.probs, big_r)
    }
}

/// Time-sharing between the Rayleigh amplitude law of `CN(0, P)` (weight
/// `1 − τ`) and a discrete law (weight `τ`).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDistribution {
    pub rayleigh_weight: f64,
    pub rayleigh_power: f64,
    pub discrete_weight: f64,
    pub discrete: DiscreteAmplitudeDistribution,
}

impl MixtureDistribution {
    pub fn new(tau: f64, rayleigh_power: f64, discrete: DiscreteAmplitudeDistribution) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain(alloc::format!("mixing weight {tau} outside [0, 1]")));
        }
        if !(rayleigh_power > 0.0) || !rayleigh_power.is_finite() {
            return Err(Error::domain("Rayleigh power must be positive and finite"));
        }
        Ok(MixtureDistribution {
            rayleigh_weight: 1.0 - tau,
            rayleigh_power,
            discrete_weight: tau,
            discrete,
        })
    }

    /// `E[r²]` of the input amplitude.
    pub fn average_power(&self) -> f64 {
        let disc: f64 = self.discrete.iter().map(|(r, p)| p * r * r).sum();
        self.rayleigh_weight * self.rayleigh_power + self.discrete_weight * disc
    }

    /// `ln` of the output amplitude density. The CSCG component passes
    /// through the channel as a Rayleigh law with mean square `P + 2`.
    pub fn log_output_density(&self, big_r: f64) -> f64 {
        if big_r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = self.rayleigh_power + 2.0;
        let mut terms = [f64::NEG_INFINITY; 2];
        if self.rayleigh_weight > 0.0 {
            terms[0] = log(self.rayleigh_weight) + log(2.0 * big_r / s) - big_r * big_r / s;
        }
        if self.discrete_weight > 0.0 {
            terms[1] = log(self.discrete_weight) + self.discrete.log_output_density(big_r);
        }
        log_sum_exp(&terms)
    }

    fn truncation(&self) -> f64 {
        let spread = sqrt((self.rayleigh_power + 2.0) / 2.0).max(1.0);
        self.discrete.max_point() + TRUNCATION_MARGIN * spread
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + log(xs.iter().map(|&x| exp(x - m)).sum::<f64>())
}

/// `ln Σ p_i K(R, r_i)`, skipping zero-probability points.
pub(crate) fn log_mixture_density(points: &[f64], probs: &[f64], big_r: f64) -> f64 {
    if big_r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut m = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for (&r, &p) in points.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        let t = log(p) + ln_kernel(big_r, r);
        // streaming log-sum-exp
        if t > m {
            acc = acc * exp(m - t) + 1.0;
            m = t;
        } else {
            acc += exp(t - m);
        }
    }
    m + log(acc)
}

/// `ln K(R, r)`; needs `R > 0`.
pub fn log_kernel(big_r: f64, r: f64) -> Result<f64> {
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::domain(alloc::format!("output amplitude must be positive, got {big_r}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(alloc::format!("input amplitude must be nonnegative, got {r}")));
    }
    Ok(ln_kernel(big_r, r))
}

/// `f_R(R; F) = Σ p_i K(R, r_i)`; zero at `R = 0`.
pub fn output_density(big_r: f64, dist: &DiscreteAmplitudeDistribution) -> f64 {
    if big_r <= 0.0 {
        return 0.0;
    }
    exp(dist.log_output_density(big_r))
}

fn quad_options() -> QuadOptions {
    QuadOptions::default()
}

/// `−f ln(f/R)` with the continuous extension at `f = 0`.
#[inline]
fn entropy_integrand(log_f: f64, big_r: f64) -> f64 {
    let f = exp(log_f);
    if f < DENSITY_FLOOR {
        0.0
    } else {
        -f * (log_f - log(big_r))
    }
}

pub(crate) fn entropy_on<D: Fn(f64) -> f64>(log_density: D, r_max: f64) -> Result<f64> {
    let q = quadrature::integrate(
        |big_r| {
            if big_r <= 0.0 {
                0.0
            } else {
                entropy_integrand(log_density(big_r), big_r)
            }
        },
        0.0,
        r_max,
        &quad_options(),
    )?;
    Ok(q.value)
}

/// `H(F)` in nats, by adaptive quadrature on `[0, max r_i + 8]`.
pub fn entropy_h(dist: &DiscreteAmplitudeDistribution) -> Result<f64> {
    entropy_on(|x| dist.log_output_density(x), dist.max_point() + TRUNCATION_MARGIN)
}

/// `h(r; F)` in nats. `Σ p_i h(r_i; F) = H(F)`.
pub fn marginal_entropy_density(r: f64, dist: &DiscreteAmplitudeDistribution) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(alloc::format!("input amplitude must be nonnegative, got {r}")));
    }
    let r_max = r.max(dist.max_point()) + TRUNCATION_MARGIN;
    let q = quadrature::integrate(
        |big_r| {
            if big_r <= 0.0 {
                return 0.0;
            }
            let lk = ln_kernel(big_r, r);
            let k = exp(lk);
            if k == 0.0 {
                0.0
            } else {
                -k * (dist.log_output_density(big_r) - log(big_r))
            }
        },
        0.0,
        r_max,
        &quad_options(),
    )?;
    Ok(q.value)
}

/// `I(x; y) = H(F) − 1` nats; values within the quadrature tolerance below
/// zero are clamped to zero.
pub fn mutual_information(dist: &DiscreteAmplitudeDistribution) -> Result<f64> {
    Ok(clamp_mi(entropy_h(dist)? - 1.0))
}

pub(crate) fn clamp_mi(mi: f64) -> f64 {
    if mi < 0.0 && mi > -10.0 * quad_options().abs_tol {
        0.0
    } else {
        mi
    }
}

/// `ln(1 + P_a/2)`: capacity under an average-power constraint alone.
pub fn awgn_capacity(pa: f64) -> Result<f64> {
    if !(pa > 0.0) || !pa.is_finite() {
        return Err(Error::domain(alloc::format!("average power must be positive, got {pa}")));
    }
    Ok(libm::log1p(pa / 2.0))
}

pub fn mixture_output_density(big_r: f64, mix: &MixtureDistribution) -> f64 {
    if big_r <= 0.0 {
        return 0.0;
    }
    exp(mix.log_output_density(big_r))
}

pub fn mixture_entropy_h(mix: &MixtureDistribution) -> Result<f64> {
    entropy_on(|x| mix.log_output_density(x), mix.truncation())
}

/// Entropy, marginal entropy densities and position gradient of a
/// (possibly unnormalized, zero-weight) mass-point configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEval {
    pub entropy: f64,
    /// `h(r_i; F)` for every point.
    pub marginal: Vec<f64>,
    /// `∂H/∂r_i`; empty unless requested.
    pub d_points: Vec<f64>,
    /// `dh/dr` at every point; empty unless requested.
    pub slopes: Vec<f64>,
}

/// Fixed composite Gauss–Legendre grid over the output amplitude, for
/// repeated evaluation of `H`, `h` and gradients with all inputs in
/// `[0, support_bound]`.
///
/// The result is a smooth function of the mass points, which the optimizer
/// relies on. One-noise-deviation panels keep `H` within about `1e-13` of
/// the adaptive value and `h` within about `1e-7` even for heavy two-point
/// laws; half-width panels bring `h` to the adaptive tolerance.
#[derive(Debug, Clone)]
pub struct OutputGrid {
    rule: CompositeRule,
    ln_nodes: Vec<f64>,
    support_bound: f64,
    table: KernelTable,
}

/// Node density below which a node falls back to log-domain arithmetic.
const DIRECT_FLOOR: f64 = 1e-280;

impl OutputGrid {
    pub const PANEL_WIDTH: f64 = 1.0;
    pub const FINE_PANEL_WIDTH: f64 = 0.5;

    pub fn new(support_bound: f64) -> Self {
        Self::with_panel_width(support_bound, Self::PANEL_WIDTH)
    }

    pub fn fine(support_bound: f64) -> Self {
        Self::with_panel_width(support_bound, Self::FINE_PANEL_WIDTH)
    }

    pub fn with_panel_width(support_bound: f64, width: f64) -> Self {
        let rule = CompositeRule::new(0.0, support_bound + TRUNCATION_MARGIN, width);
        let ln_nodes = rule.nodes.iter().map(|&x| log(x)).collect();
        OutputGrid { rule, ln_nodes, support_bound, table: KernelTable::new() }
    }

    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Evaluates `H`, `h(r_i)` and optionally `∂H/∂r_i` and `dh/dr(r_i)`.
    /// Probabilities may be zero; they need not be normalized for the
    /// marginals.
    pub fn evaluate(&self, points: &[f64], probs: &[f64], with_gradient: bool) -> EntropyEval {
        let m = points.len();
        let mut marginal = alloc::vec![0.0; m];
        let mut d_points = if with_gradient { alloc::vec![0.0; m] } else { Vec::new() };
        let mut slopes = if with_gradient { alloc::vec![0.0; m] } else { Vec::new() };
        let mut entropy = 0.0;
        let mut k = alloc::vec![0.0; m];
        let mut ratio = alloc::vec![0.0; m];
        for j in 0..self.rule.len() {
            let big_r = self.rule.nodes[j];
            let w = self.rule.weights[j];
            let ln_r = self.ln_nodes[j];
            let mut f = 0.0;
            for i in 0..m {
                let (kv, rho) = self.table.kernel_and_ratio(big_r, points[i]);
                k[i] = kv;
                ratio[i] = rho;
                f += probs[i] * kv;
            }
            let log_f = if f > DIRECT_FLOOR {
                log(f)
            } else {
                // far tail: rebuild f and the kernels in log form
                let lk: Vec<f64> = points.iter().map(|&r| ln_kernel(big_r, r)).collect();
                let terms: Vec<f64> = lk
                    .iter()
                    .zip(probs)
                    .map(|(&l, &p)| if p > 0.0 { log(p) + l } else { f64::NEG_INFINITY })
                    .collect();
                for i in 0..m {
                    k[i] = exp(lk[i]);
                }
                log_sum_exp(&terms)
            };
            if !log_f.is_finite() {
                continue;
            }
            let ell = log_f - ln_r;
            entropy += w * entropy_integrand(log_f, big_r);
            for i in 0..m {
                if k[i] == 0.0 {
                    continue;
                }
                let wk = w * k[i];
                marginal[i] -= wk * ell;
                if with_gradient {
                    let dk = big_r * ratio[i] - points[i];
                    slopes[i] -= wk * dk * ell;
                    if probs[i] > 0.0 {
                        d_points[i] -= probs[i] * wk * dk * (ell + 1.0);
                    }
                }
            }
        }
        EntropyEval { entropy, marginal, d_points, slopes }
    }

    /// `h(r_i)` for every point and the mass Hessian
    /// `∂h(r_i)/∂p_j = −∫ K(R, r_i) K(R, r_j) / f_R(R) dR`, row-major.
    pub fn marginals_and_mass_hessian(&self, points: &[f64], probs: &[f64]) -> (EntropyEval, Vec<f64>) {
        let m = points.len();
        let mut marginal = alloc::vec![0.0; m];
        let mut hess = alloc::vec![0.0; m * m];
        let mut entropy = 0.0;
        let mut k = alloc::vec![0.0; m];
        for j in 0..self.rule.len() {
            let big_r = self.rule.nodes[j];
            let w = self.rule.weights[j];
            let mut f = 0.0;
            for i in 0..m {
                k[i] = self.table.kernel_and_ratio(big_r, points[i]).0;
                f += probs[i] * k[i];
            }
            if !(f > DIRECT_FLOOR) {
                continue;
            }
            let log_f = log(f);
            let ell = log_f - self.ln_nodes[j];
            entropy += w * entropy_integrand(log_f, big_r);
            for a in 0..m {
                if k[a] == 0.0 {
                    continue;
                }
                marginal[a] -= w * k[a] * ell;
                let wa = w * k[a] / f;
                for b in a..m {
                    hess[a * m + b] -= wa * k[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                hess[a * m + b] = hess[b * m + a];
            }
        }
        (EntropyEval { entropy, marginal, d_points: Vec::new(), slopes: Vec::new() }, hess)
    }

    /// Caches `ln(f_R/R)` on the grid so `h(r; F)` can be evaluated for many
    /// `r` in `[0, support_bound]`.
    pub fn marginal_profile(&self, dist: &DiscreteAmplitudeDistribution) -> MarginalProfile<'_> {
        let ell = self
            .rule
            .nodes
            .iter()
            .zip(&self.ln_nodes)
            .map(|(&x, &ln_x)| dist.log_output_density(x) - ln_x)
            .collect();
        MarginalProfile { grid: self, ell }
    }
}

#[derive(Debug, Clone)]
pub struct MarginalProfile<'a> {
    grid: &'a OutputGrid,
    ell: Vec<f64>,
}

impl MarginalProfile<'_> {
    /// `h(r; F)`.
    pub fn marginal(&self, r: f64) -> f64 {
        self.marginal_and_slope(r).0
    }

    /// `h(r; F)` and `dh/dr`.
    pub fn marginal_and_slope(&self, r: f64) -> (f64, f64) {
        let rule = &self.grid.rule;
        let (mut h, mut dh) = (0.0, 0.0);
        for j in 0..rule.len() {
            let big_r = rule.nodes[j];
            let (k, ratio) = self.grid.table.kernel_and_ratio(big_r, r);
            if k != 0.0 {
                let wk = rule.weights[j] * k * self.ell[j];
                h -= wk;
                dh -= wk * (big_r * ratio - r);
            }
        }
        (h, dh)
    }
}
