//! Modified Bessel functions of order 0/1 in log or ratio form, and the
//! first-order Marcum Q-function.
//!
//! Everything here is pure double-precision arithmetic. `I0(x)` overflows a
//! double near `x ≈ 713`, so callers only ever see `ln I0` or `I1/I0`.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::quadrature::{self, QuadOptions};
use crate::{Error, Result};

/// Power series below this argument, large-argument expansion above it.
pub const BESSEL_SERIES_LIMIT: f64 = 15.0;

/// Series for the Marcum Q-function up to this noncentrality, kernel-tail
/// quadrature above it.
pub const MARCUM_SERIES_LIMIT: f64 = 20.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_arg(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(alloc::format!(
            "{name} must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

const SERIES_TERMS: usize = 96;

const fn reciprocal_table(shift: f64) -> [f64; SERIES_TERMS] {
    let mut t = [0.0; SERIES_TERMS];
    let mut k = 1;
    while k < SERIES_TERMS {
        t[k] = 1.0 / (k as f64 * (k as f64 + shift));
        k += 1;
    }
    t
}

static INV_KK: [f64; SERIES_TERMS] = reciprocal_table(0.0);
static INV_KK1: [f64; SERIES_TERMS] = reciprocal_table(1.0);

/// Power-series sums with `I0(x) = s0` and `I1(x) = (x/2) s1`.
#[inline]
fn series_sums(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1, mut s0, mut s1) = (1.0, 1.0, 1.0, 1.0);
    for k in 1..SERIES_TERMS {
        t0 *= q * INV_KK[k];
        t1 *= q * INV_KK1[k];
        s0 += t0;
        s1 += t1;
        if t0 < 1e-17 * s0 && t1 < 1e-17 * s1 {
            break;
        }
    }
    (s0, s1)
}

/// Returns `(ln I0(x), I1(x)/I0(x))` for `x ≥ 0` without argument checks.
pub(crate) fn ln_i0_and_ratio(x: f64) -> (f64, f64) {
    if x < BESSEL_SERIES_LIMIT {
        let (s0, s1) = series_sums(x);
        (log(s0), 0.5 * x * s1 / s0)
    } else {
        let (s0, s1) = asymptotic_sums(x);
        (x - 0.5 * (LN_2PI + log(x)) + log(s0), s1 / s0)
    }
}

/// `(K(R, r), I1(rR)/I0(rR))` for `R > 0` with the Rician kernel
/// `K = R exp(−(R² + r²)/2) I0(rR)`, evaluated without logarithms. Values
/// below the double range underflow to zero.
#[cfg(test)]
pub(crate) fn kernel_and_ratio(big_r: f64, r: f64) -> (f64, f64) {
    let x = r * big_r;
    if x < BESSEL_SERIES_LIMIT {
        let (s0, s1) = series_sums(x);
        (big_r * exp(-0.5 * (big_r * big_r + r * r)) * s0, 0.5 * x * s1 / s0)
    } else {
        let (s0, s1) = asymptotic_sums(x);
        let d = big_r - r;
        (sqrt(big_r / (core::f64::consts::TAU * r)) * exp(-0.5 * d * d) * s0, s1 / s0)
    }
}

/// Piecewise Chebyshev interpolants of the scaled Bessel functions, for
/// inner loops that evaluate the Rician kernel millions of times.
///
/// Below `TABLE_SPLIT` the table holds `e^{−x} I0(x)` and `e^{−x} I1(x)` on
/// unit intervals; above it holds the large-argument sums `S_0`, `S_1` as
/// functions of `u = TABLE_SPLIT / x ∈ (0, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTable {
    small: Vec<[f64; 2 * TABLE_COEFFS]>,
    large: Vec<[f64; 2 * TABLE_COEFFS]>,
}

const TABLE_SPLIT: f64 = 16.0;
const TABLE_COEFFS: usize = 14;
const LARGE_PIECES: usize = 8;

fn chebyshev_fit<F: Fn(f64) -> (f64, f64)>(f: F, a: f64, b: f64) -> [f64; 2 * TABLE_COEFFS] {
    let n = TABLE_COEFFS;
    let mut vals = [(0.0, 0.0); TABLE_COEFFS];
    for (j, v) in vals.iter_mut().enumerate() {
        let theta = core::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        let t = libm::cos(theta);
        *v = f(0.5 * (a + b) + 0.5 * (b - a) * t);
    }
    let mut c = [0.0; 2 * TABLE_COEFFS];
    for k in 0..n {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            let w = libm::cos(core::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64);
            s0 += v.0 * w;
            s1 += v.1 * w;
        }
        let scale = if k == 0 { 1.0 } else { 2.0 } / n as f64;
        c[k] = s0 * scale;
        c[n + k] = s1 * scale;
    }
    c
}

#[inline]
fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    let t2 = 2.0 * t;
    for &ck in c[1..].iter().rev() {
        let b0 = ck + t2 * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

impl KernelTable {
    pub(crate) fn new() -> Self {
        let scaled = |x: f64| {
            let (l0, rho) = ln_i0_and_ratio(x);
            let g0 = exp(l0 - x);
            (g0, g0 * rho)
        };
        let small = (0..TABLE_SPLIT as usize)
            .map(|i| chebyshev_fit(scaled, i as f64, i as f64 + 1.0))
            .collect();
        let sums = |u: f64| {
            if u <= 0.0 {
                return (1.0, 1.0);
            }
            let x = TABLE_SPLIT / u;
            let (l0, rho) = ln_i0_and_ratio(x);
            let s0 = exp(l0 - x + 0.5 * (LN_2PI + log(x)));
            (s0, s0 * rho)
        };
        let w = 1.0 / LARGE_PIECES as f64;
        let large = (0..LARGE_PIECES)
            .map(|i| chebyshev_fit(sums, i as f64 * w, (i + 1) as f64 * w))
            .collect();
        KernelTable { small, large }
    }

    /// `(K(R, r), I1(rR)/I0(rR))` as in [`kernel_and_ratio`].
    #[inline]
    pub(crate) fn kernel_and_ratio(&self, big_r: f64, r: f64) -> (f64, f64) {
        let x = r * big_r;
        let d = big_r - r;
        let gauss = exp(-0.5 * d * d);
        if x < TABLE_SPLIT {
            let i = x as usize;
            let c = &self.small[i];
            let t = 2.0 * (x - i as f64) - 1.0;
            let g0 = clenshaw(&c[..TABLE_COEFFS], t);
            let g1 = clenshaw(&c[TABLE_COEFFS..], t);
            (big_r * gauss * g0, g1 / g0)
        } else {
            let u = TABLE_SPLIT / x;
            let i = ((u * LARGE_PIECES as f64) as usize).min(LARGE_PIECES - 1);
            let c = &self.large[i];
            let t = 2.0 * (u * LARGE_PIECES as f64 - i as f64) - 1.0;
            let s0 = clenshaw(&c[..TABLE_COEFFS], t);
            let s1 = clenshaw(&c[TABLE_COEFFS..], t);
            (sqrt(big_r / (core::f64::consts::TAU * r)) * gauss * s0, s1 / s0)
        }
    }
}

/// Large-argument sums `S_ν` with `I_ν(x) ≈ e^x / sqrt(2πx) · S_ν`, ν = 0, 1.
fn asymptotic_sums(x: f64) -> (f64, f64) {
    let inv8x = 1.0 / (8.0 * x);
    let mut a = 1.0;
    let mut b = 1.0;
    let mut s0 = 1.0;
    let mut s1 = 1.0;
    let mut k = 1.0;
    while k < 60.0 {
        let odd = 2.0 * k - 1.0;
        let na = a * odd * odd * inv8x / k;
        let nb = b * (odd * odd - 4.0) * inv8x / k;
        // divergent tail: stop at the smallest term
        if na.abs() > a.abs() || nb.abs() > b.abs() && k > 2.0 {
            break;
        }
        a = na;
        b = nb;
        s0 += a;
        s1 += b;
        if a.abs() < 1e-17 * s0 && b.abs() < 1e-17 * s1 {
            break;
        }
        k += 1.0;
    }
    (s0, s1)
}

#[inline]
pub(crate) fn ln_i0(x: f64) -> f64 {
    ln_i0_and_ratio(x).0
}

/// `ln I0(x)` for finite `x ≥ 0`.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    check_arg("x", x)?;
    Ok(ln_i0(x))
}

/// `I1(x) / I0(x)` for finite `x ≥ 0`; lies in `[0, 1)`.
pub fn bessel_i1_over_i0(x: f64) -> Result<f64> {
    check_arg("x", x)?;
    Ok(ln_i0_and_ratio(x).1)
}

/// First-order Marcum Q-function `Q(r, A) = ∫_A^∞ K(R, r) dR`, the
/// probability that the output amplitude is at least `A` given input
/// amplitude `r`. `A = +∞` is allowed and yields 0.
pub fn marcum_q1(r: f64, a: f64) -> Result<f64> {
    check_arg("r", r)?;
    if a.is_nan() || a < 0.0 {
        return Err(Error::domain(alloc::format!(
            "threshold must be nonnegative, got {a}"
        )));
    }
    Ok(marcum_q1_unchecked(r, a))
}

pub(crate) fn marcum_q1_unchecked(r: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    if a == f64::INFINITY {
        return 0.0;
    }
    if r == 0.0 {
        return exp(-0.5 * a * a);
    }
    if r <= MARCUM_SERIES_LIMIT {
        marcum_series(r, a)
    } else {
        marcum_tail_quadrature(r, a)
    }
}

/// Poisson mixture of Erlang tails:
/// `Q(r, A) = Σ_k Pois(k; r²/2) · P(Pois(A²/2) ≤ k)`.
fn marcum_series(r: f64, a: f64) -> f64 {
    let lam = 0.5 * r * r;
    let x = 0.5 * a * a;
    let ln_lam = log(lam);
    let ln_x = log(x);
    let k_max = (lam + 12.0 * sqrt(lam) + 40.0) as usize;
    let mut ln_fact = 0.0;
    let mut erlang_cdf = 0.0;
    let mut sum = 0.0;
    let mut mass = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            ln_fact += log(k as f64);
        }
        let kf = k as f64;
        erlang_cdf += exp(-x + kf * ln_x - ln_fact);
        let pk = exp(-lam + kf * ln_lam - ln_fact);
        sum += pk * erlang_cdf.min(1.0);
        mass += pk;
        if kf > lam && pk < 1e-20 && mass > 1.0 - 1e-15 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

fn marcum_tail_quadrature(r: f64, a: f64) -> f64 {
    const SPAN: f64 = 40.0;
    let opts = QuadOptions { abs_tol: 1e-13, ..QuadOptions::default() };
    let density = |big_r: f64| {
        if big_r <= 0.0 {
            0.0
        } else {
            exp(ln_kernel(big_r, r))
        }
    };
    let integrate = |lo: f64, hi: f64| match quadrature::integrate(density, lo, hi, &opts) {
        Ok(q) => q.value,
        Err(Error::Quadrature { value, .. }) => value,
        Err(_) => f64::NAN,
    };
    if a >= r {
        if a >= r + SPAN {
            return 0.0;
        }
        integrate(a, r + SPAN).clamp(0.0, 1.0)
    } else {
        let lo = (r - SPAN).max(0.0);
        if a <= lo {
            return 1.0;
        }
        (1.0 - integrate(lo, a)).clamp(0.0, 1.0)
    }
}

/// Unchecked log-kernel `ln K(R, r) = ln R − (R² + r²)/2 + ln I0(rR)`.
#[inline]
pub(crate) fn ln_kernel(big_r: f64, r: f64) -> f64 {
    log(big_r) - 0.5 * (big_r * big_r + r * r) + ln_i0(r * big_r)
}

/// `∂Q(r, A)/∂r = A · exp(−(r² + A²)/2) · I1(rA)`.
pub fn marcum_q1_dr(r: f64, a: f64) -> f64 {
    if a <= 0.0 || a == f64::INFINITY || r <= 0.0 {
        return 0.0;
    }
    let (ln_i0v, ratio) = ln_i0_and_ratio(r * a);
    exp(log(a) - 0.5 * (r * r + a * a) + ln_i0v) * ratio
}
