//! Monte-Carlo estimates that bypass the quadrature path.
//!
//! Samples are generated with ChaCha20 (`rand_chacha::ChaCha20Rng`). The
//! seed selects the key and each purpose draws from its own stream, so
//! changing how many numbers one purpose consumes never shifts another.
//! Samples are split into fixed batches of [`BATCH`] with streams
//! `4·batch + purpose`; results depend only on `(n, seed)`, never on how
//! batches are scheduled. Sums are Kahan-compensated.

use libm::{cos, log, sin, sqrt};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::channel::{DiscreteAmplitudeDistribution, MixtureDistribution};
use crate::{Error, Result};

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 10_000;
/// Samples per batch.
pub const BATCH: u64 = 1 << 16;

const STREAM_AMPLITUDE: u64 = 0;
const STREAM_PHASE: u64 = 1;
const STREAM_NOISE_RE: u64 = 2;
const STREAM_NOISE_IM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Compensated running sum of values and squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: Kahan,
    sum_sq: Kahan,
}

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    total: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.total + y;
        self.carry = (t - self.total) - y;
        self.total = t;
    }
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn merge(&mut self, other: &Moments) {
        self.sum.add(other.sum.total);
        self.sum.add(-other.sum.carry);
        self.sum_sq.add(other.sum_sq.total);
        self.sum_sq.add(-other.sum_sq.carry);
    }

    fn estimate(&self, n: u64, seed: u64) -> McEstimate {
        let nf = n as f64;
        let mean = self.sum.total / nf;
        let var = ((self.sum_sq.total / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        McEstimate { mean, std_error: sqrt(var / nf), n_samples: n, seed }
    }
}

struct Streams {
    amplitude: ChaCha20Rng,
    phase: ChaCha20Rng,
    noise_re: ChaCha20Rng,
    noise_im: ChaCha20Rng,
}

fn stream(seed: u64, batch: u64, purpose: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(4 * batch + purpose);
    rng
}

impl Streams {
    fn new(seed: u64, batch: u64) -> Self {
        Streams {
            amplitude: stream(seed, batch, STREAM_AMPLITUDE),
            phase: stream(seed, batch, STREAM_PHASE),
            noise_re: stream(seed, batch, STREAM_NOISE_RE),
            noise_im: stream(seed, batch, STREAM_NOISE_IM),
        }
    }

    /// Output amplitude `|r e^{iθ} + n|` for input amplitude `r`, plus `|n|²`.
    fn output(&mut self, r: f64) -> (f64, f64) {
        let theta = core::f64::consts::TAU * uniform(&mut self.phase);
        let n_re = normal(&mut self.noise_re);
        let n_im = normal(&mut self.noise_im);
        let y_re = r * cos(theta) + n_re;
        let y_im = r * sin(theta) + n_im;
        (sqrt(y_re * y_re + y_im * y_im), n_re * n_re + n_im * n_im)
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal by Box–Muller, one value per pair of uniforms so that a
/// stream position maps to exactly one sample.
fn normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    sqrt(-2.0 * log(u1)) * cos(core::f64::consts::TAU * u2)
}

/// Inverse-CDF draw from a discrete law.
fn draw(dist: &DiscreteAmplitudeDistribution, u: f64) -> f64 {
    let mut acc = 0.0;
    for (r, p) in dist.iter() {
        acc += p;
        if u < acc {
            return r;
        }
    }
    dist.max_point()
}

fn check_n(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::domain(alloc::format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    Ok(())
}

fn run(n: u64, seed: u64, mut sample: impl FnMut(&mut Streams) -> f64) -> McEstimate {
    let mut total = Moments::default();
    let batches = n.div_ceil(BATCH);
    for b in 0..batches {
        let mut streams = Streams::new(seed, b);
        let count = BATCH.min(n - b * BATCH);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(sample(&mut streams));
        }
        total.merge(&m);
    }
    total.estimate(n, seed)
}

/// Mutual information `E[ln f(y|x) − ln f(y)]` in nats.
///
/// With `f(y|x) = e^{−|n|²/2}/(2π)` and `f(y) = f_R(|y|)/(2π|y|)` each sample
/// contributes `ln|y| − |n|²/2 − ln f_R(|y|)`.
pub fn estimate_mi(dist: &DiscreteAmplitudeDistribution, n: u64, seed: u64) -> Result<McEstimate> {
    check_n(n)?;
    Ok(run(n, seed, |s| {
        let r = draw(dist, uniform(&mut s.amplitude));
        let (big_r, noise_sq) = s.output(r);
        log(big_r) - 0.5 * noise_sq - dist.log_output_density(big_r)
    }))
}

/// Probability that the output amplitude falls in `[al, au]`.
pub fn estimate_coverage(dist: &DiscreteAmplitudeDistribution, al: f64, au: f64, n: u64, seed: u64) -> Result<McEstimate> {
    check_n(n)?;
    if !(al >= 0.0) || !(au > al) {
        return Err(Error::domain(alloc::format!("need 0 ≤ A_l < A_u, got [{al}, {au}]")));
    }
    Ok(run(n, seed, |s| {
        let r = draw(dist, uniform(&mut s.amplitude));
        let (big_r, _) = s.output(r);
        if (al..=au).contains(&big_r) { 1.0 } else { 0.0 }
    }))
}

/// Output entropy functional `H = E[−ln(f_R(R)/R)]` of a time-sharing
/// mixture. The Rayleigh component is drawn as `sqrt(−P ln U)`.
pub fn estimate_mixture_entropy(mix: &MixtureDistribution, n: u64, seed: u64) -> Result<McEstimate> {
    check_n(n)?;
    Ok(run(n, seed, |s| {
        let u = uniform(&mut s.amplitude);
        let r = if u < mix.discrete_weight {
            draw(&mix.discrete, u / mix.discrete_weight)
        } else {
            let v = (u - mix.discrete_weight) / mix.rayleigh_weight;
            sqrt(-mix.rayleigh_power * log(1.0 - v))
        };
        let (big_r, _) = s.output(r);
        log(big_r) - mix.log_output_density(big_r)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kahan_beats_naive_sum() {
        let mut k = Kahan::default();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-16);
        }
        assert!((k.total - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn normal_moments() {
        let mut rng = stream(3, 0, STREAM_NOISE_RE);
        let mut m = Moments::default();
        for _ in 0..200_000 {
            m.push(normal(&mut rng));
        }
        let e = m.estimate(200_000, 3);
        assert!(e.mean.abs() < 0.01);
        assert!((e.std_error * sqrt(200_000.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn inverse_cdf() {
        let d = DiscreteAmplitudeDistribution::new(vec![0.0, 1.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(draw(&d, 0.0), 0.0);
        assert_eq!(draw(&d, 0.3), 1.0);
        assert_eq!(draw(&d, 0.99), 2.0);
    }

    #[test]
    fn rejects_small_n() {
        let d = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
        assert!(estimate_mi(&d, 100, 1).is_err());
    }
}
