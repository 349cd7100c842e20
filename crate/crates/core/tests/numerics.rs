use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use swipt_core::channel::{self, entropy_h, log_kernel, marginal_entropy_density};
use swipt_core::quadrature::{integrate, QuadOptions};
use swipt_core::solver::entropy_gradient;
use swipt_core::specfun::{log_bessel_i0, marcum_q1};
use swipt_core::DiscreteAmplitudeDistribution;

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_law(rng: &mut ChaCha8Rng, rmax: f64) -> DiscreteAmplitudeDistribution {
    let m = 1 + (rng.next_u64() % 5) as usize;
    let mut pts: Vec<f64> = (0..m).map(|_| rmax * unit(rng)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    let w: Vec<f64> = pts.iter().map(|_| 0.1 + unit(rng)).collect();
    let s: f64 = w.iter().sum();
    DiscreteAmplitudeDistribution::new(pts, w.iter().map(|x| x / s).collect()).unwrap()
}

#[test]
fn kernel_integrates_to_one() {
    let opts = QuadOptions { abs_tol: 1e-13, ..QuadOptions::default() };
    for k in 0..=40 {
        let r = 0.25 * k as f64;
        let total = integrate(|big_r| if big_r > 0.0 { log_kernel(big_r, r).unwrap().exp() } else { 0.0 }, 0.0, r + 12.0, &opts)
            .unwrap()
            .value;
        assert!((total - 1.0).abs() < 1e-10, "r = {r}: {total}");
    }
}

#[test]
fn marcum_identities() {
    for &r in &[0.0, 0.3, 1.0, 2.5, 7.0, 15.0] {
        assert!((marcum_q1(r, 0.0).unwrap() - 1.0).abs() < 1e-8);
    }
    for &a in &[0.1, 0.5, 1.0, 2.0, 4.0, 6.0] {
        let q = marcum_q1(0.0, a).unwrap();
        assert!((q - (-a * a / 2.0).exp()).abs() < 1e-8, "Q(0,{a}) = {q}");
    }
    for &a in &[0.2, 0.7, 1.5, 3.0, 5.0, 9.0] {
        let q = marcum_q1(a, a).unwrap();
        let want = 0.5 * (1.0 + (log_bessel_i0(a * a).unwrap() - a * a).exp());
        assert!((q - want).abs() < 1e-8, "Q({a},{a}) = {q} vs {want}");
    }
}

#[test]
fn marginal_density_exceeds_minus_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let law = random_law(&mut rng, 6.0);
        for i in 0..50 {
            let r = 8.0 * i as f64 / 49.0;
            let h = marginal_entropy_density(r, &law).unwrap();
            assert!(h > -2.0, "h({r}) = {h}");
        }
    }
}

/// Central differences of the adaptive-quadrature entropy, which shares no
/// code with the fixed-grid gradient.
#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let step = 1e-5;
    for _ in 0..20 {
        let law = random_law(&mut rng, 5.0);
        let (dp, dr) = entropy_gradient(&law).unwrap();
        let pts = law.points().to_vec();
        let probs = law.probs().to_vec();
        for i in 0..law.len() {
            if pts[i] < step {
                continue;
            }
            let mut up = pts.clone();
            up[i] += step;
            let mut dn = pts.clone();
            dn[i] -= step;
            let a = entropy_h(&DiscreteAmplitudeDistribution::new(up, probs.clone()).unwrap()).unwrap();
            let b = entropy_h(&DiscreteAmplitudeDistribution::new(dn, probs.clone()).unwrap()).unwrap();
            let fd = (a - b) / (2.0 * step);
            let scale = dr[i].abs().max(1e-2);
            assert!((fd - dr[i]).abs() / scale < 1e-5, "dH/dr: {fd} vs {}", dr[i]);
        }
        // masses only move within the simplex, so check moving mass from
        // the last point to each other one
        let last = law.len() - 1;
        for i in 0..last {
            let mut up = probs.clone();
            up[i] += step;
            up[last] -= step;
            let mut dn = probs.clone();
            dn[i] -= step;
            dn[last] += step;
            let a = entropy_h(&DiscreteAmplitudeDistribution::new(pts.clone(), up).unwrap()).unwrap();
            let b = entropy_h(&DiscreteAmplitudeDistribution::new(pts.clone(), dn).unwrap()).unwrap();
            let fd = (a - b) / (2.0 * step);
            let want = dp[i] - dp[last];
            assert!((fd - want).abs() / want.abs().max(1e-2) < 1e-5, "dH/dp: {fd} vs {want}");
        }
    }
}

#[test]
fn gradient_vanishes_at_origin() {
    let law = DiscreteAmplitudeDistribution::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
    let (_, dr) = entropy_gradient(&law).unwrap();
    assert!(dr[0].abs() < 1e-12);
}

#[test]
fn mutual_information_of_point_mass_is_zero() {
    let law = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
    assert!(channel::mutual_information(&law).unwrap().abs() < 1e-10);
}
