//! Closed-form results for an unbounded peak amplitude.
//!
//! Without a peak constraint the capacity is the Gaussian value
//! `ln(1 + P_a/2)` whatever the delivered-power floor. Below the delivered
//! power of the CSCG input the Gaussian input attains it; above, a
//! time-sharing mixture of the Gaussian input and a heavy two-point law gets
//! arbitrarily close without attaining it. This module builds that mixture.

use libm::{exp, log, sqrt};

use crate::channel::{self, DiscreteAmplitudeDistribution, MixtureDistribution};
use crate::constraints::EvenPolynomial;
use crate::quadrature::{self, QuadOptions};
use crate::{Error, Result};

/// Delivered power `E[g(r)]` of the CSCG input `CN(0, P_a)`, whose
/// amplitude is Rayleigh with `E[r^{2i}] = i! P_a^i`.
pub fn rdp_of_cscg(pa: f64, g: &EvenPolynomial) -> Result<f64> {
    check_power(pa)?;
    let mut moment = 1.0;
    let mut total = 0.0;
    for (i, &a) in g.alphas().iter().enumerate() {
        if i > 0 {
            moment *= i as f64 * pa;
        }
        total += a * moment;
    }
    Ok(total)
}

/// The same quantity by adaptive quadrature of `∫ g(r) (2r/P_a) e^{−r²/P_a} dr`.
pub fn rdp_of_cscg_by_quadrature(pa: f64, g: &EvenPolynomial) -> Result<f64> {
    check_power(pa)?;
    let integrand = |r: f64| g.eval(r) * 2.0 * r / pa * exp(-r * r / pa);
    // the r^{2n+1} e^{−r²/P_a} tail is negligible past this point
    let upper = sqrt(pa) * (12.0 + 2.0 * g.degree() as f64);
    let width = sqrt(pa) / 4.0;
    let coarse = quadrature::integrate(
        integrand,
        0.0,
        upper,
        &QuadOptions { abs_tol: 1e-6, initial_width: width, ..QuadOptions::default() },
    )?;
    let fine = quadrature::integrate(
        integrand,
        0.0,
        upper,
        &QuadOptions {
            abs_tol: 1e-15 * coarse.value.abs().max(f64::MIN_POSITIVE),
            initial_width: width,
            ..QuadOptions::default()
        },
    )?;
    Ok(fine.value)
}

fn check_power(pa: f64) -> Result<()> {
    if !(pa > 0.0) || !pa.is_finite() {
        return Err(Error::domain(alloc::format!("P_a must be positive, got {pa}")));
    }
    Ok(())
}

/// Two-point law with mass `1 − 1/l²` at zero and `1/l²` at `sqrt(P_a)·l`;
/// its second moment is exactly `P_a`.
pub fn tail_sequence_distribution(l: u64, pa: f64) -> Result<DiscreteAmplitudeDistribution> {
    if l < 2 {
        return Err(Error::domain(alloc::format!("tail index must be at least 2, got {l}")));
    }
    check_power(pa)?;
    let w = 1.0 / (l as f64 * l as f64);
    DiscreteAmplitudeDistribution::new(alloc::vec![0.0, sqrt(pa) * l as f64], alloc::vec![1.0 - w, w])
}

/// `P_{d,l} = α_0 + α_1 P_a + Σ_{i≥2} α_i P_a^i l^{2i−2}`.
pub fn tail_delivered_power(l: u64, pa: f64, g: &EvenPolynomial) -> f64 {
    let l2 = l as f64 * l as f64;
    let mut total = 0.0;
    let mut pa_pow = 1.0;
    let mut l_pow = 1.0;
    for (i, &a) in g.alphas().iter().enumerate() {
        if i > 0 {
            pa_pow *= pa;
        }
        if i > 1 {
            l_pow *= l2;
        }
        total += a * pa_pow * l_pow;
    }
    total
}

/// Smallest `l ≥ 2` with `P_{d,l} ≥ P_d`, by doubling then bisection.
pub fn min_tail_index(pa: f64, pd: f64, g: &EvenPolynomial) -> u64 {
    let reaches = |l: u64| tail_delivered_power(l, pa, g) >= pd;
    let mut hi = 2u64;
    while !reaches(hi) {
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            return hi;
        }
    }
    if hi == 2 {
        return 2;
    }
    let mut lo = hi / 2;
    // invariant: !reaches(lo), reaches(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// A time-sharing input meeting `E[r²] ≤ P_a` and `E[g(r)] ≥ P_d` for an
/// unbounded peak.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSharingPlan {
    pub tau: f64,
    pub l: u64,
    pub mixture: MixtureDistribution,
    pub mi_nats: f64,
    /// `ln(1 + P_a/2) − mi_nats`.
    pub gap_nats: f64,
    pub entropy_rayleigh: f64,
    pub entropy_tail: f64,
    pub entropy_mixture: f64,
    pub delivered_power: f64,
}

/// Mixes the CSCG input with the tail law of index `l` using
/// `τ = (P_d − P_R)/(P_{d,l} − P_R)`. When `P_d ≤ P_R` the plan is pure CSCG.
pub fn time_sharing_plan(pa: f64, pd: f64, g: &EvenPolynomial, l: u64) -> Result<TimeSharingPlan> {
    let pr = rdp_of_cscg(pa, g)?;
    let tail = tail_sequence_distribution(l, pa)?;
    let pdl = tail_delivered_power(l, pa, g);
    let tau = if pd <= pr {
        0.0
    } else if pdl >= pd {
        (pd - pr) / (pdl - pr)
    } else {
        return Err(Error::TailIndexTooSmall { l, min_l: min_tail_index(pa, pd, g) });
    };
    let entropy_tail = channel::entropy_h(&tail)?;
    let mixture = MixtureDistribution::new(tau, pa, tail)?;
    let entropy_mixture = channel::mixture_entropy_h(&mixture)?;
    let entropy_rayleigh = log((pa + 2.0) / 2.0) + 1.0;
    let mi_nats = entropy_mixture - 1.0;
    Ok(TimeSharingPlan {
        tau,
        l,
        mi_nats,
        gap_nats: channel::awgn_capacity(pa)? - mi_nats,
        entropy_rayleigh,
        entropy_tail,
        entropy_mixture,
        delivered_power: (1.0 - tau) * pr + tau * pdl,
        mixture,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{average_power, delivered_power};
    use alloc::vec;

    fn g_fig() -> EvenPolynomial {
        EvenPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap()
    }

    #[test]
    fn cscg_delivered_power() {
        let g2 = EvenPolynomial::new(vec![1e-12, 1.0, 1e-9]).unwrap();
        assert!((rdp_of_cscg(3.0, &g2).unwrap() - 3.0).abs() < 1e-7);
        let pr = rdp_of_cscg(5.0, &g_fig()).unwrap();
        assert!((pr - 0.56).abs() < 1e-14);
        let q = rdp_of_cscg_by_quadrature(5.0, &g_fig()).unwrap();
        assert!(((q - pr) / pr).abs() < 1e-10, "{q} vs {pr}");
        let g3 = EvenPolynomial::new(vec![0.3, -0.1, 0.02, 0.001]).unwrap();
        let a = rdp_of_cscg(2.5, &g3).unwrap();
        let b = rdp_of_cscg_by_quadrature(2.5, &g3).unwrap();
        assert!(((a - b) / a).abs() < 1e-10);
        assert!(rdp_of_cscg(0.0, &g_fig()).is_err());
    }

    #[test]
    fn tail_sequence() {
        let t = tail_sequence_distribution(2, 5.0).unwrap();
        assert_eq!(t.points(), &[0.0, 20f64.sqrt()]);
        assert_eq!(t.probs(), &[0.75, 0.25]);
        assert!(tail_sequence_distribution(1, 5.0).is_err());
        let mut prev = 0.0;
        for &l in &[2u64, 3, 4, 8, 16, 100] {
            let t = tail_sequence_distribution(l, 5.0).unwrap();
            assert!((average_power(&t) - 5.0).abs() < 1e-12 * 5.0 * (l * l) as f64);
            let pd = delivered_power(&t, &g_fig());
            assert!((pd - tail_delivered_power(l, 5.0, &g_fig())).abs() < 1e-9 * pd);
            assert!(pd > prev);
            prev = pd;
        }
        assert!((tail_delivered_power(2, 5.0, &g_fig()) - 1.06).abs() < 1e-14);
    }

    #[test]
    fn minimal_tail_index() {
        let g = g_fig();
        assert_eq!(min_tail_index(5.0, 0.5, &g), 2);
        assert_eq!(min_tail_index(5.0, 1.06, &g), 2);
        let l = min_tail_index(5.0, 100.0, &g);
        assert!(tail_delivered_power(l, 5.0, &g) >= 100.0);
        assert!(tail_delivered_power(l - 1, 5.0, &g) < 100.0);
        match time_sharing_plan(5.0, 100.0, &g, 2) {
            Err(Error::TailIndexTooSmall { l: 2, min_l }) => assert_eq!(min_l, l),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plan_at_l2() {
        let plan = time_sharing_plan(5.0, 0.8, &g_fig(), 2).unwrap();
        assert!((plan.tau - 0.48).abs() < 1e-12);
        assert!((plan.mixture.average_power() - 5.0).abs() < 1e-12);
        assert!(plan.delivered_power >= 0.8 - 1e-12);
        assert!(plan.gap_nats > 0.0);
        assert!(plan.entropy_rayleigh > plan.entropy_mixture);
        let chord = (1.0 - plan.tau) * plan.entropy_rayleigh + plan.tau * plan.entropy_tail;
        assert!(plan.entropy_mixture > chord);
    }

    #[test]
    fn pure_cscg_when_floor_is_inactive() {
        let plan = time_sharing_plan(5.0, 0.3, &g_fig(), 2).unwrap();
        assert_eq!(plan.tau, 0.0);
        assert!(plan.gap_nats.abs() < 2e-3);
    }
}
