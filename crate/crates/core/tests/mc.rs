use swipt_core::constraints::oop_coverage;
use swipt_core::mc_oracle::{estimate_coverage, estimate_mi, estimate_mixture_entropy};
use swipt_core::{channel, theory, DiscreteAmplitudeDistribution, EvenPolynomial};

#[test]
fn point_mass_at_origin_carries_no_information() {
    let d = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
    let e = estimate_mi(&d, 1_000_000, 1).unwrap();
    assert!(e.mean.abs() <= 3.0 * e.std_error + 1e-12, "{e:?}");
}

#[test]
fn quantized_rayleigh_approaches_awgn_capacity() {
    let d = DiscreteAmplitudeDistribution::rayleigh_quantized(5.0, 64).unwrap();
    let e = estimate_mi(&d, 1_000_000, 2).unwrap();
    let quad = channel::mutual_information(&d).unwrap();
    assert!((e.mean - quad).abs() < 3.0 * e.std_error, "{e:?} vs {quad}");
    assert!((e.mean - 3.5f64.ln()).abs() < 3.0 * e.std_error + (3.5f64.ln() - quad), "{e:?}");
}

#[test]
fn coverage_oracles_agree() {
    let d = DiscreteAmplitudeDistribution::point_mass(0.0).unwrap();
    let e = estimate_coverage(&d, 0.0, 1.0, 200_000, 3).unwrap();
    let want = 1.0 - (-0.5f64).exp();
    assert!((e.mean - want).abs() < 3.0 * e.std_error);
    let all = estimate_coverage(&d, 0.0, f64::INFINITY, 20_000, 3).unwrap();
    assert_eq!(all.mean, 1.0);

    let d = DiscreteAmplitudeDistribution::new(vec![0.3, 1.7, 3.2], vec![0.2, 0.5, 0.3]).unwrap();
    let e = estimate_coverage(&d, 1.0, 4.0, 400_000, 4).unwrap();
    let q = oop_coverage(&d, 1.0, 4.0).unwrap();
    assert!((e.mean - q).abs() < 3.0 * e.std_error, "{e:?} vs {q}");
}

#[test]
fn estimates_are_reproducible() {
    let d = DiscreteAmplitudeDistribution::new(vec![0.0, 2.0], vec![0.6, 0.4]).unwrap();
    let a = estimate_mi(&d, 100_000, 9).unwrap();
    let b = estimate_mi(&d, 100_000, 9).unwrap();
    assert_eq!(a, b);
    let c = estimate_mi(&d, 100_000, 10).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn standard_error_shrinks_as_root_n() {
    let d = DiscreteAmplitudeDistribution::new(vec![0.5, 2.5], vec![0.5, 0.5]).unwrap();
    let ses: Vec<f64> = [10_000u64, 100_000, 1_000_000].iter().map(|&n| estimate_mi(&d, n, 7).unwrap().std_error).collect();
    for w in ses.windows(2) {
        let ratio = w[0] / w[1];
        let ideal = 10f64.sqrt();
        assert!(ratio > ideal / 1.5 && ratio < ideal * 1.5, "{ses:?}");
    }
}

#[test]
fn mixture_entropy_matches_quadrature() {
    let g = EvenPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap();
    let plan = theory::time_sharing_plan(5.0, 0.8, &g, 8).unwrap();
    let e = estimate_mixture_entropy(&plan.mixture, 400_000, 5).unwrap();
    assert!((e.mean - plan.entropy_mixture).abs() < 3.0 * e.std_error + 1e-4, "{e:?} vs {}", plan.entropy_mixture);
}
