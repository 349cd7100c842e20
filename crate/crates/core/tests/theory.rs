use swipt_core::theory::{rdp_of_cscg, rdp_of_cscg_by_quadrature, time_sharing_plan};
use swipt_core::EvenPolynomial;

fn g() -> EvenPolynomial {
    EvenPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap()
}

#[test]
fn cscg_delivered_power_two_ways() {
    let a = rdp_of_cscg(5.0, &g()).unwrap();
    let b = rdp_of_cscg_by_quadrature(5.0, &g()).unwrap();
    assert!((a - 0.56).abs() < 1e-12);
    assert!(((a - b) / a).abs() < 1e-10);
}

#[test]
fn time_sharing_table_closes_the_gap() {
    let mut prev: Option<(f64, f64)> = None;
    for &l in &[2u64, 8, 32, 128] {
        let plan = time_sharing_plan(5.0, 0.8, &g(), l).unwrap();
        if l == 2 {
            assert!((plan.tau - 0.48).abs() < 1e-6);
        }
        assert!(plan.tau > 0.0 && plan.tau < 1.0);
        assert!(plan.mixture.average_power() <= 5.0 + 1e-12);
        assert!(plan.delivered_power >= 0.8 - 1e-12);
        assert!(plan.gap_nats >= 0.0);
        let chord = (1.0 - plan.tau) * plan.entropy_rayleigh + plan.tau * plan.entropy_tail;
        assert!(plan.entropy_rayleigh > plan.entropy_mixture && plan.entropy_mixture > chord, "l = {l}");
        if let Some((tau, gap)) = prev {
            assert!(plan.tau < tau && plan.gap_nats < gap, "l = {l}");
        }
        prev = Some((plan.tau, plan.gap_nats));
        if l == 128 {
            assert!(plan.gap_nats < 0.02, "{}", plan.gap_nats);
        }
    }
}
