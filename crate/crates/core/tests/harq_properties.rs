use pa_harq::harq::{p2_inr, p2_rtd, theta, theta1, P2Rule};
use pa_harq::{HarqConfig, Protocol, QuantileMethod};
use proptest::prelude::*;

proptest! {
    #[test]
    fn rules_nonnegative_and_vanish_after_decoding(
        g1 in 0.0..10.0f64, p1 in 0.1..50.0f64, rate in 0.1..5.0f64, sigma in 0.1..=1.0f64, inr in any::<bool>(),
    ) {
        let protocol = if inr { Protocol::Inr } else { Protocol::Rtd };
        let c = HarqConfig::new(protocol, rate, 1e-2, p1).unwrap();
        for method in [QuantileMethod::Exact, QuantileMethod::Fitted, QuantileMethod::Asymptotic] {
            let rule = P2Rule::new(c, sigma, method).unwrap();
            let p2 = rule.analytic(g1).unwrap();
            prop_assert!(p2 >= 0.0);
            if g1 * p1 >= theta(rate) {
                prop_assert_eq!(p2, 0.0);
                prop_assert_eq!(rule.power(g1).unwrap().power, 0.0);
            }
        }
    }

    #[test]
    fn asymptotic_equals_exact_when_independent(g1 in 0.0..5.0f64, p1 in 0.1..20.0f64, rate in 0.1..4.0f64) {
        let c = HarqConfig::new(Protocol::Rtd, rate, 1e-3, p1).unwrap();
        let e = p2_rtd(g1, &c, 1.0, QuantileMethod::Exact).unwrap();
        let a = p2_rtd(g1, &c, 1.0, QuantileMethod::Asymptotic).unwrap();
        prop_assert!((e - a).abs() <= 1e-9 * e.max(1e-300));
        let e = p2_inr(g1, &c, 1.0, QuantileMethod::Exact).unwrap();
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn jensen_threshold_below_true(rate in 0.0..20.0f64) {
        prop_assert!(theta1(rate) <= theta(rate));
    }
}
