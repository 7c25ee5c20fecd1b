use pa_harq::alloc::{
    avg_power_given_p1, closed_form_avg_power, closed_form_coefficients, optimal_p1_closed_form, optimal_p1_numeric,
    stationarity_residual,
};
use pa_harq::harq::{p2_inr, p2_rtd, theta};
use pa_harq::numeric::{golden_section_min, CompensatedSum};
use pa_harq::{to_db, HarqConfig, Protocol, QuantileMethod};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(protocol: Protocol, rate: f64, eps: f64, p1: f64) -> HarqConfig {
    HarqConfig::new(protocol, rate, eps, p1).unwrap()
}

#[test]
fn quadrature_matches_sampled_mean() {
    // Sample mean of P1 + P2(g1) over g1 ~ Exp(1), drawn by inversion.
    let c = cfg(Protocol::Rtd, 2.0, 1e-3, 10.0);
    let n = 10_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut sum, mut sq) = (CompensatedSum::default(), CompensatedSum::default());
    for _ in 0..n {
        let g1 = -(1.0 - rng.gen::<f64>()).ln();
        let spent = c.p1 + p2_rtd(g1, &c, 0.8, QuantileMethod::Exact).unwrap();
        sum.add(spent);
        sq.add(spent * spent);
    }
    let mean = sum.value() / n as f64;
    let se = ((sq.value() / n as f64 - mean * mean) / n as f64).sqrt();
    let quad = avg_power_given_p1(&c, 0.8, QuantileMethod::Exact).unwrap();
    assert!((quad - mean).abs() < 3.0 * se, "{quad} vs {mean} +- {se}");
}

#[test]
fn independent_channel_integral_is_exact() {
    for &p1 in &[0.5, 4.0, 50.0] {
        let c = cfg(Protocol::Rtd, 2.0, 1e-3, p1);
        let (_, cc) = closed_form_coefficients(1e-3, 1.0);
        let t = theta(2.0);
        let want = p1 + cc * (p1 * (-t / p1).exp() - p1 + t);
        for method in [QuantileMethod::Exact, QuantileMethod::Asymptotic] {
            let got = avg_power_given_p1(&c, 1.0, method).unwrap();
            assert!(((got - want) / want).abs() < 1e-8, "{method:?} {p1}: {got} vs {want}");
        }
        assert!(((closed_form_avg_power(&c, 1.0) - want) / want).abs() < 1e-12);
    }
}

#[test]
fn closed_form_large_p1_limit() {
    let c = cfg(Protocol::Rtd, 2.0, 1e-3, 1.0);
    for &p1 in &[1e6, 1e9, 1e12] {
        let v = closed_form_avg_power(&c.with_p1(p1), 0.8);
        assert!(v >= p1 && (v - p1) / p1 < 1e-3);
    }
}

#[test]
fn closed_form_matches_direct_scalar_minimisation() {
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        let c = cfg(protocol, 2.0, 1e-3, 1.0);
        let sol = optimal_p1_closed_form(&c, 0.8).unwrap();
        let (t, _) = golden_section_min(|t| Ok(closed_form_avg_power(&c.with_p1(t.exp()), 0.8)), -5.0, 15.0, 1e-7).unwrap();
        assert!((to_db(sol.p1_opt) - to_db(t.exp())).abs() < 0.01);
    }
}

#[test]
fn numeric_asymptotic_tracks_closed_form_across_eps() {
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        for &eps in &[1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
            let c = cfg(protocol, 2.0, eps, 1.0);
            let closed = optimal_p1_closed_form(&c, 0.8).unwrap();
            let num = optimal_p1_numeric(&c, 0.8, QuantileMethod::Asymptotic).unwrap();
            assert!(num.unimodal, "{protocol} eps={eps}");
            assert!((to_db(num.p1_opt) - to_db(closed.p1_opt)).abs() < 0.05);
        }
    }
}

#[test]
fn unimodal_on_test_grid() {
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        for &rate in &[0.5, 2.0] {
            for &eps in &[1e-5, 1e-3, 1e-1] {
                for method in [QuantileMethod::Exact, QuantileMethod::Fitted] {
                    let sol = optimal_p1_numeric(&cfg(protocol, rate, eps, 1.0), 0.8, method).unwrap();
                    assert!(sol.unimodal, "{protocol} R={rate} eps={eps} {method:?}");
                    assert!(sol.avg_power >= sol.p1_opt);
                }
            }
        }
    }
}

#[test]
fn exact_optimum_beats_approximate_allocation() {
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        let c = cfg(protocol, 2.0, 1e-3, 1.0);
        let exact = optimal_p1_numeric(&c, 0.8, QuantileMethod::Exact).unwrap();
        let closed = optimal_p1_closed_form(&c, 0.8).unwrap();
        let under_exact = avg_power_given_p1(&c.with_p1(closed.p1_opt), 0.8, QuantileMethod::Exact).unwrap();
        assert!(exact.avg_power <= under_exact * (1.0 + 1e-9));
    }
}

#[test]
fn numeric_eps_monotone_and_protocol_ordering() {
    for method in [QuantileMethod::Exact, QuantileMethod::Asymptotic] {
        let mut last = [f64::INFINITY; 2];
        for &eps in &[1e-4, 1e-3, 1e-2] {
            let r = optimal_p1_numeric(&cfg(Protocol::Rtd, 2.0, eps, 1.0), 0.8, method).unwrap().avg_power;
            let i = optimal_p1_numeric(&cfg(Protocol::Inr, 2.0, eps, 1.0), 0.8, method).unwrap().avg_power;
            assert!(i <= r);
            assert!(r < last[0] && i < last[1]);
            last = [r, i];
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_stationary(rate in 0.2..5.0f64, log_eps in -6.0..-1.0f64, sigma in 0.2..=1.0f64, inr in any::<bool>()) {
        let protocol = if inr { Protocol::Inr } else { Protocol::Rtd };
        let eps = 10f64.powf(log_eps);
        // Closed form exists only for m^2/c < 1.
        prop_assume!(-(-eps).ln_1p() / (sigma * sigma) < 0.9);
        let c = cfg(protocol, rate, eps, 1.0);
        let sol = optimal_p1_closed_form(&c, sigma).unwrap();
        let at = c.with_p1(sol.p1_opt);
        prop_assert!(stationarity_residual(&at, sigma).abs() <= 1e-9);
        let h = 1e-6 * sol.p1_opt;
        let d = (closed_form_avg_power(&at.with_p1(sol.p1_opt + h), sigma)
            - closed_form_avg_power(&at.with_p1(sol.p1_opt - h), sigma))
            / (2.0 * h);
        prop_assert!(d.abs() <= 1e-8, "derivative {}", d);
        prop_assert!(sol.avg_power >= sol.p1_opt);
    }

    #[test]
    fn closed_form_orderings(rate in 0.2..5.0f64, log_eps in -6.0..-1.5f64, sigma in 0.3..0.95f64) {
        let eps = 10f64.powf(log_eps);
        let rtd = optimal_p1_closed_form(&cfg(Protocol::Rtd, rate, eps, 1.0), sigma).unwrap();
        let inr = optimal_p1_closed_form(&cfg(Protocol::Inr, rate, eps, 1.0), sigma).unwrap();
        prop_assert!(inr.p1_opt <= rtd.p1_opt && inr.avg_power <= rtd.avg_power);
        let looser = optimal_p1_closed_form(&cfg(Protocol::Rtd, rate, eps * 2.0, 1.0), sigma).unwrap();
        prop_assert!(looser.avg_power < rtd.avg_power);
        let weaker = optimal_p1_closed_form(&cfg(Protocol::Rtd, rate, eps, 1.0), sigma + 0.05).unwrap();
        prop_assert!(weaker.avg_power < rtd.avg_power);
    }

    #[test]
    fn closed_form_is_asymptotic_integral(p1 in 0.05..1e4f64, sigma in 0.3..=1.0f64, inr in any::<bool>()) {
        let protocol = if inr { Protocol::Inr } else { Protocol::Rtd };
        let c = cfg(protocol, 2.0, 1e-3, p1);
        let quad = avg_power_given_p1(&c, sigma, QuantileMethod::Asymptotic).unwrap();
        let closed = closed_form_avg_power(&c, sigma);
        prop_assert!(((quad - closed) / closed).abs() <= 1e-6);
    }

    #[test]
    fn inr_rule_below_rtd_rule(g1 in 0.0..5.0f64, p1 in 0.1..20.0f64, sigma in 0.1..=1.0f64) {
        let c = cfg(Protocol::Rtd, 2.0, 1e-2, p1);
        let rtd = p2_rtd(g1, &c, sigma, QuantileMethod::Exact).unwrap();
        let inr = p2_inr(g1, &c, sigma, QuantileMethod::Exact).unwrap();
        prop_assert!(inr <= rtd * (1.0 + 1e-12));
        prop_assert!(inr >= 0.0);
    }
}
