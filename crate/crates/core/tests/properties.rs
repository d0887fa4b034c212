use std::sync::Arc;

use lqp_core::accounting::terminal_liquidation_wealth;
use lqp_core::evaluation::MCEstimate;
use lqp_core::oracle::{discretize_instance, dp_optimal_utility};
use lqp_core::policy::{
    boundaries_from, random_admissible_strategy, reflected_inventory, strategy_from_inventory, BoundaryPath,
};
use lqp_core::rng::{path_stream, StreamRole};
use lqp_core::shadow::{frictionless_wealth, shadow_price_path, ShadowPosition};
use lqp_core::{Coefficient, ExponentialMixture, MarketSetup, ModelConfig, UtilitySpec};
use proptest::prelude::*;

fn config(eps: f64, sigma: f64, l1: f64, l2: f64, kappa: f64) -> ModelConfig {
    ModelConfig {
        sigma: Coefficient::Constant(sigma),
        lambda1: Coefficient::Constant(l1),
        lambda2: Coefficient::Constant(l2),
        kappa,
        ..ModelConfig::symmetric_benchmark(eps)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflected_position_stays_in_band(
        eps in 0.002f64..0.1,
        sigma in 0.3f64..2.0,
        l1 in 0.3f64..3.0,
        l2 in 0.3f64..3.0,
        seed in any::<u64>(),
    ) {
        let cfg = config(eps, sigma, l1, l2, 0.0);
        let s = MarketSetup::new(&cfg, 512).unwrap();
        let b = Arc::new(BoundaryPath::for_setup(&s));
        let p = s.simulate_path(seed, 0);
        let inv = reflected_inventory(&p, &b);
        prop_assert!(inv.max_containment_violation() <= 1e-12);
        let (off_up, off_lo) = inv.reflection_minimality(1e-9);
        prop_assert_eq!(off_up, 0.0);
        prop_assert_eq!(off_lo, 0.0);
        for m in &inv.jump_marks {
            let k = m.step;
            let target = match m.side {
                lqp_core::Side::A1 => b.upper[k],
                lqp_core::Side::A2 => b.lower[k],
            };
            prop_assert_eq!(m.beta_after, target);
        }
    }

    #[test]
    fn shadow_price_stays_inside_spread(
        eps in 0.002f64..0.1,
        kappa in 0.0f64..0.95,
        seed in any::<u64>(),
    ) {
        let cfg = config(eps, 1.0, 1.0, 1.0, kappa);
        let s = MarketSetup::new(&cfg, 256).unwrap();
        let p = s.simulate_path(seed, 1);
        let sh = shadow_price_path(&p, &cfg);
        for k in 0..=256 {
            let (lo, hi) = ((1.0 - eps) * p.mid[k], (1.0 + eps) * p.mid[k]);
            prop_assert!(sh.s_tilde[k] >= lo * (1.0 - 1e-14) && sh.s_tilde[k] <= hi * (1.0 + 1e-14));
        }
    }

    #[test]
    fn no_strategy_beats_its_shadow_wealth(eps in 0.005f64..0.08, seed in any::<u64>()) {
        let cfg = config(eps, 1.0, 1.0, 1.0, 0.0);
        let s = MarketSetup::new(&cfg, 256).unwrap();
        let p = s.simulate_path(seed, 2);
        let sh = shadow_price_path(&p, &cfg);
        let mut rng = path_stream(seed, 2, StreamRole::Perturbation);
        let st = random_admissible_strategy(&p, 0.5, &mut rng);
        let eta = ShadowPosition::from_strategy(&st, &p, &sh);
        let xs = frictionless_wealth(0.0, &eta, &sh);
        let xh = terminal_liquidation_wealth(&st, &p, 0.0);
        prop_assert!(xh <= xs + 1e-12, "market {} beats shadow {}", xh, xs);
    }

    #[test]
    fn candidate_earns_exactly_its_shadow_wealth(eps in 0.005f64..0.08, seed in any::<u64>()) {
        let cfg = config(eps, 1.0, 1.0, 1.0, 0.0);
        let s = MarketSetup::new(&cfg, 256).unwrap();
        let b = Arc::new(BoundaryPath::for_setup(&s));
        let p = s.simulate_path(seed, 3);
        let st = strategy_from_inventory(&reflected_inventory(&p, &b), &p);
        let sh = shadow_price_path(&p, &cfg);
        let xs = frictionless_wealth(0.0, &ShadowPosition::from_strategy(&st, &p, &sh), &sh);
        let xh = terminal_liquidation_wealth(&st, &p, 0.0);
        prop_assert!((xs - xh).abs() <= 1e-10 * (1.0 + xs.abs()));
    }

    #[test]
    fn impact_scales_symmetric_band(
        eps in 0.001f64..0.2,
        alpha in 0.1f64..50.0,
        sigma in 0.1f64..3.0,
        ara in 0.1f64..5.0,
        kappa in 0.0f64..0.99,
    ) {
        let b0 = boundaries_from(eps, alpha, alpha, sigma, ara, 0.0);
        let bk = boundaries_from(eps, alpha, alpha, sigma, ara, kappa);
        prop_assert!((bk.upper - (1.0 - kappa) * b0.upper).abs() <= 1e-13 * b0.upper.abs());
        prop_assert!((bk.lower - (1.0 - kappa) * b0.lower).abs() <= 1e-13 * b0.lower.abs());
        prop_assert!(b0.upper > 0.0 && b0.lower < 0.0);
    }

    #[test]
    fn ce_inverts_utility(x in -20.0f64..20.0, c in 0.1f64..3.0, c2 in 0.1f64..3.0) {
        for u in [
            UtilitySpec::exponential(c),
            UtilitySpec::Mixture(ExponentialMixture::new(vec![1.0, 0.5], vec![c, c2]).unwrap()),
        ] {
            let back = u.certainty_equivalent(u.value(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-10 * (1.0 + x.abs()), "{} -> {}", x, back);
        }
    }

    #[test]
    fn ci_brackets_the_mean(samples in prop::collection::vec(-5.0f64..5.0, 2..200), seed in any::<u64>()) {
        let e = MCEstimate::from_samples(&samples, seed);
        prop_assert!(e.std_error >= 0.0);
        prop_assert!((e.ci95.0 - (e.mean - 1.96 * e.std_error)).abs() <= 1e-12);
        prop_assert!((e.ci95.1 - (e.mean + 1.96 * e.std_error)).abs() <= 1e-12);
        prop_assert_eq!(e.n_paths, samples.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dp_optimum_dominates_candidate(
        eps in 0.02f64..0.1,
        l1 in 0.5f64..2.0,
        l2 in 0.5f64..2.0,
        kappa in 0.0f64..0.6,
        periods in 1usize..4,
    ) {
        let cfg = config(eps, 0.5, l1, l2, kappa);
        let step = 2.0 * eps.sqrt() / 0.25 / 3.0;
        let inst = discretize_instance(&cfg, periods, step).unwrap();
        let r = dp_optimal_utility(&inst).unwrap();
        prop_assert!(r.gap >= -1e-12 * r.optimal_value.abs());
        prop_assert!(r.optimal_value >= inst.utility.value(inst.x0) - 1e-12);
    }
}
