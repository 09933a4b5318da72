//! Randomised invariants over admissible parameter sets.

mod common;

use common::*;
use impulse_core::optimizer::optimize;
use impulse_core::parisian::ThetaBasis;
use impulse_core::valuation::{exit_laplace, H_surface};
use impulse_core::{validate, EconSpec, LevyModel, ProblemSpec, RefractionSpec};
use proptest::prelude::*;

fn brownian() -> impl Strategy<Value = ProblemSpec> {
    (0.2..1.0f64, 0.3..1.2f64, 0.0..0.8f64, 0.0..6.0f64, 0.01..0.1f64, 0.01..1.0f64, 1.0..6.0f64, 0.1..2.0f64).prop_map(
        |(mu, sigma, frac, b, q, m, l, beta)| ProblemSpec {
            model: LevyModel::Brownian { mu, sigma },
            refraction: RefractionSpec { delta: frac * mu, b },
            econ: EconSpec { q, m, l, beta },
        },
    )
}

fn cramer_lundberg() -> impl Strategy<Value = ProblemSpec> {
    (1.0..4.0f64, 0.5..3.0f64, 0.5..2.0f64, 0.0..0.8f64, 0.0..6.0f64, 0.01..0.1f64, 0.05..1.0f64, 1.0..6.0f64, 0.1..2.0f64)
        .prop_filter_map("net profit", |(mu, eta, alpha, frac, b, q, m, l, beta)| {
            let margin = mu - eta / alpha;
            (margin > 0.1).then_some(ProblemSpec {
                model: LevyModel::CramerLundberg { mu, eta, alpha },
                refraction: RefractionSpec { delta: frac * margin, b },
                econ: EconSpec { q, m, l, beta },
            })
        })
}

fn any_spec() -> impl Strategy<Value = ProblemSpec> {
    prop_oneof![brownian(), cramer_lundberg()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta_matches_quadrature(spec in any_spec(), u in 0.0..1.0f64) {
        let t = ThetaBasis::new(&spec).unwrap();
        let o = ThetaOracle::new(&spec);
        let (l, b) = (spec.econ.l, spec.refraction.b);
        let x = -l + u * (b + 3.0 * l);
        let (a, r) = (t.theta(x).unwrap(), o.theta(x));
        prop_assert!(rel_err_floor(a, r, 1e-12) < 1e-8, "x = {x}: {a} vs {r}");
    }

    #[test]
    fn theta_positive_and_increasing(spec in any_spec()) {
        let t = ThetaBasis::new(&spec).unwrap();
        let (l, b) = (spec.econ.l, spec.refraction.b);
        let xs = samples(-l, b + 3.0 * l, 0.05);
        let v: Vec<f64> = xs.iter().map(|&x| t.theta(x).unwrap()).collect();
        prop_assert!(v[1..].iter().all(|&y| y > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exit_transform_is_a_probability(spec in any_spec(), u in 0.0..1.0f64, w in 0.0..1.0f64) {
        let t = ThetaBasis::new(&spec).unwrap();
        let l = spec.econ.l;
        let c = -l + 0.1 + w * (spec.refraction.b + 2.0 * l);
        let x = -l + u * (c + l);
        let p = exit_laplace(&t, x, c).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let p2 = exit_laplace(&t, (x + c) / 2.0, c).unwrap();
        prop_assert!(p2 >= p);
    }

    #[test]
    fn optimum_minimises_h(spec in any_spec(), u in 0.0..1.0f64, w in 0.0..1.0f64) {
        let t = ThetaBasis::new(&spec).unwrap();
        let r = optimize(&t).unwrap();
        let (c1max, c2max) = r.search_box;
        let c1 = u * c1max;
        let c2 = c1 + spec.econ.beta + 1e-6 + w * c2max;
        let h = H_surface(&t, c1, c2).unwrap();
        prop_assert!(h >= r.h_value * (1.0 - 1e-12), "H({c1}, {c2}) = {h} < {}", r.h_value);
    }

    #[test]
    fn negative_rates_are_rejected(spec in any_spec(), which in 0usize..4) {
        let mut bad = spec;
        match which {
            0 => bad.econ.q = -0.01,
            1 => bad.econ.m = -0.01,
            2 => bad.econ.l = 0.0,
            _ => bad.refraction.b = -1.0,
        }
        let report = validate(&bad);
        prop_assert!(!report.is_ok());
        let rule = ["discount_rate_nonnegative", "parisian_rate_nonnegative", "barrier_depth_positive", "threshold_nonnegative"][which];
        prop_assert!(report.violations.iter().any(|v| v.rule == rule));
    }
}
