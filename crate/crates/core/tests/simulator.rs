use impulse_core::exec::Execution;
use impulse_core::optimizer::optimize;
use impulse_core::parisian::ThetaBasis;
use impulse_core::scale::w_refracted;
use impulse_core::simulator::*;
use impulse_core::valuation::{exit_laplace, value_policy, Policy};
use impulse_core::ProblemSpec;

fn cl() -> ProblemSpec {
    ProblemSpec::cramer_lundberg_reference()
}

#[test]
fn same_seed_same_bits() {
    let spec = cl();
    let p = Policy::new(2.0, 6.5, spec.econ.beta).unwrap();
    let cfg = SimConfig::new(3000, 11);
    let a = estimate_value(&spec, p, 1.0, &cfg).unwrap();
    let b = estimate_value(&spec, p, 1.0, &cfg).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = estimate_value(&spec, p, 1.0, &SimConfig::new(3000, 12)).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn execution_modes_agree_bitwise() {
    let spec = ProblemSpec::brownian_reference();
    let cfg = SimConfig::new(400, 5);
    let s = estimate_exit_laplace(&spec, 1.0, 4.0, &cfg.with_exec(Execution::Sequential)).unwrap();
    let p = estimate_exit_laplace(&spec, 1.0, 4.0, &cfg.with_exec(Execution::Parallel)).unwrap();
    assert_eq!(s, p);
}

#[test]
fn reference_value_at_optimum() {
    let spec = cl();
    let t = ThetaBasis::new(&spec).unwrap();
    let opt = optimize(&t).unwrap().policy;
    let est = estimate_value(&spec, opt, 3.0, &SimConfig::new(100_000, 42)).unwrap();
    let z = est.z_score(value_policy(&t, opt, 3.0).unwrap());
    assert!(z.abs() < 3.0, "z = {z}");
    assert!(est.truncation_fraction < 1e-3);
}

#[test]
fn reference_exit_transform() {
    let spec = cl();
    let t = ThetaBasis::new(&spec).unwrap();
    let est = estimate_exit_laplace(&spec, 0.0, 8.0, &SimConfig::new(100_000, 42)).unwrap();
    let z = est.z_score(exit_laplace(&t, 0.0, 8.0).unwrap());
    assert!(z.abs() < 3.0, "z = {z}");
}

#[test]
fn discount_modes_agree() {
    let spec = cl();
    let cfg = SimConfig::new(20_000, 3);
    let a = estimate_exit_laplace(&spec, 1.0, 7.0, &cfg).unwrap();
    let b = estimate_exit_laplace(&spec, 1.0, 7.0, &cfg.with_discount(DiscountMode::Weighted)).unwrap();
    assert!((a.mean - b.mean).abs() < 3.0 * a.stderr.hypot(b.stderr));
    assert_eq!(b.truncation_fraction, 0.0);
}

#[test]
fn estimators_agree_on_brownian() {
    let spec = ProblemSpec::brownian_reference();
    let p = Policy::new(0.5, 4.5, spec.econ.beta).unwrap();
    let cfg = SimConfig::new(4000, 8).with_dt(1e-2);
    let a = estimate_value(&spec, p, -1.0, &cfg).unwrap();
    let k = estimate_value(&spec, p, -1.0, &cfg.with_estimator(Estimator::Killing)).unwrap();
    assert!((a.mean - k.mean).abs() < 2.0 * a.stderr.hypot(k.stderr), "{a:?} {k:?}");
}

#[test]
fn no_delay_deep_barrier_is_refracted_exit() {
    let mut spec = cl();
    spec.econ.m = 0.0;
    spec.econ.l = 30.0;
    let (x0, c) = (7.0, 9.0);
    let q = spec.econ.q;
    let ratio = w_refracted(&spec, q, x0, -30.0).unwrap() / w_refracted(&spec, q, c, -30.0).unwrap();
    let est = estimate_exit_laplace(&spec, x0, c, &SimConfig::new(20_000, 4)).unwrap();
    assert!(est.z_score(ratio).abs() < 3.0, "{est:?} vs {ratio}");
}

#[test]
fn records_report_terminations() {
    let spec = cl();
    let recs = simulate_paths(&spec, Functional::Exit { level: 8.0 }, -1.0, &SimConfig::new(2000, 1)).unwrap();
    let count = |k: Termination| recs.iter().filter(|r| r.termination == k).count();
    assert!(count(Termination::Target) > 0);
    assert!(count(Termination::ParisianRuin) + count(Termination::BarrierRuin) > 0);
    assert!(count(Termination::Discounted) > 0);
    assert!(recs.iter().all(|r| r.payoff == 0.0 || r.termination == Termination::Target));
}

#[test]
fn bad_configs_are_rejected() {
    let spec = cl();
    let p = Policy::new(1.0, 4.0, spec.econ.beta).unwrap();
    assert!(estimate_value(&spec, p, 0.0, &SimConfig::new(0, 1)).is_err());
    assert!(estimate_value(&spec, p, 0.0, &SimConfig::new(10, 1).with_dt(0.0)).is_err());
    assert!(estimate_value(&spec, p, -7.0, &SimConfig::new(10, 1)).is_err());
    assert!(estimate_exit_laplace(&spec, 5.0, 4.0, &SimConfig::new(10, 1)).is_err());
}

/// Euler bias shrinks as dt halves. Slow: run with `--ignored`.
#[test]
#[ignore]
fn euler_bias_shrinks_with_dt() {
    let spec = ProblemSpec::brownian_reference();
    let t = ThetaBasis::new(&spec).unwrap();
    let (x0, c) = (-5.5, 3.0);
    let exact = exit_laplace(&t, x0, c).unwrap();
    let gaps: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| {
            let e = estimate_exit_laplace(&spec, x0, c, &SimConfig::new(400_000, 21).with_dt(dt)).unwrap();
            println!("dt {dt}: {} +- {} (exact {exact})", e.mean, e.stderr);
            e.mean - exact
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}
