mod common;

use common::*;
use impulse_core::models::phi_inverse;
use impulse_core::parisian::ThetaBasis;
use impulse_core::quad::linspace;
use impulse_core::scale::*;
use impulse_core::valuation::exit_laplace;
use impulse_core::{Process, ProblemSpec};

#[test]
fn refracted_scale_matches_quadrature() {
    for (name, spec) in reference_specs() {
        let o = ThetaOracle::new(&spec);
        let (q, l, b) = (spec.econ.q, spec.econ.l, spec.refraction.b);
        for a in [-l, -1.0, 0.0] {
            for x in linspace(b, b + 3.0 * l, 100) {
                let (c, r) = (w_refracted(&spec, q, x, a).unwrap(), o.w_refracted(x, a));
                assert!(rel_err(c, r) < 1e-8, "{name} a = {a} x = {x}: {c} vs {r}");
            }
        }
    }
}

#[test]
fn refracted_derivative_matches_differences() {
    for (name, spec) in reference_specs() {
        let (q, b) = (spec.econ.q, spec.refraction.b);
        for x in linspace(b + 0.1, b + 10.0, 40) {
            let fd = fd_first(|y| w_refracted(&spec, q, y, -6.0).unwrap(), x, 1e-3);
            let an = w_refracted_deriv(&spec, q, x, -6.0, None).unwrap();
            assert!(rel_err(fd, an) < 1e-7, "{name} x = {x}");
        }
    }
}

#[test]
fn scale_function_matches_residue_expansion() {
    for (name, spec) in reference_specs() {
        for q in [0.0, 0.05, 0.55] {
            let o = OracleW::new(&spec.model, q, 0.0);
            for x in linspace(0.0, 15.0, 31) {
                let w = W_q(&spec, q, x, Process::X).unwrap();
                assert!(rel_err_floor(w, o.w(x), 1e-300) < 1e-12 || (w == 0.0 && o.w(x).abs() < 1e-15), "{name} q {q} x {x}");
            }
        }
    }
}

#[test]
fn g_forms_agree() {
    for (_, spec) in reference_specs() {
        let e = spec.econ;
        for x in linspace(-e.l, spec.refraction.b, 20) {
            let g = g_qpq(&spec, e.q, e.m, x, e.l).unwrap();
            assert!(g.rel_gap() < 1e-9, "x = {x}: {g:?}");
        }
    }
}

#[test]
fn brownian_inverse_exponent() {
    let spec = ProblemSpec::brownian_reference();
    let phi = phi_inverse(&spec, 0.05, Process::X).unwrap();
    let o = OracleW::new(&spec.model, 0.05, 0.0);
    // the largest root is the right inverse
    let w = |x: f64| o.w(x) * (-phi * x).exp();
    assert!((w(200.0) - w(100.0)).abs() < 1e-12);
}

#[test]
fn fast_clock_approaches_classical_ruin() {
    for (name, base) in reference_specs() {
        let (x, c) = (1.0, 5.0);
        let q = base.econ.q;
        let classical = w_refracted(&base, q, x, 0.0).unwrap() / w_refracted(&base, q, c, 0.0).unwrap();
        let gaps: Vec<f64> = [0.5, 5.0, 50.0]
            .iter()
            .map(|&m| {
                let mut spec = base;
                spec.econ.m = m;
                let t = ThetaBasis::new(&spec).unwrap();
                (exit_laplace(&t, x, c).unwrap() - classical).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{name} {gaps:?}");
        assert!(gaps[2] < 0.1 * classical, "{name} {gaps:?}");
    }
}

#[test]
fn no_clock_is_refracted_scale() {
    for (_, mut spec) in reference_specs() {
        spec.econ.m = 0.0;
        let t = ThetaBasis::new(&spec).unwrap();
        let l = spec.econ.l;
        for x in linspace(-l, 20.0, 30) {
            let w = w_refracted(&spec, spec.econ.q, x, -l).unwrap();
            assert!(rel_err_floor(t.theta(x).unwrap(), w, 1e-12) < 1e-10);
        }
    }
}
