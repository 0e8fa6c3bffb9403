mod common;

use std::f64::consts::{E, PI, SQRT_2};
use std::sync::Arc;

use common::rng;
use rand::Rng;
use slowcert::bundles::{
    by_name, friction_chain_check, pendulum::pendulum_v, scalar::v_bar, ExampleBundle,
    FrictionParams, IdentificationParams, PendulumParams, NAMES,
};
use slowcert::simverify::{check_batch, falsify_assumption1, seed_batch, OdeOptions};
use slowcert::Condition;

/// `ln V♯` minus the closed form (shifted by its documented offset).
fn closed_form_gap(b: &ExampleBundle, alpha: f64, x: &[f64], t: f64) -> f64 {
    let cf = b.closed_form.as_ref().expect("closed form");
    let c = b.certificate(alpha).unwrap();
    c.eval_certificate_log(x, t).unwrap() - ((cf.log_value)(x, t, alpha) + (cf.log_offset)(alpha))
}

#[test]
fn closed_forms_agree() {
    let mut r = rng(17);
    for name in [
        "scalar",
        "pendulum",
        "friction",
        "identification",
        "identification-varying",
    ] {
        let b = by_name(name).unwrap();
        let n = b.sys.dim_state();
        let alphas = if b.expected.ugas_for_all_alpha {
            vec![0.1, 1.0, 10.0]
        } else {
            b.expected.test_alphas.clone()
        };
        for &alpha in &alphas {
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
                let t = r.random_range(0.0..50.0);
                let gap = closed_form_gap(&b, alpha, &x, t);
                // a log gap of δ is a relative error of about δ
                assert!(gap.abs() < 1e-8, "{name} α={alpha} x={x:?} t={t}: {gap:e}");
            }
        }
    }
}

#[test]
fn pendulum_offset_is_half_alpha_t() {
    let b = by_name("pendulum").unwrap();
    let cf = b.closed_form.as_ref().unwrap();
    for alpha in [0.01, 1.0, 100.0] {
        assert!(((cf.log_offset)(alpha) - alpha * PI).abs() < 1e-12);
    }
}

#[test]
fn scalar_sandwich_holds() {
    let c = 2.0 * SQRT_2.exp() / (E - 1.0);
    for i in 0..=5000 {
        let x = -50.0 + i as f64 * 0.02;
        let mid = x * x / (1.0 + x * x) * f64::hypot(x, 1.0).exp();
        let v = v_bar(x);
        assert!(
            c * v >= mid * (1.0 - 1e-12) && mid >= v / 2.0 * (1.0 - 1e-12),
            "x = {x}"
        );
    }
    assert_eq!(v_bar(0.0), 0.0);
}

#[test]
fn scalar_corrupted_c_b_is_caught() {
    let b = by_name("scalar").unwrap();
    let grid = b.sample_grid(2_000, 1);
    let reps = falsify_assumption1(&b.family, &b.sys, &grid).unwrap();
    assert!(reps.iter().all(|r| r.passed()));
    let a4 = &reps[3];
    assert_eq!(a4.condition, Condition::A4);
    // the margin is tight: the window average of q equals c_b
    assert!(a4.worst_slack < 1e-6, "{}", a4.worst_slack);

    let bad = b.family.clone().with_c_b(2.0 * b.family.c_b);
    let reps = falsify_assumption1(&bad, &b.sys, &grid).unwrap();
    assert!(!reps[3].passed());
}

#[test]
fn pendulum_spot_checks() {
    // x = (1, 1), τ = -1, m ≡ 1
    let (x1, x2, tau, m) = (1.0, 1.0, -1.0, 1.0);
    let grad = [2.0 * x1 + x2, 2.0 * x2 + x1];
    let f = [x2, -x1 - (1.0 + tau * m) * x2];
    let lie = grad[0] * f[0] + grad[1] * f[1];
    assert_eq!(lie, 0.0);
    assert!(lie <= -(1.0 + 5.0 * tau) * pendulum_v(&[x1, x2]));

    let mut r = rng(3);
    for _ in 0..10_000 {
        let x = [r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)];
        assert!(pendulum_v(&x) >= (x[0] * x[0] + x[1] * x[1]) / 2.0);
    }
}

#[test]
fn pendulum_window_condition() {
    let p = PendulumParams::default();
    assert!((p.p2_margin().unwrap() - PI / 2.0).abs() < 1e-9);
    let literal = PendulumParams {
        mode: slowcert::bundles::P2Mode::Literal,
        ..PendulumParams::default()
    };
    assert!(slowcert::bundles::pendulum_example(&literal).is_err());
}

#[test]
fn friction_constants_and_degenerate_tau() {
    let p = FrictionParams::default();
    assert_eq!(p.a(), 10.5);
    let b = by_name("friction").unwrap();
    assert_eq!(b.expected.constant("A"), Some(10.5));
    // τ₁ = 0 makes q vanish; the frozen bound degenerates to V̇ ≤ 0
    let grid = b
        .sample_grid(20_000, 8)
        .with_tau_box(vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]);
    let reps = falsify_assumption1(&b.family, &b.sys, &grid).unwrap();
    assert!(reps[1].passed(), "{}", reps[1].summary());
    for rep in friction_chain_check(&p, &b, &b.sample_grid(20_000, 9)).unwrap() {
        assert!(rep.passed(), "{}", rep.summary());
    }
}

#[test]
fn friction_below_threshold_is_informational() {
    // far below the analytic threshold the check may go either way; it must
    // still produce a report rather than an error
    let b = by_name("friction").unwrap();
    let c = b.certificate(1e-3).unwrap();
    let batch = seed_batch(2, 4, b.radius, 1.0, 0);
    let out = check_batch(&c, &batch, 10.0, 1e-6, &OdeOptions::default()).unwrap();
    assert!(out.report.samples_tested > 0 || !out.aborted.is_empty());
}

#[test]
fn identification_constants() {
    let p = IdentificationParams::default();
    let kappa = PI + 8.0 * PI.powi(5) + 4.0 * PI * PI;
    assert!((p.kappa() - kappa).abs() <= 4.0 * f64::EPSILON * kappa);
    let b = by_name("identification").unwrap();
    assert_eq!(b.expected.threshold_ugas, 0.0);
    // τ = 0: P = κI
    for x in [[1.0, 0.0], [0.3, -2.0]] {
        let v = b.family.v(&x, 1.3, &[0.0]);
        assert!((v - kappa * (x[0] * x[0] + x[1] * x[1])).abs() < 1e-9 * v);
        assert_eq!(b.family.q(&[0.0]), 0.0);
    }
    let v = by_name("identification-varying").unwrap();
    assert!((v.expected.threshold_ugas - 1664.635).abs() < 1e-3);
}

#[test]
fn every_bundle_passes_its_own_falsifier() {
    for name in NAMES {
        let b = by_name(name).unwrap();
        let reps = falsify_assumption1(&b.family, &b.sys, &b.sample_grid(20_000, 21)).unwrap();
        for r in &reps {
            assert!(r.passed(), "{name}: {}", r.summary());
            assert_eq!(r.samples_tested, 20_000);
        }
    }
}

#[test]
fn pendulum_decreases_at_all_scales() {
    let b = by_name("pendulum").unwrap();
    for alpha in [0.01, 1.0, 100.0] {
        let c = b.certificate(alpha).unwrap();
        let batch = seed_batch(2, 5, b.radius, 2.0 * PI * alpha, 4);
        let out = check_batch(&c, &batch, b.horizon, 1e-6, &OdeOptions::default()).unwrap();
        assert!(out.passed(), "α = {alpha}: {}", out.report.summary());
    }
}

#[test]
fn custom_weight_functions_are_checked() {
    let p = PendulumParams {
        m: Arc::new(|_, _| 1.5),
        ..PendulumParams::default()
    };
    assert!(slowcert::bundles::pendulum_example(&p).is_err());
}
