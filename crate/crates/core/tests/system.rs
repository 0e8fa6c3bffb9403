mod common;

use std::f64::consts::{PI, SQRT_2};
use std::sync::LazyLock;

use proptest::prelude::*;
use slowcert::bundles::{by_name, ExampleBundle, NAMES};
use slowcert::system::{check_sandwich_pair, estimate_p_bar, estimate_p_bar_raw};
use slowcert::{ClassK, Error, FrozenFamily, ParameterPath, SlowSystem, SupGrid};

#[test]
fn slow_field_examples() {
    let s = by_name("scalar").unwrap().sys;
    assert_eq!(s.eval_slow_field(&[0.0], 4.2).unwrap(), vec![0.0]);
    let f = s.eval_slow_field(&[1.0], 0.0).unwrap()[0];
    assert!((f + 89.0 / SQRT_2).abs() < 1e-12);

    use slowcert::bundles::{pendulum_example, PendulumParams};
    use std::sync::Arc;
    let p = PendulumParams {
        b2: Arc::new(|_| 0.0),
        b2_prime: Some(Arc::new(|_| 0.0)),
        b2_affine_sine: Some((0.0, 0.0)),
        c_b: 1.0,
        ..PendulumParams::default()
    };
    let pend = pendulum_example(&p).unwrap().sys;
    for t in [0.0, 3.3] {
        assert_eq!(
            pend.eval_slow_field(&[1.0, 1.0], t).unwrap(),
            vec![1.0, -2.0]
        );
    }
}

#[test]
fn p_bar_examples() {
    let grid = SupGrid::over(0.0, PI).with_points(100_001).with_safety(1.0);
    assert_eq!(
        estimate_p_bar(&ParameterPath::constant(vec![1.0, 2.0]), &grid).unwrap(),
        0.0
    );

    let cos2 = ParameterPath::new(1, |r| vec![r.cos().powi(2)]);
    assert!((estimate_p_bar(&cos2, &grid).unwrap() - 1.0).abs() < 1e-6);

    let sig = |t: f64| (1.0 + 0.5 * t.sin()) / 2.0;
    let three = ParameterPath::new(3, move |r| vec![sig(r); 3]);
    let g = SupGrid::over(0.0, 2.0 * PI)
        .with_points(100_001)
        .with_safety(1.0);
    assert!((estimate_p_bar(&three, &g).unwrap() - 0.25 * 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn nan_field_is_an_error() {
    let frozen = FrozenFamily::new(1, 1, |x, _, _| vec![x[0].ln()]);
    let sys = SlowSystem::new(frozen, ParameterPath::constant(vec![0.0]), 1.0).unwrap();
    assert!(matches!(
        sys.eval_slow_field(&[-1.0], 0.0),
        Err(Error::Numerical { .. })
    ));
}

#[test]
fn non_positive_alpha_rejected() {
    let frozen = FrozenFamily::new(1, 1, |x, _, _| vec![-x[0]]);
    for a in [0.0, -1.0, f64::NAN] {
        assert!(SlowSystem::new(frozen.clone(), ParameterPath::constant(vec![0.0]), a).is_err());
    }
}

#[test]
fn class_k_checks() {
    let samples: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
    assert!(ClassK::quadratic(0.5).check_on(&samples).is_ok());
    assert!(ClassK::new(|s| s.sin()).check_on(&samples).is_err());
    assert!(ClassK::new(|s| s + 1.0).check_on(&samples).is_err());
    assert!(
        check_sandwich_pair(&ClassK::quadratic(0.5), &ClassK::quadratic(1.5), &samples).is_ok()
    );
    assert!(
        check_sandwich_pair(&ClassK::quadratic(2.0), &ClassK::quadratic(1.5), &samples).is_err()
    );
    let k = ClassK::quadratic(2.0);
    assert!((k.inverse(8.0) - 2.0).abs() < 1e-12);
}

static BUNDLES: LazyLock<Vec<ExampleBundle>> =
    LazyLock::new(|| NAMES.iter().map(|n| by_name(n).unwrap()).collect());

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn slow_field_is_frozen_field_composed_with_path(
        which in 0usize..NAMES.len(),
        t in 0.0..100.0f64,
        alpha in 0.01..100.0f64,
        x in prop::collection::vec(-10.0..10.0f64, 2),
    ) {
        let sys = BUNDLES[which].system_at(alpha).unwrap();
        let x = &x[..sys.dim_state()];
        let tau = sys.path.eval(t / alpha);
        prop_assert_eq!(sys.eval_slow_field(x, t).unwrap(), sys.frozen.eval(x, t, &tau));
    }

    #[test]
    fn p_bar_refinement_is_monotone(w in 0.5..5.0f64, k in 2usize..9) {
        let path = ParameterPath::new(1, move |r| vec![(w * r).sin() + 0.3 * (2.7 * r).cos()]);
        let coarse = SupGrid::over(-3.0, 7.0).with_points((1 << k) + 1);
        let fine = coarse.with_points((1 << (k + 1)) + 1);
        prop_assert!(estimate_p_bar_raw(&path, &fine).unwrap() >= estimate_p_bar_raw(&path, &coarse).unwrap());
    }
}
