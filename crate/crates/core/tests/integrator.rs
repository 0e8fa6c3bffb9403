mod common;

use std::sync::Arc;

use common::expm2;
use slowcert::bundles::{by_name, pendulum_example, PendulumParams};
use slowcert::error::IntegrationFailure;
use slowcert::simverify::{integrate, solve, OdeOptions, Sampling};
use slowcert::Error;

fn final_error(h: f64) -> f64 {
    let opts = OdeOptions::default()
        .with_tolerances(1.0, 1e3)
        .with_max_step(h)
        .with_sampling(Sampling::Steps);
    let traj = solve(|_, x| vec![-x[0]], &[1.0], 0.0, 2.0, &opts).unwrap();
    (traj.last_state()[0] - (-2f64).exp()).abs()
}

#[test]
fn fifth_order_convergence() {
    // halving a fixed step should cut the error by about 2⁵
    let (e1, e2) = (final_error(0.2), final_error(0.1));
    assert!(e1 / e2 > 20.0, "{e1} / {e2}");
}

#[test]
fn error_tracks_tolerance() {
    let err = |rtol: f64| {
        let opts = OdeOptions::default().with_tolerances(rtol, rtol * 1e-3);
        let traj = solve(|t, x| vec![-x[0] + t.sin()], &[2.0], 0.0, 10.0, &opts).unwrap();
        // x = (sin t - cos t)/2 + C e^{-t}, C = 2.5
        let t: f64 = 10.0;
        (traj.last_state()[0] - ((t.sin() - t.cos()) / 2.0 + 2.5 * (-t).exp())).abs()
    };
    let (loose, tight) = (err(1e-5), err(1e-9));
    assert!(loose < 1e-4 && tight < 1e-8, "{loose} {tight}");
    assert!(tight < loose);
}

#[test]
fn zero_initial_state_stays_zero() {
    let b = by_name("pendulum").unwrap();
    let traj = integrate(&b.sys, &[0.0, 0.0], 0.0, 5.0, None, &OdeOptions::default()).unwrap();
    assert!(traj.states.iter().all(|x| x.iter().all(|v| *v == 0.0)));
}

#[test]
fn linear_pendulum_matches_matrix_exponential() {
    let p = PendulumParams {
        b2: Arc::new(|_| 0.0),
        b2_prime: Some(Arc::new(|_| 0.0)),
        b2_affine_sine: Some((0.0, 0.0)),
        m: Arc::new(|_, _| 0.0),
        c_b: 1.0,
        ..PendulumParams::default()
    };
    let b = pendulum_example(&p).unwrap();
    let x0 = [1.0, 0.5];
    let traj = integrate(&b.sys, &x0, 0.0, 1.0, None, &OdeOptions::default()).unwrap();
    let e = expm2([[0.0, 1.0], [-1.0, -1.0]], 1.0);
    let want = [
        e[0][0] * x0[0] + e[0][1] * x0[1],
        e[1][0] * x0[0] + e[1][1] * x0[1],
    ];
    let got = traj.last_state();
    assert!((got[0] - want[0]).abs() < 1e-6 && (got[1] - want[1]).abs() < 1e-6);
    assert_eq!(*traj.times.last().unwrap(), 1.0);
}

#[test]
fn scalar_decays_from_ten() {
    let b = by_name("scalar").unwrap();
    let traj = integrate(&b.sys, &[10.0], 0.0, 50.0, None, &OdeOptions::default()).unwrap();
    assert!(traj.last_state()[0].abs() < 1e-3);
}

#[test]
fn dense_samples_on_the_stride() {
    let b = by_name("scalar").unwrap();
    let traj = integrate(&b.sys, &[1.0], 0.25, 1.25, None, &OdeOptions::default()).unwrap();
    assert_eq!(traj.len(), 101);
    for (k, t) in traj.times.iter().enumerate().take(100) {
        assert_eq!(*t, 0.25 + k as f64 * 0.01);
    }
}

#[test]
fn blow_up_is_tagged() {
    let r = solve(
        |_, x| vec![x[0] * x[0]],
        &[1.0],
        0.0,
        2.0,
        &OdeOptions::default(),
    );
    assert!(
        matches!(
            r,
            Err(Error::Integration {
                kind: IntegrationFailure::BlowUp,
                ..
            })
        ),
        "{r:?}"
    );
}

#[test]
fn deterministic() {
    let b = by_name("friction").unwrap();
    let run = || {
        integrate(
            &b.sys,
            &[3.0, -2.0],
            1.0,
            30.0,
            None,
            &OdeOptions::default(),
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}
