//! `ẋ = x/√(1+x²) (1 - 90 cos²(t/α))`, a system whose field is bounded by
//! 91 and hence is not globally exponentially stable, but is UGAS for every
//! `α > 0`.

use std::f64::consts::{E, PI, SQRT_2};

use crate::certificate::CertOptions;
use crate::error::Result;
use crate::system::{
    AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, SlowSystem,
};

use super::{ClosedForm, ExampleBundle, Expected};

/// `2 e^{√2} / (e - 1)`
pub fn rate_constant() -> f64 {
    2.0 * SQRT_2.exp() / (E - 1.0)
}

/// `V̄(x) = e^{√(1+x²)} - e`, accurate near zero.
pub fn v_bar(x: f64) -> f64 {
    let r = x.hypot(1.0);
    // √(1+x²) - 1 without cancellation
    let d = x * x / (r + 1.0);
    E * d.exp_m1()
}

pub fn scalar_example() -> Result<ExampleBundle> {
    let c = rate_constant();
    let path = ParameterPath::new(1, |r| vec![r.cos().powi(2)])
        .with_derivative(|r| vec![-(2.0 * r).sin()])
        .with_period(PI)
        .with_p_bar(1.0);
    let frozen = FrozenFamily::new(1, 1, |x, _t, tau| {
        vec![x[0] / x[0].hypot(1.0) * (1.0 - 90.0 * tau[0])]
    })
    .with_state_bound(|s| 91.0 * s / s.hypot(1.0));
    let sys = SlowSystem::new(frozen, path, 1.0)?;

    let c_b = PI * (22.5 - c);
    let family = LyapunovFamily::new(
        |x, _t, _tau| v_bar(x[0]),
        ClassK::new(v_bar),
        ClassK::new(v_bar),
        move |tau| 45.0 * tau[0] - c,
        AveragingData {
            c_a: 0.0,
            c_b,
            window: PI,
        },
    )
    .with_grad_t(|_, _, _| 0.0)
    .with_grad_x(|x, _, _| {
        let r = x[0].hypot(1.0);
        vec![r.exp() * x[0] / r]
    })
    .tau_independent();

    let closed = ClosedForm::exact(move |x, t, alpha| {
        let lead = 45.0 * alpha / 4.0
            * ((2.0 * t / alpha).sin() + PI - 4.0 * PI * SQRT_2.exp() / (45.0 * (E - 1.0)));
        lead + v_bar(x[0]).ln()
    });

    Ok(ExampleBundle {
        name: "scalar",
        sys,
        family,
        cert_options: CertOptions {
            m_bar: Some(45.0 - c),
            sup_grid: None,
        },
        closed_form: Some(closed),
        expected: Expected {
            threshold_ugas: 0.0,
            ugas_for_all_alpha: true,
            constants: vec![
                ("C", c),
                ("c_b", c_b),
                ("M_bar", 45.0 - c),
                ("field_bound", 91.0),
            ],
            test_alphas: vec![0.01, 0.1, 1.0, 10.0],
            notes: vec![
                "V does not depend on tau, so c_a = 0 and every alpha > 0 is admissible",
                "not globally exponentially stable: the field is bounded by 91",
            ],
        },
        horizon: 20.0,
        radius: 10.0,
    })
}
