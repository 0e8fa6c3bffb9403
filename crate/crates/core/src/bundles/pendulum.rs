//! Pendulum with slowly varying damping:
//!
//! ```text
//! ẋ₁ = x₂
//! ẋ₂ = -x₁ - (1 + b₂(t/α) m(x, t)) x₂
//! ```
//!
//! with `b₂ ≤ 0` and `m` into `[0, 1]`. `V = x₁² + x₂² + x₁x₂` satisfies
//! `∇V f ≤ -(1 + 5τ) V` for `τ ≤ 0`, and does not depend on `τ`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::certificate::CertOptions;
use crate::error::{config, Result};
use crate::quad::integrate;
use crate::system::{
    AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, RealFn, SlowSystem, SupGrid,
};

use super::{
    affine_sine_double_integral, check_range, ClosedForm, ExampleBundle, Expected, TWO_PI,
};

/// `(x, t) ↦ m(x, t) ∈ [0, 1]`
pub type WeightFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Which form of the window condition on `b₂` is validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum P2Mode {
    /// `T + 5 ∫_{t-T}^t b₂ ≥ c_b`, the averaging condition for `q = 1 + 5τ`.
    #[default]
    Averaging,
    /// `5 + T ∫_{t-T}^t b₂ ≥ c_b`, as literally stated in the model's
    /// hypotheses. Differs from the averaging form unless `T = 5`.
    Literal,
}

#[derive(Clone)]
pub struct PendulumParams {
    pub b2: RealFn,
    pub b2_prime: Option<RealFn>,
    /// `(a, b)` when `b₂ = a + b sin`; enables the closed form.
    pub b2_affine_sine: Option<(f64, f64)>,
    pub b2_period: Option<f64>,
    pub m: WeightFn,
    pub window: f64,
    pub c_b: f64,
    pub mode: P2Mode,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            b2: Arc::new(|l| -0.15 * (1.0 + l.sin())),
            b2_prime: Some(Arc::new(|l| -0.15 * l.cos())),
            b2_affine_sine: Some((-0.15, -0.15)),
            b2_period: Some(TWO_PI),
            m: Arc::new(|x, t| 0.5 * (1.0 + (x[0] + t).sin())),
            window: TWO_PI,
            c_b: PI / 2.0,
            mode: P2Mode::Averaging,
        }
    }
}

impl PendulumParams {
    /// Smallest window integral of the chosen P2 form over one period (or
    /// `[-T, 50]` when aperiodic).
    pub fn p2_margin(&self) -> Result<f64> {
        let span = self.b2_period.unwrap_or(50.0 + self.window);
        let grid = SupGrid::over(-self.window, span)
            .with_points(2001)
            .with_safety(1.0);
        let w = self.window;
        let b2 = self.b2.clone();
        let mode = self.mode;
        let mut worst = f64::INFINITY;
        for i in 0..grid.points {
            let t = grid.node(i);
            let int = integrate(|l| b2(l), t - w, t)?;
            let v = match mode {
                P2Mode::Averaging => w + 5.0 * int,
                P2Mode::Literal => 5.0 + w * int,
            };
            worst = worst.min(v);
        }
        Ok(worst)
    }
}

/// `V = x₁² + x₂² + x₁x₂`
pub fn pendulum_v(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[0] * x[1]
}

pub fn pendulum_example(params: &PendulumParams) -> Result<ExampleBundle> {
    let b2 = params.b2.clone();
    let span = (-params.window, params.b2_period.unwrap_or(100.0));
    check_range("b2", |l| b2(l), f64::NEG_INFINITY, 0.0, span, 4000)
        .map_err(|e| crate::Error::Config(format!("b2 must be nonpositive: {e}")))?;
    let margin = params.p2_margin()?;
    if margin < params.c_b * (1.0 - 1e-12) {
        return config(format!(
            "window condition ({:?} form) gives {margin}, below c_b = {}",
            params.mode, params.c_b
        ));
    }
    let m = params.m.clone();
    for i in 0..200 {
        let x = [
            (i as f64 * 0.37).sin() * 10.0,
            (i as f64 * 0.71).cos() * 10.0,
        ];
        let v = m(&x, i as f64 * 0.5);
        if !(0.0..=1.0).contains(&v) {
            return config(format!("m(x, t) = {v} leaves [0, 1]"));
        }
    }

    let mut path = ParameterPath::new(1, {
        let b2 = params.b2.clone();
        move |r| vec![b2(r)]
    });
    if let Some(d) = &params.b2_prime {
        let d = d.clone();
        path = path.with_derivative(move |r| vec![d(r)]);
    }
    path = match params.b2_period {
        Some(p) => path.with_period(p),
        None => path.with_horizon(-params.window, 100.0),
    };
    if let Some((_, b)) = params.b2_affine_sine {
        path = path.with_p_bar(b.abs());
    }

    let frozen = FrozenFamily::new(2, 1, move |x, t, tau| {
        vec![x[1], -x[0] - (1.0 + tau[0] * m(x, t)) * x[1]]
    });
    let sys = SlowSystem::new(frozen, path, 1.0)?;

    let family = LyapunovFamily::new(
        |x, _, _| pendulum_v(x),
        ClassK::quadratic(0.5),
        ClassK::quadratic(1.5),
        |tau| 1.0 + 5.0 * tau[0],
        AveragingData {
            c_a: 0.0,
            c_b: params.c_b,
            window: params.window,
        },
    )
    .with_grad_t(|_, _, _| 0.0)
    .with_grad_x(|x, _, _| vec![2.0 * x[0] + x[1], 2.0 * x[1] + x[0]])
    .tau_independent();

    let w = params.window;
    let closed = params.b2_affine_sine.map(|(a, b)| ClosedForm {
        log_value: Arc::new(move |x: &[f64], t: f64, alpha: f64| {
            5.0 * alpha / w * affine_sine_double_integral(a, b, w, t / alpha) + pendulum_v(x).ln()
        }),
        // the constructed exponent also integrates the constant 1 of q = 1 + 5τ
        log_offset: Arc::new(move |alpha| alpha * w / 2.0),
        convention:
            "closed form uses only the 5 b2 part of q = 1 + 5 tau; the ratio is exp(alpha T / 2)",
    });

    let m_bar = params.b2_affine_sine.map(|(a, b)| {
        f64::max(
            (1.0 + 5.0 * (a - b.abs())).abs(),
            (1.0 + 5.0 * (a + b.abs())).abs(),
        )
    });

    Ok(ExampleBundle {
        name: "pendulum",
        sys,
        family,
        cert_options: CertOptions {
            m_bar,
            sup_grid: None,
        },
        closed_form: closed,
        expected: Expected {
            threshold_ugas: 0.0,
            ugas_for_all_alpha: true,
            constants: vec![
                ("c_b", params.c_b),
                ("T", params.window),
                ("p2_margin", margin),
            ],
            test_alphas: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            notes: vec!["V does not depend on tau, so every alpha > 0 is admissible"],
        },
        horizon: 30.0,
        radius: 10.0,
    })
}
