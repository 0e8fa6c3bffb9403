//! Mass-spring system with slowly varying viscous, Coulomb and static
//! friction:
//!
//! ```text
//! ẋ₁ = x₂
//! ẋ₂ = -σ₁ x₂ - k(t) x₁ - (σ₂ + σ₃ e^{-β₁ μ(x₂)}) tanh(β₂ x₂)
//! ```
//!
//! with `σᵢ` evaluated at `t/α`. With `A = 1 + k_o/2 + (1 + 2β₂)²/k_o` the
//! family `V = A(k(t) x₁² + x₂²) + τ₁ x₁ x₂` decays at rate
//! `q(τ) = τ₁ k_o / (4 A² k̄)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::certificate::CertOptions;
use crate::error::{config, Result};
use crate::quad::integrate;
use crate::report::{merge_all, Condition, ViolationReport};
use crate::simverify::{sample_points, SampleGrid};
use crate::system::{
    norm, AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, RealFn, SlowSystem,
};

use super::{
    affine_sine_double_integral, check_range, ClosedForm, ExampleBundle, Expected, TWO_PI,
};

#[derive(Clone)]
pub struct FrictionParams {
    pub k: RealFn,
    pub k_prime: RealFn,
    pub k_o: f64,
    pub k_bar: f64,
    pub sigmas: [RealFn; 3],
    pub sigma_primes: [RealFn; 3],
    /// `(a, b)` when every `σᵢ = a + b sin`; enables exact `p̄`, `M̄` and the
    /// closed form.
    pub sigma_affine_sine: Option<(f64, f64)>,
    pub sigma_period: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub stribeck: RealFn,
    pub window: f64,
    /// Lower bound on `∫_{t-T}^t σ₁`.
    pub sigma1_window: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        let sigma: RealFn = Arc::new(|t| 0.5 * (1.0 + 0.5 * t.sin()));
        let sigma_p: RealFn = Arc::new(|t| 0.25 * t.cos());
        FrictionParams {
            k: Arc::new(|t| 1.0 + (-t).exp()),
            k_prime: Arc::new(|t| -(-t).exp()),
            k_o: 1.0,
            k_bar: 2.0,
            sigmas: [sigma.clone(), sigma.clone(), sigma],
            sigma_primes: [sigma_p.clone(), sigma_p.clone(), sigma_p],
            sigma_affine_sine: Some((0.5, 0.25)),
            sigma_period: Some(TWO_PI),
            beta1: 1.0,
            beta2: 1.0,
            stribeck: Arc::new(|s| s * s / (1.0 + s * s)),
            window: TWO_PI,
            sigma1_window: PI,
        }
    }
}

impl FrictionParams {
    /// `A = 1 + k_o/2 + (1 + 2β₂)²/k_o`
    pub fn a(&self) -> f64 {
        1.0 + self.k_o / 2.0 + (1.0 + 2.0 * self.beta2).powi(2) / self.k_o
    }

    /// `b̄ = k_o / (4 A² k̄)`
    pub fn b_bar(&self) -> f64 {
        self.k_o / (4.0 * self.a().powi(2) * self.k_bar)
    }

    /// Averaging constant of the family, `b̄ ∫σ₁ ≥ b̄ c`.
    pub fn family_c_b(&self) -> f64 {
        self.b_bar() * self.sigma1_window
    }

    fn validate(&self) -> Result<()> {
        let span = (0.0, self.sigma_period.unwrap_or(100.0).max(20.0));
        for (i, s) in self.sigmas.iter().enumerate() {
            check_range(
                &format!("sigma{}", i + 1),
                |t| s(t),
                f64::MIN_POSITIVE,
                1.0,
                (-self.window, span.1),
                4000,
            )?;
        }
        check_range("k", |t| (self.k)(t), self.k_o, self.k_bar, span, 4000)?;
        for i in 0..=4000 {
            let t = span.1 * i as f64 / 4000.0;
            let d = (self.k_prime)(t);
            if d > 0.0 {
                return config(format!(
                    "spring stiffness is nonincreasing: k'({t}) = {d} > 0"
                ));
            }
        }
        let s1 = self.sigmas[0].clone();
        let w = self.window;
        for i in 0..=1000 {
            let t = span.1 * i as f64 / 1000.0;
            let int = integrate(|r| s1(r), t - w, t)?;
            if int < self.sigma1_window * (1.0 - 1e-12) {
                return config(format!(
                    "window integral of sigma1 at t = {t} is {int}, below {}",
                    self.sigma1_window
                ));
            }
        }
        if !(self.beta1 > 0.0 && self.beta2 > 0.0 && self.k_o > 0.0) {
            return config("beta1, beta2 and k_o must be positive");
        }
        Ok(())
    }

    fn path(&self) -> ParameterPath {
        let s = self.sigmas.clone();
        let d = self.sigma_primes.clone();
        let mut path = ParameterPath::new(3, move |r| vec![s[0](r), s[1](r), s[2](r)])
            .with_derivative(move |r| vec![d[0](r), d[1](r), d[2](r)]);
        path = match self.sigma_period {
            Some(p) => path.with_period(p),
            None => path.with_horizon(-self.window, 100.0),
        };
        if let Some((_, b)) = self.sigma_affine_sine {
            path = path.with_p_bar(3f64.sqrt() * b.abs());
        }
        path
    }

    fn frozen(&self) -> FrozenFamily {
        let k = self.k.clone();
        let mu = self.stribeck.clone();
        let (b1, b2) = (self.beta1, self.beta2);
        FrozenFamily::new(2, 3, move |x, t, tau| {
            let friction = (tau[1] + tau[2] * (-b1 * mu(x[1])).exp()) * (b2 * x[1]).tanh();
            vec![x[1], -tau[0] * x[1] - k(t) * x[0] - friction]
        })
    }

    fn family(&self, c_a: f64) -> LyapunovFamily {
        let a = self.a();
        let (k, kp, k2) = (self.k.clone(), self.k_prime.clone(), self.k.clone());
        let b_bar = self.b_bar();
        LyapunovFamily::new(
            move |x, t, tau| a * (k(t) * x[0] * x[0] + x[1] * x[1]) + tau[0] * x[0] * x[1],
            ClassK::quadratic(0.5),
            ClassK::quadratic(2.0 * a * a * self.k_bar),
            move |tau| b_bar * tau[0],
            AveragingData {
                c_a,
                c_b: self.family_c_b(),
                window: self.window,
            },
        )
        .with_grad_t(move |x, t, _| a * kp(t) * x[0] * x[0])
        .with_grad_x(move |x, t, tau| {
            vec![
                2.0 * a * k2(t) * x[0] + tau[0] * x[1],
                2.0 * a * x[1] + tau[0] * x[0],
            ]
        })
        .with_grad_tau(|x, _, _| vec![x[0] * x[1], 0.0, 0.0])
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        let (a_s, b_s) = self.sigma_affine_sine?;
        let (w, b_bar) = (self.window, self.b_bar());
        let fam = self.family(1.0);
        let s = self.sigmas.clone();
        Some(ClosedForm::exact(move |x, t, alpha| {
            let r = t / alpha;
            let tau = [s[0](r), s[1](r), s[2](r)];
            alpha * b_bar / w * affine_sine_double_integral(a_s, b_s, w, r) + fam.v(x, t, &tau).ln()
        }))
    }

    fn bundle(&self, name: &'static str, c_a: f64, frozen: FrozenFamily) -> Result<ExampleBundle> {
        self.validate()?;
        let sys = SlowSystem::new(frozen, self.path(), 1.0)?;
        let family = self.family(c_a);
        let m_bar = self
            .sigma_affine_sine
            .map(|(a, b)| self.b_bar() * (a + b.abs()));
        let p_bar = sys.path.p_bar()?;
        let threshold = 2.0 * self.window * c_a * p_bar / family.c_b;
        Ok(ExampleBundle {
            name,
            sys: sys.with_alpha(2.0 * threshold)?,
            family,
            cert_options: CertOptions { m_bar, sup_grid: None },
            closed_form: self.closed_form(),
            expected: Expected {
                threshold_ugas: threshold,
                ugas_for_all_alpha: false,
                constants: vec![
                    ("A", self.a()),
                    ("b_bar", self.b_bar()),
                    ("c_b", self.family_c_b()),
                    ("sigma1_window", self.sigma1_window),
                    ("c_a", c_a),
                    ("p_bar", p_bar),
                ],
                test_alphas: vec![2.0 * threshold],
                notes: vec![
                    "decrease is only guaranteed above the threshold; below it the check is informational",
                ],
            },
            horizon: 60.0,
            radius: 10.0,
        })
    }
}

pub fn friction_example(params: &FrictionParams) -> Result<ExampleBundle> {
    params.bundle("friction", 1.0, params.frozen())
}

/// The friction system with a force input `g = (0, 1)ᵀ`. The growth
/// conditions `|V_x| ≤ c_a √α₁` and `|g| ≤ c_a (1 + α₁^{1/4})` with
/// `α₁(s) = s²/2` need `c_a ≥ √2 (2 A k̄ + 1)`, which also enlarges the
/// thresholds.
pub fn controlled_friction_example(params: &FrictionParams) -> Result<ExampleBundle> {
    let c_a = 2f64.sqrt() * (2.0 * params.a() * params.k_bar + 1.0);
    let frozen = params
        .frozen()
        .with_control(1, |_, _, _| DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
    let mut b = params.bundle("controlled-friction", c_a, frozen)?;
    let iss = 2.0 * b.expected.threshold_ugas;
    b.sys = b.sys.with_alpha(2.0 * iss)?;
    b.expected.test_alphas = vec![2.0 * iss];
    b.expected.constants.push(("threshold_iss", iss));
    b.horizon = 200.0;
    Ok(b)
}

/// Checks every step of the hand-derived decay chain for the friction
/// family, `V_t + V_x f ≤ V_x f ≤ L₁ ≤ L₂ ≤ -b̄ τ₁ V` (report `L1`), and the
/// sandwich `|x|²/2 ≤ V ≤ A² k̄ (|x₁| + |x₂|)² ≤ 2 A² k̄ |x|²` (report `L2`),
/// on a grid with `τ ∈ [0, 1]³`.
pub fn friction_chain_check(
    params: &FrictionParams,
    bundle: &ExampleBundle,
    grid: &SampleGrid,
) -> Result<Vec<ViolationReport>> {
    let grid = grid.clone().with_tau_box(vec![0.0; 3], vec![1.0; 3]);
    let points = sample_points(&grid, &bundle.sys, bundle.family.window);
    let fam = &bundle.family;
    let frozen = &bundle.sys.frozen;
    let (a, k_o, k_bar, b2) = (params.a(), params.k_o, params.k_bar, params.beta2);
    let parts: Vec<(ViolationReport, ViolationReport)> = points
        .par_chunks(1024)
        .map(|chunk| {
            let mut chain = ViolationReport::new(Condition::L1);
            let mut sandwich = ViolationReport::new(Condition::L2);
            for p in chunk {
                let (x, t, tau) = (&p.x[..], p.t, &p.tau[..]);
                let pt = || [x, &[t], tau].concat();
                let v = fam.v(x, t, tau);
                let vxf: f64 = fam
                    .grad_x(x, t, tau)
                    .iter()
                    .zip(frozen.eval(x, t, tau))
                    .map(|(g, f)| g * f)
                    .sum();
                let full = fam.grad_t(x, t, tau) + vxf;
                let (x1, x2, t1) = (x[0], x[1], tau[0]);
                let l1 = -t1 * k_o * x1 * x1 - (2.0 * a * t1 - t1) * x2 * x2
                    + t1 * (1.0 + 2.0 * b2) * (x1 * x2).abs();
                let l2 = -t1 * k_o / 2.0 * (x1 * x1 + x2 * x2)
                    - t1 * k_o / 2.0 * (x1.abs() - (1.0 + 2.0 * b2) / k_o * x2.abs()).powi(2)
                    + (t1 * (1.0 + 2.0 * b2).powi(2) / (2.0 * k_o) + t1 / 2.0 - a * t1) * x2 * x2;
                let end = -t1 * k_o / (4.0 * a * a * k_bar) * v;
                chain.record(pt, full, vxf);
                chain.record(pt, vxf, l1);
                chain.record(pt, l1, l2);
                chain.record(pt, l2, end);

                let r = norm(x);
                let mid = a * a * k_bar * (x1.abs() + x2.abs()).powi(2);
                sandwich.record(pt, 0.5 * r * r, v);
                sandwich.record(pt, v, mid);
                sandwich.record(pt, mid, 2.0 * a * a * k_bar * r * r);
            }
            (chain, sandwich)
        })
        .collect();
    let (c, s): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(vec![
        merge_all(Condition::L1, c),
        merge_all(Condition::L2, s),
    ])
}
