//! Slowly varying identification dynamics `ẋ = h(t/α) m(t) mᵀ(t) x`.
//!
//! With `|m| ≡ 1`, persistency of excitation
//! `α̲ I ≤ ∫_t^{t+c̃} m mᵀ ≤ ᾱ I`, `h` into `[-ᾱ, 0]` and
//! `∫_{t-T}^t h ≤ -α̲`, the family `V = xᵀ P(t, τ) x` with
//!
//! ```text
//! P(t, τ) = κ I - τ S(t),   S(t) = ∫_{t-c̃}^t ∫_s^t m mᵀ dl ds,
//! κ = c̃/2 + ᾱ² c̃⁴ / (2 α̲) + c̃²
//! ```
//!
//! decays at rate `q(τ) = -τ α̲ / (2 (κ + c̃² ᾱ))`. `S` is tabulated over one
//! period of `m` and interpolated with cubic Hermite splines.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::certificate::CertOptions;
use crate::error::{config, Result};
use crate::quad::integrate;
use crate::system::{
    AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, RealFn, SlowSystem,
};

use super::{
    affine_sine_double_integral, check_range, ClosedForm, ExampleBundle, Expected, TWO_PI,
};

/// `t ↦ m(t) ∈ ℝⁿ`
pub type VectorFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// `t ↦ S(t)`
pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct IdentificationParams {
    pub h: RealFn,
    pub h_prime: RealFn,
    /// `(a, b)` when `h = a + b sin`; enables exact `p̄`, `M̄` and the
    /// closed form.
    pub h_affine_sine: Option<(f64, f64)>,
    pub h_period: Option<f64>,
    pub m: VectorFn,
    pub m_period: f64,
    pub window: f64,
    pub c_tilde: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Closed form of `S(t)`, when known.
    pub s_closed: Option<MatrixFn>,
    pub table_nodes: usize,
}

impl Default for IdentificationParams {
    fn default() -> Self {
        IdentificationParams {
            h: Arc::new(|_| -1.0),
            h_prime: Arc::new(|_| 0.0),
            h_affine_sine: Some((-1.0, 0.0)),
            h_period: Some(TWO_PI),
            m: Arc::new(|t| vec![t.cos(), t.sin()]),
            m_period: TWO_PI,
            window: PI,
            c_tilde: TWO_PI,
            alpha_lo: PI,
            alpha_hi: PI,
            s_closed: Some(Arc::new(unit_circle_s)),
            table_nodes: 4096,
        }
    }
}

impl IdentificationParams {
    /// `h = -1.5 - 0.5 sin`, which has a positive threshold.
    pub fn varying() -> Self {
        IdentificationParams {
            h: Arc::new(|r| -1.5 - 0.5 * r.sin()),
            h_prime: Arc::new(|r| -0.5 * r.cos()),
            h_affine_sine: Some((-1.5, -0.5)),
            h_period: Some(TWO_PI),
            ..Self::default()
        }
    }

    /// `κ = c̃/2 + ᾱ² c̃⁴ / (2 α̲) + c̃²`
    pub fn kappa(&self) -> f64 {
        let c = self.c_tilde;
        c / 2.0 + self.alpha_hi.powi(2) * c.powi(4) / (2.0 * self.alpha_lo) + c * c
    }

    /// `κ + c̃² ᾱ`
    pub fn upper(&self) -> f64 {
        self.kappa() + self.c_tilde.powi(2) * self.alpha_hi
    }

    /// `α̲² / (2 (κ + c̃² ᾱ))`
    pub fn c_b(&self) -> f64 {
        self.alpha_lo.powi(2) / (2.0 * self.upper())
    }

    fn validate(&self) -> Result<()> {
        let h = self.h.clone();
        let span = (-self.window, self.h_period.unwrap_or(100.0));
        check_range("h", |r| h(r), -self.alpha_hi, 0.0, span, 4000)?;
        for i in 0..=1000 {
            let t = span.0 + (span.1 - span.0) * i as f64 / 1000.0;
            let int = integrate(|r| h(r), t - self.window, t)?;
            if int > -self.alpha_lo * (1.0 - 1e-12) {
                return config(format!(
                    "window integral of h at t = {t} is {int}, above -alpha_lo = {}",
                    -self.alpha_lo
                ));
            }
        }
        for i in 0..=1000 {
            let t = self.m_period * i as f64 / 1000.0;
            let n = crate::system::norm(&(self.m)(t));
            if (n - 1.0).abs() > 1e-12 {
                return config(format!("|m({t})| = {n}, expected 1"));
            }
        }
        let (lo, hi) = persistency_bounds(&self.m, self.c_tilde, self.m_period, 257)?;
        let tol = 1e-8 * (1.0 + self.alpha_hi);
        if lo < self.alpha_lo - tol || hi > self.alpha_hi + tol {
            return config(format!(
                "persistency window violated: eigenvalues of the window integral span [{lo}, {hi}], declared [{}, {}]",
                self.alpha_lo, self.alpha_hi
            ));
        }
        Ok(())
    }
}

/// `S(t)` for `m = (cos, sin)` and `c̃ = 2π`.
pub fn unit_circle_s(t: f64) -> DMatrix<f64> {
    let (s2, c2) = (2.0 * t).sin_cos();
    let p2 = PI * PI;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            p2 + PI / 2.0 * s2,
            -PI / 2.0 * c2,
            -PI / 2.0 * c2,
            p2 - PI / 2.0 * s2,
        ],
    )
}

fn outer(m: &[f64]) -> DMatrix<f64> {
    let v = DVector::from_column_slice(m);
    &v * v.transpose()
}

/// Entrywise quadrature of a matrix-valued integrand.
fn integrate_matrix(
    n: usize,
    f: impl Fn(f64, usize, usize) -> f64,
    a: f64,
    b: f64,
) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = integrate(|r| f(r, i, j), a, b)?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// `∫_{t-c̃}^t m mᵀ`
pub fn window_matrix(m: &VectorFn, c_tilde: f64, t: f64) -> Result<DMatrix<f64>> {
    let n = m(0.0).len();
    integrate_matrix(
        n,
        |r, i, j| {
            let v = m(r);
            v[i] * v[j]
        },
        t - c_tilde,
        t,
    )
}

/// `S(t) = ∫_{t-c̃}^t (r - t + c̃) m mᵀ(r) dr`, by direct quadrature.
pub fn double_window_matrix(m: &VectorFn, c_tilde: f64, t: f64) -> Result<DMatrix<f64>> {
    let n = m(0.0).len();
    integrate_matrix(
        n,
        |r, i, j| {
            let v = m(r);
            (r - t + c_tilde) * v[i] * v[j]
        },
        t - c_tilde,
        t,
    )
}

/// Extreme eigenvalues of `∫_t^{t+c̃} m mᵀ` over `samples` values of `t`
/// spread across `[0, span]`.
pub fn persistency_bounds(
    m: &VectorFn,
    c_tilde: f64,
    span: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..samples {
        let t = span * k as f64 / samples as f64;
        let w = window_matrix(m, c_tilde, t + c_tilde)?;
        let eig = SymmetricEigen::new(w).eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    Ok((lo, hi))
}

/// Periodic cubic Hermite table of a symmetric matrix function.
#[derive(Clone, Debug)]
pub struct MatrixTable {
    period: f64,
    step: f64,
    values: Vec<DMatrix<f64>>,
    slopes: Vec<DMatrix<f64>>,
}

impl MatrixTable {
    pub fn new(period: f64, values: Vec<DMatrix<f64>>, slopes: Vec<DMatrix<f64>>) -> Self {
        let step = period / (values.len() - 1) as f64;
        MatrixTable {
            period,
            step,
            values,
            slopes,
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let r = t.rem_euclid(self.period);
        let j = ((r / self.step) as usize).min(self.values.len() - 2);
        let u = (r - j as f64 * self.step) / self.step;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        &self.values[j] * h00
            + &self.slopes[j] * (h10 * self.step)
            + &self.values[j + 1] * h01
            + &self.slopes[j + 1] * (h11 * self.step)
    }
}

/// Tables of `S` and `W(t) = ∫_{t-c̃}^t m mᵀ`, with exact slopes
/// `S' = c̃ m mᵀ(t) - W(t)` and `W' = m mᵀ(t) - m mᵀ(t - c̃)`.
pub fn tabulate(params: &IdentificationParams) -> Result<(MatrixTable, MatrixTable)> {
    let n = params.table_nodes.max(8);
    let (c, m, period) = (params.c_tilde, params.m.clone(), params.m_period);
    let rows: Vec<Result<(DMatrix<f64>, DMatrix<f64>)>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let t = period * j as f64 / n as f64;
            Ok((double_window_matrix(&m, c, t)?, window_matrix(&m, c, t)?))
        })
        .collect();
    let mut s_vals = Vec::with_capacity(n + 1);
    let mut w_vals = Vec::with_capacity(n + 1);
    for r in rows {
        let (s, w) = r?;
        s_vals.push(s);
        w_vals.push(w);
    }
    let mut s_slopes = Vec::with_capacity(n + 1);
    let mut w_slopes = Vec::with_capacity(n + 1);
    for (j, w) in w_vals.iter().enumerate() {
        let t = period * j as f64 / n as f64;
        let now = outer(&m(t));
        s_slopes.push(&now * c - w);
        w_slopes.push(now - outer(&m(t - c)));
    }
    Ok((
        MatrixTable::new(period, s_vals, s_slopes),
        MatrixTable::new(period, w_vals, w_slopes),
    ))
}

fn quad_form(p: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    (v.transpose() * p * &v)[(0, 0)]
}

pub fn identification_example(params: &IdentificationParams) -> Result<ExampleBundle> {
    params.validate()?;
    let (s_table, w_table) = tabulate(params)?;
    let s_table = Arc::new(s_table);
    let w_table = Arc::new(w_table);
    let dim = (params.m)(0.0).len();
    let kappa = params.kappa();
    let upper = params.upper();
    let (alpha_lo, c) = (params.alpha_lo, params.c_tilde);

    let mut path = ParameterPath::new(1, {
        let h = params.h.clone();
        move |r| vec![h(r)]
    })
    .with_derivative({
        let hp = params.h_prime.clone();
        move |r| vec![hp(r)]
    });
    path = match params.h_period {
        Some(p) => path.with_period(p),
        None => path.with_horizon(-params.window, 100.0),
    };
    if let Some((_, b)) = params.h_affine_sine {
        path = path.with_p_bar(b.abs());
    }
    let m = params.m.clone();
    let frozen = FrozenFamily::new(dim, 1, move |x, t, tau| {
        let mv = m(t);
        let proj: f64 = mv.iter().zip(x).map(|(a, b)| a * b).sum();
        mv.iter().map(|mi| tau[0] * mi * proj).collect()
    });
    let sys = SlowSystem::new(frozen, path, 1.0)?;

    let p_of = {
        let s = s_table.clone();
        move |t: f64, tau: f64| DMatrix::<f64>::identity(dim, dim) * kappa - s.eval(t) * tau
    };
    let p_v = p_of.clone();
    let p_g = p_of;
    let (s_tau, w_t, m_t) = (s_table.clone(), w_table.clone(), params.m.clone());
    let family = LyapunovFamily::new(
        move |x, t, tau| quad_form(&p_v(t, tau[0]), x),
        ClassK::quadratic(kappa),
        ClassK::quadratic(upper),
        move |tau| -tau[0] * alpha_lo / (2.0 * upper),
        AveragingData {
            c_a: 1.0,
            c_b: params.c_b(),
            window: params.window,
        },
    )
    .with_grad_x(move |x, t, tau| {
        let v = p_g(t, tau[0]) * DVector::from_column_slice(x) * 2.0;
        v.iter().cloned().collect()
    })
    .with_grad_t(move |x, t, tau| {
        let s_prime = outer(&m_t(t)) * c - w_t.eval(t);
        -tau[0] * quad_form(&s_prime, x)
    })
    .with_grad_tau(move |x, t, _| vec![-quad_form(&s_tau.eval(t), x)]);

    let closed = match (&params.s_closed, params.h_affine_sine) {
        (Some(s), Some((a, b))) => {
            let (s, w) = (s.clone(), params.window);
            let h = params.h.clone();
            Some(ClosedForm::exact(move |x, t, alpha| {
                let tau = h(t / alpha);
                let p = DMatrix::<f64>::identity(dim, dim) * kappa - s(t) * tau;
                -alpha * alpha_lo / (2.0 * w * upper)
                    * affine_sine_double_integral(a, b, w, t / alpha)
                    + quad_form(&p, x).ln()
            }))
        }
        _ => None,
    };

    let m_bar = params
        .h_affine_sine
        .map(|(a, b)| alpha_lo * (a.abs() + b.abs()) / (2.0 * upper));
    let p_bar = sys.path.p_bar()?;
    let threshold = 2.0 * params.window * p_bar / params.c_b();
    let alpha = if threshold > 0.0 {
        2.0 * threshold
    } else {
        1.0
    };
    let name = if p_bar == 0.0 {
        "identification"
    } else {
        "identification-varying"
    };
    Ok(ExampleBundle {
        name,
        sys: sys.with_alpha(alpha)?,
        family,
        cert_options: CertOptions {
            m_bar,
            sup_grid: None,
        },
        closed_form: closed,
        expected: Expected {
            threshold_ugas: threshold,
            ugas_for_all_alpha: threshold == 0.0,
            constants: vec![
                ("kappa", kappa),
                ("kappa_plus", upper),
                ("c_b", params.c_b()),
                ("alpha_lo", params.alpha_lo),
                ("alpha_hi", params.alpha_hi),
                ("p_bar", p_bar),
            ],
            test_alphas: if threshold > 0.0 {
                vec![2.0 * threshold]
            } else {
                vec![0.01, 1.0, 100.0]
            },
            notes: vec![
                "P(t, tau) is interpolated from a cubic Hermite table over one period of m",
            ],
        },
        horizon: 40.0,
        radius: 10.0,
    })
}
