//! Reweighting a `μ`-family into a plain Lyapunov family.
//!
//! With `B = sup{μ'(s) : 0 ≤ s ≤ 1}` and `ξ = 2B`, the map
//!
//! ```text
//! k(r) = exp(ξ ∫_1^r dl / μ(l)),  k(0) = 0
//! ```
//!
//! is class-K∞ and C¹, and satisfies `k'(r) μ(r) = 2B k(r)`. Replacing `Ṽ`
//! by `k(Ṽ)` turns `Ṽ̇ ≤ -q̃ μ(Ṽ)` into `V̇ ≤ -2B q̃ V`, so every constant of
//! the family is scaled by `2B` and the time-scale threshold is unchanged.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{config, Error, Result};
use crate::quad::Simpson;
use crate::system::{fd_step, AveragingData, LyapunovFamily, RealFn, SupGrid};

/// Below this exponent `k` is flushed to zero.
const UNDERFLOW_KNEE: f64 = -708.396_418_532_264_1 + 20.0;

/// A positive definite C¹ weight `μ` on `[0, ∞)`.
#[derive(Clone)]
pub struct MuFunction {
    mu: RealFn,
    mu_prime: Option<RealFn>,
    declared_b: Option<f64>,
    declared_divergent: bool,
    b_safety: f64,
    quad: Simpson,
    b: OnceLock<f64>,
}

impl fmt::Debug for MuFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MuFunction")
            .field("declared_b", &self.declared_b)
            .field("declared_divergent", &self.declared_divergent)
            .finish()
    }
}

impl MuFunction {
    /// Growth floor for `∫_1^{10⁶} 1/μ` below which `μ` is rejected.
    pub const DIVERGENCE_FLOOR: f64 = 10.0;
    pub const DIVERGENCE_PROBE: f64 = 1e6;

    pub fn new(mu: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        MuFunction {
            mu: Arc::new(mu),
            mu_prime: None,
            declared_b: None,
            declared_divergent: false,
            b_safety: SupGrid::DEFAULT_SAFETY,
            quad: Simpson::default(),
            b: OnceLock::new(),
        }
    }

    /// `μ(l) = l`.
    pub fn identity() -> Self {
        MuFunction::new(|l| l).with_derivative(|_| 1.0).with_b(1.0)
    }

    pub fn with_derivative(
        mut self,
        mu_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.mu_prime = Some(Arc::new(mu_prime));
        self
    }

    /// Declares `B` exactly.
    pub fn with_b(mut self, b: f64) -> Self {
        self.declared_b = Some(b);
        self
    }

    pub fn with_b_safety(mut self, safety: f64) -> Self {
        self.b_safety = safety;
        self
    }

    /// Accepts divergence of `∫_1^∞ 1/μ` on the caller's word, e.g. from a
    /// bound `μ(l) ≤ C l` for large `l`.
    pub fn declare_divergent(mut self) -> Self {
        self.declared_divergent = true;
        self
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.mu)(s)
    }

    /// `μ'(s)`; one-sided at `s = 0` when estimated.
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.mu_prime {
            Some(d) => d(s),
            None => {
                let h = fd_step(s);
                if s - h < 0.0 {
                    (self.eval(s + h) - self.eval(s)) / h
                } else {
                    (self.eval(s + h) - self.eval(s - h)) / (2.0 * h)
                }
            }
        }
    }

    /// `B`, declared or estimated on `[0, 1]`.
    pub fn b(&self) -> Result<f64> {
        if let Some(b) = self.declared_b {
            return Ok(b);
        }
        if let Some(b) = self.b.get() {
            return Ok(*b);
        }
        let grid = SupGrid::over(0.0, 1.0).with_safety(self.b_safety);
        let b = stiffness_b(self, &grid)?;
        Ok(*self.b.get_or_init(|| b))
    }

    /// `ξ = 2B`.
    pub fn xi(&self) -> Result<f64> {
        Ok(2.0 * self.b()?)
    }

    /// Estimate of `c₃` with `μ(r) ≤ c₃ r` on `[0, 1]`.
    pub fn c3(&self, grid: &SupGrid) -> Result<f64> {
        let slope0 = self.derivative(0.0);
        grid.sup(|r| if r > 0.0 { self.eval(r) / r } else { slope0 })
    }

    /// `∫_1^r dl / μ(l)` in the variable `u = ln l`, which removes the
    /// `1/l`-type singularity at the origin.
    pub fn inv_integral(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("∫_1^r 1/μ needs r > 0, got {r}")));
        }
        let mu = &self.mu;
        self.quad.integrate(
            |u| {
                let l = u.exp();
                l / mu(l)
            },
            0.0,
            r.ln(),
        )
    }

    /// Checks `μ(0) = 0`, positivity, the `c₃` bound and growth of `∫ 1/μ`.
    pub fn validate(&self) -> Result<()> {
        let z = self.eval(0.0);
        if z.abs() > 1e-12 {
            return config(format!("μ(0) = {z}, expected 0"));
        }
        let grid = SupGrid::over(0.0, 10.0).with_points(10_001);
        for i in 1..grid.points {
            let s = grid.node(i);
            if !(self.eval(s) > 0.0) {
                return config(format!(
                    "μ is not positive definite: μ({s}) = {}",
                    self.eval(s)
                ));
            }
        }
        let unit = SupGrid::over(0.0, 1.0).with_points(10_001);
        let c3 = self.c3(&unit)?;
        for i in 0..unit.points {
            let r = unit.node(i);
            if self.eval(r) > c3 * r + 1e-12 {
                return config(format!("μ({r}) exceeds c3 r with c3 = {c3}"));
            }
        }
        if self.b()? <= 0.0 {
            return config("sup of μ' on [0, 1] is not positive");
        }
        if !self.declared_divergent {
            let grow = self.inv_integral(Self::DIVERGENCE_PROBE)?;
            if !(grow >= Self::DIVERGENCE_FLOOR) {
                return config(format!(
                    "∫_1^1e6 1/μ = {grow} < {}: μ does not appear to satisfy the divergence \
                     condition (declare it explicitly if it does)",
                    Self::DIVERGENCE_FLOOR
                ));
            }
        }
        Ok(())
    }
}

/// `B = sup{μ'(s) : 0 ≤ s ≤ 1}` on `grid`, times its safety factor.
pub fn stiffness_b(mu: &MuFunction, grid: &SupGrid) -> Result<f64> {
    let b = grid.sup(|s| mu.derivative(s))?;
    if !(b > 0.0) {
        return config(format!(
            "estimated B = {b} is not positive; μ is not positive definite"
        ));
    }
    Ok(b)
}

/// `ln k(r)`; `-∞` at `r = 0` and below the underflow knee.
pub fn k_log(mu: &MuFunction, r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Domain(format!("k is defined on [0, ∞), got {r}")));
    }
    if r == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let e = mu.xi()? * mu.inv_integral(r)?;
    Ok(if e < UNDERFLOW_KNEE {
        f64::NEG_INFINITY
    } else {
        e
    })
}

/// `k(r)`.
pub fn k_eval(mu: &MuFunction, r: f64) -> Result<f64> {
    let e = k_log(mu, r)?;
    if e > crate::averaging::MAX_EXPONENT {
        return Err(Error::Overflow { exponent: e });
    }
    Ok(e.exp())
}

/// `k'(r) = (ξ/μ(r)) exp(-ξ ∫_r^1 1/μ)`; zero at `r = 0` by continuity.
pub fn k_prime_eval(mu: &MuFunction, r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Domain(format!("k' is defined on [0, ∞), got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let e = k_log(mu, r)?;
    if e == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let log = mu.xi()?.ln() - mu.eval(r).ln() + e;
    if log > crate::averaging::MAX_EXPONENT {
        return Err(Error::Overflow { exponent: log });
    }
    Ok(log.exp())
}

/// Upper bound `ξ μ(1)^{-ξ/B} μ(r)^{ξ/B - 1}` on `k'(r)` for `r ∈ (0, 1]`.
pub fn k_prime_power_bound(mu: &MuFunction, r: f64) -> Result<f64> {
    let b = mu.b()?;
    let xi = 2.0 * b;
    Ok(xi * mu.eval(1.0).powf(-xi / b) * mu.eval(r).powf(xi / b - 1.0))
}

/// Turns a `μ`-family into a plain family via `V = k(Ṽ)`.
///
/// The result has `α_i = k ∘ α̃_i`, `q = 2B q̃`, `c_a = 2B c̃_a`,
/// `c_b = 2B c̃_b` and no `μ`. Gradients follow the chain rule through `k'`.
/// Quadrature failures inside the returned callables surface as NaN.
pub fn transform_family(tilde: &LyapunovFamily) -> Result<LyapunovFamily> {
    let mu = match tilde.mu() {
        Some(m) => m.clone(),
        None => return config("family has no μ; it is already in plain form"),
    };
    mu.validate()?;
    let b = mu.b()?;
    let two_b = 2.0 * b;
    let parts = tilde.parts();

    let k = {
        let mu = mu.clone();
        Arc::new(move |r: f64| k_eval(&mu, r.max(0.0)).unwrap_or(f64::NAN))
    };
    let kp = {
        let mu = mu.clone();
        Arc::new(move |r: f64| k_prime_eval(&mu, r.max(0.0)).unwrap_or(f64::NAN))
    };

    let v_tilde = parts.v.clone();
    let k_v = k.clone();
    let v = move |x: &[f64], t: f64, tau: &[f64]| k_v(v_tilde(x, t, tau));

    let a1 = {
        let k = k.clone();
        tilde.alpha1().compose(move |s| k(s))
    };
    let a2 = {
        let k = k.clone();
        tilde.alpha2().compose(move |s| k(s))
    };

    let q_tilde = parts.q.clone();
    let data = AveragingData {
        c_a: two_b * tilde.c_a,
        c_b: two_b * tilde.c_b,
        window: tilde.window,
    };
    let mut out = LyapunovFamily::new(v, a1, a2, move |tau| two_b * q_tilde(tau), data);

    let tilde_t = tilde.clone();
    let (vt, kp_t) = (parts.v.clone(), kp.clone());
    out = out.with_grad_t(move |x, t, tau| kp_t(vt(x, t, tau)) * tilde_t.grad_t(x, t, tau));

    let tilde_x = tilde.clone();
    let (vx, kp_x) = (parts.v.clone(), kp.clone());
    out = out.with_grad_x(move |x, t, tau| {
        let s = kp_x(vx(x, t, tau));
        tilde_x
            .grad_x(x, t, tau)
            .into_iter()
            .map(|g| s * g)
            .collect()
    });

    if parts.tau_independent {
        out = out.tau_independent();
    } else {
        let tilde_tau = tilde.clone();
        let (vtau, kp_tau) = (parts.v.clone(), kp);
        out = out.with_grad_tau(move |x, t, tau| {
            let s = kp_tau(vtau(x, t, tau));
            tilde_tau
                .grad_tau(x, t, tau)
                .into_iter()
                .map(|g| s * g)
                .collect()
        });
    }
    Ok(out)
}
