//! Systems, slow parameter paths and Lyapunov families.
//!
//! All callables are stored behind `Arc` so every type here is cheap to
//! clone and safe to share between threads.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{config, Error, Result};
use crate::transform::MuFunction;

/// `r ↦ p(r) ∈ ℝᵈ`
pub type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// `(x, t, τ) ↦ ℝⁿ`
pub type FieldFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// `(x, t, τ) ↦ ℝ`
pub type ScalarFieldFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>;
/// `(x, t, τ) ↦ ℝⁿˣᵐ`
pub type ControlFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> DMatrix<f64> + Send + Sync>;
/// `τ ↦ ℝ`
pub type ParamFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `s ↦ ℝ`
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Central-difference step used whenever an analytic derivative is missing.
pub fn fd_step(arg: f64) -> f64 {
    f64::max(1e-6, 1e-8 * arg.abs())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform grid used to estimate suprema such as `p̄`, `M̄` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub safety: f64,
}

impl SupGrid {
    pub const DEFAULT_POINTS: usize = 100_000;
    pub const DEFAULT_SAFETY: f64 = 1.05;

    pub fn over(lo: f64, hi: f64) -> Self {
        SupGrid {
            lo,
            hi,
            points: Self::DEFAULT_POINTS,
            safety: Self::DEFAULT_SAFETY,
        }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_safety(mut self, safety: f64) -> Self {
        self.safety = safety;
        self
    }

    /// Node `i` of the grid. Doubling `points - 1` reproduces every old node
    /// bit for bit, which keeps refinement monotone.
    pub fn node(&self, i: usize) -> f64 {
        if self.points == 1 {
            return self.lo;
        }
        self.lo + (self.hi - self.lo) * (i as f64 / (self.points - 1) as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return config("sup grid has no points");
        }
        if !(self.lo <= self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return config(format!(
                "sup grid range [{}, {}] is invalid",
                self.lo, self.hi
            ));
        }
        if !(self.safety >= 1.0) {
            return config(format!("safety factor {} must be >= 1", self.safety));
        }
        Ok(())
    }

    /// Raw maximum of `f` over the grid (no safety factor).
    pub fn raw_max<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.validate()?;
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.points {
            let v = f(self.node(i));
            if v.is_nan() {
                return Err(Error::Numerical {
                    x: vec![],
                    t: self.node(i),
                    what: "NaN while estimating a supremum".into(),
                });
            }
            best = best.max(v);
        }
        Ok(best)
    }

    /// Maximum of `f` over the grid, multiplied by the safety factor.
    pub fn sup<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let m = self.raw_max(f)?;
        Ok(if m > 0.0 { m * self.safety } else { m })
    }
}

/// The slow signal `p : ℝ → ℝᵈ`.
///
/// `p` must be evaluable on all of `ℝ`: the averaging window of the
/// certificate reaches `t/α - T`, which is negative for small `t`. No
/// extrapolation happens here.
#[derive(Clone)]
pub struct ParameterPath {
    dim: usize,
    p: PathFn,
    p_prime: Option<PathFn>,
    declared_p_bar: Option<f64>,
    period: Option<f64>,
    horizon: Option<(f64, f64)>,
    estimated_p_bar: OnceLock<f64>,
}

impl fmt::Debug for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterPath")
            .field("dim", &self.dim)
            .field("analytic_derivative", &self.p_prime.is_some())
            .field("declared_p_bar", &self.declared_p_bar)
            .field("period", &self.period)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl ParameterPath {
    pub fn new(dim: usize, p: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        ParameterPath {
            dim,
            p: Arc::new(p),
            p_prime: None,
            declared_p_bar: None,
            period: None,
            horizon: None,
            estimated_p_bar: OnceLock::new(),
        }
    }

    /// A path frozen at a constant vector.
    pub fn constant(value: Vec<f64>) -> Self {
        let dim = value.len();
        let zero = vec![0.0; dim];
        let v = value.clone();
        ParameterPath::new(dim, move |_| v.clone())
            .with_derivative(move |_| zero.clone())
            .with_p_bar(0.0)
            .with_period(1.0)
    }

    pub fn with_derivative(
        mut self,
        p_prime: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.p_prime = Some(Arc::new(p_prime));
        self
    }

    /// Declares `p̄` exactly, bypassing grid estimation.
    pub fn with_p_bar(mut self, p_bar: f64) -> Self {
        self.declared_p_bar = Some(p_bar);
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    /// Range used for sup estimates when the path is not periodic.
    pub fn with_horizon(mut self, lo: f64, hi: f64) -> Self {
        self.horizon = Some((lo, hi));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn horizon(&self) -> Option<(f64, f64)> {
        self.horizon
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.p_prime.is_some()
    }

    pub fn eval(&self, r: f64) -> Vec<f64> {
        (self.p)(r)
    }

    /// `p'(r)`, analytic when supplied, central differences otherwise.
    pub fn derivative(&self, r: f64) -> Vec<f64> {
        match &self.p_prime {
            Some(d) => d(r),
            None => {
                let h = fd_step(r);
                let a = (self.p)(r + h);
                let b = (self.p)(r - h);
                a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect()
            }
        }
    }

    /// Grid for sup estimates: one period if periodic, else the horizon.
    pub fn sup_grid(&self) -> Result<SupGrid> {
        if let Some(period) = self.period {
            return Ok(SupGrid::over(0.0, period));
        }
        if let Some((lo, hi)) = self.horizon {
            return Ok(SupGrid::over(lo, hi));
        }
        config("path has neither a period nor a horizon; declare p_bar or a horizon")
    }

    /// `p̄ = sup |p'(r)|`, declared or estimated on [`Self::sup_grid`].
    pub fn p_bar(&self) -> Result<f64> {
        if let Some(v) = self.declared_p_bar {
            return Ok(v);
        }
        if let Some(v) = self.estimated_p_bar.get() {
            return Ok(*v);
        }
        let grid = self.sup_grid()?;
        let v = estimate_p_bar(self, &grid)?;
        Ok(*self.estimated_p_bar.get_or_init(|| v))
    }

    /// Checks `|p'| ≤ p̄` and periodicity on `samples` points of the sup grid.
    pub fn validate(&self, samples: usize, tol: f64) -> Result<()> {
        let p_bar = self.p_bar()?;
        let grid = self.sup_grid()?.with_points(samples.max(2));
        for i in 0..grid.points {
            let r = grid.node(i);
            let d = norm(&self.derivative(r));
            if d > p_bar * (1.0 + 1e-9) + 1e-12 {
                return config(format!("|p'({r})| = {d} exceeds p_bar = {p_bar}"));
            }
            if let Some(period) = self.period {
                let a = self.eval(r);
                let b = self.eval(r + period);
                let gap: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u - v).collect();
                if norm(&gap) > tol {
                    return config(format!("path is not {period}-periodic at r = {r}"));
                }
            }
        }
        Ok(())
    }
}

/// `max |p'(r)|` over the grid, times the grid's safety factor.
pub fn estimate_p_bar(path: &ParameterPath, grid: &SupGrid) -> Result<f64> {
    grid.sup(|r| norm(&path.derivative(r)))
}

/// Pre-safety-factor value of [`estimate_p_bar`].
pub fn estimate_p_bar_raw(path: &ParameterPath, grid: &SupGrid) -> Result<f64> {
    grid.raw_max(|r| norm(&path.derivative(r)))
}

/// The frozen vector field `f(x, t, τ)` and an optional control matrix `g`.
#[derive(Clone)]
pub struct FrozenFamily {
    dim_state: usize,
    dim_param: usize,
    dim_control: usize,
    f: FieldFn,
    g: Option<ControlFn>,
    state_bound: Option<RealFn>,
}

impl fmt::Debug for FrozenFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrozenFamily")
            .field("dim_state", &self.dim_state)
            .field("dim_param", &self.dim_param)
            .field("dim_control", &self.dim_control)
            .finish()
    }
}

impl FrozenFamily {
    pub fn new(
        dim_state: usize,
        dim_param: usize,
        f: impl Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FrozenFamily {
            dim_state,
            dim_param,
            dim_control: 0,
            f: Arc::new(f),
            g: None,
            state_bound: None,
        }
    }

    pub fn with_control(
        mut self,
        dim_control: usize,
        g: impl Fn(&[f64], f64, &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.dim_control = dim_control;
        self.g = Some(Arc::new(g));
        self
    }

    pub fn with_state_bound(mut self, bound: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.state_bound = Some(Arc::new(bound));
        self
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_param(&self) -> usize {
        self.dim_param
    }

    pub fn dim_control(&self) -> usize {
        self.dim_control
    }

    pub fn has_control(&self) -> bool {
        self.g.is_some()
    }

    pub fn eval(&self, x: &[f64], t: f64, tau: &[f64]) -> Vec<f64> {
        (self.f)(x, t, tau)
    }

    pub fn control(&self, x: &[f64], t: f64, tau: &[f64]) -> Option<DMatrix<f64>> {
        self.g.as_ref().map(|g| g(x, t, tau))
    }

    pub fn state_bound(&self, s: f64) -> Option<f64> {
        self.state_bound.as_ref().map(|b| b(s))
    }

    /// Enforces `f(0, t, τ) = 0` on the given samples.
    pub fn check_equilibrium(&self, times: &[f64], taus: &[Vec<f64>], tol: f64) -> Result<()> {
        let zero = vec![0.0; self.dim_state];
        for &t in times {
            for tau in taus {
                let v = norm(&self.eval(&zero, t, tau));
                if !(v <= tol) {
                    return config(format!(
                        "origin is not an equilibrium: |f(0, {t}, {tau:?})| = {v}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks `|f(x,t,τ)| ≤ α_h(|x|)` when a state bound is declared.
    pub fn check_state_bound(&self, x: &[f64], t: f64, tau: &[f64]) -> bool {
        match self.state_bound(norm(x)) {
            Some(b) => norm(&self.eval(x, t, tau)) <= b * (1.0 + 1e-9) + 1e-12,
            None => true,
        }
    }
}

/// A class-K∞ comparison function of `|x|`.
#[derive(Clone)]
pub struct ClassK {
    f: RealFn,
}

impl fmt::Debug for ClassK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClassK(..)")
    }
}

impl ClassK {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClassK { f: Arc::new(f) }
    }

    /// `s ↦ c s²`
    pub fn quadratic(c: f64) -> Self {
        ClassK::new(move |s| c * s * s)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    /// Pre-composition with an increasing map: `s ↦ outer(self(s))`.
    pub fn compose(&self, outer: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ClassK {
        let inner = self.f.clone();
        ClassK::new(move |s| outer(inner(s)))
    }

    /// Smallest `s ≥ 0` with `self(s) ≥ y`, by bracketing and bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.eval(hi) < y {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Zero at zero and strictly increasing along `samples` (sorted ascending).
    pub fn check_on(&self, samples: &[f64]) -> Result<()> {
        let z = self.eval(0.0);
        if z.abs() > 1e-12 {
            return config(format!("comparison function is {z} at 0"));
        }
        for w in samples.windows(2) {
            if !(self.eval(w[1]) > self.eval(w[0])) {
                return config(format!(
                    "comparison function is not strictly increasing on [{}, {}]",
                    w[0], w[1]
                ));
            }
        }
        Ok(())
    }
}

/// Checks `α₁ ≤ α₂` plus the class-K∞ shape of both on `samples`.
pub fn check_sandwich_pair(a1: &ClassK, a2: &ClassK, samples: &[f64]) -> Result<()> {
    a1.check_on(samples)?;
    a2.check_on(samples)?;
    for &s in samples {
        if a1.eval(s) > a2.eval(s) * (1.0 + 1e-12) + 1e-300 {
            return config(format!("alpha1({s}) > alpha2({s})"));
        }
    }
    Ok(())
}

/// The averaging constants shared by both assumption variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingData {
    pub c_a: f64,
    pub c_b: f64,
    pub window: f64,
}

/// `V(x, t, τ)` with its gradients, comparison functions and averaging data.
///
/// With `mu` unset the family is read against the plain assumptions
/// (`V̇ ≤ -q V`, `|V_τ| ≤ c_a V`); with `mu` set the right-hand sides are
/// weighted by `μ(V)` instead.
#[derive(Clone)]
pub struct LyapunovFamily {
    v: ScalarFieldFn,
    v_t: Option<ScalarFieldFn>,
    v_x: Option<FieldFn>,
    v_tau: Option<FieldFn>,
    tau_independent: bool,
    alpha1: ClassK,
    alpha2: ClassK,
    q: ParamFn,
    pub c_a: f64,
    pub c_b: f64,
    pub window: f64,
    mu: Option<MuFunction>,
}

impl fmt::Debug for LyapunovFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovFamily")
            .field("c_a", &self.c_a)
            .field("c_b", &self.c_b)
            .field("window", &self.window)
            .field("tau_independent", &self.tau_independent)
            .field("mu", &self.mu.is_some())
            .finish()
    }
}

impl LyapunovFamily {
    pub fn new(
        v: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
        alpha1: ClassK,
        alpha2: ClassK,
        q: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        data: AveragingData,
    ) -> Self {
        LyapunovFamily {
            v: Arc::new(v),
            v_t: None,
            v_x: None,
            v_tau: None,
            tau_independent: false,
            alpha1,
            alpha2,
            q: Arc::new(q),
            c_a: data.c_a,
            c_b: data.c_b,
            window: data.window,
            mu: None,
        }
    }

    pub fn with_grad_t(
        mut self,
        v_t: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.v_t = Some(Arc::new(v_t));
        self
    }

    pub fn with_grad_x(
        mut self,
        v_x: impl Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.v_x = Some(Arc::new(v_x));
        self
    }

    pub fn with_grad_tau(
        mut self,
        v_tau: impl Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.v_tau = Some(Arc::new(v_tau));
        self
    }

    /// Declares `V_τ ≡ 0`.
    pub fn tau_independent(mut self) -> Self {
        self.tau_independent = true;
        self
    }

    pub fn with_mu(mut self, mu: MuFunction) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn without_mu(mut self) -> Self {
        self.mu = None;
        self
    }

    pub fn with_c_a(mut self, c_a: f64) -> Self {
        self.c_a = c_a;
        self
    }

    pub fn with_c_b(mut self, c_b: f64) -> Self {
        self.c_b = c_b;
        self
    }

    pub(crate) fn parts(&self) -> FamilyParts {
        FamilyParts {
            v: self.v.clone(),
            tau_independent: self.tau_independent,
            q: self.q.clone(),
        }
    }

    pub fn data(&self) -> AveragingData {
        AveragingData {
            c_a: self.c_a,
            c_b: self.c_b,
            window: self.window,
        }
    }

    pub fn mu(&self) -> Option<&MuFunction> {
        self.mu.as_ref()
    }

    pub fn is_tau_independent(&self) -> bool {
        self.tau_independent
    }

    pub fn alpha1(&self) -> &ClassK {
        &self.alpha1
    }

    pub fn alpha2(&self) -> &ClassK {
        &self.alpha2
    }

    pub fn v(&self, x: &[f64], t: f64, tau: &[f64]) -> f64 {
        (self.v)(x, t, tau)
    }

    pub fn q(&self, tau: &[f64]) -> f64 {
        (self.q)(tau)
    }

    /// `μ(s)`, or `s` for plain families.
    pub fn mu_eval(&self, s: f64) -> f64 {
        match &self.mu {
            Some(m) => m.eval(s),
            None => s,
        }
    }

    pub fn grad_t(&self, x: &[f64], t: f64, tau: &[f64]) -> f64 {
        match &self.v_t {
            Some(g) => g(x, t, tau),
            None => {
                let h = fd_step(t);
                ((self.v)(x, t + h, tau) - (self.v)(x, t - h, tau)) / (2.0 * h)
            }
        }
    }

    pub fn grad_x(&self, x: &[f64], t: f64, tau: &[f64]) -> Vec<f64> {
        match &self.v_x {
            Some(g) => g(x, t, tau),
            None => central_gradient(|y| (self.v)(y, t, tau), x),
        }
    }

    pub fn grad_tau(&self, x: &[f64], t: f64, tau: &[f64]) -> Vec<f64> {
        if self.tau_independent {
            return vec![0.0; tau.len()];
        }
        match &self.v_tau {
            Some(g) => g(x, t, tau),
            None => central_gradient(|y| (self.v)(x, t, y), tau),
        }
    }

    /// `V_t + V_x f` for the frozen field at `τ`.
    pub fn frozen_derivative(&self, frozen: &FrozenFamily, x: &[f64], t: f64, tau: &[f64]) -> f64 {
        let f = frozen.eval(x, t, tau);
        self.grad_t(x, t, tau) + dot(&self.grad_x(x, t, tau), &f)
    }
}

pub(crate) struct FamilyParts {
    pub v: ScalarFieldFn,
    pub tau_independent: bool,
    pub q: ParamFn,
}

pub(crate) fn central_gradient(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    let mut y = at.to_vec();
    (0..at.len())
        .map(|i| {
            let h = fd_step(at[i]);
            y[i] = at[i] + h;
            let a = f(&y);
            y[i] = at[i] - h;
            let b = f(&y);
            y[i] = at[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

/// `ẋ = f(x, t, p(t/α))`
#[derive(Clone, Debug)]
pub struct SlowSystem {
    pub frozen: FrozenFamily,
    pub path: ParameterPath,
    pub alpha: f64,
}

impl SlowSystem {
    pub fn new(frozen: FrozenFamily, path: ParameterPath, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return config(format!("alpha must be positive and finite, got {alpha}"));
        }
        if frozen.dim_param() != path.dim() {
            return config(format!(
                "parameter dimension mismatch: field expects {}, path provides {}",
                frozen.dim_param(),
                path.dim()
            ));
        }
        Ok(SlowSystem {
            frozen,
            path,
            alpha,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        SlowSystem::new(self.frozen.clone(), self.path.clone(), alpha)
    }

    pub fn dim_state(&self) -> usize {
        self.frozen.dim_state()
    }

    /// `p(t/α)`
    pub fn tau_at(&self, t: f64) -> Vec<f64> {
        self.path.eval(t / self.alpha)
    }

    /// `f(x, t, p(t/α))`
    pub fn eval_slow_field(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let tau = self.tau_at(t);
        let v = self.frozen.eval(x, t, &tau);
        check_finite(&v, x, t)?;
        Ok(v)
    }

    /// `f(x, t, p(t/α)) + g(x, t, p(t/α)) u`
    pub fn eval_controlled(&self, x: &[f64], t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let tau = self.tau_at(t);
        let mut v = self.frozen.eval(x, t, &tau);
        if let Some(g) = self.frozen.control(x, t, &tau) {
            if g.ncols() != u.len() {
                return config(format!(
                    "control has {} components but g has {} columns",
                    u.len(),
                    g.ncols()
                ));
            }
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += (0..u.len()).map(|j| g[(i, j)] * u[j]).sum::<f64>();
            }
        } else if u.iter().any(|c| *c != 0.0) {
            return config("nonzero input supplied to a system without a control channel");
        }
        check_finite(&v, x, t)?;
        Ok(v)
    }
}

fn check_finite(v: &[f64], x: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical {
            x: x.to_vec(),
            t,
            what: format!("vector field returned {v:?}"),
        })
    }
}
