//! The strict Lyapunov certificate for `ẋ = f(x, t, p(t/α))` and its ISS
//! variant for `ẋ = f + g u`.
//!
//! With `V̂(x, t) = V(x, t, p(t/α))` and the gain `E(t, α)` from
//! [`AveragedSignal::exp_gain`], the certificate is `V♯ = E · V̂`. Above the
//! threshold `α > 2 T c_a p̄ / c_b` it decreases at least like
//! `-(c_b / 2T) e^{-αTM̄/2} V̂`; above twice that threshold, inputs inside the
//! gate `|u| ≤ χ(|x|)` keep a decrease of `-(c_b / 4T) E V̂`.
//!
//! Gains grow like `e^{αTM̄/2}`, so values are assembled in log space and
//! only exponentiated on request.

use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::averaging::{AveragedSignal, MAX_EXPONENT};
use crate::error::{config, Error, Result};
use crate::report::{merge_all, Condition, ViolationReport};
use crate::simverify::sampling::{sample_points, SampleGrid};
use crate::system::{dot, norm, LyapunovFamily, SlowSystem, SupGrid};

/// Knobs for [`build_certificate_with`].
#[derive(Debug, Clone, Default)]
pub struct CertOptions {
    /// Exact `M̄` with `|q(p(·))| ≤ M̄`; estimated when absent.
    pub m_bar: Option<f64>,
    /// Grid for estimating `M̄`; the path's sup grid when absent.
    pub sup_grid: Option<SupGrid>,
}

/// Emitted when `α` does not exceed the UGAS threshold. The certificate is
/// still evaluable; its decrease is simply not guaranteed.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdWarning {
    pub alpha: f64,
    pub threshold: f64,
}

impl fmt::Display for ThresholdWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha = {} does not exceed the threshold {}; decrease is not guaranteed",
            self.alpha, self.threshold
        )
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    family: LyapunovFamily,
    sys: SlowSystem,
    signal: AveragedSignal,
    p_bar: f64,
    threshold_ugas: f64,
    threshold_iss: f64,
    warning: Option<ThresholdWarning>,
}

pub fn build_certificate(family: &LyapunovFamily, sys: &SlowSystem) -> Result<Certificate> {
    build_certificate_with(family, sys, &CertOptions::default())
}

pub fn build_certificate_with(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    opts: &CertOptions,
) -> Result<Certificate> {
    if !(family.c_b > 0.0) {
        return config(format!("c_b must be positive, got {}", family.c_b));
    }
    if !(family.window > 0.0) {
        return config(format!("T must be positive, got {}", family.window));
    }
    if !(family.c_a >= 0.0) {
        return config(format!("c_a must be nonnegative, got {}", family.c_a));
    }
    if family.mu().is_some() {
        return config("family carries a μ weight; apply transform_family first");
    }
    let p_bar = sys.path.p_bar()?;
    let signal = AveragedSignal::from_family(family, &sys.path, opts.m_bar, opts.sup_grid)?;
    let threshold_ugas = 2.0 * family.window * family.c_a * p_bar / family.c_b;
    let threshold_iss = 2.0 * threshold_ugas;
    let warning = (sys.alpha <= threshold_ugas).then_some(ThresholdWarning {
        alpha: sys.alpha,
        threshold: threshold_ugas,
    });
    Ok(Certificate {
        family: family.clone(),
        sys: sys.clone(),
        signal,
        p_bar,
        threshold_ugas,
        threshold_iss,
        warning,
    })
}

impl Certificate {
    pub fn alpha(&self) -> f64 {
        self.sys.alpha
    }

    pub fn family(&self) -> &LyapunovFamily {
        &self.family
    }

    pub fn system(&self) -> &SlowSystem {
        &self.sys
    }

    pub fn signal(&self) -> &AveragedSignal {
        &self.signal
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }

    pub fn m_bar(&self) -> f64 {
        self.signal.m_bar()
    }

    /// `2 T c_a p̄ / c_b`
    pub fn threshold_ugas(&self) -> f64 {
        self.threshold_ugas
    }

    /// `4 T c_a p̄ / c_b`
    pub fn threshold_iss(&self) -> f64 {
        self.threshold_iss
    }

    pub fn warning(&self) -> Option<&ThresholdWarning> {
        self.warning.as_ref()
    }

    /// `α T M̄ / 2`
    pub fn gain_log_bound(&self) -> f64 {
        self.signal.gain_log_bound(self.sys.alpha)
    }

    /// `ln((c_b / 2T) e^{-αTM̄/2})`
    pub fn log_decrease_coeff(&self) -> f64 {
        (self.family.c_b / (2.0 * self.family.window)).ln() - self.gain_log_bound()
    }

    /// `(c_b / 2T) e^{-αTM̄/2}`; may underflow to zero for very large `α`.
    pub fn decrease_coeff(&self) -> f64 {
        self.log_decrease_coeff().exp()
    }

    pub fn hat_alpha1(&self, s: f64) -> f64 {
        (-self.gain_log_bound()).exp() * self.family.alpha1().eval(s)
    }

    pub fn hat_alpha2(&self, s: f64) -> f64 {
        self.gain_log_bound().exp() * self.family.alpha2().eval(s)
    }

    /// `(ln α̂₁(s), ln α̂₂(s))`
    pub fn hat_alpha_logs(&self, s: f64) -> (f64, f64) {
        let b = self.gain_log_bound();
        (
            self.family.alpha1().eval(s).ln() - b,
            self.family.alpha2().eval(s).ln() + b,
        )
    }

    pub fn tau_at(&self, t: f64) -> Vec<f64> {
        self.sys.tau_at(t)
    }

    /// `V̂(x, t) = V(x, t, p(t/α))`
    pub fn v_hat(&self, x: &[f64], t: f64) -> f64 {
        self.family.v(x, t, &self.tau_at(t))
    }

    /// `ln E(t, α)`
    pub fn gain_log(&self, t: f64) -> Result<f64> {
        self.signal.exp_gain_log(t, self.sys.alpha)
    }

    /// `ln V♯(t, x)`; `-∞` where `V̂ = 0`.
    pub fn eval_certificate_log(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = self.v_hat(x, t);
        if v < 0.0 || v.is_nan() {
            return Err(Error::Numerical {
                x: x.to_vec(),
                t,
                what: format!("V = {v} is not a nonnegative number"),
            });
        }
        Ok(self.gain_log(t)? + v.ln())
    }

    /// `V♯(t, x)`; overflow is an error, see [`Self::eval_certificate_log`].
    pub fn eval_certificate(&self, x: &[f64], t: f64) -> Result<f64> {
        let log = self.eval_certificate_log(x, t)?;
        if log > MAX_EXPONENT {
            return Err(Error::Overflow { exponent: log });
        }
        Ok(log.exp())
    }

    /// Time derivative of `V̂` along `ẋ = f + g u`:
    /// `V_t + V_x (f + g u) + V_τ p'(t/α) / α`.
    pub fn v_hat_derivative(&self, x: &[f64], t: f64, u: Option<&[f64]>) -> Result<f64> {
        let alpha = self.sys.alpha;
        let tau = self.tau_at(t);
        let field = match u {
            Some(u) => self.sys.eval_controlled(x, t, u)?,
            None => self.sys.eval_slow_field(x, t)?,
        };
        let fam = &self.family;
        let mut d = fam.grad_t(x, t, &tau) + dot(&fam.grad_x(x, t, &tau), &field);
        if !fam.is_tau_independent() {
            let dp = self.sys.path.derivative(t / alpha);
            d += dot(&fam.grad_tau(x, t, &tau), &dp) / alpha;
        }
        Ok(d)
    }

    /// `V♯' / E`: `V̂' + (Θ(t/α) - (1/T) ∫_{t/α-T}^{t/α} Θ) V̂`.
    pub fn gain_free_derivative(&self, x: &[f64], t: f64, u: Option<&[f64]>) -> Result<f64> {
        let s = t / self.sys.alpha;
        let v = self.v_hat(x, t);
        let rate = self.signal.theta(s) - self.signal.window_integral(s)? / self.signal.window();
        Ok(self.v_hat_derivative(x, t, u)? + rate * v)
    }

    /// `d/dt V♯` along the uncontrolled slow flow.
    pub fn certificate_derivative(&self, x: &[f64], t: f64) -> Result<f64> {
        self.scale_by_gain(self.gain_free_derivative(x, t, None)?, t)
    }

    /// `V♯_t + V♯_x (f + g u)`.
    pub fn controlled_derivative(&self, x: &[f64], t: f64, u: &[f64]) -> Result<f64> {
        self.scale_by_gain(self.gain_free_derivative(x, t, Some(u))?, t)
    }

    fn scale_by_gain(&self, value: f64, t: f64) -> Result<f64> {
        if value == 0.0 {
            return Ok(0.0);
        }
        let log = self.gain_log(t)? + value.abs().ln();
        if log > MAX_EXPONENT {
            return Err(Error::Overflow { exponent: log });
        }
        Ok(value.signum() * log.exp())
    }

    /// `χ(s) = c_b √α₁(s) / (2 T c_a² (1 + α₁(s)^{1/4}))`
    pub fn iss_gate(&self, s: f64) -> Result<f64> {
        iss_gate(&self.family, s)
    }

    /// Input on the gate boundary aligned with `(V_x g)ᵀ`, the direction
    /// that increases `V♯` fastest.
    pub fn worst_case_input(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let tau = self.tau_at(t);
        let g = match self.sys.frozen.control(x, t, &tau) {
            Some(g) => g,
            None => return config("system has no control channel"),
        };
        let chi = self.iss_gate(norm(x))?;
        let vx = DVector::from_vec(self.family.grad_x(x, t, &tau));
        let w = g.transpose() * vx;
        let wn = w.norm();
        let m = g.ncols();
        if wn == 0.0 {
            let mut u = vec![0.0; m];
            if m > 0 {
                u[0] = chi;
            }
            return Ok(u);
        }
        Ok(w.iter().map(|c| chi * c / wn).collect())
    }
}

/// The ISS gate for a family; needs `c_a > 0`.
pub fn iss_gate(family: &LyapunovFamily, s: f64) -> Result<f64> {
    if !(family.c_a > 0.0) {
        return config(
            "the ISS growth conditions need a positive c_a, even when V does not depend on τ",
        );
    }
    let a1 = family.alpha1().eval(s);
    Ok(family.c_b * a1.sqrt()
        / (2.0 * family.window * family.c_a * family.c_a * (1.0 + a1.powf(0.25))))
}

/// Samples `|V_x| ≤ c_a √α₁(|x|)` (A5) and `|g| ≤ c_a (1 + α₁(|x|)^{1/4})`
/// (A6) with `τ = p(t/α)` at the system's `α`. `|g|` is the spectral norm.
pub fn check_iss_growth(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    grid: &SampleGrid,
) -> Result<Vec<ViolationReport>> {
    if !sys.frozen.has_control() {
        return config("system has no control channel");
    }
    let points = sample_points(grid, sys, family.window);
    let c_a = family.c_a;
    let parts: Vec<(ViolationReport, ViolationReport)> = points
        .par_chunks(1024)
        .map(|chunk| {
            let mut a5 = ViolationReport::new(Condition::A5);
            let mut a6 = ViolationReport::new(Condition::A6);
            for p in chunk {
                let tau = sys.tau_at(p.t);
                let a1 = family.alpha1().eval(norm(&p.x));
                let point = || [p.x.as_slice(), &[p.t]].concat();
                let vx = norm(&family.grad_x(&p.x, p.t, &tau));
                a5.record(point, vx, c_a * a1.sqrt());
                let g = sys.frozen.control(&p.x, p.t, &tau).expect("checked above");
                let gn = g.singular_values().iter().cloned().fold(0.0, f64::max);
                a6.record(point, gn, c_a * (1.0 + a1.powf(0.25)));
            }
            (a5, a6)
        })
        .collect();
    let (a5, a6): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(vec![
        merge_all(Condition::A5, a5),
        merge_all(Condition::A6, a6),
    ])
}

/// [`check_iss_growth`] repeated over several `α`, since the growth
/// conditions are required for every `α` but can only be sampled.
pub fn check_iss_growth_over(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    grid: &SampleGrid,
    alphas: &[f64],
) -> Result<Vec<ViolationReport>> {
    let mut a5 = ViolationReport::new(Condition::A5);
    let mut a6 = ViolationReport::new(Condition::A6);
    for &alpha in alphas {
        let reps = check_iss_growth(family, &sys.with_alpha(alpha)?, grid)?;
        let mut it = reps.into_iter();
        a5.merge(it.next().expect("A5"));
        a6.merge(it.next().expect("A6"));
    }
    Ok(vec![a5, a6])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{AveragingData, ClassK, FrozenFamily, ParameterPath};
    use nalgebra::DMatrix;

    fn quadratic_family(c_a: f64, c_b: f64, window: f64) -> LyapunovFamily {
        LyapunovFamily::new(
            |x, _t, _tau| x[0] * x[0],
            ClassK::quadratic(1.0),
            ClassK::quadratic(1.0),
            |tau| tau[0],
            AveragingData { c_a, c_b, window },
        )
        .with_grad_x(|x, _t, _tau| vec![2.0 * x[0]])
        .with_grad_t(|_, _, _| 0.0)
        .tau_independent()
    }

    fn decay_system(alpha: f64) -> SlowSystem {
        let frozen = FrozenFamily::new(1, 1, |x, _t, tau| vec![-0.5 * tau[0] * x[0]])
            .with_control(1, |_x, _t, _tau| DMatrix::from_element(1, 1, 1.0));
        let path = ParameterPath::new(1, |r| vec![1.0 + 0.5 * r.sin()])
            .with_derivative(|r| vec![0.5 * r.cos()])
            .with_period(std::f64::consts::TAU)
            .with_p_bar(0.5);
        SlowSystem::new(frozen, path, alpha).unwrap()
    }

    #[test]
    fn thresholds() {
        let fam = quadratic_family(1.0, 2.0, 3.0);
        let cert = build_certificate(&fam, &decay_system(10.0)).unwrap();
        assert_eq!(cert.threshold_ugas(), 2.0 * 3.0 * 1.0 * 0.5 / 2.0);
        assert_eq!(cert.threshold_iss(), 2.0 * cert.threshold_ugas());
        assert!(cert.warning().is_none());
        let low = build_certificate(&fam, &decay_system(1.0)).unwrap();
        assert!(low.warning().is_some());
    }

    #[test]
    fn frozen_path_has_zero_threshold() {
        let fam = quadratic_family(5.0, 1.0, 1.0);
        let frozen = decay_system(1.0).frozen;
        let sys = SlowSystem::new(frozen, ParameterPath::constant(vec![1.0]), 0.01).unwrap();
        let cert = build_certificate(&fam, &sys).unwrap();
        assert_eq!(cert.threshold_ugas(), 0.0);
        assert!(cert.warning().is_none());
    }

    #[test]
    fn invalid_constants() {
        let sys = decay_system(1.0);
        assert!(build_certificate(&quadratic_family(1.0, 0.0, 1.0), &sys).is_err());
        assert!(build_certificate(&quadratic_family(1.0, 1.0, 0.0), &sys).is_err());
    }

    #[test]
    fn origin_and_log_consistency() {
        let cert = build_certificate(&quadratic_family(1.0, 2.0, 3.0), &decay_system(4.0)).unwrap();
        assert_eq!(cert.eval_certificate(&[0.0], 2.0).unwrap(), 0.0);
        assert_eq!(cert.certificate_derivative(&[0.0], 2.0).unwrap(), 0.0);
        let x = [1.3];
        let lin = cert.eval_certificate(&x, 0.7).unwrap();
        let log = cert.eval_certificate_log(&x, 0.7).unwrap();
        assert!((log.exp() - lin).abs() <= 1e-12 * lin);
        let (l1, l2) = cert.hat_alpha_logs(1.3);
        assert!(l1 <= log && log <= l2);
        assert!(cert.decrease_coeff() > 0.0);
    }

    #[test]
    fn gate_values() {
        let fam = quadratic_family(1.0, 1.0, 1.0);
        assert_eq!(iss_gate(&fam, 0.0).unwrap(), 0.0);
        for s in [0.1f64, 1.0, 4.0, 9.0] {
            let expect = s / (2.0 * (1.0 + s.sqrt()));
            assert!((iss_gate(&fam, s).unwrap() - expect).abs() < 1e-14);
        }
        assert!(iss_gate(&quadratic_family(0.0, 1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn worst_case_input_sits_on_gate() {
        let cert =
            build_certificate(&quadratic_family(1.0, 2.0, 3.0), &decay_system(40.0)).unwrap();
        let u = cert.worst_case_input(&[2.0], 1.0).unwrap();
        assert!((u[0] - cert.iss_gate(2.0).unwrap()).abs() < 1e-15);
        let u = cert.worst_case_input(&[-2.0], 1.0).unwrap();
        assert!((u[0] + cert.iss_gate(2.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn growth_checks_need_control() {
        let fam = quadratic_family(1.0, 1.0, 1.0);
        let sys = SlowSystem::new(
            FrozenFamily::new(1, 1, |x, _, _| vec![-x[0]]),
            ParameterPath::constant(vec![0.0]),
            1.0,
        )
        .unwrap();
        assert!(check_iss_growth(&fam, &sys, &SampleGrid::new(1.0, 10, 0)).is_err());
    }

    #[test]
    fn zero_control_passes_a6() {
        let fam = quadratic_family(0.5, 1.0, 1.0);
        let frozen = FrozenFamily::new(1, 1, |x, _, _| vec![-x[0]])
            .with_control(1, |_, _, _| DMatrix::zeros(1, 1));
        let sys = SlowSystem::new(frozen, ParameterPath::constant(vec![0.0]), 1.0).unwrap();
        let reps = check_iss_growth(&fam, &sys, &SampleGrid::new(5.0, 2000, 3)).unwrap();
        assert!(reps[1].passed());
        assert_eq!(reps[1].samples_tested, 2000);
    }
}
