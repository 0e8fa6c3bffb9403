//! Double averages of the decay rate along the slow signal.
//!
//! For `Θ = q ∘ p` and a window `T`, the certificate exponent is built from
//!
//! ```text
//! D(t) = ∫_{t-T}^t ∫_s^t Θ(l) dl ds = ∫_{t-T}^t (r - t + T) Θ(r) dr
//! ```
//!
//! which satisfies `|D(t)| ≤ T² M̄ / 2` whenever `|Θ| ≤ M̄`, and
//! `D'(t) = T Θ(t) - ∫_{t-T}^t Θ(r) dr`. Only the single-integral form is
//! evaluated here; the nested form lives in the test oracles.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, Error, Result};
use crate::quad::Simpson;
use crate::system::{LyapunovFamily, ParameterPath, RealFn, SupGrid};

/// Largest exponent whose `exp` is finite in `f64`.
pub const MAX_EXPONENT: f64 = 709.782712893384;

#[derive(Clone)]
pub struct AveragedSignal {
    theta: RealFn,
    m_bar: f64,
    window: f64,
    quad: Simpson,
}

impl fmt::Debug for AveragedSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AveragedSignal")
            .field("m_bar", &self.m_bar)
            .field("window", &self.window)
            .finish()
    }
}

impl AveragedSignal {
    pub fn new(
        theta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m_bar: f64,
        window: f64,
    ) -> Result<Self> {
        Self::from_arc(Arc::new(theta), m_bar, window)
    }

    fn from_arc(theta: RealFn, m_bar: f64, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return config(format!("averaging window must be positive, got {window}"));
        }
        if !(m_bar >= 0.0) {
            return config(format!("M̄ must be nonnegative, got {m_bar}"));
        }
        Ok(AveragedSignal {
            theta,
            m_bar,
            window,
            quad: Simpson::default(),
        })
    }

    /// `Θ = q ∘ p` for a family and path. `M̄` is taken from `m_bar` when
    /// given, otherwise estimated on `grid` (default: the path's sup grid).
    pub fn from_family(
        family: &LyapunovFamily,
        path: &ParameterPath,
        m_bar: Option<f64>,
        grid: Option<SupGrid>,
    ) -> Result<Self> {
        let q = family.parts().q;
        let p = path.clone();
        let theta: RealFn = Arc::new(move |l| q(&p.eval(l)));
        let m_bar = match m_bar {
            Some(m) => m,
            None => {
                let grid = match grid {
                    Some(g) => g,
                    None => path.sup_grid()?,
                };
                let th = theta.clone();
                grid.sup(|l| th(l).abs())?
            }
        };
        Self::from_arc(theta, m_bar, family.window)
    }

    pub fn with_quadrature(mut self, quad: Simpson) -> Self {
        self.quad = quad;
        self
    }

    pub fn theta(&self, l: f64) -> f64 {
        (self.theta)(l)
    }

    pub fn m_bar(&self) -> f64 {
        self.m_bar
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `∫_{t-T}^t Θ(r) dr`
    pub fn window_integral(&self, t: f64) -> Result<f64> {
        self.quad.integrate(|r| (self.theta)(r), t - self.window, t)
    }

    /// `∫_{t-T}^t ∫_s^t Θ(l) dl ds`, via `∫_{t-T}^t (r - t + T) Θ(r) dr`.
    pub fn double_avg_integral(&self, t: f64) -> Result<f64> {
        let w = self.window;
        self.quad
            .integrate(|r| (r - t + w) * (self.theta)(r), t - w, t)
    }

    /// `T Θ(t) - ∫_{t-T}^t Θ(r) dr`
    pub fn double_avg_time_derivative(&self, t: f64) -> Result<f64> {
        Ok(self.window * self.theta(t) - self.window_integral(t)?)
    }

    /// `T² M̄ / 2`
    pub fn envelope_bound(&self) -> f64 {
        self.window * self.window * self.m_bar / 2.0
    }

    /// `(α/T) D(t/α)`, the exponent of the gain.
    pub fn exp_gain_log(&self, t: f64, alpha: f64) -> Result<f64> {
        Ok(alpha / self.window * self.double_avg_integral(t / alpha)?)
    }

    /// `E(t, α) = exp((α/T) D(t/α))`.
    pub fn exp_gain(&self, t: f64, alpha: f64) -> Result<f64> {
        let exponent = self.exp_gain_log(t, alpha)?;
        if exponent > MAX_EXPONENT {
            return Err(Error::Overflow { exponent });
        }
        Ok(exponent.exp())
    }

    /// `α T M̄ / 2`; `E` lies in `[e^{-b}, e^{b}]` for this `b`.
    pub fn gain_log_bound(&self, alpha: f64) -> f64 {
        alpha * self.window * self.m_bar / 2.0
    }
}
