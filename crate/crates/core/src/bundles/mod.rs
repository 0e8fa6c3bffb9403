//! Ready-made systems with their Lyapunov families and known constants.
//!
//! | name | system | certificate valid for |
//! |------|--------|------------------------|
//! | `scalar` | `ẋ = x/√(1+x²) (1 - 90 cos²(t/α))` | every `α > 0` |
//! | `pendulum` | damped pendulum with slowly varying damping | every `α > 0` |
//! | `friction` | mass-spring with Stribeck friction | `α > 2 T p̄ / c_b` |
//! | `controlled-friction` | the same with a force input | ISS for `α > 4 T c_a p̄ / c_b` |
//! | `identification` | `ẋ = h(t/α) m mᵀ x`, `h ≡ -1` | every `α > 0` |
//! | `identification-varying` | the same with `h = -1.5 - 0.5 sin` | `α ≥ 2 T sup|h'| / c_b` |
//!
//! Where the model leaves functions free, defaults are shipped and checked
//! against the model's hypotheses when the bundle is built.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::certificate::{build_certificate_with, CertOptions, Certificate};
use crate::error::{config, Result};
use crate::simverify::SampleGrid;
use crate::system::{LyapunovFamily, SlowSystem};

pub mod friction;
pub mod identification;
pub mod pendulum;
pub mod scalar;

pub use friction::{
    controlled_friction_example, friction_chain_check, friction_example, FrictionParams,
};
pub use identification::{identification_example, persistency_bounds, IdentificationParams};
pub use pendulum::{pendulum_example, P2Mode, PendulumParams};
pub use scalar::scalar_example;

/// `(x, t, α) ↦ ln V♯` from a closed-form expression.
pub type ClosedFormFn = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ClosedForm {
    pub log_value: ClosedFormFn,
    /// `α ↦ ln(constructed) - ln(closed form)`; zero when both use the
    /// same exponent.
    pub log_offset: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub convention: &'static str,
}

impl ClosedForm {
    pub(crate) fn exact(
        log_value: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ClosedForm {
            log_value: Arc::new(log_value),
            log_offset: Arc::new(|_| 0.0),
            convention: "same exponent as the constructed certificate",
        }
    }
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm")
            .field("convention", &self.convention)
            .finish()
    }
}

/// Known results shipped with a bundle.
#[derive(Debug, Clone)]
pub struct Expected {
    /// `2 T c_a p̄ / c_b`
    pub threshold_ugas: f64,
    pub ugas_for_all_alpha: bool,
    /// Named constants, e.g. `("A", 10.5)`.
    pub constants: Vec<(&'static str, f64)>,
    /// `α` values at which decrease is expected to hold.
    pub test_alphas: Vec<f64>,
    pub notes: Vec<&'static str>,
}

impl Expected {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct ExampleBundle {
    pub name: &'static str,
    /// The system at its default `α`; see [`ExampleBundle::system_at`].
    pub sys: SlowSystem,
    pub family: LyapunovFamily,
    pub cert_options: CertOptions,
    pub closed_form: Option<ClosedForm>,
    pub expected: Expected,
    /// Default trajectory length for decrease checks.
    pub horizon: f64,
    /// Default radius for initial conditions and falsification boxes.
    pub radius: f64,
}

impl ExampleBundle {
    pub fn system_at(&self, alpha: f64) -> Result<SlowSystem> {
        self.sys.with_alpha(alpha)
    }

    pub fn certificate(&self, alpha: f64) -> Result<Certificate> {
        build_certificate_with(&self.family, &self.system_at(alpha)?, &self.cert_options)
    }

    pub fn sample_grid(&self, samples: usize, seed: u64) -> SampleGrid {
        SampleGrid::new(self.radius, samples, seed)
    }
}

pub const NAMES: [&str; 6] = [
    "scalar",
    "pendulum",
    "friction",
    "controlled-friction",
    "identification",
    "identification-varying",
];

/// A bundle with its shipped defaults.
pub fn by_name(name: &str) -> Result<ExampleBundle> {
    match name {
        "scalar" => scalar_example(),
        "pendulum" => pendulum_example(&PendulumParams::default()),
        "friction" => friction_example(&FrictionParams::default()),
        "controlled-friction" => controlled_friction_example(&FrictionParams::default()),
        "identification" => identification_example(&IdentificationParams::default()),
        "identification-varying" => identification_example(&IdentificationParams::varying()),
        other => config(format!(
            "unknown example '{other}'; expected one of {}",
            NAMES.join(", ")
        )),
    }
}

/// `∫_{s-T}^s ∫_r^s (a + b sin l) dl dr`, i.e. the double average of an
/// affine sine, in closed form.
pub fn affine_sine_double_integral(a: f64, b: f64, window: f64, s: f64) -> f64 {
    a * window * window / 2.0 + b * (-window * s.cos() + s.sin() - (s - window).sin())
}

pub(crate) fn check_range(
    what: &str,
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    span: (f64, f64),
    samples: usize,
) -> Result<()> {
    for i in 0..=samples {
        let r = span.0 + (span.1 - span.0) * i as f64 / samples as f64;
        let v = f(r);
        if !(v >= lo && v <= hi) {
            return config(format!("{what} = {v} at {r} leaves [{lo}, {hi}]"));
        }
    }
    Ok(())
}

pub(crate) const TWO_PI: f64 = 2.0 * PI;
