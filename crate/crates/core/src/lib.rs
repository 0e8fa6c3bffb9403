//! Explicit strict Lyapunov certificates for slowly time-varying systems
//!
//! ```text
//! ẋ = f(x, t, p(t/α))
//! ```
//!
//! Given a family `V(x, t, τ)` of Lyapunov-like functions for the frozen
//! dynamics `ẋ = f(x, t, τ)` whose decay rate `q(τ)` is only positive on
//! average along the slow signal `p`, this crate builds the certificate
//!
//! ```text
//! V♯(t, x) = exp((α/T) ∫_{t/α-T}^{t/α} ∫_s^{t/α} q(p(l)) dl ds) · V(x, t, p(t/α))
//! ```
//!
//! together with its admissible time-scale threshold `α > 2 T c_a p̄ / c_b`,
//! the ISS variant for control-affine systems, and the `k(r)` change of
//! coordinates that turns a `μ`-weighted family into a plain one.
//!
//! Every hypothesis and every conclusion can be falsified numerically:
//! [`simverify`] integrates trajectories, samples the assumptions on
//! low-discrepancy grids and checks certificate decrease along the flow.
//! Sampling never proves anything; a clean report only means no violation was
//! found among the tested points.
//!
//! Worked systems (a scalar system that is not exponentially stable, a damped
//! pendulum, a mass-spring system with friction, and an identification model)
//! ship ready to use in [`bundles`].

// `!(a > b)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod bundles;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod expr;
pub mod quad;
pub mod report;
pub mod simverify;
pub mod system;
pub mod transform;

pub use averaging::AveragedSignal;
pub use certificate::{build_certificate, CertOptions, Certificate};
pub use error::{Error, Result};
pub use report::{Condition, ViolationReport, Witness};
pub use system::{
    AveragingData, ClassK, FrozenFamily, LyapunovFamily, ParameterPath, SlowSystem, SupGrid,
};
pub use transform::{transform_family, MuFunction};
