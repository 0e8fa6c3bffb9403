//! Seeded trajectory batches and the empirical search for the smallest
//! time-scale `α` at which the certificate decreases.

use rayon::prelude::*;

use crate::certificate::{build_certificate_with, CertOptions};
use crate::error::{Error, Result};
use crate::report::{Condition, ViolationReport};
use crate::system::{LyapunovFamily, SlowSystem};

use super::decrease::check_decrease_along;
use super::ode::{integrate, OdeOptions};
use super::sampling::halton;
use crate::certificate::Certificate;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub t0: f64,
    pub x0: Vec<f64>,
}

/// `count` initial conditions with `|x0|∞ ≤ radius` and `t0 ∈ [0, t0_max]`.
pub fn seed_batch(
    dim: usize,
    count: usize,
    radius: f64,
    t0_max: f64,
    seed: u64,
) -> Vec<InitialCondition> {
    halton(dim + 1, count, seed)
        .into_iter()
        .map(|u| InitialCondition {
            t0: t0_max * u[dim],
            x0: u[..dim].iter().map(|v| radius * (2.0 * v - 1.0)).collect(),
        })
        .collect()
}

/// Outcome of a batch of decrease checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub report: ViolationReport,
    /// Initial conditions whose integration aborted (blow-up, step collapse
    /// or step budget); each counts as a failed check.
    pub aborted: Vec<(InitialCondition, Error)>,
}

impl BatchOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.aborted.is_empty()
    }
}

/// Integrates every initial condition over `horizon` and checks decrease
/// along each trajectory. Trajectories run in parallel; reports are merged
/// in batch order.
pub fn check_batch(
    cert: &Certificate,
    batch: &[InitialCondition],
    horizon: f64,
    margin_tol: f64,
    ode: &OdeOptions,
) -> Result<BatchOutcome> {
    let results: Vec<Result<std::result::Result<ViolationReport, Error>>> = batch
        .par_iter()
        .map(
            |ic| match integrate(cert.system(), &ic.x0, ic.t0, ic.t0 + horizon, None, ode) {
                Ok(traj) => Ok(Ok(check_decrease_along(cert, &traj, margin_tol)?)),
                Err(e @ Error::Integration { .. }) => Ok(Err(e)),
                Err(e) => Err(e),
            },
        )
        .collect();
    let mut report = ViolationReport::new(Condition::Decrease);
    let mut aborted = Vec::new();
    for (ic, r) in batch.iter().zip(results) {
        match r? {
            Ok(rep) => report.merge(rep),
            Err(e) => aborted.push((ic.clone(), e)),
        }
    }
    Ok(BatchOutcome { report, aborted })
}

#[derive(Debug, Clone)]
pub struct AlphaSearch {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    pub batch: Vec<InitialCondition>,
    pub horizon: f64,
    pub margin_tol: f64,
    pub ode: OdeOptions,
    pub cert: CertOptions,
}

impl AlphaSearch {
    pub fn new(lo: f64, hi: f64, batch: Vec<InitialCondition>, horizon: f64) -> Self {
        AlphaSearch {
            lo,
            hi,
            iterations: 20,
            batch,
            horizon,
            margin_tol: 1e-6,
            ode: OdeOptions::default(),
            cert: CertOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStarReport {
    /// Smallest tested `α` known to pass; `lo` when the check passes there.
    pub empirical: f64,
    /// Largest tested `α` known to fail, if any.
    pub failing_below: Option<f64>,
    /// `2 T c_a p̄ / c_b`
    pub analytic: f64,
    /// Every `(α, passed)` evaluated, in order.
    pub history: Vec<(f64, bool)>,
}

impl AlphaStarReport {
    /// Sufficiency of the analytic threshold predicts `empirical ≤ analytic`
    /// (up to the bisection resolution).
    pub fn consistent(&self) -> bool {
        self.failing_below
            .is_none_or(|f| f <= self.analytic * (1.0 + 1e-12))
    }
}

/// Log-scale bisection on "every trajectory of the batch passes the
/// decrease check".
pub fn estimate_alpha_star(
    family: &LyapunovFamily,
    template: &SlowSystem,
    search: &AlphaSearch,
) -> Result<AlphaStarReport> {
    if !(search.lo > 0.0 && search.hi > search.lo) {
        return Err(Error::Config(format!(
            "need 0 < alpha_lo < alpha_hi, got [{}, {}]",
            search.lo, search.hi
        )));
    }
    let mut history = Vec::new();
    let mut analytic = f64::NAN;
    let mut passes = |alpha: f64| -> Result<bool> {
        let cert = build_certificate_with(family, &template.with_alpha(alpha)?, &search.cert)?;
        analytic = cert.threshold_ugas();
        let ok = check_batch(
            &cert,
            &search.batch,
            search.horizon,
            search.margin_tol,
            &search.ode,
        )?
        .passed();
        history.push((alpha, ok));
        Ok(ok)
    };
    let at_hi = passes(search.hi)?;
    let at_lo = passes(search.lo)?;
    let (empirical, failing_below) = match (at_lo, at_hi) {
        (true, true) => (search.lo, None),
        (true, false) => {
            return Err(Error::NonMonotone {
                passes_at: search.lo,
                fails_at: search.hi,
            })
        }
        (false, false) => {
            return Err(Error::Config(format!(
                "decrease check fails on the whole interval [{}, {}]",
                search.lo, search.hi
            )))
        }
        (false, true) => {
            let (mut lo, mut hi) = (search.lo, search.hi);
            for _ in 0..search.iterations {
                let mid = (lo * hi).sqrt();
                if passes(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (hi, Some(lo))
        }
    };
    Ok(AlphaStarReport {
        empirical,
        failing_below,
        analytic,
        history,
    })
}
