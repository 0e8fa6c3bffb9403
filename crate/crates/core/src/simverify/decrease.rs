//! Certificate decrease along trajectories and on sampled grids.
//!
//! Along a trajectory the test is the one-sided difference
//!
//! ```text
//! (V♯(t_{k+1}) - V♯(t_k)) / (t_{k+1} - t_k) ≤ -c V̂(t_k) + margin (1 + V̂(t_k))
//! ```
//!
//! with `c` the decrease coefficient. Both sides are divided by `V♯(t_k)`
//! before comparing, which leaves the inequality unchanged but keeps the
//! values finite when the gain is astronomically large. Witnesses therefore
//! carry the rescaled sides.
//!
//! The tolerance also absorbs the integrator's own error. A state known to
//! `δx = atol + rtol |x|` moves `V♯` by up to `E |V̂_x| δx` at each end of a
//! segment, which is what a difference quotient can resolve. Without this
//! term, states that have decayed below `atol` are pure noise and fail
//! spuriously.

use rayon::prelude::*;

use crate::certificate::Certificate;
use crate::error::Result;
use crate::report::{merge_all, Condition, ViolationReport};
use crate::system::norm;

use super::ode::Trajectory;
use super::sampling::{sample_points, SampleGrid};

/// `ln V♯` at every knot of `traj`.
pub fn certificate_logs(cert: &Certificate, traj: &Trajectory) -> Result<Vec<f64>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, x)| cert.eval_certificate_log(x, *t))
        .collect()
}

/// Fills `traj.cert_values` with `V♯`; values beyond `f64` range become `+∞`.
pub fn attach_certificate(cert: &Certificate, traj: &mut Trajectory) -> Result<()> {
    let logs = certificate_logs(cert, traj)?;
    traj.cert_values = Some(logs.into_iter().map(f64::exp).collect());
    Ok(())
}

pub fn check_decrease_along(
    cert: &Certificate,
    traj: &Trajectory,
    margin_tol: f64,
) -> Result<ViolationReport> {
    let logs = certificate_logs(cert, traj)?;
    let log_c = cert.log_decrease_coeff();
    let mut rep = ViolationReport::new(Condition::Decrease);
    for k in 0..traj.len().saturating_sub(1) {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let dt = t1 - t0;
        let x = &traj.states[k];
        let point = || [&[t0][..], x].concat();
        let v_hat = cert.v_hat(x, t0);
        let (l0, l1) = (logs[k], logs[k + 1]);
        if l0 == f64::NEG_INFINITY {
            // V♯(t_k) = 0: compare unscaled
            let lhs = l1.exp() / dt;
            rep.record_with_tol(point, lhs, 0.0, margin_tol);
            continue;
        }
        let lhs = (l1 - l0).exp_m1() / dt;
        let gain_log = l0 - v_hat.ln();
        let rhs = -(log_c - gain_log).exp();
        let tol = margin_tol * (v_hat.ln_1p() - l0).exp() + state_noise(cert, traj, k, v_hat);
        rep.record_with_tol(point, lhs, rhs, tol);
    }
    Ok(rep)
}

/// Relative error of `(V♯_{k+1} - V♯_k) / (V♯_k dt)` implied by the
/// integration tolerances.
pub(crate) fn state_noise(cert: &Certificate, traj: &Trajectory, k: usize, v_hat: f64) -> f64 {
    let dt = traj.times[k + 1] - traj.times[k];
    let t = traj.times[k];
    let tau = cert.tau_at(t);
    let spread: f64 = [k, k + 1]
        .iter()
        .map(|&j| {
            let x = &traj.states[j];
            let dx = traj.atol + traj.rtol * norm(x);
            norm(&cert.family().grad_x(x, t, &tau)) * dx
        })
        .sum();
    spread / (v_hat * dt)
}

/// Pointwise `V♯' ≤ -c V̂` on a sampled `(x, t)` grid, compared after
/// dividing by the gain `E(t, α)`.
pub fn check_decrease_grid(cert: &Certificate, grid: &SampleGrid) -> Result<ViolationReport> {
    let log_c = cert.log_decrease_coeff();
    grid_check(cert, grid, |x, t| {
        let lhs = cert.gain_free_derivative(x, t, None)?;
        let rhs = -(log_c - cert.gain_log(t)?).exp() * cert.v_hat(x, t);
        Ok((lhs, rhs))
    })
}

/// Gated decrease `V♯_t + V♯_x (f + g u) ≤ -(c_b / 4T) E V̂` with `u` on the
/// boundary of the gate, in the direction that hurts most. Compared after
/// dividing by `E`.
pub fn check_iss_gated_decrease(cert: &Certificate, grid: &SampleGrid) -> Result<ViolationReport> {
    let fam = cert.family();
    let coeff = fam.c_b / (4.0 * fam.window);
    grid_check(cert, grid, |x, t| {
        let u = cert.worst_case_input(x, t)?;
        let lhs = cert.gain_free_derivative(x, t, Some(&u))?;
        Ok((lhs, -coeff * cert.v_hat(x, t)))
    })
}

fn grid_check(
    cert: &Certificate,
    grid: &SampleGrid,
    sides: impl Fn(&[f64], f64) -> Result<(f64, f64)> + Sync,
) -> Result<ViolationReport> {
    let points = sample_points(grid, cert.system(), cert.family().window);
    let parts: Vec<Result<ViolationReport>> = points
        .par_chunks(1024)
        .map(|chunk| {
            let mut rep = ViolationReport::new(Condition::Decrease);
            for p in chunk {
                let (lhs, rhs) = sides(&p.x, p.t)?;
                rep.record(|| [&p.x[..], &[p.t]].concat(), lhs, rhs);
            }
            Ok(rep)
        })
        .collect();
    Ok(merge_all(
        Condition::Decrease,
        parts.into_iter().collect::<Result<Vec<_>>>()?,
    ))
}
