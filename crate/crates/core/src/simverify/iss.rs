//! Disturbance simulation against the ISS gate.

use crate::certificate::Certificate;
use crate::error::{config, Result};
use crate::report::{Condition, ViolationReport};
use crate::system::norm;

use super::decrease::{certificate_logs, state_noise};
use super::ode::{integrate, InputSignal, OdeOptions, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct IssReport {
    pub trajectory: Trajectory,
    /// Segments where `|u| ≤ χ(|x|)` held at both ends; each must show a
    /// decrease of `V♯`.
    pub gated: ViolationReport,
    /// `max |x(t)|` over the last third of the horizon.
    pub tail_bound: f64,
    /// `max |u|` seen along the trajectory.
    pub input_sup: f64,
    /// Smallest `s` with `χ(s) ≥ input_sup`; outside this ball the gate
    /// holds for the observed input.
    pub gate_radius: f64,
    /// `ln max(V♯(t0, x0), α̂₂(gate_radius))`; the level set `V♯` must stay in.
    pub level_log: f64,
    pub level_holds: bool,
    /// `α ≤ 4 T c_a p̄ / c_b`: the gated decrease is not guaranteed.
    pub below_threshold: bool,
}

pub fn simulate_iss(
    cert: &Certificate,
    disturbance: &InputSignal,
    x0: &[f64],
    t0: f64,
    horizon: f64,
    margin_tol: f64,
    opts: &OdeOptions,
) -> Result<IssReport> {
    let sys = cert.system();
    if !sys.frozen.has_control() {
        return config("ISS simulation needs a control channel g");
    }
    let mut traj = integrate(sys, x0, t0, t0 + horizon, Some(disturbance), opts)?;
    let logs = certificate_logs(cert, &traj)?;

    let mut gated = ViolationReport::new(Condition::Decrease);
    let mut gate_ok = Vec::with_capacity(traj.len());
    let mut input_sup: f64 = 0.0;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let u = norm(&disturbance(*t, x));
        input_sup = input_sup.max(u);
        gate_ok.push(u <= cert.iss_gate(norm(x))?);
    }
    for k in 0..traj.len().saturating_sub(1) {
        if !(gate_ok[k] && gate_ok[k + 1]) {
            continue;
        }
        let (ta, tb) = (traj.times[k], traj.times[k + 1]);
        let x = &traj.states[k];
        let point = || [&[ta][..], x].concat();
        if logs[k] == f64::NEG_INFINITY {
            gated.record_with_tol(point, logs[k + 1].exp(), 0.0, margin_tol);
            continue;
        }
        let lhs = (logs[k + 1] - logs[k]).exp_m1() / (tb - ta);
        let v_hat = cert.v_hat(x, ta);
        let tol = margin_tol * (v_hat.ln_1p() - logs[k]).exp() + state_noise(cert, &traj, k, v_hat);
        gated.record_with_tol(point, lhs, 0.0, tol);
    }

    let tail_start = t0 + horizon * 2.0 / 3.0;
    let tail_bound = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(_, x)| norm(x))
        .fold(0.0, f64::max);

    let gate_radius = gate_inverse(cert, input_sup)?;
    let level_log = logs[0].max(cert.hat_alpha_logs(gate_radius).1);
    let slack = 1e-6 * (1.0 + level_log.abs());
    let level_holds = logs.iter().all(|l| *l <= level_log + slack);

    traj.cert_values = Some(logs.iter().map(|l| l.exp()).collect());
    Ok(IssReport {
        trajectory: traj,
        gated,
        tail_bound,
        input_sup,
        gate_radius,
        level_log,
        level_holds,
        below_threshold: cert.alpha() <= cert.threshold_iss(),
    })
}

/// Smallest `s` with `χ(s) ≥ level`, by bracketing and bisection.
fn gate_inverse(cert: &Certificate, level: f64) -> Result<f64> {
    if level <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while cert.iss_gate(hi)? < level {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cert.iss_gate(mid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}
