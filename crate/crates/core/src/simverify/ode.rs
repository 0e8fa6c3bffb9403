//! Dormand–Prince 5(4) with step-size control and dense output.

use std::sync::Arc;

use crate::error::{Error, IntegrationFailure, Result};
use crate::system::{norm, SlowSystem};

/// `(t, x) ↦ u`
pub type InputSignal = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Every accepted step.
    Steps,
    /// Dense output at `t0 + k·dt`, plus the final time.
    Stride(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub sampling: Sampling,
    pub max_steps: usize,
    /// Abort with a BlowUp tag once `|x|` exceeds this.
    pub blowup: f64,
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            sampling: Sampling::Stride(0.01),
            max_steps: 2_000_000,
            blowup: 1e6,
            max_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest scaled error norm among accepted steps (at most 1).
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cert_values: Option<Vec<f64>>,
    pub stats: IntegratorStats,
    /// The tolerances the trajectory was computed with.
    pub rtol: f64,
    pub atol: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo(x: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..x.len())
        .map(|i| x[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
        .collect()
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Integrates `ẋ = rhs(t, x)` from `t0` to `tf`. A right-hand side that
/// returns non-finite values rejects the step instead of failing outright.
pub fn solve<F>(rhs: F, x0: &[f64], t0: f64, tf: f64, opts: &OdeOptions) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(tf > t0) {
        return Err(Error::Config(format!("need tf > t0, got [{t0}, {tf}]")));
    }
    if !finite(x0) {
        return Err(Error::Integration {
            kind: IntegrationFailure::NonFinite,
            t: t0,
            state: x0.to_vec(),
        });
    }
    let n = x0.len();
    let span = tf - t0;
    let h_max = opts.max_step.unwrap_or(span).min(span);
    let scale = |a: &[f64], b: &[f64], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
    let mut stats = IntegratorStats::default();
    let mut times = vec![t0];
    let mut states = vec![x0.to_vec()];
    let eval = |t: f64, x: &[f64], stats: &mut IntegratorStats| {
        stats.rhs_evals += 1;
        rhs(t, x)
    };

    let mut t = t0;
    let mut x = x0.to_vec();
    let mut k1 = eval(t, &x, &mut stats);
    if !finite(&k1) {
        return Err(Error::Integration {
            kind: IntegrationFailure::NonFinite,
            t,
            state: x,
        });
    }
    if n == 0 {
        times.push(tf);
        states.push(Vec::new());
        return Ok(Trajectory {
            times,
            states,
            cert_values: None,
            stats,
            rtol: opts.rtol,
            atol: opts.atol,
        });
    }

    // initial step, Hairer–Nørsett–Wanner heuristic
    let mut h = {
        let sc: Vec<f64> = (0..n).map(|i| opts.atol + opts.rtol * x[i].abs()).collect();
        let d0 = (x.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (k1
            .iter()
            .zip(&sc)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(h_max);
        let x1 = combo(&x, h0, &[(1.0, &k1)]);
        let f1 = eval(t + h0, &x1, &mut stats);
        let d2 = (f1
            .iter()
            .zip(&k1)
            .zip(&sc)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 || !d2.is_finite() {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_max)
    };

    let mut next_sample = 1usize;
    let mut rejected_last = false;
    loop {
        if t >= tf {
            break;
        }
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::Integration {
                kind: IntegrationFailure::StepBudget,
                t,
                state: x,
            });
        }
        let last = tf - t <= h * (1.0 + 1e-12);
        if last {
            h = tf - t;
        }
        if h < 1e-14 * span {
            return Err(Error::Integration {
                kind: IntegrationFailure::StepSizeCollapse,
                t,
                state: x,
            });
        }

        let k2 = eval(t + C2 * h, &combo(&x, h, &[(A21, &k1)]), &mut stats);
        let k3 = eval(
            t + C3 * h,
            &combo(&x, h, &[(A31, &k1), (A32, &k2)]),
            &mut stats,
        );
        let k4 = eval(
            t + C4 * h,
            &combo(&x, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut stats,
        );
        let k5 = eval(
            t + C5 * h,
            &combo(&x, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut stats,
        );
        let t_new = if last { tf } else { t + h };
        let k6 = eval(
            t_new,
            &combo(
                &x,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            &mut stats,
        );
        let x_new = combo(
            &x,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = eval(t_new, &x_new, &mut stats);

        let ok = [&k2, &k3, &k4, &k5, &k6, &k7].iter().all(|k| finite(k)) && finite(&x_new);
        let err = if ok {
            let e = combo(
                &vec![0.0; n],
                h,
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
            );
            ((0..n)
                .map(|i| (e[i] / scale(&x, &x_new, i)).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            stats.steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            match opts.sampling {
                Sampling::Steps => {
                    if !last {
                        times.push(t_new);
                        states.push(x_new.clone());
                    }
                }
                Sampling::Stride(dt) => {
                    let r2: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                    let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
                    let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
                    let r5 = combo(
                        &vec![0.0; n],
                        h,
                        &[
                            (D1, &k1),
                            (D3, &k3),
                            (D4, &k4),
                            (D5, &k5),
                            (D6, &k6),
                            (D7, &k7),
                        ],
                    );
                    loop {
                        let ts = t0 + next_sample as f64 * dt;
                        if ts > t_new || ts >= tf - 1e-12 * span {
                            break;
                        }
                        let th = (ts - t) / h;
                        let th1 = 1.0 - th;
                        let y: Vec<f64> = (0..n)
                            .map(|i| {
                                x[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))
                            })
                            .collect();
                        times.push(ts);
                        states.push(y);
                        next_sample += 1;
                    }
                }
            }
            t = t_new;
            x = x_new;
            k1 = k7;
            if norm(&x) > opts.blowup {
                return Err(Error::Integration {
                    kind: IntegrationFailure::BlowUp,
                    t,
                    state: x,
                });
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let fac = if rejected_last { fac.min(1.0) } else { fac };
            h = (h * fac).min(h_max);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac.min(1.0);
            rejected_last = true;
        }
    }
    times.push(tf);
    states.push(x);
    Ok(Trajectory {
        times,
        states,
        cert_values: None,
        stats,
        rtol: opts.rtol,
        atol: opts.atol,
    })
}

/// Trajectory of `sys` from `(t0, x0)`, optionally driven by `control`.
pub fn integrate(
    sys: &SlowSystem,
    x0: &[f64],
    t0: f64,
    tf: f64,
    control: Option<&InputSignal>,
    opts: &OdeOptions,
) -> Result<Trajectory> {
    if x0.len() != sys.dim_state() {
        return Err(Error::Config(format!(
            "initial state has {} components, system has {}",
            x0.len(),
            sys.dim_state()
        )));
    }
    if t0 < 0.0 {
        return Err(Error::Config(format!(
            "initial time must be nonnegative, got {t0}"
        )));
    }
    match control {
        None => solve(
            |t, x| {
                let tau = sys.tau_at(t);
                sys.frozen.eval(x, t, &tau)
            },
            x0,
            t0,
            tf,
            opts,
        ),
        Some(u) => solve(
            |t, x| {
                let ut = u(t, x);
                sys.eval_controlled(x, t, &ut)
                    .unwrap_or_else(|_| vec![f64::NAN; x.len()])
            },
            x0,
            t0,
            tf,
            opts,
        ),
    }
}
