//! Sampling checks of the family hypotheses.
//!
//! Each sample point checks, with slack `1e-9 (1 + |rhs|)`:
//!
//! ```text
//! A1  α₁(|x|) ≤ V(x, t, τ) ≤ α₂(|x|)
//! A2  V_t + V_x f(x, t, τ) ≤ -q(τ) μ(V)
//! A3  |V_τ| ≤ c_a μ(V)
//! A4  c_b ≤ ∫_{s-T}^{s} q(p(r)) dr
//! ```
//!
//! with `μ` the identity for plain families. Clean reports only mean no
//! violation was found among the sampled points.

use rayon::prelude::*;

use crate::error::Result;
use crate::quad::Simpson;
use crate::report::{default_tol, merge_all, Condition, ViolationReport};
use crate::system::{norm, LyapunovFamily, SlowSystem};

use super::sampling::{sample_points, SampleGrid, SamplePoint};

const CHUNK: usize = 1024;

/// Checks the plain hypotheses (`μ` = identity, whatever the family carries).
pub fn falsify_assumption1(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    grid: &SampleGrid,
) -> Result<Vec<ViolationReport>> {
    falsify(family, sys, grid, false)
}

/// Checks the `μ`-weighted hypotheses with the family's `μ`.
pub fn falsify_assumption2(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    grid: &SampleGrid,
) -> Result<Vec<ViolationReport>> {
    falsify(family, sys, grid, true)
}

fn falsify(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    grid: &SampleGrid,
    weighted: bool,
) -> Result<Vec<ViolationReport>> {
    let points = sample_points(grid, sys, family.window);
    let quad = Simpson::default();
    let parts: Vec<Result<[ViolationReport; 4]>> = points
        .par_chunks(CHUNK)
        .map(|chunk| check_chunk(family, sys, chunk, weighted, &quad))
        .collect();
    let mut by_cond: [Vec<ViolationReport>; 4] = Default::default();
    for part in parts {
        for (slot, rep) in by_cond.iter_mut().zip(part?) {
            slot.push(rep);
        }
    }
    let conds = [Condition::A1, Condition::A2, Condition::A3, Condition::A4];
    Ok(conds
        .into_iter()
        .zip(by_cond)
        .map(|(c, parts)| merge_all(c, parts))
        .collect())
}

fn check_chunk(
    family: &LyapunovFamily,
    sys: &SlowSystem,
    chunk: &[SamplePoint],
    weighted: bool,
    quad: &Simpson,
) -> Result<[ViolationReport; 4]> {
    let mut a1 = ViolationReport::new(Condition::A1);
    let mut a2 = ViolationReport::new(Condition::A2);
    let mut a3 = ViolationReport::new(Condition::A3);
    let mut a4 = ViolationReport::new(Condition::A4);
    let mu = |s: f64| if weighted { family.mu_eval(s) } else { s };
    for p in chunk {
        let (x, t, tau) = (p.x.as_slice(), p.t, p.tau.as_slice());
        let point = || [x, &[t], tau].concat();
        let v = family.v(x, t, tau);
        let r = norm(x);

        // the tighter of the two sandwich sides, measured against its own slack
        let lower = (family.alpha1().eval(r), v);
        let upper = (v, family.alpha2().eval(r));
        let rel = |(l, h): (f64, f64)| (h - l) / default_tol(h);
        let (lhs, rhs) = if rel(lower) <= rel(upper) || rel(upper).is_nan() && !rel(lower).is_nan()
        {
            lower
        } else {
            upper
        };
        a1.record(point, lhs, rhs);

        let mv = mu(v);
        a2.record(
            point,
            family.frozen_derivative(&sys.frozen, x, t, tau),
            -family.q(tau) * mv,
        );
        a3.record(point, norm(&family.grad_tau(x, t, tau)), family.c_a * mv);

        let avg = quad.integrate(|s| family.q(&sys.path.eval(s)), p.s - family.window, p.s)?;
        a4.record(|| vec![p.s], family.c_b, avg);
    }
    Ok([a1, a2, a3, a4])
}
