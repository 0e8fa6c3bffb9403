//! Seeded low-discrepancy sampling of `(x, t, τ)` boxes.
//!
//! Points come from a Halton sequence with a Cranley–Patterson rotation
//! drawn from a ChaCha stream, so a fixed seed gives the same points on
//! every platform and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system::SlowSystem;

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `count` points in `[0, 1)^dim`.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        dim <= PRIMES.len(),
        "at most {} sampling dimensions",
        PRIMES.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|k| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(k as u64 + 1, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// How the frozen parameter `τ` is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum TauSampling {
    /// `τ = p(s)` for `s ∈ [-T, t_max/α]`, i.e. points of the path's range.
    Path,
    /// A user-declared box containing the path's range.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// Sampling box for falsification: `|x|∞ ≤ radius`, `t ∈ [0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    /// Defaults to `20 max(T, 1) α`.
    pub t_max: Option<f64>,
    pub tau: TauSampling,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            radius: 10.0,
            samples: 100_000,
            seed: 0,
            t_max: None,
            tau: TauSampling::Path,
        }
    }
}

impl SampleGrid {
    pub fn new(radius: f64, samples: usize, seed: u64) -> Self {
        SampleGrid {
            radius,
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = Some(t_max);
        self
    }

    pub fn with_tau_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.tau = TauSampling::Box { lo, hi };
        self
    }

    pub fn resolved_t_max(&self, window: f64, alpha: f64) -> f64 {
        self.t_max.unwrap_or(20.0 * window.max(1.0) * alpha)
    }
}

/// One sample: a state, a time, a frozen parameter and the slow time `s`
/// it was drawn from (used for the averaging window).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub t: f64,
    pub s: f64,
    pub tau: Vec<f64>,
}

/// Draws the falsification points for `sys` with window `T`.
pub fn sample_points(grid: &SampleGrid, sys: &SlowSystem, window: f64) -> Vec<SamplePoint> {
    let n = sys.dim_state();
    let t_max = grid.resolved_t_max(window, sys.alpha);
    let (s_lo, s_hi) = (-window, t_max / sys.alpha);
    let tau_dims = match &grid.tau {
        TauSampling::Path => 0,
        TauSampling::Box { lo, .. } => lo.len(),
    };
    let raw = halton(n + 2 + tau_dims, grid.samples, grid.seed);
    raw.into_iter()
        .map(|u| {
            let x: Vec<f64> = u[..n]
                .iter()
                .map(|v| grid.radius * (2.0 * v - 1.0))
                .collect();
            let t = t_max * u[n];
            let s = s_lo + (s_hi - s_lo) * u[n + 1];
            let tau = match &grid.tau {
                TauSampling::Path => sys.path.eval(s),
                TauSampling::Box { lo, hi } => (0..tau_dims)
                    .map(|d| lo[d] + (hi[d] - lo[d]) * u[n + 2 + d])
                    .collect(),
            };
            SamplePoint { x, t, s, tau }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_deterministic_and_in_range() {
        let a = halton(4, 500, 7);
        let b = halton(4, 500, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        assert_ne!(a, halton(4, 500, 8));
    }

    #[test]
    fn halton_is_well_spread() {
        let pts = halton(2, 4096, 1);
        // every cell of an 8x8 partition is hit
        let mut hits = [0usize; 64];
        for p in &pts {
            hits[(p[0] * 8.0) as usize * 8 + (p[1] * 8.0) as usize] += 1;
        }
        assert!(hits.iter().all(|h| *h > 40), "{hits:?}");
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}
