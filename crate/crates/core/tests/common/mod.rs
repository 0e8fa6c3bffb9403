//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule: `panels` panels of 10 nodes each.
pub struct Gl {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl Gl {
    pub fn new(panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(10);
        Gl {
            nodes,
            weights,
            panels,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let h = (b - a) / self.panels as f64;
        let mut sum = 0.0;
        for p in 0..self.panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                sum += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * sum
    }
}

/// `∫_{t-T}^t ∫_s^t θ(l) dl ds` as two genuinely nested integrals.
pub fn nested_double_integral(theta: &dyn Fn(f64) -> f64, t: f64, window: f64) -> f64 {
    let gl = Gl::new(12);
    gl.integrate(|s| gl.integrate(theta, s, t), t - window, t)
}

/// `a0 + Σ a_k cos(ω_k l) + b_k sin(ω_k l)`.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub a0: f64,
    pub terms: Vec<(f64, f64, f64)>,
}

impl TrigPoly {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let k = rng.random_range(1..=4);
        TrigPoly {
            a0: rng.random_range(-2.0..2.0),
            terms: (0..k)
                .map(|_| {
                    (
                        rng.random_range(0.2..4.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                    )
                })
                .collect(),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::random(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn eval(&self, l: f64) -> f64 {
        self.a0
            + self
                .terms
                .iter()
                .map(|(w, a, b)| a * (w * l).cos() + b * (w * l).sin())
                .sum::<f64>()
    }

    /// `sup |θ|` bound by the triangle inequality.
    pub fn sup_bound(&self) -> f64 {
        self.a0.abs() + self.terms.iter().map(|(_, a, b)| a.hypot(*b)).sum::<f64>()
    }

    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let p = self.clone();
        move |l| p.eval(l)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
}

/// Central difference with a step scaled to the argument.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `exp(A t)` by scaling and squaring a Taylor series; independent of the
/// integrator under test.
pub fn expm2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let mul = |x: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
        let mut z = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let squarings = 10;
    let s = t / f64::from(1u32 << squarings);
    let m = [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..30 {
        term = mul(term, m);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(sum, sum);
    }
    sum
}
