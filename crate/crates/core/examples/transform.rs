//! Reweighting a family whose decay is only `-q μ(V)` with a saturating `μ`
//! into a plain family `V = k(Ṽ)`.
//!
//! ```text
//! cargo run --example transform
//! ```

use std::f64::consts::PI;

use slowcert::transform::{k_eval, k_prime_eval};
use slowcert::{
    build_certificate, transform_family, AveragingData, ClassK, FrozenFamily, LyapunovFamily,
    MuFunction, ParameterPath, SlowSystem,
};

fn main() -> slowcert::Result<()> {
    // μ(l) = l/(1+l), so k(r) = exp(2(ln r + r - 1)) = r² e^{2(r-1)}
    let mu = MuFunction::new(|l| l / (1.0 + l))
        .with_derivative(|l| 1.0 / ((1.0 + l) * (1.0 + l)))
        .with_b(1.0);
    for r in [1e-8, 1e-3, 0.5, 1.0, 3.0] {
        println!(
            "k({r:e}) = {:.6e}, k'({r:e}) = {:.6e}",
            k_eval(&mu, r)?,
            k_prime_eval(&mu, r)?
        );
    }

    // ẋ = -(1 + 0.5 sin(t/α)) x/(1 + x²) with Ṽ = x²:
    // Ṽ' = -2(1 + 0.5 τ) x²/(1 + x²) ≤ -(1 + 0.5 τ) μ(Ṽ)
    let frozen = FrozenFamily::new(1, 1, |x, _, tau| {
        vec![-(1.0 + 0.5 * tau[0]) * x[0] / (1.0 + x[0] * x[0])]
    });
    let path = ParameterPath::new(1, |r| vec![r.sin()])
        .with_derivative(|r| vec![r.cos()])
        .with_period(2.0 * PI);
    let sys = SlowSystem::new(frozen, path, 5.0)?;
    let tilde = LyapunovFamily::new(
        |x, _, _| x[0] * x[0],
        ClassK::quadratic(1.0),
        ClassK::quadratic(1.0),
        |tau| 1.0 + 0.5 * tau[0],
        AveragingData {
            c_a: 0.0,
            c_b: 2.0 * PI,
            window: 2.0 * PI,
        },
    )
    .tau_independent()
    .with_mu(mu);

    let plain = transform_family(&tilde)?;
    println!(
        "transformed: c_b = {:.6}, q(0) = {:.3}",
        plain.c_b,
        plain.q(&[0.0])
    );
    let cert = build_certificate(&plain, &sys)?;
    println!("threshold unchanged: {}", cert.threshold_ugas());
    for x in [0.1, 1.0, 4.0] {
        println!(
            "V#({x}, 0) = {:.6e}, dV#/dt = {:.6e}",
            cert.eval_certificate(&[x], 0.0)?,
            cert.certificate_derivative(&[x], 0.0)?
        );
    }
    Ok(())
}
