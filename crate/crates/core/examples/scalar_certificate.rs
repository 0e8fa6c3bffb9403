//! Builds the certificate for `ẋ = x/√(1+x²) (1 - 90 cos²(t/α))`, compares
//! it with its closed form and checks decrease along a few trajectories.
//!
//! ```text
//! cargo run --example scalar_certificate
//! ```

use slowcert::bundles::scalar_example;
use slowcert::simverify::{check_batch, seed_batch, OdeOptions};

fn main() -> slowcert::Result<()> {
    let bundle = scalar_example()?;
    let closed = bundle
        .closed_form
        .clone()
        .expect("scalar example ships a closed form");
    println!(
        "c_b = {:.6}, threshold = {}",
        bundle.family.c_b, bundle.expected.threshold_ugas
    );

    for alpha in [0.1, 1.0, 10.0] {
        let cert = bundle.certificate(alpha)?;
        let (x, t) = (1.5, 0.7 * alpha);
        let built = cert.eval_certificate_log(&[x], t)?;
        let formula = (closed.log_value)(&[x], t, alpha) + (closed.log_offset)(alpha);
        println!(
            "alpha = {alpha:>5}: ln V# = {built:.10} (closed form {formula:.10}), decrease coeff = {:.3e}",
            cert.decrease_coeff()
        );

        let batch = seed_batch(1, 8, bundle.radius, 2.0 * bundle.family.window * alpha, 1);
        let out = check_batch(&cert, &batch, bundle.horizon, 1e-6, &OdeOptions::default())?;
        println!("  {}", out.report.summary());
    }
    Ok(())
}
