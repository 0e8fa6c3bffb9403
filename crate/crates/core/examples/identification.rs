//! Parameter identification with a persistently exciting regressor.
//!
//! ```text
//! cargo run --release --example identification
//! ```

use slowcert::bundles::{identification_example, persistency_bounds, IdentificationParams};
use slowcert::simverify::{check_batch, falsify_assumption1, seed_batch, OdeOptions};

fn main() -> slowcert::Result<()> {
    for params in [
        IdentificationParams::default(),
        IdentificationParams::varying(),
    ] {
        let (lo, hi) = persistency_bounds(&params.m, params.c_tilde, 2.0 * params.c_tilde, 64)?;
        let bundle = identification_example(&params)?;
        println!("== {}", bundle.name);
        println!(
            "  excitation bounds [{lo:.10}, {hi:.10}], kappa = {:.6}",
            params.kappa()
        );
        println!(
            "  c_b = {:.6e}, threshold = {:.4}",
            params.c_b(),
            bundle.expected.threshold_ugas
        );

        for rep in falsify_assumption1(&bundle.family, &bundle.sys, &bundle.sample_grid(5_000, 0))?
        {
            println!("  {}", rep.summary());
        }
        let alpha = bundle.sys.alpha;
        let cert = bundle.certificate(alpha)?;
        let batch = seed_batch(2, 5, bundle.radius, 10.0, 2);
        let out = check_batch(&cert, &batch, bundle.horizon, 1e-6, &OdeOptions::default())?;
        println!("  alpha = {alpha:.4}: {}", out.report.summary());
    }
    Ok(())
}
