//! A damped pendulum whose damping is slowly reduced, certified for every
//! time scale. Also shows that the literal window condition rejects the
//! default damping profile while the averaging form accepts it.
//!
//! ```text
//! cargo run --example pendulum
//! ```

use slowcert::bundles::{pendulum_example, P2Mode, PendulumParams};
use slowcert::simverify::{check_batch, seed_batch, OdeOptions};

fn main() -> slowcert::Result<()> {
    let params = PendulumParams::default();
    println!(
        "window integral margin: {:.6} (c_b = {:.6})",
        params.p2_margin()?,
        params.c_b
    );

    let literal = PendulumParams {
        mode: P2Mode::Literal,
        ..PendulumParams::default()
    };
    match pendulum_example(&literal) {
        Ok(_) => println!("literal form accepted"),
        Err(e) => println!("literal form rejected: {e}"),
    }

    let bundle = pendulum_example(&params)?;
    for alpha in [0.01, 1.0, 100.0] {
        let cert = bundle.certificate(alpha)?;
        let batch = seed_batch(2, 10, bundle.radius, 2.0 * bundle.family.window * alpha, 7);
        let out = check_batch(&cert, &batch, bundle.horizon, 1e-6, &OdeOptions::default())?;
        println!("alpha = {alpha:>6}: {}", out.report.summary());
    }
    Ok(())
}
