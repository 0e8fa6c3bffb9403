//! Input-to-state behaviour of the controlled friction model: the gated
//! decrease on a grid and a disturbance run with a constant input.
//!
//! ```text
//! cargo run --release --example iss_friction
//! ```

use std::sync::Arc;

use slowcert::bundles::{controlled_friction_example, FrictionParams};
use slowcert::simverify::{check_iss_gated_decrease, simulate_iss, InputSignal, OdeOptions};

fn main() -> slowcert::Result<()> {
    let bundle = controlled_friction_example(&FrictionParams::default())?;
    let alpha = bundle.sys.alpha;
    let cert = bundle.certificate(alpha)?;
    println!(
        "alpha = {alpha:.1} = 2 x threshold_iss ({:.1})",
        cert.threshold_iss()
    );
    println!(
        "gate chi(1) = {:.3e}, chi(10) = {:.3e}",
        cert.iss_gate(1.0)?,
        cert.iss_gate(10.0)?
    );

    let rep = check_iss_gated_decrease(&cert, &bundle.sample_grid(10_000, 5))?;
    println!("gated decrease: {}", rep.summary());

    for level in [0.1, 10.0] {
        let u: InputSignal = Arc::new(move |_, _| vec![level]);
        let run = simulate_iss(
            &cert,
            &u,
            &[1.0, 0.0],
            0.0,
            200.0,
            1e-6,
            &OdeOptions::default(),
        )?;
        println!(
            "u = {level}: final |x| = {:.4}, tail sup |x| = {:.4}, steps = {}",
            slowcert::system::norm(run.trajectory.last_state()),
            run.tail_bound,
            run.trajectory.stats.steps
        );
    }
    Ok(())
}
