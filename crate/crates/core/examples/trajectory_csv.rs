//! Integrates one trajectory and prints it in the versioned CSV layout used
//! by the command line tool.
//!
//! ```text
//! cargo run --example trajectory_csv > pendulum.csv
//! ```

use slowcert::bundles::{pendulum_example, PendulumParams};
use slowcert::cli::output::trajectory_table;
use slowcert::simverify::{integrate, OdeOptions, Sampling};

fn main() -> slowcert::Result<()> {
    let bundle = pendulum_example(&PendulumParams::default())?;
    let cert = bundle.certificate(1.0)?;
    let opts = OdeOptions::default().with_sampling(Sampling::Stride(0.1));
    let traj = integrate(cert.system(), &[2.0, -1.0], 0.0, 10.0, None, &opts)?;
    eprintln!(
        "{} accepted steps, {} rejected",
        traj.stats.steps, traj.stats.rejected
    );
    let table = trajectory_table(&cert, &traj, None)?
        .meta("example", "pendulum")
        .meta("alpha", 1.0);
    print!("{}", String::from_utf8_lossy(&table.to_bytes()));
    Ok(())
}
