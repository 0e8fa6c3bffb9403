//! What a failed hypothesis looks like: the pendulum family with a claimed
//! averaging constant larger than its window integral.
//!
//! ```text
//! cargo run --example falsification
//! ```

use slowcert::bundles::{pendulum_example, PendulumParams};
use slowcert::simverify::falsify_assumption1;

fn main() -> slowcert::Result<()> {
    let bundle = pendulum_example(&PendulumParams::default())?;
    let greedy = bundle.family.clone().with_c_b(2.0);
    let grid = bundle.sample_grid(20_000, 9);
    for rep in falsify_assumption1(&greedy, &bundle.sys, &grid)? {
        println!("{}", rep.summary());
        if let Some(w) = rep.witnesses.first() {
            println!(
                "  witness s = {:?}: c_b = {} > window integral {:.6}",
                w.point, w.lhs, w.rhs
            );
        }
    }
    Ok(())
}
