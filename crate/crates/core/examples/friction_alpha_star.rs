//! Compares the sufficient time-scale threshold of the friction model with
//! the empirical boundary found by bisection.
//!
//! ```text
//! cargo run --release --example friction_alpha_star
//! ```

use slowcert::bundles::{friction_chain_check, friction_example, FrictionParams};
use slowcert::simverify::{estimate_alpha_star, seed_batch, AlphaSearch};

fn main() -> slowcert::Result<()> {
    let params = FrictionParams::default();
    let bundle = friction_example(&params)?;
    println!("A = {:.4}, b_bar = {:.6}", params.a(), params.b_bar());

    let grid = bundle.sample_grid(20_000, 3);
    for rep in friction_chain_check(&params, &bundle, &grid)? {
        println!("{}", rep.summary());
    }

    let analytic = bundle.expected.threshold_ugas;
    let batch = seed_batch(2, 5, bundle.radius, 50.0, 11);
    let mut search = AlphaSearch::new(1e-3, 2.0 * analytic, batch, bundle.horizon);
    search.iterations = 16;
    let rep = estimate_alpha_star(&bundle.family, &bundle.sys, &search)?;
    println!(
        "analytic threshold 2 T c_a p_bar / c_b = {:.2}",
        rep.analytic
    );
    println!(
        "empirical alpha* = {:.5} (fails at {:?})",
        rep.empirical, rep.failing_below
    );
    println!("consistent: {}", rep.consistent());
    Ok(())
}
