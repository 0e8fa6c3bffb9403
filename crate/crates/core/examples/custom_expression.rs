//! Defines a system from text with the expression language and runs the
//! same checks as the built-in examples.
//!
//! ```text
//! cargo run --example custom_expression
//! ```

use slowcert::cli::{parse_config, run, template, Mode};
use slowcert::expr::{parse_expression, Scope, Vars};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sat = parse_expression("tanh(5*x2)", Scope::field(2, 0))?;
    println!(
        "tanh(5*x2) at x = (0, 0.1): {:.6}",
        sat.eval(&Vars {
            x: &[0.0, 0.1],
            ..Default::default()
        })
    );

    match parse_expression("x1 + sinh(x2)", Scope::field(2, 0)) {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => unreachable!(),
    }

    // the generated template describes the scalar example as a custom system
    let text = template("custom")
        .replace("samples = 100000", "samples = 2000")
        .replace("trajectories = 20", "trajectories = 3");
    let cfg = parse_config(&text, "template.toml", Mode::Validate)?;
    let outcome = run(&cfg)?;
    print!("{}", outcome.report);
    Ok(())
}
