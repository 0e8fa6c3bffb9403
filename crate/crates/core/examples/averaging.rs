//! The double average behind the certificate's exponential gain.
//!
//! ```text
//! cargo run --example averaging
//! ```

use slowcert::AveragedSignal;

fn main() -> slowcert::Result<()> {
    // Θ(l) = 45 cos² l - 5, which is negative on part of every period
    let signal = AveragedSignal::new(
        |l: f64| 45.0 * l.cos().powi(2) - 5.0,
        40.0,
        std::f64::consts::PI,
    )?;
    println!("envelope |D| <= T^2 M/2 = {:.4}", signal.envelope_bound());
    for t in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let d = signal.double_avg_integral(t)?;
        let dd = signal.double_avg_time_derivative(t)?;
        let fd =
            (signal.double_avg_integral(t + 1e-5)? - signal.double_avg_integral(t - 1e-5)?) / 2e-5;
        println!("t = {t}: D = {d:>9.5}, D' = {dd:>9.5} (finite difference {fd:>9.5})");
    }
    for alpha in [0.1, 1.0, 100.0] {
        println!(
            "alpha = {alpha:>5}: ln E(1) = {:>10.4}, bound {:.4}",
            signal.exp_gain_log(1.0, alpha)?,
            signal.gain_log_bound(alpha)
        );
    }
    Ok(())
}
