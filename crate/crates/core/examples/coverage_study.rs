//! Small coverage study on the Van der Pol preset.
//!
//! Usage: `cargo run --release --example coverage_study -- [n] [replications]`

use rkbayes::sim::{run_study, SimConfig};

fn main() -> rkbayes::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let reps: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);

    let mut cfg = SimConfig::table2(n);
    cfg.replications = reps;
    let report = run_study(&cfg)?;

    println!("n = {n}, {reps} replications");
    println!("{:<6} {:>9} {:>7} {:>8} {:>8} {:>9}", "method", "coverage", "se", "length", "se", "seconds");
    for m in &report.methods {
        println!(
            "{:<6} {:>9.1} {:>7.2} {:>8.4} {:>8.4} {:>9.1}",
            m.method.to_string(),
            m.coverage,
            m.coverage_se,
            m.mean_length,
            m.length_se,
            m.seconds
        );
    }
    Ok(())
}
