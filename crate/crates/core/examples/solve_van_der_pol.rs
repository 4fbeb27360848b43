//! Integrates the Van der Pol oscillator with the higher-order Runge-Kutta
//! scheme and shows the grid error shrinking on the harmonic oscillator,
//! whose solution is known.

use rkbayes::model::{make_harmonic_oscillator, make_van_der_pol};
use rkbayes::solve;

fn main() -> rkbayes::Result<()> {
    let vdp = make_van_der_pol();
    let sol = solve(&vdp, &[1.0], 100)?;
    println!("Van der Pol, theta = 1, r_n = 100");
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  f({t:.2}) = {:.6}", sol.eval_dense(&vdp, t)?);
    }

    let osc = make_harmonic_oscillator();
    println!("\nharmonic oscillator, theta = 2: sup grid error");
    let mut prev: Option<f64> = None;
    for r_n in [50, 100, 200, 400] {
        let sol = solve(&osc, &[2.0], r_n)?;
        let err = sol
            .grid_points()
            .iter()
            .enumerate()
            .map(|(k, &t)| (sol.value(k) - (2.0 * t).cos()).abs())
            .fold(0.0, f64::max);
        match prev {
            Some(p) => println!("  r_n = {r_n:>3}: {err:.3e}  (order {:.2})", (p / err).log2()),
            None => println!("  r_n = {r_n:>3}: {err:.3e}"),
        }
        prev = Some(err);
    }
    Ok(())
}
