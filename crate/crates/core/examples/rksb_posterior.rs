//! Posterior of the Van der Pol damping parameter and the noise variance
//! from the Runge-Kutta likelihood.

use rkbayes::model::make_van_der_pol;
use rkbayes::numerics::stream;
use rkbayes::rksb::{run_rksb, RksbConfig};
use rkbayes::sim::{generate_dataset, truth_solution, SimConfig};

fn main() -> rkbayes::Result<()> {
    let cfg = SimConfig::table2(100);
    let system = make_van_der_pol();
    let truth = truth_solution(&system, &cfg)?;
    let data = generate_dataset(&system, &truth, &cfg, 0)?;

    let draws = run_rksb(&system, &data, &RksbConfig::default(), &mut stream(1, 0, 0))?;
    let (lo, hi) = draws.interval(0, 0.95)?;
    let s2 = draws.sigma2.as_ref().expect("RKSB keeps sigma^2 draws");
    println!("{} draws, acceptance rate {:.3}", draws.len(), draws.acceptance_rate.unwrap_or(0.0));
    println!("theta: mean {:.4}, sd {:.4}, 95% interval ({lo:.4}, {hi:.4})", draws.mean(0), draws.sd(0));
    println!("sigma: posterior mean {:.4} (truth 0.1)", (s2.iter().sum::<f64>() / s2.len() as f64).sqrt());
    Ok(())
}
