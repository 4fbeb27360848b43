//! Least-squares fit of the Van der Pol parameter with a normal-theory
//! confidence interval.

use rkbayes::model::make_van_der_pol;
use rkbayes::nls::fit_nls;
use rkbayes::numerics::OptimOptions;
use rkbayes::sim::{generate_dataset, truth_solution, SimConfig};

fn main() -> rkbayes::Result<()> {
    let sim = SimConfig::table2(100);
    let system = make_van_der_pol();
    let truth = truth_solution(&system, &sim)?;
    for index in 0..5 {
        let data = generate_dataset(&system, &truth, &sim, index)?;
        let fit = fit_nls(&system, &data, None, &OptimOptions::default())?;
        let (lo, hi) = fit.confidence_interval(0, 0.95)?;
        println!(
            "replication {index}: theta {:.4}  se {:.4}  sigma {:.4}  CI ({lo:.4}, {hi:.4})",
            fit.theta[0],
            fit.std_error(0),
            fit.sigma2.sqrt()
        );
    }
    Ok(())
}
