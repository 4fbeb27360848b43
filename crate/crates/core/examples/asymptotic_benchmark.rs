//! Large-sample interval length for the Van der Pol parameter from the
//! information integral `V = int fdot^2 g dt`.

use rkbayes::model::make_van_der_pol;
use rkbayes::numerics::gauss_legendre;
use rkbayes::rktb::CovariateDensity;
use rkbayes::sim::asymptotic_benchmark;

fn main() -> rkbayes::Result<()> {
    let system = make_van_der_pol();
    let quad = gauss_legendre(64)?;
    let bench = asymptotic_benchmark(&system, &[1.0], 0.1, &CovariateDensity::Uniform, 1000, &quad)?;
    println!("V = {:.6}", bench.v_theta0[(0, 0)]);
    for n in [100, 500, 1000] {
        println!("n = {n:>4}: predicted 95% length {:.4}", bench.predicted_interval_length(n, 0, 0.95));
    }
    Ok(())
}
