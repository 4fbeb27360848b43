//! Two-step posterior: spline draws projected onto the Runge-Kutta solution
//! family, compared with the objective profile of the posterior mean.

use rkbayes::model::make_van_der_pol;
use rkbayes::numerics::{gauss_legendre, stream};
use rkbayes::rktb::{projection_objective, run_rktb, CovariateDensity, RktbConfig};
use rkbayes::sim::{generate_dataset, truth_solution, SimConfig};
use rkbayes::spline::{fit_posterior, SplineBasis};

fn main() -> rkbayes::Result<()> {
    let sim = SimConfig::table2(100);
    let system = make_van_der_pol();
    let truth = truth_solution(&system, &sim)?;
    let data = generate_dataset(&system, &truth, &sim, 0)?;

    let basis = SplineBasis::new(5, 3)?;
    let post = fit_posterior(&basis, data.x(), data.y(), 99.0, 1.0)?;
    let quad = gauss_legendre(64)?;
    println!("projection objective at the posterior mean spline:");
    for eta in [0.5, 0.8, 1.0, 1.2, 1.5, 2.0] {
        let v = projection_objective(&system, post.mean(), &basis, &[eta], 100, &quad, &CovariateDensity::Uniform)?;
        println!("  eta = {eta:.1}: {v:.3e}");
    }

    let cfg = RktbConfig {
        n_draws: 300,
        ..RktbConfig::default()
    };
    let draws = run_rktb(&system, &data, &cfg, &mut stream(1, 0, 0))?;
    let (lo, hi) = draws.interval(0, 0.95)?;
    println!("\n{} projected draws: mean {:.4}, 95% interval ({lo:.4}, {hi:.4})", draws.len(), draws.mean(0));
    println!("discarded {}, ambiguous {}", draws.discarded, draws.ambiguous);
    Ok(())
}
