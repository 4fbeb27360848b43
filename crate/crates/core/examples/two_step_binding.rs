//! Two-step posterior through the binding function: no ODE solves, only the
//! spline and its derivatives. For Van der Pol the criterion is quadratic in
//! the parameter, so each projection also has a closed form.

use rkbayes::model::make_van_der_pol;
use rkbayes::numerics::stream;
use rkbayes::sim::{generate_dataset, truth_solution, SimConfig};
use rkbayes::ts::{run_ts, TsConfig, WeightFn};

fn main() -> rkbayes::Result<()> {
    let sim = SimConfig::table2(100);
    let system = make_van_der_pol();
    let truth = truth_solution(&system, &sim)?;
    let data = generate_dataset(&system, &truth, &sim, 0)?;

    for (name, weight) in [("t^2 (1-t)^2", WeightFn::Poly), ("sin^2(pi t)", WeightFn::Sine)] {
        let cfg = TsConfig {
            weight,
            ..TsConfig::default()
        };
        let draws = run_ts(&system, &data, &cfg, &mut stream(1, 0, 0))?;
        let (lo, hi) = draws.interval(0, 0.95)?;
        println!("w(t) = {name}: mean {:.4}, 95% interval ({lo:.4}, {hi:.4})", draws.mean(0));
    }
    Ok(())
}
