//! Defining a new first-order model, logistic growth
//! `y' = theta y (1 - y)`, and fitting it with the Runge-Kutta likelihood.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rkbayes::model::{OdeSystem, ThetaBox};
use rkbayes::numerics::stream;
use rkbayes::rksb::{run_rksb, RksbConfig};
use rkbayes::{solve, Dataset};

fn main() -> rkbayes::Result<()> {
    let logistic = OdeSystem::new(
        "logistic",
        1,
        Arc::new(|_t, y: &[f64], th: &[f64]| th[0] * y[0] * (1.0 - y[0])),
        Arc::new(|_t, h: &[f64], th: &[f64]| h[1] - th[0] * h[0] * (1.0 - h[0])),
        Arc::new(|_t, h: &[f64], _th: &[f64], out: &mut [f64]| out[0] = -h[0] * (1.0 - h[0])),
        vec![0.1],
        ThetaBox::new(vec![0.1], vec![10.0])?,
    )?
    .with_exact(Arc::new(|t, th: &[f64]| 1.0 / (1.0 + 9.0 * (-th[0] * t).exp())));

    let theta0 = 4.0;
    let sol = solve(&logistic, &[theta0], 200)?;
    let exact = logistic.exact_solution(1.0, &[theta0]).unwrap_or(f64::NAN);
    println!("f(1): Runge-Kutta {:.8}, exact {exact:.8}", sol.value(200));

    let mut rng = stream(5, 0, 0);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let x: Vec<f64> = (0..80).map(|_| rng.random()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| sol.eval_dense(&logistic, t).map(|f| f + noise.sample(&mut rng)))
        .collect::<rkbayes::Result<_>>()?;
    let data = Dataset::new(x, y)?;

    let cfg = RksbConfig {
        ig_a: 2.0,
        ig_b: 1e-3,
        ..RksbConfig::default()
    };
    let draws = run_rksb(&logistic, &data, &cfg, &mut rng)?;
    let (lo, hi) = draws.interval(0, 0.95)?;
    println!("theta: mean {:.3}, 95% interval ({lo:.3}, {hi:.3}), truth {theta0}", draws.mean(0));
    Ok(())
}
