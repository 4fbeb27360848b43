//! The multistart box optimizer and Gauss-Legendre quadrature used by the
//! projection steps.

use rkbayes::model::ThetaBox;
use rkbayes::numerics::{gauss_legendre, minimize_box, OptimOptions};

fn main() -> rkbayes::Result<()> {
    let rule = gauss_legendre(16)?;
    let integral = rule.integrate(|t| (std::f64::consts::PI * t).sin());
    println!("int_0^1 sin(pi t) dt = {integral:.15} (exact {:.15})", 2.0 / std::f64::consts::PI);

    // two wells; the deeper one is at x = -3
    let bounds = ThetaBox::new(vec![-5.0], vec![5.0])?;
    let f = |x: &[f64]| (x[0] * x[0] - 9.0).powi(2) / 50.0 + 0.5 * (x[0] + 3.0).powi(2).min(1.0) - 0.5;
    let min = minimize_box(f, &bounds, &OptimOptions::default())?;
    println!("1-D minimum at {:.6} (value {:.6}) after {} evaluations", min.theta[0], min.value, min.evaluations);

    let bounds = ThetaBox::new(vec![-2.0, -1.0], vec![2.0, 3.0])?;
    let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let min = minimize_box(rosen, &bounds, &OptimOptions::default())?;
    println!("Rosenbrock minimum at ({:.5}, {:.5})", min.theta[0], min.theta[1]);
    Ok(())
}
