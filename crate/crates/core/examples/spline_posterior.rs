//! Conjugate B-spline posterior for a noisy curve: posterior mean, pointwise
//! bands from sampled coefficients, and the fitted derivative.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rkbayes::numerics::stream;
use rkbayes::spline::{fit_posterior, SplineBasis};
use rkbayes::equal_tailed_interval;

fn main() -> rkbayes::Result<()> {
    let mut rng = stream(7, 0, 0);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let x: Vec<f64> = (0..200).map(|_| rng.random()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| (3.0 * t).sin() + noise.sample(&mut rng))
        .collect();

    let basis = SplineBasis::new(5, 4)?;
    let post = fit_posterior(&basis, &x, &y, 99.0, 1.0)?;
    println!("basis dimension {}, sigma^2 posterior IG({:.1}, {:.4})",
        basis.basis_dim(), post.sigma2_shape(), post.sigma2_scale());

    let draws: Vec<_> = (0..500)
        .map(|_| {
            let s2 = post.sample_sigma2(&mut rng)?;
            post.sample_beta(s2, &mut rng)
        })
        .collect::<rkbayes::Result<_>>()?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>9}", "t", "truth", "mean", "lo", "hi", "slope");
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let n0 = basis.eval(t, 0)?;
        let n1 = basis.eval(t, 1)?;
        let dot = |v: &[f64], b: &nalgebra::DVector<f64>| v.iter().zip(b.iter()).map(|(a, c)| a * c).sum::<f64>();
        let vals: Vec<f64> = draws.iter().map(|b| dot(&n0, b)).collect();
        let (lo, hi) = equal_tailed_interval(&vals, 0.95)?;
        println!(
            "{t:>5.1} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            (3.0 * t).sin(),
            dot(&n0, post.mean()),
            lo,
            hi,
            dot(&n1, post.mean())
        );
    }
    Ok(())
}
