//! Draw cycle shared by the two-step methods: sample `(sigma^2, beta)` from
//! the spline posterior, then map each `beta` to a parameter by minimizing a
//! criterion over the box.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::draws::{Method, PosteriorDraws};
use crate::error::{Error, Result};
use crate::model::ThetaBox;
use crate::numerics::Minimum;
use crate::spline::SplinePosterior;

const MAX_DISCARD_FRACTION: f64 = 0.05;
/// Minima closer than this relative value gap but far apart count as ties.
const AMBIGUITY_VALUE_TOL: f64 = 1e-6;
const AMBIGUITY_SEPARATION: f64 = 1e-2;

/// `beta` draws are taken sequentially from `rng`; projections then run in
/// parallel, so the result does not depend on the worker count.
pub(crate) fn project_draws<R, P>(
    method: Method,
    posterior: &SplinePosterior,
    bounds: &ThetaBox,
    n_draws: usize,
    rng: &mut R,
    project: P,
) -> Result<PosteriorDraws>
where
    R: Rng + ?Sized,
    P: Fn(&DVector<f64>) -> Result<Minimum> + Sync,
{
    let mut betas = Vec::with_capacity(n_draws);
    let mut sigma2 = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let s2 = posterior.sample_sigma2(rng)?;
        betas.push(posterior.sample_beta(s2, rng)?);
        sigma2.push(s2);
    }
    let results: Vec<Result<Minimum>> = betas.par_iter().map(&project).collect();

    let sep = (0..bounds.dim())
        .map(|j| AMBIGUITY_SEPARATION * bounds.width(j))
        .fold(f64::INFINITY, f64::min);
    let mut theta = Vec::with_capacity(n_draws);
    let mut kept_sigma2 = Vec::with_capacity(n_draws);
    let (mut discarded, mut ambiguous) = (0, 0);
    for (res, s2) in results.into_iter().zip(sigma2) {
        match res {
            Ok(min) if min.value.is_finite() => {
                let tol = AMBIGUITY_VALUE_TOL * min.value.abs().max(f64::MIN_POSITIVE);
                ambiguous += usize::from(min.is_ambiguous(sep, tol));
                theta.push(min.theta);
                kept_sigma2.push(s2);
            }
            Ok(_) | Err(Error::OptimizationFailed(_)) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    if discarded as f64 > MAX_DISCARD_FRACTION * n_draws as f64 {
        return Err(Error::TooManyDiscards {
            discarded,
            total: n_draws,
        });
    }
    let mut warnings = Vec::new();
    if discarded > 0 {
        warnings.push(format!("{discarded} of {n_draws} draws discarded after failed projections"));
    }
    if ambiguous > 0 {
        warnings.push(format!(
            "{ambiguous} of {n_draws} projections had competing minima far apart"
        ));
    }
    for w in &warnings {
        log::warn!("{method}: {w}");
    }
    Ok(PosteriorDraws {
        method,
        theta,
        sigma2: Some(kept_sigma2),
        acceptance_rate: None,
        discarded,
        ambiguous,
        warnings,
    })
}
