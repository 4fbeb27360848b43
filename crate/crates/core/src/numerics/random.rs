//! Random variates drawn from explicit, seedable streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{invalid, Result};

/// The generator used for every stochastic component.
pub type Stream = ChaCha8Rng;

/// Independent stream for `(seed, index, lane)`. `index` is usually a
/// replication number and `lane` separates the consumers within it.
pub fn stream(seed: u64, index: u64, lane: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(index);
    rng
}

/// Draw from the inverse gamma law with density proportional to
/// `x^(-shape-1) exp(-scale / x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !(scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
        return Err(invalid(format!(
            "inverse gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    let gamma = Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()))?;
    loop {
        let g: f64 = gamma.sample(rng);
        if g > 0.0 {
            return Ok(scale / g);
        }
    }
}

pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> Result<f64> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(invalid(format!("normal sd must be non-negative, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}
