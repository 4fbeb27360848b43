//! Sieve Bayes with a Runge-Kutta approximate likelihood.
//!
//! The regression function `f_theta` is replaced by its Runge-Kutta
//! approximation on `r_n` grid intervals, giving the working likelihood
//! `prod_i N(y_i; f_{theta, r_n}(x_i), sigma^2)`. The posterior of
//! `(theta, sigma^2)` is sampled by Metropolis-within-Gibbs: a Gaussian random
//! walk on `theta` under a truncated normal prior, then an exact inverse gamma
//! draw of `sigma^2`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::draws::{Method, PosteriorDraws};
use crate::error::{invalid, Error, Result};
use crate::model::OdeSystem;
use crate::numerics::{minimize_box, sample_inverse_gamma, OptimOptions};
use crate::solver::solve;

pub use crate::draws::equal_tailed_interval;

const TARGET_ACCEPTANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RksbConfig {
    /// Means of the independent normal priors on `theta`, truncated to the box.
    pub theta_prior_mean: Vec<f64>,
    pub theta_prior_sd: Vec<f64>,
    /// Inverse gamma shape and scale for `sigma^2`.
    pub ig_a: f64,
    pub ig_b: f64,
    /// Grid intervals for the Runge-Kutta solution; `None` uses `n`.
    pub r_n: Option<usize>,
    pub chain_length: usize,
    pub burn_in: usize,
    pub proposal_sd: Vec<f64>,
    /// Robbins-Monro scaling of the proposal during burn-in.
    pub adapt: bool,
    /// Chain start; `None` starts from the least-squares fit.
    pub init_theta: Option<Vec<f64>>,
}

impl Default for RksbConfig {
    fn default() -> Self {
        Self {
            theta_prior_mean: vec![6.0],
            theta_prior_sd: vec![4.0],
            ig_a: 99.0,
            ig_b: 1.0,
            r_n: None,
            chain_length: 3000,
            burn_in: 1000,
            proposal_sd: vec![0.1],
            adapt: true,
            init_theta: None,
        }
    }
}

impl RksbConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.theta_prior_mean.len() != p
            || self.theta_prior_sd.len() != p
            || self.proposal_sd.len() != p
        {
            return Err(invalid(format!(
                "prior mean, prior sd and proposal sd must all have length {p}"
            )));
        }
        if self.theta_prior_sd.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("prior sds must be positive"));
        }
        if self.proposal_sd.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("proposal sds must be positive"));
        }
        if !(self.ig_a > 0.0) || !(self.ig_b > 0.0) {
            return Err(invalid("inverse gamma parameters must be positive"));
        }
        if self.burn_in >= self.chain_length {
            return Err(invalid("burn_in must be smaller than chain_length"));
        }
        if let Some(init) = &self.init_theta {
            if init.len() != p {
                return Err(invalid("init_theta has the wrong length"));
            }
        }
        Ok(())
    }
}

/// `sum_i (y_i - f_{theta, r_n}(x_i))^2`.
pub fn residual_sum_of_squares(
    system: &OdeSystem,
    data: &Dataset,
    theta: &[f64],
    r_n: usize,
) -> Result<f64> {
    let sol = solve(system, theta, r_n)?;
    let ss = data
        .x()
        .iter()
        .zip(data.y())
        .map(|(&x, &y)| {
            let r = y - sol.eval_unchecked(system, x);
            r * r
        })
        .sum::<f64>();
    if ss.is_finite() {
        Ok(ss)
    } else {
        Err(Error::Diverged { stage: 0, t: 1.0 })
    }
}

/// Working Gaussian log-likelihood with the covariate density term left
/// out. A diverging trajectory gives `-inf`.
pub fn log_approx_likelihood(
    system: &OdeSystem,
    data: &Dataset,
    theta: &[f64],
    sigma2: f64,
    r_n: usize,
) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let ss = match residual_sum_of_squares(system, data, theta, r_n) {
        Ok(ss) => ss,
        Err(Error::Diverged { .. }) => return Ok(f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    let n = data.len() as f64;
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - ss / (2.0 * sigma2))
}

fn log_prior(cfg: &RksbConfig, theta: &[f64]) -> f64 {
    theta
        .iter()
        .zip(cfg.theta_prior_mean.iter().zip(&cfg.theta_prior_sd))
        .map(|(t, (m, s))| -0.5 * ((t - m) / s).powi(2))
        .sum()
}

/// Runs the Metropolis-within-Gibbs chain and returns the post burn-in draws.
pub fn run_rksb<R: Rng + ?Sized>(
    system: &OdeSystem,
    data: &Dataset,
    cfg: &RksbConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    let p = system.param_dim();
    cfg.validate(p)?;
    if data.is_empty() {
        return Err(invalid("RKSB needs at least one observation"));
    }
    let n = data.len();
    let r_n = cfg.r_n.unwrap_or(n).max(2);
    let bounds = system.theta_box();
    let rss = |theta: &[f64]| residual_sum_of_squares(system, data, theta, r_n).ok();

    let mut theta = match &cfg.init_theta {
        Some(t) => t.clone(),
        None => {
            let opts = OptimOptions {
                starts: 4,
                tol: 1e-6,
                ..OptimOptions::default()
            };
            minimize_box(|t| rss(t).unwrap_or(f64::INFINITY), bounds, &opts)?.theta
        }
    };
    if !bounds.contains(&theta) {
        return Err(Error::ThetaOutsideBox { theta });
    }
    let mut ss = rss(&theta).ok_or(Error::Diverged { stage: 0, t: 0.0 })?;
    let mut lp = log_prior(cfg, &theta);

    let shape = cfg.ig_a + n as f64 / 2.0;
    let mut sigma2 = sample_inverse_gamma(shape, cfg.ig_b + ss / 2.0, rng)?;
    let mut log_scale = 0.0f64;

    let kept = cfg.chain_length - cfg.burn_in;
    let mut theta_draws = Vec::with_capacity(kept);
    let mut sigma2_draws = Vec::with_capacity(kept);
    let mut accepted = 0usize;
    let mut proposal = vec![0.0; p];

    for it in 0..cfg.chain_length {
        let scale = log_scale.exp();
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            proposal[j] = theta[j] + cfg.proposal_sd[j] * scale * z;
        }
        let mut accept = false;
        if bounds.contains(&proposal) {
            if let Some(ss_new) = rss(&proposal) {
                let lp_new = log_prior(cfg, &proposal);
                let log_ratio = (lp_new - lp) - (ss_new - ss) / (2.0 * sigma2);
                let u: f64 = rng.random();
                if u.ln() < log_ratio {
                    theta.copy_from_slice(&proposal);
                    ss = ss_new;
                    lp = lp_new;
                    accept = true;
                }
            }
        }
        if cfg.adapt && it < cfg.burn_in {
            let gain = (it as f64 + 1.0).powf(-0.6);
            log_scale += gain * (f64::from(u8::from(accept)) - TARGET_ACCEPTANCE);
        }
        sigma2 = sample_inverse_gamma(shape, cfg.ig_b + ss / 2.0, rng)?;
        if it >= cfg.burn_in {
            accepted += usize::from(accept);
            theta_draws.push(theta.clone());
            sigma2_draws.push(sigma2);
        }
    }

    let rate = accepted as f64 / kept as f64;
    let mut warnings = Vec::new();
    if accepted == 0 {
        let msg = "no proposal accepted after burn-in; the chain did not mix".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(PosteriorDraws {
        method: Method::Rksb,
        theta: theta_draws,
        sigma2: Some(sigma2_draws),
        acceptance_rate: Some(rate),
        discarded: 0,
        ambiguous: 0,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_linear_null, make_van_der_pol};
    use crate::numerics::stream;
    use rand_distr::Normal;

    fn null_data() -> (OdeSystem, Dataset) {
        let sys = make_linear_null(2, vec![0.5, -1.0]).unwrap();
        let x = vec![0.0, 0.3, 0.6, 1.0];
        let y: Vec<f64> = x.iter().map(|t| 0.5 - t).collect();
        (sys, Dataset::new(x, y).unwrap())
    }

    #[test]
    fn likelihood_scale_terms() {
        let (sys, data) = null_data();
        let l1 = log_approx_likelihood(&sys, &data, &[1.0], 1.0, 10).unwrap();
        let want = -2.0 * (2.0 * std::f64::consts::PI).ln();
        assert!((l1 - want).abs() < 1e-12);
        let l2 = log_approx_likelihood(&sys, &data, &[1.0], 2.0, 10).unwrap();
        assert!((l1 - l2 - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(log_approx_likelihood(&sys, &data, &[1.0], 0.0, 10).is_err());
    }

    #[test]
    fn likelihood_matches_direct_gaussian_formula() {
        let sys = make_linear_null(2, vec![0.5, -1.0]).unwrap();
        let x = vec![0.05, 0.31, 0.62, 0.97, 0.5];
        let y = vec![0.4, 0.2, -0.1, -0.5, 0.1];
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let sigma2: f64 = 0.3;
        let direct: f64 = x
            .iter()
            .zip(&y)
            .map(|(t, yi)| {
                let r = yi - (0.5 - t);
                (-(r * r) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
            })
            .map(f64::ln)
            .sum();
        let ours = log_approx_likelihood(&sys, &data, &[3.0], sigma2, 17).unwrap();
        assert!((ours - direct).abs() < 1e-12);
    }

    #[test]
    fn sigma2_update_with_zero_residuals_is_prior_scale() {
        // with a perfect fit the sigma2 draws follow IG(a + n/2, b)
        let (sys, data) = null_data();
        let cfg = RksbConfig {
            theta_prior_mean: vec![1.0],
            theta_prior_sd: vec![1.0],
            ig_a: 3.0,
            ig_b: 2.0,
            chain_length: 40_000,
            burn_in: 100,
            init_theta: Some(vec![1.0]),
            ..RksbConfig::default()
        };
        let mut rng = stream(4, 0, 0);
        let draws = run_rksb(&sys, &data, &cfg, &mut rng).unwrap();
        let s = draws.sigma2.as_ref().unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        // IG(5, 2): mean 0.5, sd 0.2887
        let se = 0.2887 / (s.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = RksbConfig::default();
        assert!(cfg.validate(1).is_ok());
        assert!(cfg.validate(2).is_err());
        cfg.burn_in = cfg.chain_length;
        assert!(cfg.validate(1).is_err());
        let cfg = RksbConfig {
            proposal_sd: vec![0.0],
            ..RksbConfig::default()
        };
        assert!(cfg.validate(1).is_err());
    }

    fn vdp_data(n: usize, seed: u64) -> Dataset {
        let sys = make_van_der_pol();
        let truth = solve(&sys, &[1.0], 3200).unwrap();
        let mut rng = stream(seed, 0, 99);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| truth.eval_dense(&sys, t).unwrap() + noise.sample(&mut rng))
            .collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn van_der_pol_posterior_covers_truth() {
        let sys = make_van_der_pol();
        let data = vdp_data(100, 21);
        let mut rng = stream(21, 0, 1);
        let draws = run_rksb(&sys, &data, &RksbConfig::default(), &mut rng).unwrap();
        assert_eq!(draws.len(), 2000);
        let (m, sd) = (draws.mean(0), draws.sd(0));
        assert!((m - 1.0).abs() < 3.0 * sd, "mean {m} sd {sd}");
        let rate = draws.acceptance_rate.unwrap();
        assert!(rate > 0.1 && rate < 0.7, "acceptance {rate}");
        let bx = sys.theta_box();
        assert!(draws.theta.iter().all(|t| bx.contains(t)));
    }

    #[test]
    fn chains_are_reproducible() {
        let sys = make_van_der_pol();
        let data = vdp_data(30, 5);
        let cfg = RksbConfig {
            chain_length: 300,
            burn_in: 100,
            ..RksbConfig::default()
        };
        let a = run_rksb(&sys, &data, &cfg, &mut stream(1, 2, 3)).unwrap();
        let b = run_rksb(&sys, &data, &cfg, &mut stream(1, 2, 3)).unwrap();
        assert_eq!(a, b);
    }
}
