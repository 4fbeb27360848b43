//! Nonlinear least squares on the Runge-Kutta solution, with confidence
//! intervals from asymptotic normality.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::model::OdeSystem;
use crate::numerics::{minimize_box, OptimOptions};
use crate::rksb::residual_sum_of_squares;
use crate::solver::sensitivity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlsFit {
    pub theta: Vec<f64>,
    /// `RSS / (n - p)`.
    pub sigma2: f64,
    pub rss: f64,
    /// `sigma2 (J'J)^-1`, row-major `p x p`.
    pub covariance: Vec<Vec<f64>>,
}

impl NlsFit {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[j][j].sqrt()
    }

    /// `theta_j -/+ z std_error_j` with `z` the normal quantile for `level`.
    pub fn confidence_interval(&self, j: usize, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(invalid(format!("level must be in (0, 1), got {level}")));
        }
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        let half = z * self.std_error(j);
        Ok((self.theta[j] - half, self.theta[j] + half))
    }
}

/// Least-squares fit with the covariance built from the sensitivity matrix
/// at the data covariates.
pub fn fit_nls(
    system: &OdeSystem,
    data: &Dataset,
    r_n: Option<usize>,
    opts: &OptimOptions,
) -> Result<NlsFit> {
    let n = data.len();
    let p = system.param_dim();
    if n <= p {
        return Err(invalid(format!("NLS needs more than {p} observations, got {n}")));
    }
    let r_n = r_n.unwrap_or(n).max(2);
    let min = minimize_box(
        |theta| residual_sum_of_squares(system, data, theta, r_n).unwrap_or(f64::INFINITY),
        system.theta_box(),
        opts,
    )?;
    let theta = min.theta;
    let rss = min.value;
    let sigma2 = rss / (n - p) as f64;
    let jac = sensitivity(system, &theta, r_n, data.x())?;
    let info: DMatrix<f64> = jac.tr_mul(&jac);
    let scale = info.diagonal().amax();
    if !(scale > 0.0) {
        return Err(Error::RankDeficient);
    }
    let chol = Cholesky::new(info.clone()).ok_or(Error::RankDeficient)?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    if min_pivot <= 1e-12 * scale {
        return Err(Error::RankDeficient);
    }
    let inv = chol.inverse();
    let covariance = (0..p)
        .map(|i| (0..p).map(|j| sigma2 * inv[(i, j)]).collect())
        .collect();
    Ok(NlsFit {
        theta,
        sigma2,
        rss,
        covariance,
    })
}
