//! Posterior draws shared by the three Bayesian methods, and credible
//! intervals computed from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "RKSB")]
    Rksb,
    #[serde(rename = "RKTB")]
    Rktb,
    #[serde(rename = "TS")]
    Ts,
    #[serde(rename = "NLS")]
    Nls,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rksb => "RKSB",
            Method::Rktb => "RKTB",
            Method::Ts => "TS",
            Method::Nls => "NLS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub method: Method,
    /// One row per retained draw.
    pub theta: Vec<Vec<f64>>,
    /// Error variance draws, aligned with `theta`.
    pub sigma2: Option<Vec<f64>>,
    /// Post burn-in acceptance rate of the Metropolis step.
    pub acceptance_rate: Option<f64>,
    /// Draws dropped because the projection step failed.
    pub discarded: usize,
    /// Draws where separate starts reached nearly equal minima far apart.
    pub ambiguous: usize,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    /// Draws of coordinate `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.theta.iter().map(|row| row[j]).collect()
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.theta.iter().map(|r| r[j]).sum::<f64>() / self.len() as f64
    }

    pub fn sd(&self, j: usize) -> f64 {
        let m = self.mean(j);
        let ss: f64 = self.theta.iter().map(|r| (r[j] - m).powi(2)).sum();
        (ss / (self.len() as f64 - 1.0)).sqrt()
    }

    pub fn interval(&self, j: usize, level: f64) -> Result<(f64, f64)> {
        equal_tailed_interval(&self.column(j), level)
    }

    /// Writes the draws as CSV with columns `theta1..thetap[,sigma2]`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = self.param_dim();
        let mut header: Vec<String> = (1..=p).map(|j| format!("theta{j}")).collect();
        if self.sigma2.is_some() {
            header.push("sigma2".into());
        }
        w.write_record(&header)?;
        for (i, row) in self.theta.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(s) = &self.sigma2 {
                rec.push(s[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Interval between the `(1 - level) / 2` and `1 - (1 - level) / 2`
/// empirical quantiles.
pub fn equal_tailed_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.len() < 2 {
        return Err(invalid("credible interval needs at least two draws"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must be in (0, 1), got {level}")));
    }
    if draws.iter().any(|d| d.is_nan()) {
        return Err(invalid("draws contain NaN"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}
