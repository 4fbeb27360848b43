//! Runge-Kutta two-step Bayes.
//!
//! The regression function gets a conjugate B-spline prior. Each posterior
//! draw `f(., beta)` is mapped to the parameter whose Runge-Kutta solution is
//! closest in `L2(g)`:
//! `theta(beta) = argmin_eta int (f(t, beta) - f_{eta, r_n}(t))^2 g(t) dt`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::draws::{Method, PosteriorDraws};
use crate::error::{invalid, Result};
use crate::model::OdeSystem;
use crate::numerics::{gauss_legendre, minimize_box, OptimOptions, QuadratureRule};
use crate::projection::project_draws;
use crate::solver::solve;
use crate::spline::{fit_posterior, SplineBasis};

/// Covariate density `g` weighting the projection.
#[derive(Clone, Default)]
pub enum CovariateDensity {
    #[default]
    Uniform,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CovariateDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("Uniform"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CovariateDensity {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Custom(g) => g(t),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RktbConfig {
    /// Spline order.
    pub m: usize,
    /// Number of knot intervals; `None` picks 3 for `n <= 300`, else 4.
    pub kn: Option<usize>,
    pub ig_a: f64,
    pub ig_b: f64,
    /// Grid intervals for the Runge-Kutta solution; `None` uses `n`.
    pub r_n: Option<usize>,
    pub n_draws: usize,
    pub quad_nodes: usize,
    pub optim: OptimOptions,
    #[serde(skip)]
    pub density: CovariateDensity,
}

impl Default for RktbConfig {
    fn default() -> Self {
        Self {
            m: 5,
            kn: None,
            ig_a: 99.0,
            ig_b: 1.0,
            r_n: None,
            n_draws: 1000,
            quad_nodes: 64,
            optim: OptimOptions {
                tol: 1e-7,
                ..OptimOptions::default()
            },
            density: CovariateDensity::Uniform,
        }
    }
}

impl RktbConfig {
    pub fn kn_for(&self, n: usize) -> usize {
        self.kn.unwrap_or(if n <= 300 { 3 } else { 4 })
    }
}

/// `int (beta' N(t) - f_{eta, r_n}(t))^2 g(t) dt` by quadrature. A diverging
/// solve gives `+inf`.
pub fn projection_objective(
    system: &OdeSystem,
    beta: &DVector<f64>,
    basis: &SplineBasis,
    eta: &[f64],
    r_n: usize,
    quad: &QuadratureRule,
    density: &CovariateDensity,
) -> Result<f64> {
    let design = basis.design_matrix(quad.nodes())?;
    let weights: Vec<f64> = quad
        .nodes()
        .iter()
        .zip(quad.weights())
        .map(|(&t, &w)| w * density.eval(t))
        .collect();
    Ok(projection_value(system, &(design * beta), &weights, quad.nodes(), eta, r_n))
}

fn projection_value(
    system: &OdeSystem,
    spline_values: &DVector<f64>,
    weights: &[f64],
    nodes: &[f64],
    eta: &[f64],
    r_n: usize,
) -> f64 {
    let Ok(sol) = solve(system, eta, r_n) else {
        return f64::INFINITY;
    };
    let v: f64 = nodes
        .iter()
        .zip(weights)
        .zip(spline_values.iter())
        .map(|((&t, &w), &s)| w * (s - sol.eval_unchecked(system, t)).powi(2))
        .sum();
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Warns when `k_n` is outside `(n^{1/(2m)}, n^{1/4})` or `m < 3`.
pub fn check_knot_window(n: usize, m: usize, kn: usize) -> Option<String> {
    let nf = n as f64;
    let (lo, hi) = (nf.powf(1.0 / (2.0 * m as f64)), nf.powf(0.25));
    if m < 3 {
        Some(format!("spline order {m} is below 3"))
    } else if (kn as f64) <= lo || (kn as f64) >= hi {
        Some(format!(
            "k_n = {kn} is outside the window ({lo:.3}, {hi:.3}) for n = {n}, m = {m}"
        ))
    } else {
        None
    }
}

/// Draws `theta` from the projected spline posterior.
pub fn run_rktb<R: Rng + ?Sized>(
    system: &OdeSystem,
    data: &Dataset,
    cfg: &RktbConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    if data.is_empty() {
        return Err(invalid("RKTB needs at least one observation"));
    }
    if cfg.n_draws < 2 {
        return Err(invalid("RKTB needs at least two draws"));
    }
    let n = data.len();
    let kn = cfg.kn_for(n);
    let basis = SplineBasis::new(cfg.m, kn)?;
    let warning = check_knot_window(n, cfg.m, kn);
    let posterior = fit_posterior(&basis, data.x(), data.y(), cfg.ig_a, cfg.ig_b)?;

    let r_n = cfg.r_n.unwrap_or(n).max(2);
    let quad = gauss_legendre(cfg.quad_nodes)?;
    let design: DMatrix<f64> = basis.design_matrix(quad.nodes())?;
    let weights: Vec<f64> = quad
        .nodes()
        .iter()
        .zip(quad.weights())
        .map(|(&t, &w)| w * cfg.density.eval(t))
        .collect();
    let bounds = system.theta_box();

    let mut draws = project_draws(Method::Rktb, &posterior, bounds, cfg.n_draws, rng, |beta| {
        let values = &design * beta;
        minimize_box(
            |eta| projection_value(system, &values, &weights, quad.nodes(), eta, r_n),
            bounds,
            &cfg.optim,
        )
    })?;
    if let Some(w) = warning {
        log::warn!("RKTB: {w}");
        draws.warnings.insert(0, w);
    }
    Ok(draws)
}
