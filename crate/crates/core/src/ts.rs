//! Two-step Bayes through the binding function.
//!
//! Each spline posterior draw is mapped to
//! `theta(beta) = argmin_eta int F(t, f, f', ..., f^(q), eta)^2 w(t) dt`,
//! where `f = f(., beta)`. No ODE is solved; the weight `w` vanishes with its
//! first `q - 1` derivatives at both endpoints.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::draws::{Method, PosteriorDraws};
use crate::error::{invalid, Error, Result};
use crate::model::OdeSystem;
use crate::numerics::{gauss_legendre, minimize_box, OptimOptions, QuadratureRule};
use crate::projection::project_draws;
use crate::spline::{fit_posterior, SplineBasis};

/// Weight function `w` on `[0, 1]`.
#[derive(Clone, Default)]
pub enum WeightFn {
    /// `t^q (1 - t)^q`.
    #[default]
    Poly,
    /// `sin(pi t)^q`.
    Sine,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Poly => f.write_str("Poly"),
            Self::Sine => f.write_str("Sine"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl WeightFn {
    /// Looks a preset up by name: `poly` or `sine`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "poly" => Ok(Self::Poly),
            "sine" => Ok(Self::Sine),
            other => Err(invalid(format!(
                "unknown weight preset '{other}', expected 'poly' or 'sine'"
            ))),
        }
    }

    pub fn eval(&self, t: f64, q: usize) -> f64 {
        match self {
            Self::Poly => (t * (1.0 - t)).powi(q as i32),
            Self::Sine => (std::f64::consts::PI * t).sin().powi(q as i32),
            Self::Custom(w) => w(t),
        }
    }
}

const WEIGHT_CHECK_STEP: f64 = 1e-5;
const WEIGHT_CHECK_TOL: f64 = 1e-2;

/// Checks numerically that `w` and its first `q - 1` derivatives vanish at 0
/// and 1, using one-sided differences from each endpoint.
pub fn validate_weight(w: &WeightFn, q: usize) -> Result<()> {
    let h = WEIGHT_CHECK_STEP;
    for (end, dir) in [(0.0, 1.0), (1.0, -1.0)] {
        let vals: Vec<f64> = (0..q).map(|i| w.eval(end + dir * h * i as f64, q)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid("weight function is not finite near the endpoints"));
        }
        // forward differences of orders 0..q-1
        let mut diff = vals;
        for order in 0..q {
            let d = diff[0] / h.powi(order as i32);
            if d.abs() > WEIGHT_CHECK_TOL {
                return Err(invalid(format!(
                    "weight derivative of order {order} does not vanish at t = {end} ({d:.3e})"
                )));
            }
            diff = diff.windows(2).map(|p| p[1] - p[0]).collect();
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TsConfig {
    pub m: usize,
    /// Number of knot intervals; `None` picks 2 for `n <= 300`, else 3.
    pub kn: Option<usize>,
    pub ig_a: f64,
    pub ig_b: f64,
    pub n_draws: usize,
    pub quad_nodes: usize,
    pub optim: OptimOptions,
    #[serde(skip)]
    pub weight: WeightFn,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self {
            m: 7,
            kn: None,
            ig_a: 99.0,
            ig_b: 1.0,
            n_draws: 1000,
            quad_nodes: 64,
            optim: OptimOptions::default(),
            weight: WeightFn::Poly,
        }
    }
}

impl TsConfig {
    pub fn kn_for(&self, n: usize) -> usize {
        self.kn.unwrap_or(if n <= 300 { 2 } else { 3 })
    }
}

/// Spline values and derivatives `0..=q` at the quadrature nodes, one
/// matrix per derivative order.
struct DerivativeDesign {
    mats: Vec<DMatrix<f64>>,
}

impl DerivativeDesign {
    fn new(basis: &SplineBasis, nodes: &[f64], q: usize) -> Result<Self> {
        if basis.order() < q + 2 {
            return Err(Error::UnsupportedDerivative {
                requested: q,
                max: basis.max_derivative(),
            });
        }
        let mats = (0..=q)
            .map(|d| basis.derivative_matrix(nodes, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mats })
    }

    /// Row `i` holds `(f, f', ..., f^(q))` at node `i`.
    fn stack(&self, beta: &DVector<f64>) -> Vec<Vec<f64>> {
        let cols: Vec<DVector<f64>> = self.mats.iter().map(|m| m * beta).collect();
        (0..cols[0].len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect()
    }
}

fn ts_value(system: &OdeSystem, h: &[Vec<f64>], nodes: &[f64], weights: &[f64], eta: &[f64]) -> f64 {
    let v: f64 = nodes
        .iter()
        .zip(weights)
        .zip(h)
        .map(|((&t, &w), hi)| w * system.binding(t, hi, eta).powi(2))
        .sum();
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// `int F(t, h(t), eta)^2 w(t) dt` by quadrature, where `h` stacks the spline
/// and its first `q` derivatives.
pub fn ts_objective(
    system: &OdeSystem,
    beta: &DVector<f64>,
    basis: &SplineBasis,
    eta: &[f64],
    quad: &QuadratureRule,
    weight: &WeightFn,
) -> Result<f64> {
    let q = system.order();
    let design = DerivativeDesign::new(basis, quad.nodes(), q)?;
    let weights = node_weights(quad, weight, q);
    Ok(ts_value(system, &design.stack(beta), quad.nodes(), &weights, eta))
}

fn node_weights(quad: &QuadratureRule, weight: &WeightFn, q: usize) -> Vec<f64> {
    quad.nodes()
        .iter()
        .zip(quad.weights())
        .map(|(&t, &w)| w * weight.eval(t, q))
        .collect()
}

/// Draws `theta` from the spline posterior projected through the binding
/// criterion.
pub fn run_ts<R: Rng + ?Sized>(
    system: &OdeSystem,
    data: &Dataset,
    cfg: &TsConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    if data.is_empty() {
        return Err(invalid("TS needs at least one observation"));
    }
    if cfg.n_draws < 2 {
        return Err(invalid("TS needs at least two draws"));
    }
    let q = system.order();
    validate_weight(&cfg.weight, q)?;
    let n = data.len();
    let basis = SplineBasis::new(cfg.m, cfg.kn_for(n))?;
    let quad = gauss_legendre(cfg.quad_nodes)?;
    let design = DerivativeDesign::new(&basis, quad.nodes(), q)?;
    let weights = node_weights(&quad, &cfg.weight, q);
    let posterior = fit_posterior(&basis, data.x(), data.y(), cfg.ig_a, cfg.ig_b)?;
    let bounds = system.theta_box();

    let mut draws = project_draws(Method::Ts, &posterior, bounds, cfg.n_draws, rng, |beta| {
        let h = design.stack(beta);
        minimize_box(
            |eta| ts_value(system, &h, quad.nodes(), &weights, eta),
            bounds,
            &cfg.optim,
        )
    })?;
    if cfg.m <= 2 * q + 2 {
        let w = format!("spline order {} is not above 2q + 2 = {}", cfg.m, 2 * q + 2);
        log::warn!("TS: {w}");
        draws.warnings.insert(0, w);
    }
    Ok(draws)
}
