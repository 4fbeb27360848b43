//! ODE systems whose solution is the regression function.
//!
//! A system of order `q` is given twice: in explicit form
//! `y^(q) = H(t, y, y', ..., y^(q-1), theta)`, which is what the Runge-Kutta
//! scheme integrates, and through the binding function
//! `F(t, y, ..., y^(q), theta) = 0`, which the two-step estimator evaluates on
//! a fitted spline. The bundled systems keep the two forms consistent.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Explicit right-hand side `H(t, state, theta)` where `state` holds
/// `(f, f', ..., f^(q-1))`.
pub type RhsFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// Binding function `F(t, h, theta)` where `h` holds `(f, f', ..., f^(q))`.
pub type BindingFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// Gradient of the binding function with respect to `theta`, written into the
/// output slice.
pub type BindingGradFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// Closed-form solution `f_theta(t)`, when one is known.
pub type ExactFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// Axis-aligned compact parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ThetaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("parameter box bounds must be non-empty and of equal length"));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(invalid(format!(
                    "parameter box coordinate {j} needs finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
    }

    pub fn clamp(&self, theta: &mut [f64]) {
        for (t, (lo, hi)) in theta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *t = t.clamp(*lo, *hi);
        }
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }
}

/// A `q`-th order ODE together with its initial conditions and parameter box.
///
/// Cheap to clone: the callables are shared behind `Arc`.
#[derive(Clone)]
pub struct OdeSystem {
    name: String,
    order: usize,
    param_dim: usize,
    rhs: Arc<RhsFn>,
    binding: Arc<BindingFn>,
    binding_dtheta: Arc<BindingGradFn>,
    init: Vec<f64>,
    theta_box: ThetaBox,
    exact: Option<Arc<ExactFn>>,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("param_dim", &self.param_dim)
            .field("init", &self.init)
            .field("theta_box", &self.theta_box)
            .finish_non_exhaustive()
    }
}

impl OdeSystem {
    /// Assembles a system from its parts. The binding function receives the
    /// state extended by the `q`-th derivative.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        order: usize,
        rhs: Arc<RhsFn>,
        binding: Arc<BindingFn>,
        binding_dtheta: Arc<BindingGradFn>,
        init: Vec<f64>,
        theta_box: ThetaBox,
    ) -> Result<Self> {
        if order == 0 {
            return Err(invalid("ODE order must be at least 1"));
        }
        if init.len() != order {
            return Err(invalid(format!(
                "expected {order} initial conditions, got {}",
                init.len()
            )));
        }
        if init.iter().any(|c| !c.is_finite()) {
            return Err(invalid("initial conditions must be finite"));
        }
        Ok(Self {
            name: name.into(),
            order,
            param_dim: theta_box.dim(),
            rhs,
            binding,
            binding_dtheta,
            init,
            theta_box,
            exact: None,
        })
    }

    /// Attaches a closed-form solution used as a test oracle.
    pub fn with_exact(mut self, exact: Arc<ExactFn>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_theta_box(mut self, theta_box: ThetaBox) -> Result<Self> {
        if theta_box.dim() != self.param_dim {
            return Err(invalid("replacement box has the wrong dimension"));
        }
        self.theta_box = theta_box;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn init_conditions(&self) -> &[f64] {
        &self.init
    }

    pub fn theta_box(&self) -> &ThetaBox {
        &self.theta_box
    }

    #[inline]
    pub fn rhs(&self, t: f64, state: &[f64], theta: &[f64]) -> f64 {
        (self.rhs)(t, state, theta)
    }

    #[inline]
    pub fn binding(&self, t: f64, h: &[f64], theta: &[f64]) -> f64 {
        (self.binding)(t, h, theta)
    }

    pub fn binding_dtheta(&self, t: f64, h: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.param_dim];
        (self.binding_dtheta)(t, h, theta, &mut out);
        out
    }

    pub fn exact_solution(&self, t: f64, theta: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|f| f(t, theta))
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact.is_some()
    }
}

/// Van der Pol oscillator `y'' = theta (1 - y^2) y' - y`, `y(0) = 2`, `y'(0) = 0`.
pub fn make_van_der_pol() -> OdeSystem {
    OdeSystem::new(
        "vdp",
        2,
        Arc::new(|_t, y: &[f64], th: &[f64]| th[0] * (1.0 - y[0] * y[0]) * y[1] - y[0]),
        Arc::new(|_t, h: &[f64], th: &[f64]| h[2] - th[0] * (1.0 - h[0] * h[0]) * h[1] + h[0]),
        Arc::new(|_t, h: &[f64], _th: &[f64], out: &mut [f64]| {
            out[0] = -(1.0 - h[0] * h[0]) * h[1];
        }),
        vec![2.0, 0.0],
        ThetaBox::new(vec![0.1], vec![10.0]).expect("static box"),
    )
    .expect("static system")
}

/// `y'' = -theta^2 y`, `y(0) = 1`, `y'(0) = 0`; solution `cos(theta t)`.
pub fn make_harmonic_oscillator() -> OdeSystem {
    OdeSystem::new(
        "harmonic",
        2,
        Arc::new(|_t, y: &[f64], th: &[f64]| -th[0] * th[0] * y[0]),
        Arc::new(|_t, h: &[f64], th: &[f64]| h[2] + th[0] * th[0] * h[0]),
        Arc::new(|_t, h: &[f64], th: &[f64], out: &mut [f64]| {
            out[0] = 2.0 * th[0] * h[0];
        }),
        vec![1.0, 0.0],
        ThetaBox::new(vec![0.1], vec![10.0]).expect("static box"),
    )
    .expect("static system")
    .with_exact(Arc::new(|t, th: &[f64]| (th[0] * t).cos()))
}

/// `y^(q) = 0`. The single parameter does not enter the equation, so the
/// solution is the Taylor polynomial of the initial conditions.
pub fn make_linear_null(q: usize, init: Vec<f64>) -> Result<OdeSystem> {
    if q == 0 {
        return Err(invalid("null model needs q >= 1"));
    }
    let coeffs = init.clone();
    let sys = OdeSystem::new(
        format!("null-q{q}"),
        q,
        Arc::new(|_t, _y: &[f64], _th: &[f64]| 0.0),
        Arc::new(move |_t, h: &[f64], _th: &[f64]| h[q]),
        Arc::new(|_t, _h: &[f64], _th: &[f64], out: &mut [f64]| out.fill(0.0)),
        init,
        ThetaBox::new(vec![0.1], vec![10.0]).expect("static box"),
    )?;
    Ok(sys.with_exact(Arc::new(move |t, _th: &[f64]| taylor(&coeffs, t))))
}

fn taylor(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    let mut term = 1.0;
    for (j, c) in coeffs.iter().enumerate() {
        if j > 0 {
            term *= t / j as f64;
        }
        acc += c * term;
    }
    acc
}

/// Glucose concentration under the glucose/hormone feedback system, reduced to
/// `g'' + 2 alpha g' + omega0^2 g = s` with constant forcing `J = 1`, so that
/// `s = m3`. Parameters are `(alpha, omega0^2, s)`; `g(0) = 1`, `g'(0) = 0`.
pub fn make_glucose() -> OdeSystem {
    OdeSystem::new(
        "glucose",
        2,
        Arc::new(|_t, y: &[f64], th: &[f64]| th[2] - 2.0 * th[0] * y[1] - th[1] * y[0]),
        Arc::new(|_t, h: &[f64], th: &[f64]| h[2] + 2.0 * th[0] * h[1] + th[1] * h[0] - th[2]),
        Arc::new(|_t, h: &[f64], _th: &[f64], out: &mut [f64]| {
            out[0] = 2.0 * h[1];
            out[1] = h[0];
            out[2] = -1.0;
        }),
        vec![1.0, 0.0],
        ThetaBox::new(vec![0.01, 0.01, 0.0], vec![5.0, 25.0, 10.0]).expect("static box"),
    )
    .expect("static system")
}

/// Looks a model up by its command-line name: `vdp`, `harmonic`,
/// `null-q<k>` (initial conditions all one) or `glucose`.
pub fn model_by_name(name: &str) -> Result<OdeSystem> {
    match name {
        "vdp" => Ok(make_van_der_pol()),
        "harmonic" => Ok(make_harmonic_oscillator()),
        "glucose" => Ok(make_glucose()),
        other => {
            let q = other
                .strip_prefix("null-q")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&q| q >= 1)
                .ok_or_else(|| Error::UnknownModel(other.to_string()))?;
            make_linear_null(q, vec![1.0; q])
        }
    }
}

/// Names accepted by [`model_by_name`], with `null-q<k>` shown for `k = 1..=4`.
pub fn catalog() -> Vec<&'static str> {
    vec!["vdp", "harmonic", "null-q1", "null-q2", "null-q3", "null-q4", "glucose"]
}
