//! Parameter inference for regression functions that solve a `q`-th order
//! ordinary differential equation.
//!
//! Three posterior constructions are provided next to a least-squares
//! baseline:
//!
//! * [`rksb`]: Metropolis-within-Gibbs on `(theta, sigma^2)` with a likelihood
//!   built from the Runge-Kutta solution of the ODE.
//! * [`rktb`]: B-spline posterior draws projected onto the family of
//!   Runge-Kutta solutions in weighted `L2`.
//! * [`ts`]: B-spline posterior draws projected by minimizing the weighted
//!   norm of the ODE residual evaluated on the spline and its derivatives.
//! * [`nls`]: least squares with asymptotic normal confidence intervals.
//!
//! [`sim`] runs coverage studies over replicated synthetic data sets.

pub mod data;
pub mod draws;
pub mod error;
pub mod model;
pub mod nls;
pub mod numerics;
mod projection;
pub mod rksb;
pub mod rktb;
pub mod sim;
pub mod solver;
pub mod spline;
pub mod ts;

pub use data::Dataset;
pub use draws::{equal_tailed_interval, Method, PosteriorDraws};
pub use error::{Error, Result};
pub use model::{model_by_name, OdeSystem, ThetaBox};
pub use solver::{solve, GridSolution};
