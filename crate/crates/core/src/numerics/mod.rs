//! Shared numerical kernels: quadrature on `[0, 1]`, box-constrained
//! minimization and random variates.

pub mod optimize;
pub mod quadrature;
pub mod random;

pub use optimize::{minimize_box, Minimum, OptimOptions};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use random::{sample_inverse_gamma, sample_normal, stream, Stream};
