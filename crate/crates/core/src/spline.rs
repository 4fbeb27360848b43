//! B-spline regression with a conjugate Gaussian prior on the coefficients.
//!
//! The basis has order `m` (degree `m - 1`) on `[0, 1]` with `k_n - 1`
//! uniform interior knots and clamped boundary knots, giving `k_n + m - 1`
//! functions. With the prior `beta | sigma^2 ~ N(0, sigma^2 n^2 / k_n I)` the
//! conditional posterior is `N(A^-1 X'y, sigma^2 A^-1)` where
//! `A = X'X + (k_n / n^2) I`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::numerics::sample_inverse_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    order: usize,
    kn: usize,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new(order_m: usize, kn: usize) -> Result<Self> {
        if order_m < 2 {
            return Err(invalid(format!("spline order must be at least 2, got {order_m}")));
        }
        if kn == 0 {
            return Err(invalid("k_n must be positive"));
        }
        let mut knots = vec![0.0; order_m];
        knots.extend((1..kn).map(|j| j as f64 / kn as f64));
        knots.extend(std::iter::repeat_n(1.0, order_m));
        Ok(Self {
            order: order_m,
            kn,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kn(&self) -> usize {
        self.kn
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn basis_dim(&self) -> usize {
        self.kn + self.order - 1
    }

    /// Highest derivative order that [`SplineBasis::eval`] accepts.
    pub fn max_derivative(&self) -> usize {
        self.order - 2
    }

    fn span(&self, t: f64) -> usize {
        let p = self.order - 1;
        let mut i = p + ((t * self.kn as f64).floor() as usize).min(self.kn - 1);
        while i > p && self.knots[i] > t {
            i -= 1;
        }
        while i < p + self.kn - 1 && self.knots[i + 1] <= t {
            i += 1;
        }
        i
    }

    fn check(&self, t: f64, deriv: usize) -> Result<()> {
        if deriv > self.max_derivative() {
            return Err(Error::UnsupportedDerivative {
                requested: deriv,
                max: self.max_derivative(),
            });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain {
                what: "spline argument".into(),
                value: t,
            });
        }
        Ok(())
    }

    /// Derivatives `0..=max_deriv` of the `m` basis functions that are
    /// nonzero at `t`. Returns the index of the first of them and a row per
    /// derivative order.
    pub fn eval_nonzero(&self, t: f64, max_deriv: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        self.check(t, max_deriv)?;
        Ok(self.ders_basis_funs(t, max_deriv))
    }

    // Cox-de Boor triangle with derivative recurrences (Piegl & Tiller A2.3).
    fn ders_basis_funs(&self, t: f64, nd: usize) -> (usize, Vec<Vec<f64>>) {
        let p = self.order - 1;
        let i = self.span(t);
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[i + 1 - j];
            right[j] = u[i + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd {
                let mut d = 0.0;
                let rk = r as i64 - k as i64;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as i64 - 1 <= pk as i64 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as i64) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        (i - p, ders)
    }

    /// All `basis_dim` basis values (or their `deriv`-th derivatives) at `t`.
    /// At `t = 1` the left limit is used.
    pub fn eval(&self, t: f64, deriv: usize) -> Result<Vec<f64>> {
        let (first, ders) = self.eval_nonzero(t, deriv)?;
        let mut out = vec![0.0; self.basis_dim()];
        out[first..first + self.order].copy_from_slice(&ders[deriv]);
        Ok(out)
    }

    /// Matrix with row `i` holding the `deriv`-th derivatives of the basis at
    /// `ts[i]`.
    pub fn derivative_matrix(&self, ts: &[f64], deriv: usize) -> Result<DMatrix<f64>> {
        let mut x = DMatrix::zeros(ts.len(), self.basis_dim());
        for (i, &t) in ts.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfDomain {
                    what: format!("covariate {i}"),
                    value: t,
                });
            }
            let (first, ders) = self.eval_nonzero(t, deriv)?;
            for (j, v) in ders[deriv].iter().enumerate() {
                x[(i, first + j)] = *v;
            }
        }
        Ok(x)
    }

    /// The `n x basis_dim` design matrix of basis values at the covariates.
    pub fn design_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.derivative_matrix(x, 0)
    }
}

/// Conjugate posterior of the spline coefficients and the error variance.
#[derive(Debug, Clone)]
pub struct SplinePosterior {
    basis: SplineBasis,
    mean: DVector<f64>,
    precision: Cholesky<f64, Dyn>,
    sigma2_shape: f64,
    sigma2_scale: f64,
    n_obs: usize,
    ridge: f64,
}

/// Fits the posterior with the default prior dispersion `sigma^2 n^2 / k_n`.
pub fn fit_posterior(
    basis: &SplineBasis,
    x: &[f64],
    y: &[f64],
    prior_a: f64,
    prior_b: f64,
) -> Result<SplinePosterior> {
    fit_posterior_scaled(basis, x, y, prior_a, prior_b, 1.0)
}

/// As [`fit_posterior`] with the prior variance multiplied by `dispersion`,
/// so the ridge added to `X'X` is `k_n / (n^2 dispersion)`.
pub fn fit_posterior_scaled(
    basis: &SplineBasis,
    x: &[f64],
    y: &[f64],
    prior_a: f64,
    prior_b: f64,
    dispersion: f64,
) -> Result<SplinePosterior> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(invalid("spline fit needs a non-empty sample with matching x and y"));
    }
    if !(prior_a > 0.0) || !(prior_b > 0.0) {
        return Err(invalid("inverse gamma prior parameters must be positive"));
    }
    if !(dispersion > 0.0) {
        return Err(invalid("prior dispersion must be positive"));
    }
    let design = basis.design_matrix(x)?;
    let yv = DVector::from_column_slice(y);
    let ridge = basis.kn() as f64 / (n as f64 * n as f64 * dispersion);
    let mut a = design.tr_mul(&design);
    for j in 0..a.nrows() {
        a[(j, j)] += ridge;
    }
    let xty = design.tr_mul(&yv);
    let precision = Cholesky::new(a)
        .ok_or_else(|| Error::SingularDesign("X'X + ridge is not positive definite".into()))?;
    let mean = precision.solve(&xty);
    let quad = yv.dot(&yv) - xty.dot(&mean);
    Ok(SplinePosterior {
        basis: basis.clone(),
        mean,
        precision,
        sigma2_shape: prior_a + n as f64 / 2.0,
        sigma2_scale: prior_b + 0.5 * quad.max(0.0),
        n_obs: n,
        ridge,
    })
}

impl SplinePosterior {
    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Lower-triangular `L` with `L L' = X'X + ridge I`.
    pub fn precision_factor(&self) -> DMatrix<f64> {
        self.precision.l()
    }

    /// `(X'X + ridge I)^-1`, the coefficient covariance per unit `sigma^2`.
    pub fn unit_covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }

    pub fn sigma2_shape(&self) -> f64 {
        self.sigma2_shape
    }

    pub fn sigma2_scale(&self) -> f64 {
        self.sigma2_scale
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn sample_sigma2<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        sample_inverse_gamma(self.sigma2_shape, self.sigma2_scale, rng)
    }

    /// One draw of `beta` given `sigma2`.
    pub fn sample_beta<R: Rng + ?Sized>(&self, sigma2: f64, rng: &mut R) -> Result<DVector<f64>> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("sigma2 must be non-negative, got {sigma2}")));
        }
        let dim = self.mean.len();
        let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        // L' v = z gives v ~ N(0, (L L')^-1)
        let v = self
            .precision
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::SingularDesign("degenerate precision factor".into()))?;
        Ok(&self.mean + v * sigma2.sqrt())
    }
}
