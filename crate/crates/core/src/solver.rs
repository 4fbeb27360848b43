//! Four-stage Runge-Kutta scheme for explicit `q`-th order ODEs.
//!
//! The state carried between grid points is `z = (y, y', ..., y^(q-1))`. Each
//! step evaluates `H` at four stage arguments built from truncated Taylor
//! expansions of the state; whenever an expansion reaches `y^(q)` the most
//! recent available stage value stands in for it. The update is
//!
//! ```text
//! z'[v] = z[v] + h * Phi_v,   Phi_v = T_v + h^(q-v) / (q-v+1)! * sum_r gamma[v][r] k_r
//! ```
//!
//! with `T_v` the Taylor tail of the stored derivatives. For `q = 1` this is
//! the classical RK4 step and for `q = 2` a Nystrom-type method.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::model::OdeSystem;

/// Stage time offsets as fractions of the step.
const STAGE_TIMES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

/// Coefficients of the Taylor corrections in each stage argument; row `r`
/// multiplies `h^i * y^(v-1+i)` for `i = 1..=r`.
const STAGE_TAYLOR: [&[f64]; 4] = [&[], &[0.5], &[0.5, 0.25], &[1.0, 0.5, 0.25]];

/// Stage-combination weights `gamma[v][r]`, rows `v = 1..=q`.
pub fn gamma_coefficients(q: usize) -> Result<Vec<[f64; 4]>> {
    if q == 0 {
        return Err(invalid("gamma coefficients need q >= 1"));
    }
    Ok((1..=q)
        .map(|v| {
            let (num, denom) = gamma_row(q - v);
            num.map(|n| n / denom)
        })
        .collect())
}

/// Integer numerators and common denominator of the gamma row with `q - v = d`.
fn gamma_row(d: usize) -> ([f64; 4], f64) {
    let d = d as f64;
    let mid = 2.0 * (d + 1.0);
    ([(d + 1.0) * (d + 1.0), mid, mid, 1.0 - d], (d + 2.0) * (d + 3.0))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Precomputed constants for a fixed order, plus scratch space.
pub(crate) struct Stepper {
    q: usize,
    /// gamma numerators and denominators, rows `v = 1..=q`
    gamma: Vec<([f64; 4], f64)>,
    /// `1 / (j+1)!` for `j = 0..=q`
    inv_fact: Vec<f64>,
    stage: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(invalid("the ODE order must be at least 1"));
        }
        Ok(Self {
            q,
            gamma: (1..=q).map(|v| gamma_row(q - v)).collect(),
            inv_fact: (0..=q).map(|j| 1.0 / factorial(j + 1)).collect(),
            stage: vec![0.0; q],
        })
    }

    /// Advances `z` in place from `t` to `t + h`.
    pub(crate) fn step(
        &mut self,
        system: &OdeSystem,
        theta: &[f64],
        t: f64,
        z: &mut [f64],
        h: f64,
    ) -> Result<()> {
        let q = self.q;
        let mut k = [0.0f64; 4];
        for rho in 0..4 {
            for v in 0..q {
                // v is zero-based: stage argument U^(v+1) expands y^(v)
                let mut u = z[v];
                let mut hp = 1.0;
                for (i, c) in STAGE_TAYLOR[rho].iter().enumerate() {
                    let i = i + 1;
                    hp *= h;
                    let deriv = v + i;
                    if deriv < q {
                        u += c * hp * z[deriv];
                    } else if deriv == q {
                        // y^(q) is replaced by the stage value k_(rho - i)
                        u += c * hp * k[rho - i];
                    } else {
                        break;
                    }
                }
                self.stage[v] = u;
            }
            let kr = system.rhs(t + STAGE_TIMES[rho] * h, &self.stage, theta);
            if !kr.is_finite() {
                return Err(Error::Diverged { stage: rho + 1, t });
            }
            k[rho] = kr;
        }
        for v in 0..q {
            // Taylor tail T
            let mut tail = 0.0;
            let mut hp = 1.0;
            for j in v + 1..q {
                tail += z[j] * hp * self.inv_fact[j - v - 1];
                hp *= h;
            }
            // hp == h^(q-v-1) here
            let (g, denom) = &self.gamma[v];
            let comb = g[0] * k[0] + g[1] * k[1] + g[2] * k[2] + g[3] * k[3];
            let scale = h * hp * self.inv_fact[q - v - 1] / denom;
            z[v] += h * tail + scale * comb;
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { stage: 4, t });
        }
        Ok(())
    }
}

/// One step of the scheme from `(t, z)` with step size `h`.
pub fn rk_step(system: &OdeSystem, theta: &[f64], t: f64, z: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    if z.len() != system.order() {
        return Err(invalid("state length must equal the ODE order"));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(invalid("state must be finite"));
    }
    let mut out = z.to_vec();
    Stepper::new(system.order())?.step(system, theta, t, &mut out, h)?;
    Ok(out)
}

/// Trajectory of the solution and its first `q - 1` derivatives on the grid
/// `k / r_n`, `k = 0..=r_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    grid: Vec<f64>,
    states: Vec<f64>,
    order: usize,
    theta: Vec<f64>,
    step: f64,
}

impl GridSolution {
    pub fn grid_points(&self) -> &[f64] {
        &self.grid
    }

    pub fn intervals(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `(y, y', ..., y^(q-1))` at grid point `k`.
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.order..(k + 1) * self.order]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.states[k * self.order]
    }

    /// Row-per-grid-point view as an `(r_n + 1) x q` matrix.
    pub fn states_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.grid.len(), self.order, &self.states)
    }

    fn locate(&self, t: f64) -> usize {
        let r_n = self.intervals();
        let mut k = ((t / self.step).floor() as usize).min(r_n);
        if k < r_n && self.grid[k + 1] <= t {
            k += 1;
        }
        while k > 0 && self.grid[k] > t {
            k -= 1;
        }
        k
    }

    /// Value of the solution at `t` from the local Taylor expansion around
    /// the nearest grid point at or below `t`, using `H` for the `q`-th
    /// derivative. Exact at grid points.
    pub fn eval_dense(&self, system: &OdeSystem, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain {
                what: "evaluation time".into(),
                value: t,
            });
        }
        Ok(self.eval_unchecked(system, t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, system: &OdeSystem, t: f64) -> f64 {
        let k = self.locate(t);
        let z = self.state(k);
        let dt = t - self.grid[k];
        if dt == 0.0 {
            return z[0];
        }
        let mut acc = z[0];
        let mut term = 1.0;
        for (j, zj) in z.iter().enumerate().skip(1) {
            term *= dt / j as f64;
            acc += zj * term;
        }
        term *= dt / self.order as f64;
        acc + system.rhs(self.grid[k], z, &self.theta) * term
    }

    /// Dense evaluation at many points; every point must lie in `[0, 1]`.
    pub fn eval_many(&self, system: &OdeSystem, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.eval_dense(system, t)).collect()
    }
}

/// Integrates `system` over `[0, 1]` with `r_n` equal steps.
pub fn solve(system: &OdeSystem, theta: &[f64], r_n: usize) -> Result<GridSolution> {
    if r_n < 2 {
        return Err(invalid(format!("need at least 2 grid intervals, got {r_n}")));
    }
    if !system.theta_box().contains(theta) {
        return Err(Error::ThetaOutsideBox {
            theta: theta.to_vec(),
        });
    }
    let q = system.order();
    let step = 1.0 / r_n as f64;
    let grid: Vec<f64> = (0..=r_n).map(|k| k as f64 * step).collect();
    let mut states = Vec::with_capacity((r_n + 1) * q);
    states.extend_from_slice(system.init_conditions());
    let mut z = system.init_conditions().to_vec();
    let mut stepper = Stepper::new(q)?;
    for &t in &grid[..r_n] {
        stepper.step(system, theta, t, &mut z, step)?;
        states.extend_from_slice(&z);
    }
    Ok(GridSolution {
        grid,
        states,
        order: q,
        theta: theta.to_vec(),
        step,
    })
}

const SENS_REL_STEP: f64 = 1e-5;
const SENS_ABS_STEP: f64 = 1e-7;

/// `d f_{theta, r_n}(t) / d theta` at each time in `t_list` by central
/// differences, returned as a `|t_list| x p` matrix.
pub fn sensitivity(
    system: &OdeSystem,
    theta: &[f64],
    r_n: usize,
    t_list: &[f64],
) -> Result<DMatrix<f64>> {
    sensitivity_with_step(system, theta, r_n, t_list, 1.0)
}

/// As [`sensitivity`] with the default finite-difference step multiplied by
/// `step_scale`.
pub fn sensitivity_with_step(
    system: &OdeSystem,
    theta: &[f64],
    r_n: usize,
    t_list: &[f64],
    step_scale: f64,
) -> Result<DMatrix<f64>> {
    let bx = system.theta_box();
    if !bx.contains(theta) {
        return Err(Error::ThetaOutsideBox {
            theta: theta.to_vec(),
        });
    }
    if let Some(&t) = t_list.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::OutOfDomain {
            what: "sensitivity time".into(),
            value: t,
        });
    }
    let p = system.param_dim();
    let mut out = DMatrix::zeros(t_list.len(), p);
    for j in 0..p {
        let base = (SENS_REL_STEP * theta[j].abs()).max(SENS_ABS_STEP) * step_scale;
        let below = theta[j] - bx.lower()[j];
        let above = bx.upper()[j] - theta[j];
        let mut delta = base;
        if delta > below.min(above) {
            // one retry with a smaller step that fits inside the box
            delta = (delta * 0.1).min(0.5 * below.min(above));
        }
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        if delta > 0.0 {
            up[j] += delta;
            dn[j] -= delta;
        } else if above >= below {
            // on the lower face: one-sided difference into the box
            up[j] += base.min(above);
        } else {
            dn[j] -= base.min(below);
        }
        let sol_up = solve(system, &up, r_n)?;
        let sol_dn = solve(system, &dn, r_n)?;
        for (i, &t) in t_list.iter().enumerate() {
            let diff = sol_up.eval_unchecked(system, t) - sol_dn.eval_unchecked(system, t);
            out[(i, j)] = diff / (up[j] - dn[j]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_harmonic_oscillator, make_linear_null, make_van_der_pol, ThetaBox};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn scalar_system(rhs: fn(f64, f64, f64) -> f64) -> OdeSystem {
        OdeSystem::new(
            "scalar",
            1,
            Arc::new(move |t, y: &[f64], th: &[f64]| rhs(t, y[0], th[0])),
            Arc::new(move |t, h: &[f64], th: &[f64]| h[1] - rhs(t, h[0], th[0])),
            Arc::new(|_t, _h: &[f64], _th: &[f64], out: &mut [f64]| out.fill(f64::NAN)),
            vec![0.5],
            ThetaBox::new(vec![-5.0], vec![5.0]).unwrap(),
        )
        .unwrap()
    }

    fn classical_rk4(f: impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> f64 {
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(t + h, y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Stage arguments written out cell by cell for q = 2 and q = 3, used to
    /// check the general substitution rule.
    fn tabulated_step(q: usize, hfun: &dyn Fn(f64, &[f64]) -> f64, t: f64, z: &[f64], h: f64) -> Vec<f64> {
        let r = 1.0 / h;
        match q {
            2 => {
                let (y0, y1) = (z[0], z[1]);
                let k1 = hfun(t, &[y0, y1]);
                let k2 = hfun(t + h / 2.0, &[y0 + y1 / (2.0 * r), y1 + k1 / (2.0 * r)]);
                let k3 = hfun(
                    t + h / 2.0,
                    &[y0 + y1 / (2.0 * r) + k1 / (4.0 * r * r), y1 + k2 / (2.0 * r)],
                );
                let k4 = hfun(t + h, &[y0 + y1 / r + k2 / (2.0 * r * r), y1 + k3 / r]);
                let phi1 = y1 + (1.0 / (r * 2.0)) * (k1 + k2 + k3) / 3.0;
                let phi2 = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                vec![y0 + h * phi1, y1 + h * phi2]
            }
            3 => {
                let (y0, y1, y2) = (z[0], z[1], z[2]);
                let k1 = hfun(t, &[y0, y1, y2]);
                let k2 = hfun(
                    t + h / 2.0,
                    &[y0 + y1 / (2.0 * r), y1 + y2 / (2.0 * r), y2 + k1 / (2.0 * r)],
                );
                let k3 = hfun(
                    t + h / 2.0,
                    &[
                        y0 + y1 / (2.0 * r) + y2 / (4.0 * r * r),
                        y1 + y2 / (2.0 * r) + k1 / (4.0 * r * r),
                        y2 + k2 / (2.0 * r),
                    ],
                );
                let k4 = hfun(
                    t + h,
                    &[
                        y0 + y1 / r + y2 / (2.0 * r * r) + k1 / (4.0 * r * r * r),
                        y1 + y2 / r + k2 / (2.0 * r * r),
                        y2 + k3 / r,
                    ],
                );
                let g = gamma_coefficients(3).unwrap();
                let comb = |v: usize| {
                    g[v][0] * k1 + g[v][1] * k2 + g[v][2] * k3 + g[v][3] * k4
                };
                let phi1 = y1 + y2 / (2.0 * r) + comb(0) / (r * r * 6.0);
                let phi2 = y2 + comb(1) / (r * 2.0);
                let phi3 = comb(2);
                vec![y0 + h * phi1, y1 + h * phi2, y2 + h * phi3]
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn gamma_rows() {
        let g1 = gamma_coefficients(1).unwrap();
        assert_eq!(g1, vec![[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]]);
        let g2 = gamma_coefficients(2).unwrap();
        for (a, b) in g2[0].iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!((a - b).abs() < 1e-16);
        }
        assert_eq!(g2[1], g1[0]);
        for q in 1..8 {
            let g = gamma_coefficients(q).unwrap();
            assert_eq!(*g.last().unwrap(), g1[0]);
            for row in &g {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
        assert!(gamma_coefficients(0).is_err());
    }

    #[test]
    fn reduces_to_classical_rk4() {
        let rhs = |t: f64, y: f64, th: f64| th * y.sin() - t * y + 0.3 * t * t;
        let sys = scalar_system(rhs);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t: f64 = rng.random();
            let y: f64 = rng.random_range(-2.0..2.0);
            let th: f64 = rng.random_range(-3.0..3.0);
            let h: f64 = rng.random_range(1e-3..0.2);
            let ours = rk_step(&sys, &[th], t, &[y], h).unwrap()[0];
            let reference = classical_rk4(|t, y| rhs(t, y, th), t, y, h);
            assert!((ours - reference).abs() <= 1e-13, "{ours} vs {reference}");
        }
    }

    #[test]
    fn matches_tabulated_stage_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vdp = make_van_der_pol();
        let vdp_h = |t: f64, y: &[f64]| vdp.rhs(t, y, &[1.3]);
        for _ in 0..50 {
            let z = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let t: f64 = rng.random();
            let h: f64 = rng.random_range(1e-3..0.1);
            let ours = rk_step(&vdp, &[1.3], t, &z, h).unwrap();
            let table = tabulated_step(2, &vdp_h, t, &z, h);
            for (a, b) in ours.iter().zip(&table) {
                assert!((a - b).abs() < 1e-13);
            }
        }
        let third = OdeSystem::new(
            "third",
            3,
            Arc::new(|t, y: &[f64], th: &[f64]| th[0] * y[0] * y[1] - y[2].cos() + t),
            Arc::new(|t, h: &[f64], th: &[f64]| h[3] - (th[0] * h[0] * h[1] - h[2].cos() + t)),
            Arc::new(|_t, h: &[f64], _th: &[f64], out: &mut [f64]| out[0] = -h[0] * h[1]),
            vec![0.0, 1.0, 0.0],
            ThetaBox::new(vec![-2.0], vec![2.0]).unwrap(),
        )
        .unwrap();
        let third_h = |t: f64, y: &[f64]| third.rhs(t, y, &[0.7]);
        for _ in 0..50 {
            let z = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            let t: f64 = rng.random();
            let h: f64 = rng.random_range(1e-3..0.1);
            let ours = rk_step(&third, &[0.7], t, &z, h).unwrap();
            let table = tabulated_step(3, &third_h, t, &z, h);
            for (a, b) in ours.iter().zip(&table) {
                assert!((a - b).abs() < 1e-13, "{ours:?} vs {table:?}");
            }
        }
    }

    #[test]
    fn null_model_step_is_a_shift() {
        let sys = make_linear_null(2, vec![0.0, 0.0]).unwrap();
        let out = rk_step(&sys, &[1.0], 0.2, &[1.5, -0.25], 0.37).unwrap();
        assert_eq!(out, vec![1.5 + 0.37 * -0.25, -0.25]);
    }

    #[test]
    fn harmonic_single_step() {
        let sys = make_harmonic_oscillator();
        let h = 0.01;
        let out = rk_step(&sys, &[2.0], 0.0, &[1.0, 0.0], h).unwrap();
        assert!((out[0] - (2.0 * h).cos()).abs() < h.powi(3));
        assert!((out[1] + 2.0 * (2.0 * h).sin()).abs() < h.powi(3));
    }

    #[test]
    fn rejects_bad_step_and_state() {
        let sys = make_harmonic_oscillator();
        assert!(rk_step(&sys, &[2.0], 0.0, &[1.0, 0.0], 0.0).is_err());
        assert!(rk_step(&sys, &[2.0], 0.0, &[f64::NAN, 0.0], 0.1).is_err());
        assert!(rk_step(&sys, &[2.0], 0.0, &[1.0], 0.1).is_err());
    }

    #[test]
    fn divergence_reports_stage() {
        let sys = scalar_system(|_t, y, _th| y * y * 1e200);
        let err = rk_step(&sys, &[0.0], 0.0, &[1e100], 0.5).unwrap_err();
        assert!(matches!(err, Error::Diverged { stage: 1, .. }), "{err:?}");
    }

    #[test]
    fn polynomial_solutions_are_exact() {
        for (q, init) in [
            (1, vec![5.0]),
            (2, vec![1.0, -2.0]),
            (3, vec![0.0, 0.0, 2.0]),
            (4, vec![1.0, 0.5, -1.0, 3.0]),
        ] {
            let sys = make_linear_null(q, init).unwrap();
            for r_n in [2, 7, 64] {
                let sol = solve(&sys, &[1.0], r_n).unwrap();
                assert_eq!(sol.state(0), sys.init_conditions());
                for (k, &a) in sol.grid_points().iter().enumerate() {
                    let exact = sys.exact_solution(a, &[1.0]).unwrap();
                    assert!((sol.value(k) - exact).abs() < 1e-13, "q={q} r_n={r_n} k={k}");
                }
            }
        }
        let sys = make_linear_null(3, vec![0.0, 0.0, 2.0]).unwrap();
        let sol = solve(&sys, &[1.0], 40).unwrap();
        for (k, &a) in sol.grid_points().iter().enumerate() {
            assert!((sol.value(k) - a * a).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn grid_layout() {
        let sol = solve(&make_van_der_pol(), &[1.0], 10).unwrap();
        assert_eq!(sol.grid_points().len(), 11);
        for (k, &a) in sol.grid_points().iter().enumerate() {
            assert_eq!(a, k as f64 * 0.1);
        }
        assert_eq!(sol.step(), 0.1);
        assert_eq!(sol.states_matrix().shape(), (11, 2));
    }

    fn harmonic_sup_error(r_n: usize) -> f64 {
        let sys = make_harmonic_oscillator();
        let sol = solve(&sys, &[2.0], r_n).unwrap();
        sol.grid_points()
            .iter()
            .enumerate()
            .map(|(k, &a)| (sol.value(k) - (2.0 * a).cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn harmonic_error_decreases() {
        let e100 = harmonic_sup_error(100);
        let e200 = harmonic_sup_error(200);
        assert!(e200 < e100);
        let order = (e100 / e200).log2();
        eprintln!("harmonic sup error {e100:.3e} -> {e200:.3e}, observed order {order:.2}");
        assert!(order >= 1.0);
    }

    #[test]
    fn van_der_pol_self_convergence() {
        let sys = make_van_der_pol();
        let reference = solve(&sys, &[1.0], 3200).unwrap();
        let mut last = f64::INFINITY;
        for r_n in [100, 200, 400, 800] {
            let sol = solve(&sys, &[1.0], r_n).unwrap();
            let stride = 3200 / r_n;
            let mut sup = 0.0f64;
            for k in 0..=r_n {
                for (a, b) in sol.state(k).iter().zip(reference.state(k * stride)) {
                    sup = sup.max((a - b).abs());
                }
            }
            assert!(sup < last, "r_n={r_n}: {sup} !< {last}");
            last = sup;
        }
    }

    #[test]
    fn out_of_box_and_short_grid() {
        let sys = make_van_der_pol();
        assert!(matches!(
            solve(&sys, &[20.0], 10),
            Err(Error::ThetaOutsideBox { .. })
        ));
        assert!(solve(&sys, &[1.0], 1).is_err());
    }

    #[test]
    fn dense_evaluation() {
        let sys = make_harmonic_oscillator();
        let sol = solve(&sys, &[2.0], 400).unwrap();
        for k in [0, 1, 17, 200, 399, 400] {
            assert_eq!(sol.eval_dense(&sys, sol.grid_points()[k]).unwrap(), sol.value(k));
        }
        let grid_err = (0..=400)
            .map(|k| (sol.value(k) - (2.0 * sol.grid_points()[k]).cos()).abs())
            .fold(0.0, f64::max);
        let t = 0.375 + 0.3 / 400.0;
        let v = sol.eval_dense(&sys, t).unwrap();
        assert!((v - (2.0 * t).cos()).abs() < grid_err + 1.0 / 400.0f64.powi(2));
        let v = sol.eval_dense(&sys, 0.375).unwrap();
        assert!((v - 0.75f64.cos()).abs() < grid_err + 1.0 / 400.0f64.powi(2));

        let line = make_linear_null(2, vec![0.7, -1.3]).unwrap();
        let sol = solve(&line, &[1.0], 9).unwrap();
        for t in [0.0, 0.05, 0.333, 0.9999, 1.0] {
            let v = sol.eval_dense(&line, t).unwrap();
            assert!((v - (0.7 - 1.3 * t)).abs() < 1e-14);
        }
        assert!(matches!(
            sol.eval_dense(&line, 1.5),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(sol.eval_dense(&line, -0.1).is_err());
    }

    #[test]
    fn sensitivities() {
        let null = make_linear_null(2, vec![1.0, 1.0]).unwrap();
        let s = sensitivity(&null, &[1.0], 50, &[0.0, 0.5, 1.0]).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));

        let osc = make_harmonic_oscillator();
        let ts = [0.1, 0.4, 0.77, 1.0];
        let s = sensitivity(&osc, &[2.0], 400, &ts).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            assert!((s[(i, 0)] + t * (2.0 * t).sin()).abs() < 1e-3);
        }

        let vdp = make_van_der_pol();
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let a = sensitivity_with_step(&vdp, &[1.0], 100, &ts, 1.0).unwrap();
        let b = sensitivity_with_step(&vdp, &[1.0], 100, &ts, 0.5).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-4 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn sensitivity_near_boundary() {
        let vdp = make_van_der_pol();
        // step 1e-5 * 0.1 does not fit: shrinks once
        let s = sensitivity(&vdp, &[0.1 + 5e-7], 50, &[0.5]).unwrap();
        assert!(s[(0, 0)].is_finite());
        // on the face: one-sided difference
        let face = sensitivity(&vdp, &[0.1], 50, &[0.5]).unwrap()[(0, 0)];
        assert!((face - s[(0, 0)]).abs() < 1e-3 * s[(0, 0)].abs());
        assert!(sensitivity(&vdp, &[0.05], 50, &[0.5]).is_err());
    }

    #[test]
    fn deterministic() {
        let sys = make_van_der_pol();
        assert_eq!(solve(&sys, &[2.5], 333).unwrap(), solve(&sys, &[2.5], 333).unwrap());
    }
}
