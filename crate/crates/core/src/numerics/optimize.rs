//! Multistart minimization over an axis-aligned box.
//!
//! One-dimensional problems split the interval into `starts` equal strata and
//! run a golden-section search in each; higher-dimensional problems run a
//! clamped Nelder-Mead simplex from Latin-hypercube start points. Every
//! evaluated point competes for the result, with ties going to the
//! lexicographically smallest parameter, so the minimizer is a deterministic
//! function of the objective.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ThetaBox;

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const LHS_SEED: u64 = 0x5eed_1a7e_c0de;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimOptions {
    /// Number of strata (1-D) or Latin-hypercube start points.
    pub starts: usize,
    /// Relative tolerance: golden-section brackets shrink below `tol` times
    /// the box width; simplex searches stop when objective values across the
    /// simplex differ by less than `tol`.
    pub tol: f64,
    /// Evaluation budget per start for the simplex search.
    pub max_evals: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            tol: 1e-8,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimum {
    pub theta: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub theta: Vec<f64>,
    pub value: f64,
    /// Best point found from each start.
    pub local: Vec<LocalMinimum>,
    pub evaluations: usize,
}

impl Minimum {
    /// Whether some start ended within `value_tol` of the best objective
    /// value but further than `sep` from the minimizer in some coordinate.
    pub fn is_ambiguous(&self, sep: f64, value_tol: f64) -> bool {
        self.local.iter().any(|m| {
            (m.value - self.value).abs() <= value_tol
                && m.theta
                    .iter()
                    .zip(&self.theta)
                    .any(|(a, b)| (a - b).abs() > sep)
        })
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn better(value: f64, theta: &[f64], than_value: f64, than_theta: &[f64]) -> bool {
    value < than_value || (value == than_value && lex_cmp(theta, than_theta) == Ordering::Less)
}

struct Tracker<F> {
    objective: F,
    best_value: f64,
    best_theta: Vec<f64>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, theta: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.objective)(theta);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if self.best_theta.is_empty() || better(v, theta, self.best_value, &self.best_theta) {
            self.best_value = v;
            self.best_theta = theta.to_vec();
        }
        v
    }
}

/// Minimizes `objective` over `bounds`. Non-finite objective values are
/// treated as `+inf`; the call fails only if no finite value was seen.
pub fn minimize_box<F>(objective: F, bounds: &ThetaBox, opts: &OptimOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    if opts.starts == 0 {
        return Err(invalid("optimizer needs at least one start"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("optimizer tolerance must be positive"));
    }
    let mut tracker = Tracker {
        objective,
        best_value: f64::INFINITY,
        best_theta: Vec::new(),
        evaluations: 0,
    };
    let local = if bounds.dim() == 1 {
        golden_multistart(&mut tracker, bounds, opts)
    } else {
        simplex_multistart(&mut tracker, bounds, opts)
    };
    if !tracker.best_value.is_finite() {
        return Err(Error::OptimizationFailed(
            "objective was non-finite at every evaluated point".into(),
        ));
    }
    Ok(Minimum {
        theta: tracker.best_theta,
        value: tracker.best_value,
        local,
        evaluations: tracker.evaluations,
    })
}

fn golden_multistart<F: FnMut(&[f64]) -> f64>(
    tr: &mut Tracker<F>,
    bounds: &ThetaBox,
    opts: &OptimOptions,
) -> Vec<LocalMinimum> {
    let lo = bounds.lower()[0];
    let width = bounds.width(0);
    let xtol = opts.tol * width;
    let strata = opts.starts;
    let mut edges: Vec<f64> = (0..=strata)
        .map(|i| lo + width * i as f64 / strata as f64)
        .collect();
    edges[strata] = bounds.upper()[0];
    let edge_values: Vec<f64> = edges.iter().map(|&x| tr.eval(&[x])).collect();

    let mut local = Vec::with_capacity(strata);
    for s in 0..strata {
        let (mut a, mut b) = (edges[s], edges[s + 1]);
        let mut best = if better(edge_values[s + 1], &[b], edge_values[s], &[a]) {
            (b, edge_values[s + 1])
        } else {
            (a, edge_values[s])
        };
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = tr.eval(&[c]);
        let mut fd = tr.eval(&[d]);
        for (x, f) in [(c, fc), (d, fd)] {
            if better(f, &[x], best.1, &[best.0]) {
                best = (x, f);
            }
        }
        while b - a > xtol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = tr.eval(&[c]);
                if better(fc, &[c], best.1, &[best.0]) {
                    best = (c, fc);
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = tr.eval(&[d]);
                if better(fd, &[d], best.1, &[best.0]) {
                    best = (d, fd);
                }
            }
        }
        local.push(LocalMinimum {
            theta: vec![best.0],
            value: best.1,
        });
    }
    local
}

/// Centered Latin-hypercube design with a fixed permutation seed.
pub fn latin_hypercube(bounds: &ThetaBox, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(LHS_SEED);
    let p = bounds.dim();
    let perms: Vec<Vec<usize>> = (0..p)
        .map(|_| {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    bounds.lower()[j]
                        + bounds.width(j) * (perms[j][i] as f64 + 0.5) / n as f64
                })
                .collect()
        })
        .collect()
}

fn simplex_multistart<F: FnMut(&[f64]) -> f64>(
    tr: &mut Tracker<F>,
    bounds: &ThetaBox,
    opts: &OptimOptions,
) -> Vec<LocalMinimum> {
    latin_hypercube(bounds, opts.starts)
        .into_iter()
        .map(|start| {
            let first = nelder_mead(tr, bounds, &start, opts);
            // restart once from the end point to escape a collapsed simplex
            let second = nelder_mead(tr, bounds, &first.theta, opts);
            if better(second.value, &second.theta, first.value, &first.theta) {
                second
            } else {
                first
            }
        })
        .collect()
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    tr: &mut Tracker<F>,
    bounds: &ThetaBox,
    start: &[f64],
    opts: &OptimOptions,
) -> LocalMinimum {
    let p = start.len();
    let clamp = |mut x: Vec<f64>| {
        bounds.clamp(&mut x);
        x
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    simplex.push(start.to_vec());
    for j in 0..p {
        let mut v = start.to_vec();
        let step = 0.1 * bounds.width(j);
        v[j] = if v[j] + step <= bounds.upper()[j] {
            v[j] + step
        } else {
            v[j] - step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| tr.eval(x)).collect();
    let budget = tr.evaluations + opts.max_evals;
    let xtol = opts.tol.sqrt();

    loop {
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(&simplex[a], &simplex[b]))
        });
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[p] - values[0];
        let diameter = (1..=p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .map(|(i, j)| (simplex[i][j] - simplex[0][j]).abs() / bounds.width(j))
            .fold(0.0, f64::max);
        let converged = values[0].is_finite() && spread <= opts.tol && diameter <= xtol;
        if converged || tr.evaluations >= budget {
            break;
        }

        let centroid: Vec<f64> = (0..p)
            .map(|j| simplex[..p].iter().map(|x| x[j]).sum::<f64>() / p as f64)
            .collect();
        let towards = |coef: f64| -> Vec<f64> {
            clamp(
                (0..p)
                    .map(|j| centroid[j] + coef * (simplex[p][j] - centroid[j]))
                    .collect(),
            )
        };
        let xr = towards(-1.0);
        let fr = tr.eval(&xr);
        if fr < values[0] {
            let xe = towards(-2.0);
            let fe = tr.eval(&xe);
            if fe < fr {
                simplex[p] = xe;
                values[p] = fe;
            } else {
                simplex[p] = xr;
                values[p] = fr;
            }
        } else if fr < values[p - 1] {
            simplex[p] = xr;
            values[p] = fr;
        } else {
            let (xc, fc) = if fr < values[p] {
                let xc = towards(-0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            } else {
                let xc = towards(0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            };
            if fc < values[p].min(fr) {
                simplex[p] = xc;
                values[p] = fc;
            } else {
                for i in 1..=p {
                    let shrunk: Vec<f64> = (0..p)
                        .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                        .collect();
                    values[i] = tr.eval(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    LocalMinimum {
        theta: simplex[0].clone(),
        value: values[0],
    }
}
