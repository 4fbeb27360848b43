//! Replicated coverage studies on synthetic data and the asymptotic interval
//! length they are compared against.
//!
//! Every replication draws its own data set and method streams from
//! `(seed, replication index)`, so results do not depend on how replications
//! are scheduled across threads.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::draws::Method;
use crate::error::{invalid, Error, Result};
use crate::model::{model_by_name, OdeSystem};
use crate::nls::fit_nls;
use crate::numerics::{stream, OptimOptions, QuadratureRule};
use crate::rksb::{run_rksb, RksbConfig};
use crate::rktb::{run_rktb, CovariateDensity, RktbConfig};
use crate::solver::{sensitivity, solve, GridSolution};
use crate::ts::{run_ts, TsConfig};

const MAX_FAILURE_FRACTION: f64 = 0.10;
const DATA_LANE: u64 = 0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NlsConfig {
    /// Grid intervals; `None` uses `n`.
    pub r_n: Option<usize>,
    pub optim: OptimOptions,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            r_n: None,
            optim: OptimOptions {
                starts: 4,
                tol: 1e-9,
                ..OptimOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub model_name: String,
    pub theta0: Vec<f64>,
    pub sigma0: f64,
    pub n: usize,
    pub replications: usize,
    pub level: f64,
    /// Coordinate of `theta` whose intervals are scored.
    pub target: usize,
    pub methods: Vec<Method>,
    pub rksb: RksbConfig,
    pub rktb: RktbConfig,
    pub ts: TsConfig,
    pub nls: NlsConfig,
    /// Grid for the ground-truth solution; `None` uses `16 n` (at least 1600).
    pub r_truth: Option<usize>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::table2(100)
    }
}

impl SimConfig {
    /// Van der Pol study: `theta0 = 1`, noise sd 0.1, uniform covariates,
    /// 200 replications at `n <= 300` and 100 above.
    pub fn table2(n: usize) -> Self {
        Self {
            model_name: "vdp".into(),
            theta0: vec![1.0],
            sigma0: 0.1,
            n,
            replications: if n <= 300 { 200 } else { 100 },
            level: 0.95,
            target: 0,
            methods: vec![Method::Rksb, Method::Rktb, Method::Ts, Method::Nls],
            rksb: RksbConfig::default(),
            rktb: RktbConfig::default(),
            ts: TsConfig::default(),
            nls: NlsConfig::default(),
            r_truth: None,
            seed: 20_240_601,
        }
    }

    /// `table2-n100` or `table2-n500`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table2-n100" => Ok(Self::table2(100)),
            "table2-n500" => Ok(Self::table2(500)),
            other => Err(invalid(format!(
                "unknown preset '{other}', expected table2-n100 or table2-n500"
            ))),
        }
    }

    fn method_grid(&self) -> usize {
        [self.rksb.r_n, self.rktb.r_n, self.nls.r_n]
            .into_iter()
            .map(|r| r.unwrap_or(self.n))
            .max()
            .unwrap_or(self.n)
    }

    pub fn r_truth(&self) -> usize {
        self.r_truth.unwrap_or((16 * self.method_grid()).max(1600))
    }

    pub fn validate(&self) -> Result<OdeSystem> {
        let system = model_by_name(&self.model_name)?;
        if self.theta0.len() != system.param_dim() || !system.theta_box().contains(&self.theta0) {
            return Err(invalid("theta0 must lie in the parameter box"));
        }
        if !(self.sigma0 >= 0.0) {
            return Err(invalid("sigma0 must be non-negative"));
        }
        if self.n < 2 || self.replications == 0 {
            return Err(invalid("need n >= 2 and at least one replication"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid("level must be in (0, 1)"));
        }
        if self.target >= system.param_dim() {
            return Err(invalid("target coordinate out of range"));
        }
        if self.r_truth() < 16 * self.method_grid() {
            return Err(invalid(format!(
                "r_truth = {} is below 16 times the method grid {}",
                self.r_truth(),
                self.method_grid()
            )));
        }
        Ok(system)
    }
}

/// Ground-truth trajectory for a study.
pub fn truth_solution(system: &OdeSystem, cfg: &SimConfig) -> Result<GridSolution> {
    solve(system, &cfg.theta0, cfg.r_truth())
}

/// Replication `index`: `x_i ~ U(0, 1)`, `y_i = f_{theta0}(x_i) + N(0, sigma0^2)`.
pub fn generate_dataset(
    system: &OdeSystem,
    truth: &GridSolution,
    cfg: &SimConfig,
    index: u64,
) -> Result<Dataset> {
    let mut rng = stream(cfg.seed, index, DATA_LANE);
    let x: Vec<f64> = (0..cfg.n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|&t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            Ok(truth.eval_dense(system, t)? + cfg.sigma0 * e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Dataset::new(x, y)
}

/// Interval from one method on one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: u64,
    pub method: Method,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
    pub discarded: usize,
    pub ambiguous: usize,
    pub acceptance_rate: Option<f64>,
    pub seconds: f64,
}

impl ReplicationRecord {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Percentage of replications whose interval contains `theta0`.
    pub coverage: f64,
    /// `100 sqrt(p (1 - p) / R)`, in percentage points.
    pub coverage_se: f64,
    pub mean_length: f64,
    /// Sample sd of lengths over `sqrt(R)`.
    pub length_se: f64,
    pub replications: usize,
    pub failures: usize,
    pub discarded_draws: usize,
    pub ambiguous_draws: usize,
    pub seconds: f64,
}

/// Coverage and length summary from per-replication flags and lengths.
pub fn summarize(method: Method, covered: &[bool], lengths: &[f64]) -> Result<MethodSummary> {
    let r = covered.len();
    if r == 0 || lengths.len() != r {
        return Err(invalid("summary needs matching, non-empty flags and lengths"));
    }
    let rf = r as f64;
    let p = covered.iter().filter(|c| **c).count() as f64 / rf;
    let mean = lengths.iter().sum::<f64>() / rf;
    let sd = if r > 1 {
        (lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (rf - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(MethodSummary {
        method,
        coverage: 100.0 * p,
        coverage_se: 100.0 * (p * (1.0 - p) / rf).sqrt(),
        mean_length: mean,
        length_se: sd / rf.sqrt(),
        replications: r,
        failures: 0,
        discarded_draws: 0,
        ambiguous_draws: 0,
        seconds: 0.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: String,
    pub n: usize,
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<String>,
}

impl CoverageReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// One row per method: `method,coverage,coverage_se,length,length_se`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "coverage", "coverage_se", "length", "length_se"])?;
        for m in &self.methods {
            w.write_record([
                m.method.to_string(),
                format!("{:.2}", m.coverage),
                format!("{:.2}", m.coverage_se),
                format!("{:.4}", m.mean_length),
                format!("{:.4}", m.length_se),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: std::io::Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn method_lane(method: Method) -> u64 {
    match method {
        Method::Rksb => 1,
        Method::Rktb => 2,
        Method::Ts => 3,
        Method::Nls => 4,
    }
}

/// Runs one method on one data set and returns its interval for the target
/// coordinate.
pub fn run_method(
    system: &OdeSystem,
    data: &Dataset,
    cfg: &SimConfig,
    method: Method,
    index: u64,
) -> Result<ReplicationRecord> {
    let start = Instant::now();
    let mut rng = stream(cfg.seed, index, method_lane(method));
    let j = cfg.target;
    let (interval, discarded, ambiguous, acceptance_rate) = match method {
        Method::Nls => {
            let fit = fit_nls(system, data, cfg.nls.r_n, &cfg.nls.optim)?;
            (fit.confidence_interval(j, cfg.level)?, 0, 0, None)
        }
        _ => {
            let draws = match method {
                Method::Rksb => run_rksb(system, data, &cfg.rksb, &mut rng)?,
                Method::Rktb => run_rktb(system, data, &cfg.rktb, &mut rng)?,
                _ => run_ts(system, data, &cfg.ts, &mut rng)?,
            };
            (
                draws.interval(j, cfg.level)?,
                draws.discarded,
                draws.ambiguous,
                draws.acceptance_rate,
            )
        }
    };
    let theta0 = cfg.theta0[j];
    Ok(ReplicationRecord {
        index,
        method,
        lower: interval.0,
        upper: interval.1,
        covered: interval.0 <= theta0 && theta0 <= interval.1,
        discarded,
        ambiguous,
        acceptance_rate,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every enabled method on every replication and aggregates coverage
/// and interval length per method.
pub fn run_study(cfg: &SimConfig) -> Result<CoverageReport> {
    let system = cfg.validate()?;
    let truth = truth_solution(&system, cfg)?;
    let outcomes: Vec<Vec<(Method, Result<ReplicationRecord>)>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|index| {
            let data = generate_dataset(&system, &truth, cfg, index);
            cfg.methods
                .iter()
                .map(|&m| {
                    let rec = match &data {
                        Ok(d) => run_method(&system, d, cfg, m, index),
                        Err(e) => Err(invalid(format!("data generation failed: {e}"))),
                    };
                    (m, rec)
                })
                .collect()
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut summaries = Vec::new();
    for &method in &cfg.methods {
        let mut ok = Vec::new();
        let mut failed = 0;
        for (index, rep) in outcomes.iter().enumerate() {
            for (m, res) in rep {
                if *m != method {
                    continue;
                }
                match res {
                    Ok(rec) => ok.push(rec.clone()),
                    Err(e) => {
                        failed += 1;
                        log::warn!("{method} replication {index} failed: {e}");
                        failures.push(format!("{method} replication {index}: {e}"));
                    }
                }
            }
        }
        if failed as f64 > MAX_FAILURE_FRACTION * cfg.replications as f64 || ok.is_empty() {
            return Err(Error::StudyFailed {
                method: method.to_string(),
                failed,
                total: cfg.replications,
            });
        }
        let covered: Vec<bool> = ok.iter().map(|r| r.covered).collect();
        let lengths: Vec<f64> = ok.iter().map(ReplicationRecord::length).collect();
        let mut s = summarize(method, &covered, &lengths)?;
        s.failures = failed;
        s.discarded_draws = ok.iter().map(|r| r.discarded).sum();
        s.ambiguous_draws = ok.iter().map(|r| r.ambiguous).sum();
        s.seconds = ok.iter().map(|r| r.seconds).sum();
        summaries.push(s);
        records.extend(ok);
    }
    Ok(CoverageReport {
        model: cfg.model_name.clone(),
        n: cfg.n,
        replications: cfg.replications,
        level: cfg.level,
        seed: cfg.seed,
        methods: summaries,
        records,
        failures,
    })
}

/// Large-sample reference for the Bayesian intervals in a well-specified
/// model: `V = int fdot' fdot g dt` and the limiting covariance
/// `sigma0^2 V^-1 / n` of the parameter.
#[derive(Debug, Clone)]
pub struct AsymptoticBenchmark {
    pub v_theta0: DMatrix<f64>,
    /// `sigma0^2 V^-1`.
    pub sigma_theta_block: DMatrix<f64>,
}

impl AsymptoticBenchmark {
    /// `2 z sqrt(sigma0^2 (V^-1)_jj / n)` with `z` the normal quantile for
    /// `level`.
    pub fn predicted_interval_length(&self, n: usize, j: usize, level: f64) -> f64 {
        let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
        2.0 * z * (self.sigma_theta_block[(j, j)] / n as f64).sqrt()
    }
}

pub fn asymptotic_benchmark(
    system: &OdeSystem,
    theta0: &[f64],
    sigma0: f64,
    density: &CovariateDensity,
    r_n: usize,
    quad: &QuadratureRule,
) -> Result<AsymptoticBenchmark> {
    let jac = sensitivity(system, theta0, r_n, quad.nodes())?;
    let p = system.param_dim();
    let mut v = DMatrix::zeros(p, p);
    for (i, (&t, &w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        let row = jac.row(i);
        v += row.transpose() * row * (w * density.eval(t));
    }
    let inv = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("V is not positive definite".into()))?
        .inverse();
    Ok(AsymptoticBenchmark {
        v_theta0: v,
        sigma_theta_block: inv * (sigma0 * sigma0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_harmonic_oscillator;
    use crate::numerics::gauss_legendre;

    #[test]
    fn summary_formulas_on_injected_flags() {
        let s = summarize(Method::Nls, &[true, true, false, true], &[1.0, 2.0, 3.0, 6.0]).unwrap();
        assert_eq!(s.coverage, 75.0);
        assert!((s.coverage_se - 100.0 * (0.1875f64 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.mean_length, 3.0);
        // sd of (1,2,3,6) is sqrt(14/3)
        assert!((s.length_se - (14.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert!(summarize(Method::Nls, &[], &[]).is_err());
    }

    #[test]
    fn datasets_are_reproducible_and_noiseless_when_asked() {
        let mut cfg = SimConfig::table2(50);
        let sys = cfg.validate().unwrap();
        let truth = truth_solution(&sys, &cfg).unwrap();
        let a = generate_dataset(&sys, &truth, &cfg, 3).unwrap();
        let b = generate_dataset(&sys, &truth, &cfg, 3).unwrap();
        let c = generate_dataset(&sys, &truth, &cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.x().iter().all(|x| (0.0..=1.0).contains(x)));
        cfg.sigma0 = 0.0;
        let d = generate_dataset(&sys, &truth, &cfg, 3).unwrap();
        for (x, y) in d.x().iter().zip(d.y()) {
            assert_eq!(*y, truth.eval_dense(&sys, *x).unwrap());
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::table2(100);
        assert_eq!(cfg.r_truth(), 1600);
        assert!(cfg.validate().is_ok());
        cfg.r_truth = Some(100);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::table2(100);
        cfg.theta0 = vec![20.0];
        assert!(cfg.validate().is_err());
        assert!(SimConfig::preset("table2-n500").is_ok());
        assert!(SimConfig::preset("table3").is_err());
        assert_eq!(SimConfig::preset("table2-n500").unwrap().replications, 100);
    }

    #[test]
    fn harmonic_information_matches_closed_form() {
        // df/dtheta = -t sin(theta t); V = int_0^1 t^2 sin^2(2t) dt
        let (s4, c4) = (4f64.sin(), 4f64.cos());
        let want = 1.0 / 6.0 - 0.5 * (s4 / 4.0 + c4 / 8.0 - s4 / 32.0);
        let sys = make_harmonic_oscillator();
        let quad = gauss_legendre(64).unwrap();
        let b = asymptotic_benchmark(&sys, &[2.0], 0.1, &CovariateDensity::Uniform, 400, &quad)
            .unwrap();
        assert!((b.v_theta0[(0, 0)] - want).abs() < 1e-3, "{} vs {want}", b.v_theta0[(0, 0)]);
        let ratio = b.predicted_interval_length(100, 0, 0.95) / b.predicted_interval_length(400, 0, 0.95);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_study_runs_and_is_scheduling_invariant() {
        let mut cfg = SimConfig::table2(40);
        cfg.replications = 3;
        cfg.methods = vec![Method::Nls, Method::Ts];
        cfg.ts.n_draws = 50;
        let a = run_study(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_study(&cfg)).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!((ra.lower, ra.upper), (rb.lower, rb.upper));
        }
        assert_eq!(a.methods.len(), 2);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,coverage,coverage_se,length,length_se\nNLS,"));
    }
}
