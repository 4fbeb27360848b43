use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use rkbayes::nls::fit_nls;
use rkbayes::numerics::{stream, OptimOptions};
use rkbayes::rksb::{run_rksb, RksbConfig};
use rkbayes::rktb::{run_rktb, RktbConfig};
use rkbayes::sim::{generate_dataset, run_study, truth_solution, SimConfig};
use rkbayes::ts::{run_ts, TsConfig, WeightFn};
use rkbayes::{data::write_trajectory_csv, model_by_name, solve, Dataset, PosteriorDraws};

#[derive(Parser)]
#[command(name = "rkbayes", version, about = "Parameter inference for ODE-defined regression functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model name: vdp, harmonic, null-q<k>, glucose.
    #[arg(long, default_value = "vdp")]
    model: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with settings for the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Fit {
    #[command(flatten)]
    common: Common,
    /// CSV file with header `x,y`.
    #[arg(long)]
    data: PathBuf,
    /// Credible level for the printed interval.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct SplineFlags {
    /// Number of knot intervals.
    #[arg(long)]
    kn: Option<usize>,
    /// Spline order.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Runge-Kutta trajectory on `r_n` equal steps, written as CSV.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Comma-separated parameter vector.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        r_n: usize,
    },
    /// Metropolis-within-Gibbs on the Runge-Kutta likelihood.
    FitRksb(Fit),
    /// Spline posterior projected onto Runge-Kutta solutions.
    FitRktb {
        #[command(flatten)]
        fit: Fit,
        #[command(flatten)]
        spline: SplineFlags,
    },
    /// Spline posterior projected through the binding function.
    FitTs {
        #[command(flatten)]
        fit: Fit,
        #[command(flatten)]
        spline: SplineFlags,
        /// Weight preset: poly or sine.
        #[arg(long, default_value = "poly")]
        weight: String,
    },
    /// Least squares with normal-theory confidence intervals.
    FitNls(Fit),
    /// Coverage study over replicated synthetic data.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// table2-n100 or table2-n500.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
        /// Also write the full report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the data set of replication `index` to this CSV and stop.
        #[arg(long)]
        write_data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> rkbayes::Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_reader(File::open(p)?)?),
        None => Ok(T::default()),
    }
}

fn output(path: Option<&Path>) -> rkbayes::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn report_draws(draws: &PosteriorDraws, fit: &Fit) -> rkbayes::Result<()> {
    draws.write_csv(output(fit.common.out.as_deref())?)?;
    for j in 0..draws.param_dim() {
        let (lo, hi) = draws.interval(j, fit.level)?;
        eprintln!(
            "{} theta{}: mean {:.5} sd {:.5} interval ({lo:.5}, {hi:.5})",
            draws.method,
            j + 1,
            draws.mean(j),
            draws.sd(j)
        );
    }
    if let Some(rate) = draws.acceptance_rate {
        eprintln!("acceptance rate {rate:.3}");
    }
    for w in &draws.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn apply_spline_flags(m: &mut usize, kn: &mut Option<usize>, flags: &SplineFlags) {
    if let Some(v) = flags.m {
        *m = v;
    }
    if flags.kn.is_some() {
        *kn = flags.kn;
    }
}

fn run(cli: Cli) -> rkbayes::Result<()> {
    match cli.command {
        Command::Solve { common, theta, r_n } => {
            let system = model_by_name(&common.model)?;
            let sol = solve(&system, &theta, r_n)?;
            write_trajectory_csv(&sol, output(common.out.as_deref())?)
        }
        Command::FitRksb(fit) => {
            let system = model_by_name(&fit.common.model)?;
            let data = Dataset::read_csv(&fit.data)?;
            let cfg: RksbConfig = read_config(fit.common.config.as_deref())?;
            let draws = run_rksb(&system, &data, &cfg, &mut stream(fit.common.seed, 0, 1))?;
            report_draws(&draws, &fit)
        }
        Command::FitRktb { fit, spline } => {
            let system = model_by_name(&fit.common.model)?;
            let data = Dataset::read_csv(&fit.data)?;
            let mut cfg: RktbConfig = read_config(fit.common.config.as_deref())?;
            apply_spline_flags(&mut cfg.m, &mut cfg.kn, &spline);
            let draws = run_rktb(&system, &data, &cfg, &mut stream(fit.common.seed, 0, 2))?;
            report_draws(&draws, &fit)
        }
        Command::FitTs { fit, spline, weight } => {
            let system = model_by_name(&fit.common.model)?;
            let data = Dataset::read_csv(&fit.data)?;
            let mut cfg: TsConfig = read_config(fit.common.config.as_deref())?;
            apply_spline_flags(&mut cfg.m, &mut cfg.kn, &spline);
            cfg.weight = WeightFn::preset(&weight)?;
            let draws = run_ts(&system, &data, &cfg, &mut stream(fit.common.seed, 0, 3))?;
            report_draws(&draws, &fit)
        }
        Command::FitNls(fit) => {
            let system = model_by_name(&fit.common.model)?;
            let data = Dataset::read_csv(&fit.data)?;
            let opts: OptimOptions = read_config(fit.common.config.as_deref())?;
            let res = fit_nls(&system, &data, None, &opts)?;
            let intervals = (0..res.theta.len())
                .map(|j| res.confidence_interval(j, fit.level))
                .collect::<rkbayes::Result<Vec<_>>>()?;
            let json = serde_json::json!({ "fit": res, "level": fit.level, "intervals": intervals });
            let mut out = output(fit.common.out.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &json)?;
            writeln!(out)?;
            Ok(())
        }
        Command::Simulate {
            common,
            preset,
            replications,
            json,
            write_data,
            index,
        } => {
            let mut cfg = match (&preset, &common.config) {
                (Some(p), _) => SimConfig::preset(p)?,
                (None, Some(path)) => read_config(Some(path))?,
                (None, None) => SimConfig::default(),
            };
            if preset.is_none() && common.config.is_none() {
                cfg.model_name = common.model.clone();
            }
            cfg.seed = common.seed;
            if let Some(r) = replications {
                cfg.replications = r;
            }
            let system = cfg.validate()?;
            if let Some(path) = write_data {
                let truth = truth_solution(&system, &cfg)?;
                return generate_dataset(&system, &truth, &cfg, index)?.write_csv(path);
            }
            let report = run_study(&cfg)?;
            report.write_csv(output(common.out.as_deref())?)?;
            if let Some(path) = json {
                report.write_json(File::create(path)?)?;
            }
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
