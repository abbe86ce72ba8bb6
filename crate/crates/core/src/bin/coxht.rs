//! Command-line interface: cohort generation, fitting, existence checks,
//! boundary estimation, state-equation solving and experiment drivers.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use coxht::boundary::boundary_curve;
use coxht::error::CoxError;
use coxht::existence::{build_reduced_constraints, lp_max, EXISTENCE_DEFAULT_TOL};
use coxht::fit::{fisher_std, fit_mple, FIT_DEFAULT_MAX_ITER, FIT_DEFAULT_TOL};
use coxht::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use coxht::model::{
    gen_beta, generate_cohort, read_cohort_csv, write_cohort_csv, BetaScheme,
    ModelConfig, SortedCohort,
};
use coxht::numeric::rng::RngStream;
use coxht::state::{solve_state_equations, EnvelopeContext, StateConstants, STATE_DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "coxht", about = "High-dimensional Cox regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SchemeArg {
    Phase,
    HalfSparse,
}

impl From<SchemeArg> for BetaScheme {
    fn from(v: SchemeArg) -> Self {
        match v {
            SchemeArg::Phase => BetaScheme::Phase,
            SchemeArg::HalfSparse => BetaScheme::HalfSparse,
        }
    }
}

#[derive(Args)]
struct CensorArg {
    /// Censoring support "lo,hi" (uniform).
    #[arg(long, default_value = "1,2", value_parser = parse_pair)]
    censor: (f64, f64),
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"lo,hi\"".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{e}")))
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated cohort and write it as CSV (id,Y,Delta,X1..Xp).
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        censor: CensorArg,
        #[arg(long, value_enum, default_value = "phase")]
        beta_scheme: SchemeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the MPLE on a cohort CSV; prints JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = FIT_DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = FIT_DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Decide finite-sample MPLE existence on a cohort CSV; prints JSON.
    Exists {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = EXISTENCE_DEFAULT_TOL)]
        tol: f64,
    },
    /// Estimate the theoretical existence boundary over a kappa grid.
    Boundary {
        #[arg(long, value_parser = parse_grid)]
        kappa_grid: Vec<f64>,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        censor: CensorArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the state equations for (a*, b*, r*); prints JSON.
    SolveState {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        censor: CensorArg,
        #[arg(long, default_value_t = 2000)]
        nrep: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = STATE_DEFAULT_TOL)]
        tol: f64,
    },
    /// Run a full experiment from a JSON config.
    Experiment {
        /// phase_diagram | consistency | null_dist | classical_failure
        name: String,
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Emit gnuplot scripts next to the CSV artifacts.
        #[arg(long)]
        gnuplot: bool,
    },
}

fn exit_code_for(err: &CoxError) -> u8 {
    match err {
        CoxError::Config(_) | CoxError::Parse(_) | CoxError::InvalidArgument(_) => 2,
        _ => 3,
    }
}

fn load_sorted(path: &PathBuf) -> coxht::Result<(SortedCohort, ndarray::Array2<f64>)> {
    let file = fs::File::open(path)?;
    let obs = read_cohort_csv(BufReader::new(file))?;
    let sorted = SortedCohort::from_observed(&obs.y, &obs.delta);
    Ok((sorted, obs.x))
}

fn run(cli: Cli) -> coxht::Result<()> {
    match cli.command {
        Command::Generate {
            n,
            p,
            kappa,
            lambda,
            censor,
            beta_scheme,
            seed,
            out,
        } => {
            let mut config = ModelConfig::new(n, p, kappa);
            config.baseline_rate = lambda;
            config.censor_lo = censor.censor.0;
            config.censor_hi = censor.censor.1;
            config.beta_scheme = beta_scheme.into();
            config.validate()?;
            let beta = gen_beta(&config, RngStream::new(seed, 0));
            let cohort = generate_cohort(&config, &beta, RngStream::new(seed, 1));
            let obs = cohort.observed();
            match out {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
                    write_cohort_csv(&obs, &mut f)?;
                    f.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_cohort_csv(&obs, &mut lock)?;
                }
            }
        }
        Command::Fit {
            input,
            tol,
            max_iter,
        } => {
            let (sorted, x) = load_sorted(&input)?;
            let fit = fit_mple(&sorted, &x, None, tol, max_iter)?;
            // without the truth available, the classical std is evaluated at
            // the estimate
            let fstd = if fit.diverged {
                None
            } else {
                fisher_std(&sorted, &x, &fit.beta_hat).ok()
            };
            let out = serde_json::json!({
                "beta_hat": fit.beta_hat.to_vec(),
                "loglik": fit.loglik,
                "converged": fit.converged,
                "diverged": fit.diverged,
                "fisher_std": fstd,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        Command::Exists { input, tol } => {
            let (sorted, x) = load_sorted(&input)?;
            let constraints = build_reduced_constraints(&sorted, &x)?;
            let rank = constraints.rank();
            if rank < x.ncols() {
                eprintln!(
                    "warning: constraint rows span {rank} < p = {} dimensions",
                    x.ncols()
                );
            }
            let value = lp_max(&constraints)?;
            let out = serde_json::json!({
                "exists": value <= tol,
                "lp_value": value,
                "rows": constraints.len(),
            });
            println!("{}", serde_json::to_string(&out).unwrap());
        }
        Command::Boundary {
            kappa_grid,
            n,
            reps,
            lambda,
            censor,
            seed,
            out,
        } => {
            let mut config = ModelConfig::new(n, 1, 1.0);
            config.baseline_rate = lambda;
            config.censor_lo = censor.censor.0;
            config.censor_hi = censor.censor.1;
            config.validate()?;
            let pts = boundary_curve(&config, &kappa_grid, n, reps, RngStream::new(seed, 0))?;
            let mut text = String::from("kappa,delta_hat,stderr,n,reps\n");
            for p in &pts {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.kappa, p.delta_hat, p.stderr, n, reps
                ));
            }
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::SolveState {
            kappa,
            delta,
            lambda,
            censor,
            nrep,
            seed,
            tol,
        } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(CoxError::Config("delta must lie in (0, 1)".into()));
            }
            let mut config = ModelConfig::new(nrep, 1, kappa);
            config.baseline_rate = lambda;
            config.censor_lo = censor.censor.0;
            config.censor_hi = censor.censor.1;
            config.validate()?;
            let consts =
                StateConstants::compute(kappa, delta, lambda, censor.censor.0, censor.censor.1, 64);
            let ctx = EnvelopeContext::generate(&config, nrep, RngStream::new(seed, 0));
            let sol = solve_state_equations(&ctx, &consts, None, tol)?;
            println!("{}", serde_json::to_string_pretty(&sol).unwrap());
        }
        Command::Experiment {
            name,
            config,
            seed,
            out,
            workers,
            gnuplot,
        } => {
            let kind = ExperimentKind::parse(&name)?;
            let text = fs::read_to_string(&config)?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| CoxError::Config(format!("bad config {}: {e}", config.display())))?;
            if cfg.experiment != kind {
                return Err(CoxError::Config(format!(
                    "config declares experiment '{}', command asked for '{}'",
                    cfg.experiment.name(),
                    kind.name()
                )));
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            cfg.gnuplot |= gnuplot;
            let files = run_experiment(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
