//! Command-line experiment runner: LFA predictions, multigrid runs with
//! residual histories, and the manufactured-solution convergence study.
//! All subcommands write CSV to stdout or `--out`.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use macmg::multigrid::CycleKind;
use macmg::report::{self, SolveSpec, DEFAULT_FREQ_SAMPLES, DEFAULT_LFA_H, PARAM_PAIRS};
use macmg::smoother::{SchurMode, SmootherScheme};
use std::fs;
use std::io::Write;

#[derive(Parser)]
#[command(name = "macmg", version, about = "Multigrid solver and Fourier analysis for MAC-discretized linear elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Jacobi,
    Mass,
    Vanka,
}

impl From<SchemeArg> for SmootherScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Jacobi => SmootherScheme::Jacobi,
            SchemeArg::Mass => SmootherScheme::Mass,
            SchemeArg::Vanka => SmootherScheme::Vanka,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CycleArg {
    TwoGrid,
    V,
    W,
}

impl From<CycleArg> for CycleKind {
    fn from(c: CycleArg) -> Self {
        match c {
            CycleArg::TwoGrid => CycleKind::TwoGrid,
            CycleArg::V => CycleKind::V,
            CycleArg::W => CycleKind::W,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchurArg {
    Exact,
    Jacobi,
}

impl From<SchurArg> for SchurMode {
    fn from(s: SchurArg) -> Self {
        match s {
            SchurArg::Exact => SchurMode::Exact,
            SchurArg::Jacobi => SchurMode::WeightedJacobi,
        }
    }
}

#[derive(Args)]
struct LfaArgs {
    /// Shear Lame constant.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Poisson ratio; omit to run both 0.45 and 0.4999999.
    #[arg(long)]
    nu: Option<f64>,
    /// Relaxation scheme; omit to run all three.
    #[arg(long)]
    scheme: Option<SchemeArg>,
    /// Damping override (default: the scheme's optimal value).
    #[arg(long)]
    omega: Option<f64>,
    /// Frequency samples per dimension.
    #[arg(long, default_value_t = DEFAULT_FREQ_SAMPLES)]
    freq_samples: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.45)]
    nu: f64,
    #[arg(long, default_value = "vanka")]
    scheme: SchemeArg,
    /// Damping override (default: the scheme's optimal value).
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value = "v")]
    cycle: CycleArg,
    /// Pre-smoothing steps.
    #[arg(long, default_value_t = 1)]
    pre: usize,
    /// Post-smoothing steps.
    #[arg(long, default_value_t = 1)]
    post: usize,
    /// Schur complement solve inside each sweep.
    #[arg(long, default_value = "jacobi")]
    schur: SchurArg,
    /// Weight of the inexact Schur Jacobi sweeps (default per scheme).
    #[arg(long)]
    omega_j: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative residual stopping tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal damping and smoothing factors per scheme.
    LfaSmoothing(LfaArgs),
    /// Two-grid LFA convergence factors for 1..4 smoothing steps.
    LfaTwogrid(LfaArgs),
    /// Run a multigrid cycle study and emit the residual history.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Cells per dimension of the finest grid (4 * 2^k).
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Manufactured-solution errors and observed orders over a grid list.
    ConvergenceOrder {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated list of grid sizes, each 4 * 2^k, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64, 128])]
        n_list: Vec<usize>,
    },
}

fn emit(out: &Option<String>, csv: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {path}"))?;
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn lfa_pairs(args: &LfaArgs) -> Result<Vec<(f64, f64)>> {
    if !(args.epsilon > 0.0) {
        bail!("--epsilon must be positive");
    }
    match args.nu {
        Some(nu) => {
            if !(nu > 0.0 && nu < 0.5) {
                bail!("--nu must lie in (0, 1/2)");
            }
            Ok(vec![(args.epsilon, nu)])
        }
        None => Ok(PARAM_PAIRS
            .iter()
            .map(|&(_, nu)| (args.epsilon, nu))
            .collect()),
    }
}

fn lfa_schemes(args: &LfaArgs) -> Vec<SmootherScheme> {
    match args.scheme {
        Some(s) => vec![s.into()],
        None => SmootherScheme::ALL.to_vec(),
    }
}

fn validate_run(run: &RunArgs, n: usize) -> Result<SolveSpec> {
    if n < 4 || !n.is_power_of_two() {
        bail!("--n must be 4 * 2^k, got {n}");
    }
    if !(run.nu > 0.0 && run.nu < 0.5) {
        bail!("--nu must lie in (0, 1/2)");
    }
    if !(run.epsilon > 0.0) {
        bail!("--epsilon must be positive");
    }
    if let Some(w) = run.omega {
        if !(w > 0.0 && w < 2.0) {
            bail!("--omega must lie in (0, 2)");
        }
    }
    if let Some(wj) = run.omega_j {
        if !(wj > 0.0 && wj < 2.0) {
            bail!("--omega-j must lie in (0, 2)");
        }
    }
    if run.pre + run.post < 1 {
        bail!("need at least one smoothing step (--pre/--post)");
    }
    if run.max_iter < 1 {
        bail!("--max-iter must be at least 1");
    }
    let mut spec = SolveSpec::new(n, run.scheme.into(), run.cycle.into());
    spec.epsilon = run.epsilon;
    spec.nu = run.nu;
    spec.omega = run.omega;
    spec.nu_pre = run.pre;
    spec.nu_post = run.post;
    spec.schur_mode = run.schur.into();
    spec.omega_j = run.omega_j;
    spec.seed = run.seed;
    spec.tol = run.tol;
    spec.max_iter = run.max_iter;
    Ok(spec)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::LfaSmoothing(args) => {
            if args.freq_samples < 32 {
                bail!("--freq-samples must be at least 32");
            }
            let rows = report::smoothing_table(
                &lfa_schemes(&args),
                &lfa_pairs(&args)?,
                args.omega,
                args.freq_samples,
            )?;
            emit(&args.out, &report::smoothing_csv(&rows))?;
        }
        Command::LfaTwogrid(args) => {
            if args.freq_samples < 32 {
                bail!("--freq-samples must be at least 32");
            }
            let rows = report::twogrid_table(
                &lfa_schemes(&args),
                &lfa_pairs(&args)?,
                &[1, 2, 3, 4],
                args.omega,
                DEFAULT_LFA_H,
                args.freq_samples,
            )?;
            emit(&args.out, &report::twogrid_csv(&rows))?;
        }
        Command::Solve { run, n } => {
            let spec = validate_run(&run, n)?;
            let rep = report::run_solve(&spec)?;
            emit(&run.out, &report::history_csv(&rep))?;
            eprintln!("{}", report::summary_line(&rep));
        }
        Command::ConvergenceOrder { run, n_list } => {
            if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
                bail!("--n-list must be ascending and non-empty");
            }
            let spec = validate_run(&run, n_list[0])?;
            let rows = report::convergence_study(&spec, &n_list)?;
            emit(&run.out, &report::convergence_csv(&rows))?;
        }
    }
    Ok(())
}
