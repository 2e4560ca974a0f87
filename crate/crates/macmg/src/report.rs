//! Experiment drivers shared by the `macmg` command-line tool and the
//! examples: smoothing-factor and two-grid tables, cycle runs with residual
//! histories, and the manufactured-solution convergence study. Each driver
//! returns plain rows plus a CSV rendering with a one-line header.

use crate::discretization::{
    assemble_rhs, error_norms, manufactured_solution, PhysicalParams,
};
use crate::grid::StaggeredGrid;
use crate::lfa::{optimal_omega, smoothing_factor, twogrid_factor};
use crate::multigrid::{CycleConfig, CycleKind, Hierarchy, SolveReport};
use crate::smoother::{SchurMode, SmootherConfig, SmootherScheme};
use crate::Error;

/// Frequency samples per dimension reproducing the published three-decimal
/// factors.
pub const DEFAULT_FREQ_SAMPLES: usize = 64;
/// Mesh width at which the two-grid prediction tables are evaluated.
pub const DEFAULT_LFA_H: f64 = 1.0 / 128.0;

/// Floats rendered with six significant digits, scientific outside
/// [1e-3, 1e6).
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs();
    if (1e-3..1e6).contains(&mag) {
        format!("{x:.6}")
    } else {
        format!("{x:.5e}")
    }
}

/// One row of the smoothing-factor study.
pub struct SmoothingRow {
    pub scheme: SmootherScheme,
    pub epsilon: f64,
    pub nu: f64,
    pub omega_opt: f64,
    pub mu_opt: f64,
    /// Damping the factor in `mu` was evaluated at (the scheme default or a
    /// user override).
    pub omega: f64,
    pub mu: f64,
}

/// Optimal damping search plus the factor at a reference damping, per
/// scheme and parameter pair.
pub fn smoothing_table(
    schemes: &[SmootherScheme],
    pairs: &[(f64, f64)],
    omega_override: Option<f64>,
    samples: usize,
) -> Result<Vec<SmoothingRow>, Error> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        for &(epsilon, nu) in pairs {
            let params = PhysicalParams::new(epsilon, nu)?;
            let (omega_opt, mu_opt) = optimal_omega(scheme, params, samples);
            let omega = omega_override.unwrap_or_else(|| scheme.default_omega());
            let mu = smoothing_factor(scheme, omega, params, samples);
            rows.push(SmoothingRow {
                scheme,
                epsilon,
                nu,
                omega_opt,
                mu_opt,
                omega,
                mu,
            });
        }
    }
    Ok(rows)
}

pub fn smoothing_csv(rows: &[SmoothingRow]) -> String {
    let mut out = String::from("scheme,epsilon,nu,omega_opt,mu_opt,omega,mu\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scheme.label(),
            fmt6(r.epsilon),
            r.nu,
            fmt6(r.omega_opt),
            fmt6(r.mu_opt),
            fmt6(r.omega),
            fmt6(r.mu)
        ));
    }
    out
}

/// One row of the two-grid prediction table.
pub struct TwogridRow {
    pub scheme: SmootherScheme,
    pub epsilon: f64,
    pub nu: f64,
    pub gamma: usize,
    pub rho: f64,
}

/// Two-grid LFA convergence factors for `gamma` pre-smoothing steps.
pub fn twogrid_table(
    schemes: &[SmootherScheme],
    pairs: &[(f64, f64)],
    gammas: &[usize],
    omega_override: Option<f64>,
    h: f64,
    samples: usize,
) -> Result<Vec<TwogridRow>, Error> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        for &(epsilon, nu) in pairs {
            let params = PhysicalParams::new(epsilon, nu)?;
            let omega = omega_override.unwrap_or_else(|| scheme.default_omega());
            for &gamma in gammas {
                let rho = twogrid_factor(scheme, omega, gamma, 0, params, h, samples);
                rows.push(TwogridRow {
                    scheme,
                    epsilon,
                    nu,
                    gamma,
                    rho,
                });
            }
        }
    }
    Ok(rows)
}

pub fn twogrid_csv(rows: &[TwogridRow]) -> String {
    let mut out = String::from("scheme,epsilon,nu,gamma,rho\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme.label(),
            fmt6(r.epsilon),
            r.nu,
            r.gamma,
            fmt6(r.rho)
        ));
    }
    out
}

/// Everything needed to run one multigrid experiment on the manufactured
/// problem.
#[derive(Debug, Clone, Copy)]
pub struct SolveSpec {
    pub n: usize,
    pub epsilon: f64,
    pub nu: f64,
    pub scheme: SmootherScheme,
    pub omega: Option<f64>,
    pub kind: CycleKind,
    pub nu_pre: usize,
    pub nu_post: usize,
    pub schur_mode: SchurMode,
    pub omega_j: Option<f64>,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolveSpec {
    pub fn new(n: usize, scheme: SmootherScheme, kind: CycleKind) -> Self {
        SolveSpec {
            n,
            epsilon: 1.0,
            nu: 0.45,
            scheme,
            omega: None,
            kind,
            nu_pre: 1,
            nu_post: 1,
            schur_mode: SchurMode::WeightedJacobi,
            omega_j: None,
            seed: 1,
            tol: 1e-10,
            max_iter: 100,
        }
    }

    pub fn smoother_config(&self) -> SmootherConfig {
        let mut cfg = SmootherConfig::new(self.scheme, self.schur_mode);
        if let Some(w) = self.omega {
            cfg = cfg.with_omega(w);
        }
        if let Some(wj) = self.omega_j {
            cfg = cfg.with_omega_j(wj);
        }
        cfg
    }

    pub fn cycle_config(&self) -> CycleConfig {
        let mut c = CycleConfig::new(self.kind, self.nu_pre, self.nu_post, self.smoother_config());
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        c.seed = self.seed;
        c
    }
}

/// Build the hierarchy for `spec` and run the manufactured problem from a
/// seeded random initial guess.
pub fn run_solve(spec: &SolveSpec) -> Result<SolveReport, Error> {
    let params = PhysicalParams::new(spec.epsilon, spec.nu)?;
    let cfg = spec.smoother_config();
    let hier = Hierarchy::build(spec.n, params, cfg, spec.kind)?;
    let rhs = assemble_rhs(hier.level_grid(0), params);
    hier.solve(&rhs, &spec.cycle_config())
}

/// Residual-history CSV: one row per cycle.
pub fn history_csv(report: &SolveReport) -> String {
    let mut out = String::from("iter,rel_residual\n");
    for (k, r) in report.history.iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, fmt6(*r)));
    }
    out
}

/// Human-readable run summary (written to stderr by the CLI).
pub fn summary_line(report: &SolveReport) -> String {
    format!(
        "converged={} iterations={} rho_hat={}",
        report.converged,
        report.iterations,
        fmt6(report.rho_hat)
    )
}

/// One row of the discretization-order study.
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub nu: f64,
    pub n: usize,
    pub err_u: f64,
    pub err_v: f64,
    pub err_p: f64,
    /// log2 ratios against the previous row, absent on the first.
    pub orders: Option<(f64, f64, f64)>,
}

/// Solve the manufactured problem on each grid in `n_list` and report the
/// discrete L2 errors with successive observed orders.
pub fn convergence_study(
    base: &SolveSpec,
    n_list: &[usize],
) -> Result<Vec<ConvergenceRow>, Error> {
    let params = PhysicalParams::new(base.epsilon, base.nu)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in n_list {
        let mut spec = *base;
        spec.n = n;
        let report = run_solve(&spec)?;
        if !report.converged {
            return Err(Error::InvalidParams {
                what: format!("solver did not reach tolerance at n = {n}"),
            });
        }
        let grid = StaggeredGrid::new(n)?;
        let exact = manufactured_solution(grid, params);
        let (eu, ev, ep) = error_norms(&report.state, &exact)?;
        let orders = rows.last().map(|prev| {
            (
                (prev.err_u / eu).log2() / ((n as f64 / prev.n as f64).log2()),
                (prev.err_v / ev).log2() / ((n as f64 / prev.n as f64).log2()),
                (prev.err_p / ep).log2() / ((n as f64 / prev.n as f64).log2()),
            )
        });
        rows.push(ConvergenceRow {
            epsilon: base.epsilon,
            nu: base.nu,
            n,
            err_u: eu,
            err_v: ev,
            err_p: ep,
            orders,
        });
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("epsilon,nu,n,err_u,err_v,err_p,order_u,order_v,order_p\n");
    for r in rows {
        let (ou, ov, op) = match r.orders {
            Some((a, b, c)) => (fmt6(a), fmt6(b), fmt6(c)),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt6(r.epsilon),
            r.nu,
            r.n,
            fmt6(r.err_u),
            fmt6(r.err_v),
            fmt6(r.err_p),
            ou,
            ov,
            op
        ));
    }
    out
}

/// The two Lame parameter pairs exercised throughout the experiments.
pub const PARAM_PAIRS: [(f64, f64); 2] = [(1.0, 0.45), (1.0, 0.4999999)];
