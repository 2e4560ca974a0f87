//! Measured two-grid convergence factors with the inexact (weighted-Jacobi)
//! Schur solve, h = 1/64, for 1..4 smoothing steps: the practical
//! counterpart of the two-grid LFA predictions.
//!
//! The coarse level is solved by a dense factorization, so this example
//! takes a minute or two.
//!
//! ```bash
//! cargo run --release -p macmg --example measured_two_grid
//! ```

use macmg::multigrid::CycleKind;
use macmg::report::{run_solve, SolveSpec, PARAM_PAIRS};
use macmg::smoother::{SchurMode, SmootherScheme};

fn main() {
    for (eps, nu) in PARAM_PAIRS {
        println!("(eps, nu) = ({eps}, {nu})");
        println!("scheme       g=1      g=2      g=3      g=4");
        for scheme in SmootherScheme::ALL {
            print!("{:8}", scheme.label());
            for gamma in 1..=4 {
                let mut spec = SolveSpec::new(64, scheme, CycleKind::TwoGrid);
                spec.epsilon = eps;
                spec.nu = nu;
                spec.nu_pre = gamma;
                spec.nu_post = 0;
                spec.schur_mode = SchurMode::WeightedJacobi;
                spec.max_iter = 200;
                let rep = run_solve(&spec).expect("two-grid run");
                print!("  {:.3}{}", rep.rho_hat, if rep.converged { " " } else { "!" });
            }
            println!();
        }
    }
}
