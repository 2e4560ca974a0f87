//! Manufactured-solution convergence study: discrete L2 errors of
//! displacement and pressure halve twice per refinement (second order),
//! uniformly in the Poisson ratio (locking-free).
//!
//! ```bash
//! cargo run --release -p macmg --example convergence_order
//! ```

use macmg::multigrid::CycleKind;
use macmg::report::{convergence_csv, convergence_study, SolveSpec, PARAM_PAIRS};
use macmg::smoother::SmootherScheme;

fn main() {
    for (eps, nu) in PARAM_PAIRS {
        let mut spec = SolveSpec::new(8, SmootherScheme::Vanka, CycleKind::V);
        spec.epsilon = eps;
        spec.nu = nu;
        let rows = convergence_study(&spec, &[8, 16, 32, 64, 128]).expect("order study");
        print!("{}", convergence_csv(&rows));
        println!();
    }
}
