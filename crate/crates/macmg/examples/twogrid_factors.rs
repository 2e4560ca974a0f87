//! Two-grid LFA convergence factors for the three relaxation schemes,
//! both parameter pairs and 1..4 smoothing steps.
//!
//! ```bash
//! cargo run --release -p macmg --example twogrid_factors
//! ```

use macmg::discretization::PhysicalParams;
use macmg::lfa::twogrid_factor;
use macmg::smoother::SmootherScheme;

fn main() {
    let h = 1.0 / 128.0;
    let samples = 64;
    println!("scheme   eps  nu         g=1    g=2    g=3    g=4");
    for scheme in SmootherScheme::ALL {
        for nu in [0.45, 0.4999999] {
            let params = PhysicalParams::new(1.0, nu).unwrap();
            let omega = scheme.default_omega();
            print!("{:8} 1    {:<9}", scheme.label(), nu);
            for gamma in 1..=4 {
                let rho = twogrid_factor(scheme, omega, gamma, 0, params, h, samples);
                print!("  {rho:.3}");
            }
            println!();
        }
    }
}
