//! Optimal damping and smoothing factors of the three relaxation schemes.
//!
//! The damping search minimizes the worst damped eigenvalue of the
//! relaxation symbol over the high-frequency quadrants; the resulting
//! optima are independent of the Lame constants.
//!
//! ```bash
//! cargo run --release -p macmg --example smoothing_factors
//! ```

use macmg::discretization::PhysicalParams;
use macmg::lfa::{optimal_omega, smoothing_factor};
use macmg::report::{DEFAULT_FREQ_SAMPLES, PARAM_PAIRS};
use macmg::smoother::SmootherScheme;

fn main() {
    println!("scheme   eps  nu         omega*  mu_opt  mu(omega=1)");
    for scheme in SmootherScheme::ALL {
        for (eps, nu) in PARAM_PAIRS {
            let params = PhysicalParams::new(eps, nu).unwrap();
            let (omega, mu) = optimal_omega(scheme, params, DEFAULT_FREQ_SAMPLES);
            let mu_undamped = smoothing_factor(scheme, 1.0, params, DEFAULT_FREQ_SAMPLES);
            println!(
                "{:8} {eps}    {nu:<9}  {omega:.4}  {mu:.4}  {mu_undamped:.4}",
                scheme.label()
            );
        }
    }
}
