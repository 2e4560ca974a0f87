//! Local Fourier analysis of the block relaxation schemes and the two-grid
//! cycle.
//!
//! Constant-stencil operators are replaced by their Fourier symbols
//! `sum_k s_k exp(i theta . k)` on an infinite grid. Low frequencies live in
//! `T_L = (-pi/2, pi/2]^2`; the remainder of `(-pi/2, 3pi/2]^2` is high.
//! The smoothing factor is the worst spectral radius of the relaxation error
//! symbol over the high frequencies, and the two-grid convergence factor the
//! worst spectral radius of the coupled symbol over the four harmonics
//! `theta + (b1 pi, b2 pi)` of each low frequency.

use crate::discretization::PhysicalParams;
use crate::grid::DofFamily;
use crate::linalg::spectral_radius_complex;
use crate::smoother::SmootherScheme;
use crate::Error;
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;

/// Fourier frequency pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub theta1: f64,
    pub theta2: f64,
}

/// 3x3 complex symbol of a block operator (rows/columns u, v, p).
pub type SymbolMatrix = Matrix3<Complex64>;

impl Frequency {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Frequency { theta1, theta2 }
    }

    /// Both components strictly inside the low quadrant.
    pub fn is_low_interior(&self) -> bool {
        let half = std::f64::consts::FRAC_PI_2 - 1e-9;
        self.theta1.abs() < half && self.theta2.abs() < half
    }

    /// The four harmonics `theta + (b1 pi, b2 pi)` aliasing to one coarse
    /// frequency, in the order (0,0), (1,0), (0,1), (1,1).
    pub fn harmonics(&self) -> [Frequency; 4] {
        use std::f64::consts::PI;
        [
            *self,
            Frequency::new(self.theta1 + PI, self.theta2),
            Frequency::new(self.theta1, self.theta2 + PI),
            Frequency::new(self.theta1 + PI, self.theta2 + PI),
        ]
    }

    pub fn doubled(&self) -> Frequency {
        Frequency::new(2.0 * self.theta1, 2.0 * self.theta2)
    }
}

/// Symbol of the scalar 5-point Laplacian scaled by `h^2`:
/// `chi = 4 - 2 cos t1 - 2 cos t2`.
pub fn laplacian_symbol(theta: Frequency) -> f64 {
    4.0 - 2.0 * theta.theta1.cos() - 2.0 * theta.theta2.cos()
}

/// Symbol of the velocity-block approximation `D`, scaled by `h^2`.
///
/// Jacobi uses the Laplacian diagonal (4); the mass and Vanka variants are
/// the reciprocals of the 9-point stencil symbols of `Q` and `M_e`.
pub fn d_symbol(scheme: SmootherScheme, theta: Frequency) -> f64 {
    let c1 = theta.theta1.cos();
    let c2 = theta.theta2.cos();
    match scheme {
        SmootherScheme::Jacobi => 4.0,
        SmootherScheme::Mass => 9.0 / (4.0 + 2.0 * c1 + 2.0 * c2 + c1 * c2),
        SmootherScheme::Vanka => 24.0 / (7.0 + 2.0 * (c1 + c2) + c1 * c2),
    }
}

/// The third eigenvalue of the preconditioned symbol as a function of
/// `eta/chi` and `eps/lambda`: `(1 + 2r) / (1 + (1 + t) r)`.
pub fn coupled_eigenvalue(eta_over_chi: f64, eps_over_lambda: f64) -> f64 {
    let r = eps_over_lambda;
    (1.0 + 2.0 * r) / (1.0 + (1.0 + eta_over_chi) * r)
}

/// Symbol of the discretized elasticity operator at mesh width `h`.
pub fn elasticity_symbol(theta: Frequency, params: PhysicalParams, h: f64) -> SymbolMatrix {
    block_symbol(laplacian_symbol(theta), theta, params, h)
}

/// Symbol of the block smoother, with the Laplacian entry replaced by the
/// scheme's `D` symbol.
pub fn smoother_block_symbol(
    theta: Frequency,
    scheme: SmootherScheme,
    params: PhysicalParams,
    h: f64,
) -> SymbolMatrix {
    block_symbol(d_symbol(scheme, theta), theta, params, h)
}

fn block_symbol(velocity_entry: f64, theta: Frequency, params: PhysicalParams, h: f64) -> SymbolMatrix {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    let s1 = (theta.theta1 / 2.0).sin();
    let s2 = (theta.theta2 / 2.0).sin();
    let a = 2.0 * params.tau * h * s1;
    let b = 2.0 * params.tau * h * s2;
    let c = params.tau / params.lambda * h * h;
    let e = params.epsilon * velocity_entry;
    let scale = z(1.0 / (h * h), 0.0);
    Matrix3::new(
        z(e, 0.0),
        z(0.0, 0.0),
        z(0.0, -a),
        z(0.0, 0.0),
        z(e, 0.0),
        z(0.0, -b),
        z(0.0, a),
        z(0.0, b),
        z(-c, 0.0),
    ) * scale
}

/// Analytic eigenvalues `(1, chi/eta, sigma*)` of the preconditioned symbol.
///
/// Fails at `chi = 0` (the zero frequency), where the ratio degenerates.
pub fn smoother_eigs(
    theta: Frequency,
    scheme: SmootherScheme,
    params: PhysicalParams,
) -> Result<(f64, f64, f64), Error> {
    let chi = laplacian_symbol(theta);
    if chi == 0.0 {
        return Err(Error::SingularFrequency);
    }
    let eta = d_symbol(scheme, theta);
    let sigma = coupled_eigenvalue(eta / chi, params.eps_over_lambda());
    Ok((1.0, chi / eta, sigma))
}

/// Numeric eigenvalues of the preconditioned symbol `M^{-1} L` by a dense
/// complex QR eigensolve. Cross-check for [`smoother_eigs`].
pub fn smoother_eigs_numeric(
    theta: Frequency,
    scheme: SmootherScheme,
    params: PhysicalParams,
    h: f64,
) -> Vec<Complex64> {
    let l = elasticity_symbol(theta, params, h);
    let m = smoother_block_symbol(theta, scheme, params, h);
    let minv = m.try_inverse().expect("smoother symbol invertible");
    let prod = minv * l;
    let dyn_prod = DMatrix::from_fn(3, 3, |r, c| prod[(r, c)]);
    crate::linalg::complex_eigenvalues(&dyn_prod)
}

/// Multipliers whose damped distance from 1 drives the smoothing factor:
/// the unit eigenvalue plus `chi/eta` and `sigma*` over sampled high
/// frequencies.
fn high_frequency_multipliers(
    scheme: SmootherScheme,
    params: PhysicalParams,
    samples: usize,
) -> Vec<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let step = 2.0 * PI / samples as f64;
    let mut mults = vec![1.0];
    for k1 in 1..=samples {
        let t1 = -FRAC_PI_2 + k1 as f64 * step;
        for k2 in 1..=samples {
            let t2 = -FRAC_PI_2 + k2 as f64 * step;
            let theta = Frequency::new(t1, t2);
            if theta.is_low_interior() {
                continue;
            }
            if let Ok((_, ratio, sigma)) = smoother_eigs(theta, scheme, params) {
                mults.push(ratio);
                mults.push(sigma);
            }
        }
    }
    mults
}

fn factor_from_multipliers(mults: &[f64], omega: f64) -> f64 {
    mults
        .iter()
        .map(|m| (1.0 - omega * m).abs())
        .fold(0.0, f64::max)
}

/// LFA smoothing factor: worst damped symbol eigenvalue over the sampled
/// high-frequency set (closed boundary toward the low quadrant included).
pub fn smoothing_factor(
    scheme: SmootherScheme,
    omega: f64,
    params: PhysicalParams,
    samples: usize,
) -> f64 {
    assert!(samples >= 32, "need at least 32 samples per dimension");
    factor_from_multipliers(&high_frequency_multipliers(scheme, params, samples), omega)
}

/// Optimal damping and smoothing factor by golden-section search on
/// `omega in (0, 2)`; the objective is convex in `omega`.
pub fn optimal_omega(
    scheme: SmootherScheme,
    params: PhysicalParams,
    samples: usize,
) -> (f64, f64) {
    let mults = high_frequency_multipliers(scheme, params, samples);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1e-6, 2.0 - 1e-6);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = factor_from_multipliers(&mults, x1);
    let mut f2 = factor_from_multipliers(&mults, x2);
    while hi - lo > 1e-6 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = factor_from_multipliers(&mults, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = factor_from_multipliers(&mults, x2);
        }
    }
    let omega = 0.5 * (lo + hi);
    (omega, factor_from_multipliers(&mults, omega))
}

/// Symbol of the six-point (velocity) or four-point (pressure) restriction,
/// `sum_k w_k exp(i theta . k)` with offsets in fine mesh units.
///
/// Velocities are full-weighted (1,2,1)/4 along their coincident direction
/// and averaged over the two staggered half-offsets; pressures average the
/// four child cell centers.
pub fn restriction_symbol(family: DofFamily, theta: Frequency) -> Complex64 {
    let e = |arg: f64| Complex64::new(0.0, arg).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    match family {
        DofFamily::UFace => {
            for (dx, wx) in [(-1.0, 1.0), (0.0, 2.0), (1.0, 1.0)] {
                for dy in [-0.5, 0.5] {
                    acc += e(theta.theta1 * dx + theta.theta2 * dy) * (wx / 8.0);
                }
            }
        }
        DofFamily::VFace => {
            for (dy, wy) in [(-1.0, 1.0), (0.0, 2.0), (1.0, 1.0)] {
                for dx in [-0.5, 0.5] {
                    acc += e(theta.theta1 * dx + theta.theta2 * dy) * (wy / 8.0);
                }
            }
        }
        DofFamily::Center => {
            for dx in [-0.5, 0.5] {
                for dy in [-0.5, 0.5] {
                    acc += e(theta.theta1 * dx + theta.theta2 * dy) * 0.25;
                }
            }
        }
    }
    acc
}

/// Harmonic coefficient of the prolongation `P = 4 R^T` acting on a unit
/// coarse mode: the conjugate restriction symbol.
///
/// The grid-operator scaling 4 cancels against the density of the coarse
/// sub-lattice (one coarse DOF per four fine candidates), so no factor of
/// four appears in frequency space.
pub fn prolongation_symbol(family: DofFamily, theta: Frequency) -> Complex64 {
    restriction_symbol(family, theta).conj()
}

/// Sign a harmonic's restriction picks up on one family's coarse lattice.
///
/// A coarse u DOF sits at (even, odd) multiples of the fine mesh width, a
/// coarse v DOF at (odd, even) and a coarse p DOF at (odd, odd); on those
/// sub-lattices the harmonic offset `exp(i pi b . x/h)` is the constant
/// `(-1)^(b2)`, `(-1)^(b1)` or `(-1)^(b1+b2)` respectively.
fn harmonic_sign(family: DofFamily, beta: (usize, usize)) -> f64 {
    let flip = match family {
        DofFamily::UFace => beta.1,
        DofFamily::VFace => beta.0,
        DofFamily::Center => beta.0 + beta.1,
    };
    if flip % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

const HARMONIC_SHIFTS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Full 3x12 restriction and 12x3 prolongation symbol blocks over one
/// harmonic quadruple, including the coarse-lattice signs.
pub fn transfer_symbols(harmonics: &[Frequency; 4]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut r = DMatrix::<Complex64>::zeros(3, 12);
    let mut p = DMatrix::<Complex64>::zeros(12, 3);
    for (b, th) in harmonics.iter().enumerate() {
        for (row, family) in DofFamily::ALL.iter().enumerate() {
            let sign = harmonic_sign(*family, HARMONIC_SHIFTS[b]);
            r[(row, 3 * b + row)] = sign * restriction_symbol(*family, *th);
            p[(3 * b + row, row)] = sign * prolongation_symbol(*family, *th);
        }
    }
    (r, p)
}

/// 12x12 two-grid error symbol over the harmonics of a low frequency:
/// `S^{g2} (I - P Lc^{-1} R L) S^{g1}` with the coarse symbol evaluated at
/// the doubled frequency and mesh width `2h` (rediscretization).
pub fn twogrid_symbol(
    theta: Frequency,
    scheme: SmootherScheme,
    omega: f64,
    gamma1: usize,
    gamma2: usize,
    params: PhysicalParams,
    h: f64,
) -> Result<DMatrix<Complex64>, Error> {
    let hh = 2.0 * h;
    let coarse = elasticity_symbol(theta.doubled(), params, hh);
    // Guard on the determinant of the H^2-scaled coarse symbol; it vanishes
    // only where the coarse operator is genuinely singular.
    let scaled = coarse * Complex64::new(hh * hh, 0.0);
    if scaled.determinant().norm() < 1e-12 {
        return Err(Error::SingularFrequency);
    }
    let coarse_inv = coarse.try_inverse().ok_or(Error::SingularFrequency)?;

    let harmonics = theta.harmonics();
    let mut fine = DMatrix::<Complex64>::zeros(12, 12);
    let mut smooth = DMatrix::<Complex64>::zeros(12, 12);
    for (b, th) in harmonics.iter().enumerate() {
        let l = elasticity_symbol(*th, params, h);
        let m = smoother_block_symbol(*th, scheme, params, h);
        let minv = m.try_inverse().ok_or(Error::SingularFrequency)?;
        let s = Matrix3::identity() - (minv * l) * Complex64::new(omega, 0.0);
        for r in 0..3 {
            for c in 0..3 {
                fine[(3 * b + r, 3 * b + c)] = l[(r, c)];
                smooth[(3 * b + r, 3 * b + c)] = s[(r, c)];
            }
        }
    }
    let (restr, prol) = transfer_symbols(&harmonics);

    let coarse_inv_dyn = DMatrix::from_fn(3, 3, |r, c| coarse_inv[(r, c)]);
    let cgc = DMatrix::<Complex64>::identity(12, 12) - prol * coarse_inv_dyn * restr * fine;
    let mut result = cgc;
    for _ in 0..gamma1 {
        result = &result * &smooth;
    }
    for _ in 0..gamma2 {
        result = &smooth * &result;
    }
    Ok(result)
}

/// Two-grid LFA convergence factor: the worst spectral radius of the
/// harmonic symbol over a uniform sampling of the low quadrant. Singular
/// frequencies (the zero frequency) are skipped.
pub fn twogrid_factor(
    scheme: SmootherScheme,
    omega: f64,
    gamma1: usize,
    gamma2: usize,
    params: PhysicalParams,
    h: f64,
    samples: usize,
) -> f64 {
    assert!(samples >= 32, "need at least 32 samples per dimension");
    use std::f64::consts::{FRAC_PI_2, PI};
    let step = PI / samples as f64;
    let freqs: Vec<Frequency> = (1..=samples)
        .flat_map(|k1| {
            (1..=samples).map(move |k2| {
                Frequency::new(-FRAC_PI_2 + k1 as f64 * step, -FRAC_PI_2 + k2 as f64 * step)
            })
        })
        .collect();
    freqs
        .par_iter()
        .map(|theta| {
            match twogrid_symbol(*theta, scheme, omega, gamma1, gamma2, params, h) {
                Ok(sym) => spectral_radius_complex(&sym),
                Err(_) => 0.0,
            }
        })
        .reduce(|| 0.0, f64::max)
}
