//! MAC discretization of the mixed linear elasticity system.
//!
//! The continuous problem on the unit square is
//!
//! ```text
//! -eps lap(u) - tau grad(p) = f,    tau div(u) - (tau/lambda) p = 0,    u = 0 on the boundary,
//! ```
//!
//! with `tau = (lambda + eps)/lambda`. Second-order central differences on
//! the staggered grid produce the symmetric saddle system
//!
//! ```text
//! [ A   B^T ] [ u ]   [ f ]
//! [ B  -C   ] [ p ] = [ 0 ]
//! ```
//!
//! where `A` is the eps-scaled 5-point Laplacian per velocity component,
//! `B` the tau-scaled divergence and `C = (tau/lambda) I`. Normal velocity
//! components on the boundary are eliminated; the tangential condition is
//! imposed by ghost reflection (`u_ghost = -u_interior`), which raises the
//! Laplacian diagonal from `4/h^2` to `5/h^2` in rows next to a wall in the
//! staggered direction.

use crate::grid::{DofFamily, StaggeredField, StaggeredGrid};
use crate::linalg::{norm2, Csr};
use crate::Error;
use std::f64::consts::PI;

/// Material constants of the elasticity problem.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalParams {
    /// Shear Lame constant, `eps > 0`.
    pub epsilon: f64,
    /// Poisson ratio in `(0, 1/2)`.
    pub nu: f64,
    /// Second Lame constant `2 nu / (1 - 2 nu)`.
    pub lambda: f64,
    /// Scaling `(lambda + eps) / lambda`.
    pub tau: f64,
}

impl PhysicalParams {
    pub fn new(epsilon: f64, nu: f64) -> Result<Self, Error> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParams {
                what: format!("epsilon must be positive, got {epsilon}"),
            });
        }
        if !(nu > 0.0 && nu < 0.5) {
            return Err(Error::InvalidParams {
                what: format!("nu must lie in (0, 1/2), got {nu}"),
            });
        }
        let lambda = 2.0 * nu / (1.0 - 2.0 * nu);
        let tau = (lambda + epsilon) / lambda;
        Ok(PhysicalParams {
            epsilon,
            nu,
            lambda,
            tau,
        })
    }

    /// Ratio `eps / lambda`, the small parameter of the incompressible limit.
    pub fn eps_over_lambda(&self) -> f64 {
        self.epsilon / self.lambda
    }
}

/// One grid function for each unknown family.
#[derive(Debug, Clone)]
pub struct SaddleState {
    pub u: StaggeredField,
    pub v: StaggeredField,
    pub p: StaggeredField,
}

impl SaddleState {
    pub fn zeros(grid: StaggeredGrid) -> Self {
        SaddleState {
            u: StaggeredField::zeros(grid, DofFamily::UFace),
            v: StaggeredField::zeros(grid, DofFamily::VFace),
            p: StaggeredField::zeros(grid, DofFamily::Center),
        }
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.u.grid()
    }

    /// Euclidean norm of the stacked (u, v, p) vector.
    pub fn norm2(&self) -> f64 {
        let s = |f: &StaggeredField| f.values().iter().map(|x| x * x).sum::<f64>();
        (s(&self.u) + s(&self.v) + s(&self.p)).sqrt()
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: f64, other: &SaddleState) {
        for (field, of) in [
            (&mut self.u, &other.u),
            (&mut self.v, &other.v),
            (&mut self.p, &other.p),
        ] {
            for (x, y) in field.values_mut().iter_mut().zip(of.values()) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for field in [&mut self.u, &mut self.v, &mut self.p] {
            for x in field.values_mut() {
                *x *= alpha;
            }
        }
    }

    /// Stack into one vector ordered (u, v, p), matching the block layout.
    pub fn to_stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid().total_dofs());
        out.extend_from_slice(self.u.values());
        out.extend_from_slice(self.v.values());
        out.extend_from_slice(self.p.values());
        out
    }

    pub fn from_stacked(grid: StaggeredGrid, stacked: &[f64]) -> Self {
        assert_eq!(stacked.len(), grid.total_dofs());
        let nu = grid.dof_count(DofFamily::UFace);
        let nv = grid.dof_count(DofFamily::VFace);
        SaddleState {
            u: StaggeredField::from_values(grid, DofFamily::UFace, stacked[..nu].to_vec()),
            v: StaggeredField::from_values(
                grid,
                DofFamily::VFace,
                stacked[nu..nu + nv].to_vec(),
            ),
            p: StaggeredField::from_values(grid, DofFamily::Center, stacked[nu + nv..].to_vec()),
        }
    }
}

/// Assembled MAC discretization on one grid level.
///
/// The blocks are kept in CSR form for Schur complement assembly and dense
/// oracles; [`SaddleOperator::apply`] and the individual block applies are
/// matrix-free stencil sweeps and never touch the assembled data.
#[derive(Debug, Clone)]
pub struct SaddleOperator {
    grid: StaggeredGrid,
    params: PhysicalParams,
    a_u: Csr,
    a_v: Csr,
    b_u: Csr,
    b_v: Csr,
}

impl SaddleOperator {
    /// Assemble all blocks at this grid's mesh width.
    pub fn assemble(grid: StaggeredGrid, params: PhysicalParams) -> Self {
        let n = grid.n() as isize;
        let h = grid.h();
        let eps_h2 = params.epsilon / (h * h);
        let tau_h = params.tau / h;

        // Velocity Laplacian blocks. The `wall` predicate marks the staggered
        // direction's ghost-reflected rows (diagonal 5 eps/h^2).
        let assemble_laplacian = |family: DofFamily, wall: &dyn Fn(isize, isize) -> usize| {
            let (imax, jmax) = grid.index_range(family);
            let size = grid.dof_count(family);
            let mut t = Vec::with_capacity(5 * size);
            for j in 1..=jmax as isize {
                for i in 1..=imax as isize {
                    let row = (j as usize - 1) * imax + (i as usize - 1);
                    let diag = (4 + wall(i, j)) as f64 * eps_h2;
                    t.push((row, row, diag));
                    for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                        if ni >= 1 && ni <= imax as isize && nj >= 1 && nj <= jmax as isize {
                            let col = (nj as usize - 1) * imax + (ni as usize - 1);
                            t.push((row, col, -eps_h2));
                        }
                    }
                }
            }
            Csr::from_triplets(size, size, &t)
        };
        let a_u = assemble_laplacian(DofFamily::UFace, &|_, j| {
            usize::from(j == 1) + usize::from(j == n)
        });
        let a_v = assemble_laplacian(DofFamily::VFace, &|i, _| {
            usize::from(i == 1) + usize::from(i == n)
        });

        // Divergence rows: cell (i, j) sees its four faces; eliminated
        // boundary faces simply do not appear.
        let np = grid.dof_count(DofFamily::Center);
        let (iu_max, _) = grid.index_range(DofFamily::UFace);
        let (iv_max, _) = grid.index_range(DofFamily::VFace);
        let mut tu = Vec::with_capacity(2 * np);
        let mut tv = Vec::with_capacity(2 * np);
        for j in 1..=grid.n() {
            for i in 1..=grid.n() {
                let row = (j - 1) * grid.n() + (i - 1);
                if i <= iu_max {
                    tu.push((row, (j - 1) * iu_max + (i - 1), tau_h));
                }
                if i >= 2 {
                    tu.push((row, (j - 1) * iu_max + (i - 2), -tau_h));
                }
                if j <= grid.n() - 1 {
                    tv.push((row, (j - 1) * iv_max + (i - 1), tau_h));
                }
                if j >= 2 {
                    tv.push((row, (j - 2) * iv_max + (i - 1), -tau_h));
                }
            }
        }
        let b_u = Csr::from_triplets(np, grid.dof_count(DofFamily::UFace), &tu);
        let b_v = Csr::from_triplets(np, grid.dof_count(DofFamily::VFace), &tv);

        SaddleOperator {
            grid,
            params,
            a_u,
            a_v,
            b_u,
            b_v,
        }
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    pub fn params(&self) -> PhysicalParams {
        self.params
    }

    /// Diagonal value of the pressure block `C = (tau/lambda) I`.
    pub fn c_diag(&self) -> f64 {
        self.params.tau / self.params.lambda
    }

    pub fn a_u(&self) -> &Csr {
        &self.a_u
    }

    pub fn a_v(&self) -> &Csr {
        &self.a_v
    }

    pub fn b_u(&self) -> &Csr {
        &self.b_u
    }

    pub fn b_v(&self) -> &Csr {
        &self.b_v
    }

    /// Matrix-free application of the full block operator.
    pub fn apply(&self, x: &SaddleState) -> Result<SaddleState, Error> {
        if x.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: x.grid().n(),
            });
        }
        let mut out = SaddleState::zeros(self.grid);
        self.apply_velocity_laplacian(&x.u, &mut out.u);
        self.apply_velocity_laplacian(&x.v, &mut out.v);
        self.apply_gradient_acc(&x.p, &mut out.u, &mut out.v);
        self.apply_divergence(&x.u, &x.v, &mut out.p);
        let c = self.c_diag();
        for (o, p) in out.p.values_mut().iter_mut().zip(x.p.values()) {
            *o -= c * p;
        }
        Ok(out)
    }

    /// Residual `rhs - L x`.
    pub fn residual(&self, x: &SaddleState, rhs: &SaddleState) -> Result<SaddleState, Error> {
        let mut r = rhs.clone();
        let lx = self.apply(x)?;
        r.axpy(-1.0, &lx);
        Ok(r)
    }

    /// `out = eps * (-lap) field` with ghost reflection at tangential walls.
    pub fn apply_velocity_laplacian(&self, field: &StaggeredField, out: &mut StaggeredField) {
        let (imax, jmax) = self.grid.index_range(field.family());
        let h = self.grid.h();
        let eps_h2 = self.params.epsilon / (h * h);
        let staggered_x = matches!(field.family(), DofFamily::VFace);
        let values = out.values_mut();
        for j in 1..=jmax as isize {
            for i in 1..=imax as isize {
                let wall = if staggered_x {
                    usize::from(i == 1) + usize::from(i == imax as isize)
                } else {
                    usize::from(j == 1) + usize::from(j == jmax as isize)
                };
                let center = (4 + wall) as f64 * field.get(i as usize, j as usize);
                let nb = field.get_or_zero(i - 1, j)
                    + field.get_or_zero(i + 1, j)
                    + field.get_or_zero(i, j - 1)
                    + field.get_or_zero(i, j + 1);
                values[(j as usize - 1) * imax + (i as usize - 1)] = eps_h2 * (center - nb);
            }
        }
    }

    /// Accumulate the pressure gradient block: `(out_u, out_v) += B^T p`,
    /// i.e. `-tau` times the face-centered pressure differences.
    pub fn apply_gradient_acc(
        &self,
        p: &StaggeredField,
        out_u: &mut StaggeredField,
        out_v: &mut StaggeredField,
    ) {
        let tau_h = self.params.tau / self.grid.h();
        let (iu_max, ju_max) = self.grid.index_range(DofFamily::UFace);
        let values = out_u.values_mut();
        for j in 1..=ju_max {
            for i in 1..=iu_max {
                values[(j - 1) * iu_max + (i - 1)] -= tau_h * (p.get(i + 1, j) - p.get(i, j));
            }
        }
        let (iv_max, jv_max) = self.grid.index_range(DofFamily::VFace);
        let values = out_v.values_mut();
        for j in 1..=jv_max {
            for i in 1..=iv_max {
                values[(j - 1) * iv_max + (i - 1)] -= tau_h * (p.get(i, j + 1) - p.get(i, j));
            }
        }
    }

    /// Divergence rows: `out = B (u, v)`, the tau-scaled discrete divergence
    /// at each cell center.
    pub fn apply_divergence(
        &self,
        u: &StaggeredField,
        v: &StaggeredField,
        out: &mut StaggeredField,
    ) {
        let n = self.grid.n();
        let tau_h = self.params.tau / self.grid.h();
        let values = out.values_mut();
        for j in 1..=n as isize {
            for i in 1..=n as isize {
                let div = u.get_or_zero(i, j) - u.get_or_zero(i - 1, j) + v.get_or_zero(i, j)
                    - v.get_or_zero(i, j - 1);
                values[(j as usize - 1) * n + (i as usize - 1)] = tau_h * div;
            }
        }
    }

    /// Dense matrix of the full system in stacked (u, v, p) order, built from
    /// the assembled blocks. Intended for coarse-level factorizations and
    /// oracles, not for smoothing.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let nu = self.grid.dof_count(DofFamily::UFace);
        let nv = self.grid.dof_count(DofFamily::VFace);
        let np = self.grid.dof_count(DofFamily::Center);
        let total = nu + nv + np;
        let mut m = nalgebra::DMatrix::zeros(total, total);
        for r in 0..nu {
            for (c, v) in self.a_u.row(r) {
                m[(r, c)] = v;
            }
        }
        for r in 0..nv {
            for (c, v) in self.a_v.row(r) {
                m[(nu + r, nu + c)] = v;
            }
        }
        for r in 0..np {
            for (c, v) in self.b_u.row(r) {
                m[(nu + nv + r, c)] = v;
                m[(c, nu + nv + r)] = v;
            }
            for (c, v) in self.b_v.row(r) {
                m[(nu + nv + r, nu + c)] = v;
                m[(nu + c, nu + nv + r)] = v;
            }
            m[(nu + nv + r, nu + nv + r)] = -self.c_diag();
        }
        m
    }
}

/// Closed-form fields of the manufactured problem, sampled at the DOF
/// positions of `grid`.
///
/// The displacement is
/// `u = (-1 + cos 2 pi x) sin 2 pi y + sin(pi x) sin(pi y) / (1 + lambda)`,
/// `v = (1 - cos 2 pi y) sin 2 pi x + sin(pi x) sin(pi y) / (1 + lambda)`,
/// and the pressure `p = lambda div(u)` collapses to
/// `lambda pi / (1 + lambda) * sin(pi (x + y))`.
pub fn manufactured_solution(grid: StaggeredGrid, params: PhysicalParams) -> SaddleState {
    let lam = params.lambda;
    let u = StaggeredField::from_fn(grid, DofFamily::UFace, |x, y| {
        (-1.0 + (2.0 * PI * x).cos()) * (2.0 * PI * y).sin()
            + (PI * x).sin() * (PI * y).sin() / (1.0 + lam)
    });
    let v = StaggeredField::from_fn(grid, DofFamily::VFace, |x, y| {
        (1.0 - (2.0 * PI * y).cos()) * (2.0 * PI * x).sin()
            + (PI * x).sin() * (PI * y).sin() / (1.0 + lam)
    });
    let p = StaggeredField::from_fn(grid, DofFamily::Center, |x, y| {
        lam * PI / (1.0 + lam) * (PI * (x + y)).sin()
    });
    SaddleState { u, v, p }
}

/// Source term of the manufactured problem: the momentum components sampled
/// at the face points, zero in the continuity rows.
pub fn assemble_rhs(grid: StaggeredGrid, params: PhysicalParams) -> SaddleState {
    let eps = params.epsilon;
    let lam = params.lambda;
    let pi2 = PI * PI;
    let u = StaggeredField::from_fn(grid, DofFamily::UFace, |x, y| {
        (lam + 3.0 * eps) * pi2 / (1.0 + lam) * (PI * x).sin() * (PI * y).sin()
            + 8.0 * pi2 * eps * (2.0 * PI * y).sin() * (2.0 * PI * x).cos()
            - 4.0 * pi2 * eps * (2.0 * PI * y).sin()
            - (lam + eps) * pi2 / (1.0 + lam) * (PI * x).cos() * (PI * y).cos()
    });
    let v = StaggeredField::from_fn(grid, DofFamily::VFace, |x, y| {
        (lam + 3.0 * eps) * pi2 / (1.0 + lam) * (PI * x).sin() * (PI * y).sin()
            - 8.0 * pi2 * eps * (2.0 * PI * y).cos() * (2.0 * PI * x).sin()
            + 4.0 * pi2 * eps * (2.0 * PI * x).sin()
            - (lam + eps) * pi2 / (1.0 + lam) * (PI * x).cos() * (PI * y).cos()
    });
    let p = StaggeredField::zeros(grid, DofFamily::Center);
    SaddleState { u, v, p }
}

/// Discrete L2 norms `(||u - u_h||, ||v - v_h||, ||p - p_h||)` with weight
/// `h^2` per DOF.
pub fn error_norms(
    approx: &SaddleState,
    exact: &SaddleState,
) -> Result<(f64, f64, f64), Error> {
    if approx.grid() != exact.grid() {
        return Err(Error::GridMismatch {
            left: approx.grid().n(),
            right: exact.grid().n(),
        });
    }
    let h = approx.grid().h();
    let norm = |a: &StaggeredField, b: &StaggeredField| {
        let diff: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect();
        norm2(&diff) * h
    };
    Ok((
        norm(&approx.u, &exact.u),
        norm(&approx.v, &exact.v),
        norm(&approx.p, &exact.p),
    ))
}
