//! Staggered (MAC) grid geometry on the unit square.
//!
//! An `N x N` cell grid with mesh width `h = 1/N` carries three families of
//! unknowns after the boundary values are eliminated:
//!
//! * horizontal velocity `u` on vertical cell faces, `(N-1)*N` interior values
//! * vertical velocity `v` on horizontal cell faces, `N*(N-1)` interior values
//! * pressure `p` at cell centers, `N^2` values
//!
//! Index convention: a family member is addressed by 1-based `(i, j)` matching
//! the usual half-index labels: `u(i, j)` sits at `(i*h, (j-1/2)*h)`,
//! `v(i, j)` at `((i-1/2)*h, j*h)` and `p(i, j)` at `((i-1/2)*h, (j-1/2)*h)`.
//! Storage is a flat vector ordered with `i` fastest (row within a y-level),
//! then `j`.

use crate::Error;

/// Uniform staggered grid on the unit square with `n` cells per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StaggeredGrid {
    n: usize,
}

impl StaggeredGrid {
    pub fn new(n: usize) -> Result<Self, Error> {
        if n < 2 {
            return Err(Error::InvalidGrid { n });
        }
        Ok(StaggeredGrid { n })
    }

    /// Cells per dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width `1/n`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Next coarser grid (half the cells), if `n` is even.
    pub fn coarsen(&self) -> Result<StaggeredGrid, Error> {
        if self.n % 2 != 0 {
            return Err(Error::NotCoarsenable { n: self.n });
        }
        StaggeredGrid::new(self.n / 2)
    }

    pub fn dof_count(&self, family: DofFamily) -> usize {
        let n = self.n;
        match family {
            DofFamily::UFace => (n - 1) * n,
            DofFamily::VFace => n * (n - 1),
            DofFamily::Center => n * n,
        }
    }

    /// Total unknowns over all three families.
    pub fn total_dofs(&self) -> usize {
        self.dof_count(DofFamily::UFace)
            + self.dof_count(DofFamily::VFace)
            + self.dof_count(DofFamily::Center)
    }

    /// Valid 1-based index ranges `(i_max, j_max)` for a family; `i` runs
    /// `1..=i_max` and `j` runs `1..=j_max`.
    pub fn index_range(&self, family: DofFamily) -> (usize, usize) {
        let n = self.n;
        match family {
            DofFamily::UFace => (n - 1, n),
            DofFamily::VFace => (n, n - 1),
            DofFamily::Center => (n, n),
        }
    }

    /// Flat index of family member `(i, j)`, `i` fastest.
    pub fn linear_index(&self, family: DofFamily, i: usize, j: usize) -> Result<usize, Error> {
        let (imax, jmax) = self.index_range(family);
        if i < 1 || i > imax || j < 1 || j > jmax {
            return Err(Error::IndexOutOfRange { i, j });
        }
        Ok((j - 1) * imax + (i - 1))
    }

    /// Physical location of family member `(i, j)`.
    pub fn position(&self, family: DofFamily, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        match family {
            DofFamily::UFace => (i as f64 * h, (j as f64 - 0.5) * h),
            DofFamily::VFace => ((i as f64 - 0.5) * h, j as f64 * h),
            DofFamily::Center => ((i as f64 - 0.5) * h, (j as f64 - 0.5) * h),
        }
    }
}

/// The three staggered unknown families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofFamily {
    /// Horizontal velocity on vertical cell faces.
    UFace,
    /// Vertical velocity on horizontal cell faces.
    VFace,
    /// Pressure at cell centers.
    Center,
}

impl DofFamily {
    pub const ALL: [DofFamily; 3] = [DofFamily::UFace, DofFamily::VFace, DofFamily::Center];
}

/// Values attached to one unknown family of one grid, in flat `vec` order.
#[derive(Debug, Clone)]
pub struct StaggeredField {
    family: DofFamily,
    grid: StaggeredGrid,
    values: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(grid: StaggeredGrid, family: DofFamily) -> Self {
        StaggeredField {
            family,
            grid,
            values: vec![0.0; grid.dof_count(family)],
        }
    }

    pub fn from_values(grid: StaggeredGrid, family: DofFamily, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.dof_count(family), "field length mismatch");
        StaggeredField {
            family,
            grid,
            values,
        }
    }

    /// Sample a function of physical position at every member of the family.
    pub fn from_fn(
        grid: StaggeredGrid,
        family: DofFamily,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        let (imax, jmax) = grid.index_range(family);
        let mut values = Vec::with_capacity(grid.dof_count(family));
        for j in 1..=jmax {
            for i in 1..=imax {
                let (x, y) = grid.position(family, i, j);
                values.push(f(x, y));
            }
        }
        StaggeredField {
            family,
            grid,
            values,
        }
    }

    #[inline]
    pub fn family(&self) -> DofFamily {
        self.family
    }

    #[inline]
    pub fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at 1-based `(i, j)`; returns 0 outside the index range, which is
    /// exactly the eliminated homogeneous Dirichlet data.
    #[inline]
    pub fn get_or_zero(&self, i: isize, j: isize) -> f64 {
        let (imax, jmax) = self.grid.index_range(self.family);
        if i < 1 || j < 1 || i as usize > imax || j as usize > jmax {
            0.0
        } else {
            self.values[(j as usize - 1) * imax + (i as usize - 1)]
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (imax, _) = self.grid.index_range(self.family);
        self.values[(j - 1) * imax + (i - 1)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (imax, _) = self.grid.index_range(self.family);
        self.values[(j - 1) * imax + (i - 1)] = v;
    }
}
