//! Small dense/sparse linear algebra kernels used by the solver.
//!
//! Assembled operators are kept in CSR form; the multigrid hot paths are
//! matrix-free and only touch these matrices for Schur complements, level
//! factorizations and test oracles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Compressed sparse row matrix with `f64` entries.
#[derive(Debug, Clone)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; triplets.len()];
        let mut data = vec![0.0; triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let k = cursor[r];
            indices[k] = c;
            data[k] = v;
            cursor[r] += 1;
        }
        let mut m = Csr {
            nrows,
            ncols,
            indptr: counts,
            indices,
            data,
        };
        m.sort_and_compress();
        m
    }

    /// Identity scaled by `v`.
    pub fn scaled_identity(n: usize, v: f64) -> Self {
        Csr {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![v; n],
        }
    }

    fn sort_and_compress(&mut self) {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..self.nrows {
            row.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                row.push((self.indices[k], self.data[k]));
            }
            row.sort_unstable_by_key(|e| e.0);
            let mut prev: Option<usize> = None;
            for &(c, v) in row.iter() {
                if prev == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    prev = Some(c);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterate the stored entries of one row as (col, value) pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    /// y += alpha * A x.
    pub fn matvec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] += alpha * acc;
        }
    }

    /// y += alpha * A^T x.
    pub fn matvec_transpose_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for r in 0..self.nrows {
            let xr = alpha * x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k] * xr;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        let mut cursor = counts.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let pos = cursor[c];
                indices[pos] = r;
                data[pos] = self.data[k];
                cursor[c] += 1;
            }
        }
        Csr {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// Sparse product A * B with a dense scatter workspace per row.
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let n = other.ncols;
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut marker = vec![usize::MAX; n];
        let mut values = vec![0.0; n];
        let mut cols: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = self.data[k];
                let mid = self.indices[k];
                for kb in other.indptr[mid]..other.indptr[mid + 1] {
                    let c = other.indices[kb];
                    if marker[c] != r {
                        marker[c] = r;
                        values[c] = 0.0;
                        cols.push(c);
                    }
                    values[c] += a * other.data[kb];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                data.push(values[c]);
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            nrows: self.nrows,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    /// Entrywise sum A + B.
    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            triplets.extend(self.row(r).map(|(c, v)| (r, c, v)));
            triplets.extend(other.row(r).map(|(c, v)| (r, c, v)));
        }
        Csr::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        assert_eq!(self.nrows, self.ncols);
        let mut d = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                if c == r {
                    d[r] = v;
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Largest |A - A^T| entry; zero for symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            let mut a = self.row(r).peekable();
            let mut b = t.row(r).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca == cb {
                            worst = worst.max((va - vb).abs());
                            a.next();
                            b.next();
                        } else if ca < cb {
                            worst = worst.max(va.abs());
                            a.next();
                        } else {
                            worst = worst.max(vb.abs());
                            b.next();
                        }
                    }
                    (Some((_, va)), None) => {
                        worst = worst.max(va.abs());
                        a.next();
                    }
                    (None, Some((_, vb))) => {
                        worst = worst.max(vb.abs());
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }
        worst
    }
}

/// Cholesky factorization of a symmetric positive definite band matrix.
///
/// Stores the lower factor by diagonals: `band[d][i]` holds L[i+d, i], so
/// `band[0]` is the main diagonal.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    band: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Factor an SPD matrix given in CSR form.
    pub fn new(a: &Csr) -> Result<Self, crate::Error> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let mut bw = 0usize;
        for r in 0..n {
            for (c, _) in a.row(r) {
                bw = bw.max(r.abs_diff(c));
            }
        }
        let mut band: Vec<Vec<f64>> = (0..=bw).map(|d| vec![0.0; n - d]).collect();
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    band[r - c][c] = v;
                }
            }
        }
        // In-place banded Cholesky, column by column.
        for j in 0..n {
            let mut diag = band[0][j];
            let kmin = j.saturating_sub(bw);
            for k in kmin..j {
                let l = band[j - k][k];
                diag -= l * l;
            }
            if diag <= 0.0 {
                return Err(crate::Error::FactorizationFailed {
                    what: "banded Cholesky hit a non-positive pivot",
                });
            }
            let diag = diag.sqrt();
            band[0][j] = diag;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let mut s = band[i - j][j];
                let kmin = i.saturating_sub(bw).max(kmin);
                for k in kmin..j {
                    s -= band[i - k][k] * band[j - k][k];
                }
                band[i - j][j] = s / diag;
            }
        }
        Ok(BandedCholesky {
            n,
            bandwidth: bw,
            band,
        })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        // Forward: L y = b.
        for i in 0..self.n {
            let kmin = i.saturating_sub(self.bandwidth);
            let mut s = x[i];
            for k in kmin..i {
                s -= self.band[i - k][k] * x[k];
            }
            x[i] = s / self.band[0][i];
        }
        // Backward: L^T x = y.
        for i in (0..self.n).rev() {
            let imax = (i + self.bandwidth).min(self.n - 1);
            let mut s = x[i];
            for k in (i + 1)..=imax {
                s -= self.band[k - i][i] * x[k];
            }
            x[i] = s / self.band[0][i];
        }
        x
    }
}

/// Dense LU with partial pivoting, used for coarsest-level solves.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: DMatrix<f64>) -> Result<Self, crate::Error> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let lu = a.lu();
        if lu.determinant() == 0.0 {
            return Err(crate::Error::FactorizationFailed {
                what: "dense LU is singular",
            });
        }
        Ok(DenseLu { lu, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        let x = self.lu.solve(&rhs).expect("LU solve after nonsingular factorization");
        x.as_slice().to_vec()
    }
}

/// Eigenvalues of a dense complex matrix by unsymmetric QR iteration:
/// Householder reduction to upper Hessenberg form, then single-shift QR
/// with Wilkinson shifts and deflation.
pub fn complex_eigenvalues(a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    let mut eigs = vec![Complex64::new(0.0, 0.0); n];
    let eps = f64::EPSILON;
    let hnorm = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);

    let mut en = n - 1; // bottom of the active window
    let mut its = 0usize;
    let mut total = 0usize;
    loop {
        // Find the top of the active window: the first negligible
        // subdiagonal entry below `en`.
        let mut lo = en;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { hnorm } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == en {
            // 1x1 block converged.
            eigs[en] = h[(en, en)];
            if en == 0 {
                break;
            }
            en -= 1;
            its = 0;
            continue;
        }
        if lo + 1 == en {
            // 2x2 block: closed-form eigenvalues.
            let (l1, l2) = eig2(h[(lo, lo)], h[(lo, en)], h[(en, lo)], h[(en, en)]);
            eigs[en] = l1;
            eigs[lo] = l2;
            if lo == 0 {
                break;
            }
            en = lo - 1;
            its = 0;
            continue;
        }

        total += 1;
        its += 1;
        assert!(
            total <= 200 * n,
            "complex QR iteration failed to converge ({n}x{n} matrix)"
        );
        // Wilkinson shift from the trailing 2x2, with an exceptional shift
        // when the iteration stagnates.
        let shift = if its % 12 == 0 {
            h[(en, en)] + Complex64::new(0.75 * h[(en, en - 1)].norm(), 0.0)
        } else {
            let (l1, l2) = eig2(
                h[(en - 1, en - 1)],
                h[(en - 1, en)],
                h[(en, en - 1)],
                h[(en, en)],
            );
            // pick the root closer to the corner entry
            if (l1 - h[(en, en)]).norm() <= (l2 - h[(en, en)]).norm() {
                l1
            } else {
                l2
            }
        };
        qr_step(&mut h, lo, en, shift);
    }
    eigs
}

/// Eigenvalues of a complex 2x2 matrix [[a, b], [c, d]].
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    (mean + root, mean - root)
}

/// One explicit single-shift QR sweep on the Hessenberg window [lo, en].
fn qr_step(h: &mut DMatrix<Complex64>, lo: usize, en: usize, shift: Complex64) {
    for k in lo..=en {
        h[(k, k)] -= shift;
    }
    let m = en - lo; // number of rotations
    let mut rot = Vec::with_capacity(m);
    for k in lo..en {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        rot.push((c, s));
        for col in k..=en {
            let x = h[(k, col)];
            let y = h[(k + 1, col)];
            h[(k, col)] = c * x + s * y;
            h[(k + 1, col)] = -s.conj() * x + c * y;
        }
    }
    for (idx, (c, s)) in rot.iter().enumerate() {
        let k = lo + idx;
        for row in lo..=(k + 1).min(en) {
            let x = h[(row, k)];
            let y = h[(row, k + 1)];
            h[(row, k)] = c * x + s.conj() * y;
            h[(row, k + 1)] = -s * x + c * y;
        }
    }
    for k in lo..=en {
        h[(k, k)] += shift;
    }
}

/// Complex Givens rotation with real cosine: [c, s; -conj(s), c] * [a; b] has
/// zero second component.
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 || b.norm() == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let alpha = if a.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        a / a.norm()
    };
    (
        Complex64::new(a.norm() / r, 0.0),
        alpha * b.conj() / r,
    )
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg_in_place(h: &mut DMatrix<Complex64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm_x: f64 = (k + 1..n).map(|r| h[(r, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = phase * norm_x;
        let mut v: Vec<Complex64> = (k + 1..n).map(|r| h[(r, k)]).collect();
        v[0] += alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // Left: H <- (I - tau v v^H) H on rows k+1.., columns k..n.
        for col in k..n {
            let mut w = Complex64::new(0.0, 0.0);
            for (idx, r) in (k + 1..n).enumerate() {
                w += v[idx].conj() * h[(r, col)];
            }
            w *= tau;
            for (idx, r) in (k + 1..n).enumerate() {
                let upd = v[idx] * w;
                h[(r, col)] -= upd;
            }
        }
        // Right: H <- H (I - tau v v^H) on columns k+1.., all rows.
        for row in 0..n {
            let mut w = Complex64::new(0.0, 0.0);
            for (idx, c) in (k + 1..n).enumerate() {
                w += h[(row, c)] * v[idx];
            }
            w *= tau;
            for (idx, c) in (k + 1..n).enumerate() {
                let upd = w * v[idx].conj();
                h[(row, c)] -= upd;
            }
        }
        // Clean the annihilated column.
        h[(k + 1, k)] = -alpha;
        for r in k + 2..n {
            h[(r, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Spectral radius of a complex square matrix.
pub fn spectral_radius_complex(m: &DMatrix<Complex64>) -> f64 {
    complex_eigenvalues(m)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius of a real square matrix.
pub fn spectral_radius_real(m: &DMatrix<f64>) -> f64 {
    let c = m.map(|x| Complex64::new(x, 0.0));
    spectral_radius_complex(&c)
}

/// Euclidean norm of a slice.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
