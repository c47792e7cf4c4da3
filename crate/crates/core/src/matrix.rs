//! Dense row-major matrices and the (p, m) block view used throughout the crate.
//!
//! An `mp × mp` matrix is viewed as a `p × p` grid of `m × m` blocks; block
//! `(k, l)` holds entries `[(k·m + s), (l·m + t)]` for `s, t ∈ 0..m`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{bail, Error, Result};

/// Tolerance for the symmetry flag of [`BlockMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default cap on the number of entries a Tracy–Singh product may allocate.
pub const TRACY_SINGH_ENTRY_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = 1.0;
        }
        out
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out[(i, i)] = d;
        }
        out
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            bail!(
                Shape,
                "{} values cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            );
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                bail!(Shape, "row {} has {} entries, expected {}", i, r.len(), cols);
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            bail!(
                Shape,
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            );
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn scale_mut(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Largest absolute entry, `‖A‖_∞` in the entrywise sense.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Sum of absolute entries.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    /// `max_i Σ_j |A_ij|`.
    pub fn one_infinity_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `max |A_ij − A_ji|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    /// Replaces `A` by `(A + Aᵀ)/2`. No-op for non-square input.
    pub fn symmetrize(&mut self) {
        if !self.is_square() {
            return;
        }
        let n = self.rows;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    /// Lower Cholesky factor `L` with `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<Matrix> {
        if !self.is_square() {
            bail!(Shape, "cholesky needs a square matrix");
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                bail!(Numeric, "matrix is not positive definite (pivot {} = {:e})", j, d);
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l.data[ri + k] * l.data[rj + k];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// `ln |A|` for symmetric positive definite `A`.
    pub fn spd_log_det(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * (0..l.rows).map(|i| libm::log(l[(i, i)])).sum::<f64>())
    }

    /// Inverse of a symmetric positive definite matrix via its Cholesky factor.
    pub fn spd_inverse(&self) -> Result<Matrix> {
        let l = self.cholesky()?;
        let n = l.rows;
        // L⁻¹ by forward substitution, column by column.
        let mut linv = Matrix::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / l[(i, i)];
            }
        }
        // A⁻¹ = L⁻ᵀ L⁻¹
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in i..n {
                    s += linv[(k, i)] * linv[(k, j)];
                }
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }
        Ok(inv)
    }

    /// Submatrix with the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

fn zip_with(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    assert_eq!(
        (a.rows, a.cols),
        (b.rows, b.cols),
        "elementwise operation on mismatched shapes"
    );
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scaled(rhs)
    }
}

/// The four matrix norms used by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    /// Spectral norm `√φ_max(AᵀA)`; only computed for symmetric input.
    pub operator: Option<f64>,
    pub max_abs: f64,
    pub one_infinity: f64,
}

/// Frobenius, operator, max-abs and `‖·‖_{1,∞}` norms of `a`.
pub fn norms(a: &Matrix) -> Result<Norms> {
    if !a.is_finite() {
        bail!(InvalidInput, "matrix has non-finite entries");
    }
    let operator = if a.is_square() && a.is_symmetric(SYMMETRY_TOL) {
        Some(operator_norm(a)?)
    } else {
        None
    };
    Ok(Norms {
        frobenius: a.frobenius_norm(),
        operator,
        max_abs: a.max_abs(),
        one_infinity: a.one_infinity_norm(),
    })
}

/// Spectral norm of a symmetric matrix, `max |λ|`.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    if !a.is_square() || !a.is_symmetric(SYMMETRY_TOL) {
        bail!(Unsupported, "operator norm is only computed for symmetric matrices");
    }
    let ev = crate::eigen::sym_eig(a)?.eigenvalues;
    Ok(ev.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = (b.rows, b.cols);
    Matrix::from_fn(a.rows * br, a.cols * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// An `mp × mp` matrix with its `(p, m)` block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    data: Matrix,
    p: usize,
    m: usize,
    symmetric: bool,
}

impl BlockMatrix {
    pub fn new(data: Matrix, p: usize, m: usize) -> Result<Self> {
        if p == 0 || m == 0 {
            bail!(InvalidInput, "block structure needs p >= 1 and m >= 1");
        }
        if data.rows != p * m || data.cols != p * m {
            bail!(
                Shape,
                "{}x{} matrix does not match p={} m={}",
                data.rows,
                data.cols,
                p,
                m
            );
        }
        Ok(BlockMatrix {
            data,
            p,
            m,
            symmetric: false,
        })
    }

    /// Wraps `data` as a symmetric block matrix, replacing it by `(A + Aᵀ)/2`.
    pub fn symmetric(mut data: Matrix, p: usize, m: usize) -> Result<Self> {
        data.symmetrize();
        let mut out = Self::new(data, p, m)?;
        out.symmetric = true;
        Ok(out)
    }

    pub fn zeros(p: usize, m: usize) -> Self {
        BlockMatrix {
            data: Matrix::zeros(p * m, p * m),
            p,
            m,
            symmetric: true,
        }
    }

    pub fn identity(p: usize, m: usize) -> Self {
        BlockMatrix {
            data: Matrix::identity(p * m),
            p,
            m,
            symmetric: true,
        }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Side length `mp`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.p * self.m
    }

    pub fn is_flagged_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    /// Mutable access drops the symmetry flag.
    pub fn matrix_mut(&mut self) -> &mut Matrix {
        self.symmetric = false;
        &mut self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn same_structure(&self, other: &BlockMatrix) -> bool {
        self.p == other.p && self.m == other.m
    }

    /// Copy of block `(k, l)`.
    pub fn block(&self, k: usize, l: usize) -> Matrix {
        let m = self.m;
        Matrix::from_fn(m, m, |s, t| self.data[(k * m + s, l * m + t)])
    }

    pub fn set_block(&mut self, k: usize, l: usize, block: &Matrix) {
        assert_eq!((block.rows(), block.cols()), (self.m, self.m));
        let m = self.m;
        for s in 0..m {
            for t in 0..m {
                self.data[(k * m + s, l * m + t)] = block[(s, t)];
            }
        }
        self.symmetric = false;
    }

    pub fn block_frobenius(&self, k: usize, l: usize) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for s in 0..m {
            let row = self.data.row(k * m + s);
            acc += row[l * m..(l + 1) * m].iter().map(|x| x * x).sum::<f64>();
        }
        libm::sqrt(acc)
    }

    /// Re-symmetrizes and sets the symmetry flag.
    pub fn enforce_symmetry(&mut self) {
        self.data.symmetrize();
        self.symmetric = true;
    }

    /// Checks the symmetry invariant at [`SYMMETRY_TOL`].
    pub fn check_symmetric(&self) -> Result<()> {
        let asym = self.data.max_asymmetry();
        if asym > SYMMETRY_TOL {
            bail!(InvalidInput, "matrix is not symmetric (max |A - A^T| = {:e})", asym);
        }
        Ok(())
    }

    /// Applies a node relabeling: block `(k, l)` of the output is block
    /// `(perm[k], perm[l])` of the input.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<BlockMatrix> {
        if perm.len() != self.p {
            bail!(Shape, "permutation of length {} for p={}", perm.len(), self.p);
        }
        let m = self.m;
        let data = Matrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.data[(perm[i / m] * m + i % m, perm[j / m] * m + j % m)]
        });
        Ok(BlockMatrix {
            data,
            p: self.p,
            m,
            symmetric: self.symmetric,
        })
    }
}

/// `p × p` matrix of block Frobenius norms, the output of the C(·) operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNormMap {
    pub values: Matrix,
}

impl BlockNormMap {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[(k, l)]
    }

    pub fn p(&self) -> usize {
        self.values.rows()
    }
}

/// Maps every `m × m` block to its Frobenius norm.
pub fn block_norm_map(a: &BlockMatrix) -> BlockNormMap {
    let p = a.p();
    BlockNormMap {
        values: Matrix::from_fn(p, p, |k, l| a.block_frobenius(k, l)),
    }
}

/// Tracy–Singh product `A ⊠ B = [[A_ij ⊗ B_kl]_kl]_ij` with the default entry cap.
pub fn tracy_singh(a: &BlockMatrix, b: &BlockMatrix) -> Result<Matrix> {
    tracy_singh_capped(a, b, TRACY_SINGH_ENTRY_CAP)
}

/// Tracy–Singh product with an explicit cap on output entries.
///
/// Row `i·p·m² + k·m² + u·m + s` and column `j·p·m² + l·m² + v·m + t` hold
/// `A[(i·m+u, j·m+v)] · B[(k·m+s, l·m+t)]`: the outer block `(i, j)` is
/// `A_ij ⊠ B`, whose block `(k, l)` is the Kronecker product `A_ij ⊗ B_kl`.
/// For `m = 1` this is exactly `A ⊗ B`.
pub fn tracy_singh_capped(a: &BlockMatrix, b: &BlockMatrix, cap: usize) -> Result<Matrix> {
    if !a.same_structure(b) {
        bail!(Shape, "tracy-singh operands differ in (p, m) structure");
    }
    let (p, m) = (a.p(), a.m());
    let n = p * m;
    let side = n.checked_mul(n).ok_or_else(|| Error::Resource("dimension overflow".into()))?;
    let entries = side
        .checked_mul(side)
        .ok_or_else(|| Error::Resource("dimension overflow".into()))?;
    if entries > cap {
        bail!(
            Resource,
            "tracy-singh product would hold {} entries (cap {})",
            entries,
            cap
        );
    }
    let (am, bm) = (a.matrix(), b.matrix());
    let outer = p * m * m;
    let inner = m * m;
    Ok(Matrix::from_fn(side, side, |row, col| {
        let (i, rem_r) = (row / outer, row % outer);
        let (k, kr) = (rem_r / inner, rem_r % inner);
        let (u, s) = (kr / m, kr % m);
        let (j, rem_c) = (col / outer, col % outer);
        let (l, lc) = (rem_c / inner, rem_c % inner);
        let (v, t) = (lc / m, lc % m);
        am[(i * m + u, j * m + v)] * bm[(k * m + s, l * m + t)]
    }))
}

/// Position of entry `(k·m + s, l·m + t)` in `bvec(A)`: blocks are stacked
/// column-major over the block grid, each block vectorized column-major.
pub fn bvec_index(p: usize, m: usize, row: usize, col: usize) -> usize {
    let (k, s) = (row / m, row % m);
    let (l, t) = (col / m, col % m);
    (l * p + k) * m * m + t * m + s
}

/// Block vectorization `bvec(A)`.
pub fn bvec(a: &BlockMatrix) -> Vec<f64> {
    let (p, m) = (a.p(), a.m());
    let mut out = vec![0.0; a.dim() * a.dim()];
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            out[bvec_index(p, m, i, j)] = a.matrix()[(i, j)];
        }
    }
    out
}
