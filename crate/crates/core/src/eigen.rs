//! Symmetric eigendecomposition.
//!
//! The built-in solver is Householder tridiagonalization followed by the
//! implicit QL iteration with Wilkinson-style shifts. Callers that need more
//! speed at large dimension can plug another [`SymmetricEigensolver`] into
//! the solver and estimator entry points.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::matrix::Matrix;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// `P · diag(D) · Pᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.map_reconstruct(|d| d)
    }

    /// `P · diag(f(D)) · Pᵀ`, symmetric by construction.
    pub fn map_reconstruct(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let p = &self.eigenvectors;
        let n = p.rows();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&d| f(d)).collect();
        let mut out = Matrix::zeros(n, n);
        let mut scaled = vec![0.0; n];
        for i in 0..n {
            for ((s, &x), &w) in scaled.iter_mut().zip(p.row(i)).zip(&weights) {
                *s = x * w;
            }
            for j in 0..=i {
                let v: f64 = scaled.iter().zip(p.row(j)).map(|(a, b)| a * b).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

/// A dense symmetric eigensolver.
pub trait SymmetricEigensolver {
    /// Decomposes a symmetric matrix. Only the symmetric part of `a` is used.
    fn decompose(&self, a: &Matrix) -> Result<SpectralDecomposition>;

    /// `P · diag(f(D)) · Pᵀ` for `a = P D Pᵀ`.
    fn spectral_map(&self, a: &Matrix, f: &dyn Fn(f64) -> f64) -> Result<Matrix> {
        Ok(self.decompose(a)?.map_reconstruct(f))
    }

    /// Eigenvalues only, ascending.
    fn eigenvalues(&self, a: &Matrix) -> Result<Vec<f64>> {
        Ok(self.decompose(a)?.eigenvalues)
    }
}

impl<T: SymmetricEigensolver + ?Sized> SymmetricEigensolver for &T {
    fn decompose(&self, a: &Matrix) -> Result<SpectralDecomposition> {
        (**self).decompose(a)
    }

    fn spectral_map(&self, a: &Matrix, f: &dyn Fn(f64) -> f64) -> Result<Matrix> {
        (**self).spectral_map(a, f)
    }

    fn eigenvalues(&self, a: &Matrix) -> Result<Vec<f64>> {
        (**self).eigenvalues(a)
    }
}

/// Householder tridiagonalization + implicit QL.
#[derive(Debug, Clone, Copy)]
pub struct TridiagonalQl {
    /// QL sweeps allowed per eigenvalue before giving up.
    pub max_sweeps: usize,
}

impl Default for TridiagonalQl {
    fn default() -> Self {
        TridiagonalQl { max_sweeps: 60 }
    }
}

impl SymmetricEigensolver for TridiagonalQl {
    fn decompose(&self, a: &Matrix) -> Result<SpectralDecomposition> {
        if !a.is_square() {
            bail!(Shape, "eigendecomposition needs a square matrix");
        }
        if !a.is_finite() {
            bail!(InvalidInput, "matrix has non-finite entries");
        }
        let n = a.rows();
        if n == 0 {
            return Ok(SpectralDecomposition {
                eigenvalues: Vec::new(),
                eigenvectors: Matrix::zeros(0, 0),
            });
        }
        let mut v = a.clone();
        v.symmetrize();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tridiagonalize(&mut v, &mut d, &mut e);
        // Rows of `w` are the eigenvector columns so QL rotations touch
        // contiguous memory.
        let mut w = v.transpose();
        implicit_ql(&mut d, &mut e, &mut w, self.max_sweeps)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
        let eigenvalues = order.iter().map(|&i| d[i]).collect();
        let eigenvectors = Matrix::from_fn(n, n, |r, c| w[(order[c], r)]);
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }
}

/// Eigendecomposition with the built-in solver.
pub fn sym_eig(a: &Matrix) -> Result<SpectralDecomposition> {
    TridiagonalQl::default().decompose(a)
}

/// Householder reduction to tridiagonal form. On exit `v` holds the
/// orthogonal transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, accumulating rotations into the
/// rows of `w`.
fn implicit_ql(d: &mut [f64], e: &mut [f64], w: &mut Matrix, max_sweeps: usize) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    let mut total_sweeps = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                total_sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::EigenConvergence {
                        iterations: total_sweeps,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(w, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(w: &mut Matrix, i: usize, s: f64, c: f64) {
    let n = w.cols();
    let data = w.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * n);
    let ri = &mut head[i * n..];
    let rj = &mut tail[..n];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}
