//! LAPACK-class symmetric eigensolver backed by `faer`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use magl_core::error::{Error, Result};
use magl_core::{Matrix, SpectralDecomposition, SymmetricEigensolver};

/// Sequential `faer` eigensolver. Much faster than the built-in QL solver
/// beyond a few dozen dimensions.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaerEigensolver;

fn to_faer(a: &Matrix) -> Result<Mat<f64>> {
    if !a.is_square() {
        return Err(Error::Shape(format!("eigensolver needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
}

fn eig(a: &Matrix) -> Result<(Mat<f64>, Vec<f64>)> {
    let m = to_faer(a)?;
    let e = m
        .as_ref()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenConvergence { iterations: 0 })?;
    let s = e.S();
    let vals: Vec<f64> = (0..a.rows()).map(|j| s[j]).collect();
    Ok((e.U().to_owned(), vals))
}

fn ascending(vals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    order
}

impl SymmetricEigensolver for FaerEigensolver {
    fn decompose(&self, a: &Matrix) -> Result<SpectralDecomposition> {
        let (u, vals) = eig(a)?;
        let n = vals.len();
        let order = ascending(&vals);
        let eigenvectors = Matrix::from_fn(n, n, |i, j| u[(i, order[j])]);
        Ok(SpectralDecomposition { eigenvalues: order.iter().map(|&k| vals[k]).collect(), eigenvectors })
    }

    fn spectral_map(&self, a: &Matrix, f: &dyn Fn(f64) -> f64) -> Result<Matrix> {
        let (u, vals) = eig(a)?;
        let n = vals.len();
        let mut w = u.clone();
        for (j, &d) in vals.iter().enumerate() {
            let fd = f(d);
            for i in 0..n {
                w[(i, j)] *= fd;
            }
        }
        let mut out = Mat::<f64>::zeros(n, n);
        matmul(out.as_mut(), Accum::Replace, w.as_ref(), u.transpose(), 1.0, Par::Seq);
        let mut m = Matrix::from_fn(n, n, |i, j| out[(i, j)]);
        m.symmetrize();
        Ok(m)
    }

    fn eigenvalues(&self, a: &Matrix) -> Result<Vec<f64>> {
        let m = to_faer(a)?;
        let mut vals = m
            .as_ref()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::EigenConvergence { iterations: 0 })?;
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }
}
