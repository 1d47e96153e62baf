//! Small dense eigenvalue helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNonConvergence {
            max_iter: SCHUR_MAX_ITER,
        })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNonConvergence {
            max_iter: SCHUR_MAX_ITER,
        })?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

pub fn spectral_radius(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Moduli sorted ascending, used to compare spectra irrespective of ordering.
pub fn sorted_moduli(eigs: &[Complex64]) -> Vec<f64> {
    let mut m: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    m.sort_by(f64::total_cmp);
    m
}
