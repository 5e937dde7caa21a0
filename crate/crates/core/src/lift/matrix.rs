//! Constant coefficient matrices, their ellipticity constant and square roots.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// A symmetric positive definite `m x m` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantMatrix {
    a: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl ConstantMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<ConstantMatrix> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("matrix must be square and non-empty".into()));
        }
        let a = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        let scale = a.amax().max(f64::MIN_POSITIVE);
        for i in 0..m {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSpd(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        let sym = (&a + a.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym.clone()).eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        if ev[0] <= 0.0 {
            return Err(Error::NotSpd(format!("eigenvalue {} is not positive", ev[0])));
        }
        Ok(ConstantMatrix { a: sym, eigenvalues: ev })
    }

    pub fn identity(m: usize) -> ConstantMatrix {
        ConstantMatrix::new((0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).expect("identity")
    }

    pub fn diag(d: &[f64]) -> Result<ConstantMatrix> {
        let m = d.len();
        ConstantMatrix::new((0..m).map(|i| (0..m).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect())
    }

    /// `R(angle) diag(l1, l2) R(angle)^T`.
    pub fn rotated2(l1: f64, l2: f64, angle: f64) -> Result<ConstantMatrix> {
        let (s, c) = angle.sin_cos();
        let a11 = c * c * l1 + s * s * l2;
        let a22 = s * s * l1 + c * c * l2;
        let a12 = c * s * (l1 - l2);
        ConstantMatrix::new(vec![vec![a11, a12], vec![a12, a22]])
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m()).map(|i| (0..self.m()).map(|j| self.a[(i, j)]).collect()).collect()
    }

    /// Sorted eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest `nu` with `nu |w|^2 <= w.Aw <= |w|^2 / nu`.
    pub fn nu(&self) -> f64 {
        let lmin = self.eigenvalues[0];
        let lmax = *self.eigenvalues.last().unwrap();
        lmin.min(1.0 / lmax).min(1.0)
    }

    /// Reject matrices that are less elliptic than `nu`.
    pub fn require_ellipticity(&self, nu: f64) -> Result<()> {
        if self.nu() + 1e-12 < nu {
            return Err(Error::Ellipticity(format!("matrix has nu = {} < {nu}", self.nu())));
        }
        Ok(())
    }

    pub fn det(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

/// Symmetric positive definite square root by spectral decomposition.
pub fn sqrt_spd(a: &ConstantMatrix) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.a.clone());
    if let Some(bad) = eig.eigenvalues.iter().find(|l| **l <= 0.0) {
        return Err(Error::NotSpd(format!("eigenvalue {bad} is not positive")));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let s = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// Twelve 2x2 matrices with ellipticity constant exactly `nu`, spread over
/// eigenvalue ratios and orientations.
pub fn matrix_sweep(nu: f64) -> Result<Vec<ConstantMatrix>> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!("nu = {nu} must lie in (0, 1]")));
    }
    let hi = 1.0 / nu;
    let g = (nu * hi).sqrt();
    let pairs = [
        (nu, 1.0),
        (1.0, hi),
        (nu, hi),
        (nu, 2.0 * nu),
        (0.5 * hi, hi),
        (nu, nu),
        (hi, hi),
        (nu, g),
        (g, hi),
        (nu, 0.75 * hi),
        (1.2 * nu, hi),
        (nu, 0.5),
    ];
    pairs
        .iter()
        .enumerate()
        .map(|(k, (l1, l2))| ConstantMatrix::rotated2(*l1, (*l2).clamp(nu, hi), k as f64 * std::f64::consts::PI / 12.0))
        .collect()
}
