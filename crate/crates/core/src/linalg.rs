//! Dense complex linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigen-decomposition of a general square complex matrix.
pub fn general_eigen(m: MatRef<'_, c64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let e = m.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// 2-norm condition number; infinite for a numerically singular matrix.
pub fn condition_number(m: MatRef<'_, c64>) -> Result<f64> {
    let s = singular_values(m)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

pub fn inverse(m: MatRef<'_, c64>) -> Mat<c64> {
    m.partial_piv_lu().inverse()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn hermitian_norm(m: MatRef<'_, c64>) -> Result<f64> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
}

pub fn matvec(m: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    let mut y = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// `m^H x`.
pub fn adjoint_matvec(m: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    (0..m.ncols())
        .map(|j| {
            let col = m.col(j);
            let mut acc = ZERO;
            for (i, xi) in x.iter().enumerate() {
                acc += col[i].conj() * xi;
            }
            acc
        })
        .collect()
}

/// `<a|b>`, antilinear in the first argument.
pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn scale(a: &[c64], s: c64) -> Vec<c64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(y: &mut [c64], s: c64, x: &[c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Diagonal representation `f(M)_00 = sum_k residue_k f(pole_k)` of the
/// `(0,0)` matrix element of functions of a small matrix.
#[derive(Clone, Debug)]
pub struct PoleExpansion {
    pub poles: Vec<c64>,
    pub residues: Vec<c64>,
}

/// Above this eigenvector condition number a matrix is treated as defective.
pub const MAX_EIGVEC_CONDITION: f64 = 1e12;

impl PoleExpansion {
    /// Build from a general matrix; fails if its eigenvector matrix is
    /// ill-conditioned beyond [`MAX_EIGVEC_CONDITION`].
    pub fn from_matrix(m: MatRef<'_, c64>) -> Result<Self> {
        let (vals, vecs) = general_eigen(m)?;
        let cond = condition_number(vecs.as_ref())?;
        if !(cond <= MAX_EIGVEC_CONDITION) {
            return Err(Error::Infeasible(format!(
                "matrix is numerically non-diagonalizable (eigenvector condition {cond:.3e})"
            )));
        }
        Self::from_eigen(vals, vecs.as_ref())
    }

    pub(crate) fn from_eigen(poles: Vec<c64>, vecs: MatRef<'_, c64>) -> Result<Self> {
        let inv = inverse(vecs);
        let residues = (0..poles.len())
            .map(|k| vecs[(0, k)] * inv[(k, 0)])
            .collect();
        Ok(Self { poles, residues })
    }

    pub fn from_hermitian(m: MatRef<'_, c64>) -> Result<Self> {
        let (vals, vecs) = hermitian_eigen(m)?;
        Ok(Self {
            poles: vals.iter().map(|&v| c64::new(v, 0.0)).collect(),
            residues: (0..vals.len())
                .map(|k| c64::new(vecs[(0, k)].norm_sqr(), 0.0))
                .collect(),
        })
    }

    pub fn map_poles(&self, f: impl Fn(c64) -> c64) -> Self {
        Self {
            poles: self.poles.iter().map(|&p| f(p)).collect(),
            residues: self.residues.clone(),
        }
    }

    pub fn apply(&self, f: impl Fn(c64) -> c64) -> c64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(&p, &r)| r * f(p))
            .sum()
    }

    /// `[(z I - M)^{-1}]_00`.
    pub fn resolvent(&self, z: c64) -> c64 {
        self.apply(|p| (z - p).inv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_expansion_reproduces_inverse_entry() {
        let m = Mat::<c64>::from_fn(4, 4, |i, j| {
            if j + 1 >= i {
                c64::new(0.3 * (i as f64) - 0.2 * (j as f64) + 0.1, 0.05 * (i * j) as f64)
            } else {
                ZERO
            }
        });
        let z = c64::new(0.7, 0.4);
        let shifted = Mat::<c64>::from_fn(4, 4, |i, j| if i == j { z } else { ZERO }) - &m;
        let direct = inverse(shifted.as_ref())[(0, 0)];
        let poles = PoleExpansion::from_matrix(m.as_ref()).unwrap();
        assert!((poles.resolvent(z) - direct).norm() < 1e-12);
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let m = Mat::<c64>::from_fn(2, 2, |i, j| if i == 0 && j == 1 { ONE } else { ZERO });
        assert!(PoleExpansion::from_matrix(m.as_ref()).is_err());
    }

    #[test]
    fn adjoint_matvec_matches_explicit_adjoint() {
        let m = Mat::<c64>::from_fn(3, 2, |i, j| c64::new(i as f64 + 1.0, j as f64 - 0.5));
        let x = vec![c64::new(1.0, 2.0), c64::new(-1.0, 0.5), c64::new(0.0, 1.0)];
        let y = adjoint_matvec(m.as_ref(), &x);
        let madj = m.adjoint().to_owned();
        let z = matvec(madj.as_ref(), &x);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
