use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bracket::GramianField;
use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-8;

/// Eigenpairs of `(G + Gᴴ)/2`, eigenvalues sorted descending with matching
/// eigenvector columns.
pub fn hermitian_eigen(g: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(g.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Per-fiber eigenvalues, numerical ranks and the band constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// Descending eigenvalues per node.
    pub eigenvalues: Vec<Vec<f64>>,
    pub rank_tol: f64,
    pub lambda_max: f64,
    pub k_per_fiber: Vec<usize>,
    pub k0: usize,
    /// `max(λ, 1/λ)` over all eigenvalues counted in the rank.
    pub c_est: f64,
    pub constancy: bool,
}

impl SpectralProfile {
    /// Smallest eigenvalue counted in the rank of any fiber.
    pub fn min_nonzero(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.k_per_fiber)
            .filter(|(_, &k)| k > 0)
            .map(|(l, &k)| l[k - 1])
            .fold(f64::INFINITY, f64::min)
    }

    /// Most negative eigenvalue relative to `lambda_max`.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        let low = self.eigenvalues.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
        if self.lambda_max > 0.0 {
            low / self.lambda_max
        } else {
            low
        }
    }

    pub fn max_rank(&self) -> usize {
        self.k_per_fiber.iter().copied().max().unwrap_or(0)
    }
}

pub fn spectral_profile(g: &GramianField, rank_tol: f64) -> Result<SpectralProfile> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "spectral profile needs square fibers, got {}x{}",
            g.r, g.s
        )));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::BadParams(format!("rank tolerance {rank_tol} must lie in (0, 1)")));
    }
    for (node, f) in g.fibers.iter().enumerate() {
        let norm = f.norm();
        if norm > 0.0 {
            let asymmetry = (f - f.adjoint()).norm() / norm;
            if asymmetry > HERMITIAN_TOL {
                return Err(Error::NonHermitianFiber { node, asymmetry });
            }
        }
    }
    let eigenvalues: Vec<Vec<f64>> = g.fibers.par_iter().map(|f| hermitian_eigen(f).0).collect();
    let lambda_max = eigenvalues.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let cut = rank_tol * lambda_max;
    let k_per_fiber: Vec<usize> = eigenvalues
        .iter()
        .map(|l| l.iter().filter(|&&v| v > cut).count())
        .collect();
    let k0 = k_per_fiber.iter().copied().min().unwrap_or(0);
    let constancy = k_per_fiber.iter().all(|&k| k == k0);
    let c_est = eigenvalues
        .iter()
        .flatten()
        .filter(|&&v| v > cut)
        .map(|&v| v.max(1.0 / v))
        .fold(0.0f64, f64::max);
    Ok(SpectralProfile {
        eigenvalues,
        rank_tol,
        lambda_max,
        k_per_fiber,
        k0,
        c_est,
        constancy,
    })
}

/// Verdict on the eigenvalue band: holds iff the rank is constant, with
/// every nonzero eigenvalue in `[1/C, C]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionIII {
    pub holds: bool,
    pub c: f64,
}

pub fn condition_iii_check(s: &SpectralProfile) -> ConditionIII {
    ConditionIII {
        holds: s.constancy,
        c: s.c_est,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiberization::FrequencyGrid;

    fn field_of(fibers: Vec<DMatrix<Complex64>>) -> GramianField {
        let n = fibers.len();
        GramianField {
            freq: FrequencyGrid::new(0, n, 2, 1).unwrap(),
            r: fibers[0].nrows(),
            s: fibers[0].ncols(),
            fibers,
            tail_bound: 0.0,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenpairs_are_sorted_and_orthonormal() {
        let g = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (l, v) = hermitian_eigen(&g);
        assert!((l[0] - 3.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
        let gram = v.adjoint() * &v;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-14);
        let rebuilt = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)])) * v.adjoint();
        assert!((rebuilt - g).norm() < 1e-13);
    }

    #[test]
    fn rank_drop_breaks_constancy() {
        let p = field_of(vec![
            DMatrix::from_element(1, 1, c(1.0, 0.0)),
            DMatrix::from_element(1, 1, c(0.25, 0.0)),
            DMatrix::from_element(1, 1, c(0.0, 0.0)),
        ]);
        let s = spectral_profile(&p, 1e-8).unwrap();
        assert_eq!(s.k_per_fiber, vec![1, 1, 0]);
        assert_eq!(s.k0, 0);
        assert!(!s.constancy);
        assert_eq!(s.c_est, 4.0);
        assert_eq!(s.min_nonzero(), 0.25);
    }

    #[test]
    fn asymmetric_fibers_are_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = field_of(vec![bad.clone(), bad]);
        assert!(matches!(spectral_profile(&p, 1e-8), Err(Error::NonHermitianFiber { node: 0, .. })));
    }
}
