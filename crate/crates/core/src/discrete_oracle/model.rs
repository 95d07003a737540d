use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::Layout;
use crate::tensor::contract_axis;

/// Generators on the sample group `Z_{ρN} × (Z_{ρM})^d`, translated by the
/// subgroup `ρ(Z_N × Z_M^d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub rho: usize,
    /// Row-major samples, time axis slowest.
    pub generators: Vec<Vec<Complex64>>,
}

impl DiscreteModel {
    pub fn new(n: usize, m: usize, d: usize, rho: usize, generators: Vec<Vec<Complex64>>) -> Result<Self> {
        if n == 0 || m == 0 || rho == 0 {
            return Err(Error::BadScenario(format!("N = {n}, M = {m}, rho = {rho} must be positive")));
        }
        if generators.is_empty() {
            return Err(Error::BadScenario("no generators".into()));
        }
        let model = Self {
            n,
            m,
            d,
            rho,
            generators,
        };
        for (i, g) in model.generators.iter().enumerate() {
            if g.len() != model.samples() {
                return Err(Error::BadScenario(format!(
                    "generator {i} has {} samples, the group has {}",
                    g.len(),
                    model.samples()
                )));
            }
            if g.iter().all(|v| v.norm_sqr() == 0.0) {
                return Err(Error::BadScenario(format!("generator {i} is zero")));
            }
        }
        Ok(model)
    }

    /// Wraps a sampled generator system onto the group with `ρ` equal to the
    /// grid's samples per unit; samples are placed cyclically.
    pub fn from_system(phi: &GeneratorSystem, n: usize, m: usize) -> Result<Self> {
        let rho = phi.grid().samples_per_unit;
        let d = phi.d();
        let shape: Vec<usize> = (0..=d).map(|a| rho * if a == 0 { n } else { m }).collect();
        let layout = Layout::new(shape.clone());
        let generators = phi
            .generators()
            .iter()
            .map(|g| {
                let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
                let lo = g.sample_lo();
                let gl = g.layout();
                for (k, v) in g.values().iter().enumerate() {
                    let idx: Vec<usize> = gl
                        .unravel(k)
                        .iter()
                        .enumerate()
                        .map(|(a, &i)| (lo[a] + i as i64).rem_euclid(shape[a] as i64) as usize)
                        .collect();
                    out[layout.flat(&idx)] += v;
                }
                out
            })
            .collect();
        Self::new(n, m, d, rho, generators)
    }

    pub fn r(&self) -> usize {
        self.generators.len()
    }

    pub fn dims(&self) -> usize {
        self.d + 1
    }

    /// Sample-group shape `(ρN, ρM, …)`.
    pub fn sample_shape(&self) -> Vec<usize> {
        (0..self.dims()).map(|a| self.rho * self.shift_shape()[a]).collect()
    }

    /// Shift-group shape `(N, M, …)`.
    pub fn shift_shape(&self) -> Vec<usize> {
        (0..self.dims()).map(|a| if a == 0 { self.n } else { self.m }).collect()
    }

    pub fn samples(&self) -> usize {
        self.sample_shape().iter().product()
    }

    pub fn shifts(&self) -> usize {
        self.shift_shape().iter().product()
    }

    /// `ρ^{1+d}`, the number of polyphase components.
    pub fn phases(&self) -> usize {
        self.rho.pow(self.dims() as u32)
    }

    /// `map[s]` = flat sample index of `s + ρj` (cyclic) for the flat shift `j`.
    pub(crate) fn shift_map(&self, j: usize) -> Vec<usize> {
        let ss = Layout::new(self.sample_shape());
        let ji = Layout::new(self.shift_shape()).unravel(j);
        (0..ss.len())
            .map(|s| {
                let si = ss.unravel(s);
                let idx: Vec<usize> = (0..self.dims())
                    .map(|a| (si[a] + self.rho * ji[a]) % ss.shape[a])
                    .collect();
                ss.flat(&idx)
            })
            .collect()
    }
}

/// The `ρN(ρM)^d × rNM^d` matrix whose column `(i, j)` is generator `i`
/// cyclically shifted by `ρj`.
pub fn build_synthesis_matrix(m: &DiscreteModel) -> DMatrix<Complex64> {
    let (rows, shifts) = (m.samples(), m.shifts());
    let mut t = DMatrix::zeros(rows, m.r() * shifts);
    for (i, g) in m.generators.iter().enumerate() {
        for j in 0..shifts {
            let map = m.shift_map(j);
            for (s, v) in g.iter().enumerate() {
                t[(map[s], i * shifts + j)] = *v;
            }
        }
    }
    t
}

/// Gram matrix `TᴴT` assembled from cyclic cross-correlations
/// `X_{ii′}(t) = Σ_u conj(φ_i(u)) φ_{i′}(u + ρt)`, without forming `T`.
pub fn gram_matrix(m: &DiscreteModel) -> DMatrix<Complex64> {
    let (r, shifts) = (m.r(), m.shifts());
    let js = Layout::new(m.shift_shape());
    let ss = Layout::new(m.sample_shape());
    let sample_idx: Vec<Vec<usize>> = (0..m.samples()).map(|s| ss.unravel(s)).collect();
    let shift_idx: Vec<Vec<usize>> = (0..shifts).map(|j| js.unravel(j)).collect();
    let corr = |a: &[Complex64], b: &[Complex64], t: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; m.dims()];
        for (u, x) in a.iter().enumerate() {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..idx.len() {
                idx[k] = (sample_idx[u][k] + m.rho * shift_idx[t][k]) % ss.shape[k];
            }
            acc += x.conj() * b[ss.flat(&idx)];
        }
        acc
    };
    let mut x = vec![vec![Vec::new(); r]; r];
    for i in 0..r {
        for k in 0..r {
            x[i][k] = (0..shifts)
                .into_par_iter()
                .map(|t| corr(&m.generators[i], &m.generators[k], t))
                .collect::<Vec<_>>();
        }
    }
    DMatrix::from_fn(r * shifts, r * shifts, |row, col| {
        let (i, j) = (row / shifts, row % shifts);
        let (k, jj) = (col / shifts, col % shifts);
        // col(k, jj) = φ_k(· − ρjj); entry = Σ_u conj(φ_i(u)) φ_k(u + ρ(j − jj)).
        let diff: Vec<usize> = (0..m.dims())
            .map(|a| (shift_idx[j][a] + js.shape[a] - shift_idx[jj][a]) % js.shape[a])
            .collect();
        x[i][k][js.flat(&diff)]
    })
}

/// Per-frequency polyphase fiber matrices and their singular values.
#[derive(Debug, Clone)]
pub struct FiberProfile {
    /// `ρ^{1+d} × r` matrices `(Σ_a φ_i(ρa + b) e^{−2πi a·ν/(N,M)})_{b,i}`,
    /// one per frequency `ν`, row-major over the shift-group shape.
    pub fibers: Vec<DMatrix<Complex64>>,
    /// Descending singular values per fiber.
    pub singular_values: Vec<Vec<f64>>,
}

impl FiberProfile {
    /// Ranks with `σ² > rank_tol · max σ²` over all fibers.
    pub fn ranks(&self, rank_tol: f64) -> Vec<usize> {
        let top = self.max_sq();
        self.singular_values
            .iter()
            .map(|s| s.iter().filter(|&&v| v * v > rank_tol * top).count())
            .collect()
    }

    pub fn max_sq(&self) -> f64 {
        self.singular_values.iter().flatten().fold(0.0f64, |a, &b| a.max(b * b))
    }

    /// Discrete bracket `F(ν)ᴴ F(ν)`.
    pub fn bracket(&self, nu: usize) -> DMatrix<Complex64> {
        self.fibers[nu].adjoint() * &self.fibers[nu]
    }
}

/// Block-diagonalizes the synthesis map: an unnormalized DFT over the shift
/// group of every polyphase component.
pub fn exact_fiber_profile(m: &DiscreteModel) -> FiberProfile {
    let dims = m.dims();
    // Sample index ρa + b, row-major: shape (N, ρ, M, ρ, …) with a and b interleaved.
    let mut shape = Vec::with_capacity(2 * dims);
    for a in 0..dims {
        shape.push(m.shift_shape()[a]);
        shape.push(m.rho);
    }
    let transforms: Vec<Vec<Complex64>> = m
        .generators
        .iter()
        .map(|g| {
            let mut data = g.clone();
            for a in 0..dims {
                let len = shape[2 * a];
                let dft: Vec<Complex64> = (0..len)
                    .flat_map(|nu| {
                        (0..len).map(move |t| {
                            let phase = -2.0 * std::f64::consts::PI * ((nu * t) % len) as f64 / len as f64;
                            Complex64::from_polar(1.0, phase)
                        })
                    })
                    .collect();
                data = contract_axis(&data, &shape, 2 * a, &dft, len);
            }
            data
        })
        .collect();
    let full = Layout::new(shape.clone());
    let nus = Layout::new(m.shift_shape());
    let phases = Layout::new(vec![m.rho; dims]);
    let fibers: Vec<DMatrix<Complex64>> = (0..m.shifts())
        .map(|nu| {
            let ni = nus.unravel(nu);
            DMatrix::from_fn(m.phases(), m.r(), |b, i| {
                let bi = phases.unravel(b);
                let mut idx = Vec::with_capacity(2 * dims);
                for a in 0..dims {
                    idx.push(ni[a]);
                    idx.push(bi[a]);
                }
                transforms[i][full.flat(&idx)]
            })
        })
        .collect();
    let singular_values = fibers
        .par_iter()
        .map(|f| {
            let mut s: Vec<f64> = f.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s
        })
        .collect();
    FiberProfile {
        fibers,
        singular_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn delta(n: usize, m: usize, rho: usize) -> DiscreteModel {
        let len = rho * n * rho * m;
        let mut g = vec![c(0.0); len];
        g[0] = c(1.0);
        DiscreteModel::new(n, m, 1, rho, vec![g]).unwrap()
    }

    #[test]
    fn delta_synthesis_is_a_permutation() {
        let model = DiscreteModel::new(8, 1, 0, 1, vec![{
            let mut g = vec![c(0.0); 8];
            g[0] = c(1.0);
            g
        }])
        .unwrap();
        let t = build_synthesis_matrix(&model);
        assert_eq!(t, DMatrix::identity(8, 8));
        let p = exact_fiber_profile(&model);
        assert!(p.singular_values.iter().flatten().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn gram_matches_dense_product() {
        let mut model = delta(4, 2, 2);
        model.generators[0][3] = Complex64::new(0.5, -1.0);
        model.generators[0][9] = c(2.0);
        model.generators.push(model.generators[0].iter().rev().copied().collect());
        let t = build_synthesis_matrix(&model);
        let g = gram_matrix(&model);
        assert!((t.adjoint() * &t - g).norm() < 1e-12);
        for j in 0..t.ncols() {
            let i = j / model.shifts();
            let expected: f64 = model.generators[i].iter().map(|v| v.norm_sqr()).sum();
            assert!((t.column(j).norm_squared() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn fibers_block_diagonalize() {
        let mut model = delta(4, 2, 2);
        model.generators[0][5] = Complex64::new(0.0, 1.0);
        model.generators[0][12] = c(-0.7);
        let t = build_synthesis_matrix(&model);
        let mut dense: Vec<f64> = t.singular_values().iter().copied().collect();
        let p = exact_fiber_profile(&model);
        let mut union: Vec<f64> = p.singular_values.iter().flatten().copied().collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        union.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in dense.iter().zip(&union) {
            assert!((a - b).abs() < 1e-10);
        }
        let fro: f64 = p.fibers.iter().map(|f| f.norm_squared()).sum();
        assert!((fro - t.norm_squared()).abs() < 1e-10 * fro);
    }
}
