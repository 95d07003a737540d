use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::freq::FrequencyGrid;
use crate::error::{Error, Result};
use crate::lattice_ops::{required_window, GeneratorSystem};
use crate::mixed_norms::{shifted_dot, Layout};

/// Lag correlations `g(m)[i,i′] = ⟨φ_i, ψ_{i′}(· − m)⟩` of two systems.
///
/// By Poisson summation the bracket is the lattice Fourier series
/// `[Φ̂,Ψ̂](ξ) = Σ_m g(m) e^{−i m·ξ}`. On a sample grid this series is
/// finite and equals the sum of quadrature transforms over a full alias
/// period, so evaluating it avoids the slowly converging frequency sum.
#[derive(Debug, Clone)]
pub struct BracketLags {
    pub r: usize,
    pub s: usize,
    lags: BTreeMap<Vec<i64>, DMatrix<Complex64>>,
}

impl BracketLags {
    pub fn compute(phi: &GeneratorSystem, psi: &GeneratorSystem) -> Result<Self> {
        if phi.grid() != psi.grid() {
            return Err(Error::DimensionMismatch("systems live on different grids".into()));
        }
        let (r, s) = (phi.r(), psi.r());
        let n = phi.grid().samples_per_unit as i64;
        let weight = phi.grid().cell_volume();
        let mut lags: BTreeMap<Vec<i64>, DMatrix<Complex64>> = BTreeMap::new();
        for (i, a) in phi.generators().iter().enumerate() {
            for (k, b) in psi.generators().iter().enumerate() {
                let window = required_window(a, b);
                let points: Vec<Vec<i64>> = window.points().collect();
                let values: Vec<Complex64> = points
                    .par_iter()
                    .map(|m| {
                        let shift: Vec<i64> = m.iter().map(|v| v * n).collect();
                        shifted_dot(a, b, &shift) * weight
                    })
                    .collect();
                for (m, v) in points.into_iter().zip(values) {
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    lags.entry(m).or_insert_with(|| DMatrix::zeros(r, s))[(i, k)] = v;
                }
            }
        }
        Ok(Self { r, s, lags })
    }

    pub fn lags(&self) -> impl Iterator<Item = (&Vec<i64>, &DMatrix<Complex64>)> {
        self.lags.iter()
    }

    /// `Σ_{|m|_∞ ≤ J} g(m) e^{−i m·ξ}`.
    pub fn evaluate(&self, xi: &[f64], j: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.r, self.s);
        for (m, g) in self.within(j) {
            let phase: f64 = m.iter().zip(xi).map(|(a, x)| *a as f64 * x).sum();
            out += g * Complex64::from_polar(1.0, -phase);
        }
        out
    }

    fn within(&self, j: usize) -> impl Iterator<Item = (&Vec<i64>, &DMatrix<Complex64>)> {
        self.lags.iter().filter(move |(m, _)| m.iter().all(|v| v.unsigned_abs() as usize <= j))
    }

    /// Largest entrywise `Σ_{|m|_∞ > J} |g(m)|`: an exact bound on what the
    /// radius-`J` truncation discards.
    pub fn tail_bound(&self, j: usize) -> f64 {
        let mut acc = DMatrix::<f64>::zeros(self.r, self.s);
        for (m, g) in &self.lags {
            if m.iter().any(|v| v.unsigned_abs() as usize > j) {
                acc += g.map(|v| v.norm());
            }
        }
        acc.max()
    }
}

/// Bracket matrices `[Φ̂,Ψ̂](ξ)` on every node of a frequency grid.
#[derive(Debug, Clone)]
pub struct GramianField {
    pub freq: FrequencyGrid,
    pub r: usize,
    pub s: usize,
    pub fibers: Vec<DMatrix<Complex64>>,
    pub tail_bound: f64,
}

impl GramianField {
    pub fn fiber(&self, node: usize) -> &DMatrix<Complex64> {
        &self.fibers[node]
    }

    pub fn is_square(&self) -> bool {
        self.r == self.s
    }

    /// Largest relative `‖G − Gᴴ‖_F / ‖G‖_F` over nodes.
    pub fn max_hermitian_defect(&self) -> f64 {
        self.fibers
            .iter()
            .map(|g| {
                let norm = g.norm();
                if norm == 0.0 {
                    0.0
                } else {
                    (g - g.adjoint()).norm() / norm
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference between neighbouring nodes (cyclically,
    /// along every axis).
    pub fn max_adjacent_difference(&self) -> f64 {
        let shape = self.freq.shape();
        let layout = Layout::new(shape.clone());
        let mut worst = 0.0f64;
        for flat in 0..self.fibers.len() {
            let idx = layout.unravel(flat);
            for a in 0..shape.len() {
                let mut nb = idx.clone();
                nb[a] = (nb[a] + 1) % shape[a];
                let diff = &self.fibers[flat] - &self.fibers[layout.flat(&nb)];
                worst = worst.max(diff.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// `[Φ̂,Ψ̂]` on `freq`, periodization truncated at `|m|_∞ ≤ J`.
pub fn bracket(phi: &GeneratorSystem, psi: &GeneratorSystem, freq: &FrequencyGrid) -> Result<GramianField> {
    if freq.d != phi.d() || freq.d != psi.d() {
        return Err(Error::DimensionMismatch(format!(
            "frequency grid has d = {}, systems have d = {} and {}",
            freq.d,
            phi.d(),
            psi.d()
        )));
    }
    let lags = BracketLags::compute(phi, psi)?;
    Ok(bracket_from_lags(&lags, freq))
}

pub fn bracket_from_lags(lags: &BracketLags, freq: &FrequencyGrid) -> GramianField {
    let fibers = (0..freq.len())
        .into_par_iter()
        .map(|node| lags.evaluate(&freq.node(node), freq.j))
        .collect();
    GramianField {
        freq: *freq,
        r: lags.r,
        s: lags.s,
        fibers,
        tail_bound: lags.tail_bound(freq.j),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiberization::fourier::{fourier_fibers_over, KRange};
    use crate::mixed_norms::{Decay, Grid, IBox, SampledField};

    fn field(n: usize, lo: [i64; 2], hi: [i64; 2], f: impl Fn(&[f64]) -> f64) -> SampledField {
        SampledField::from_real_fn(
            Grid::new(1, n).unwrap(),
            IBox::new(lo.to_vec(), hi.to_vec()).unwrap(),
            Decay::Compact,
            f,
        )
        .unwrap()
    }

    #[test]
    fn lag_series_equals_full_alias_period_sum() {
        let n = 4;
        let a = field(n, [0, 0], [2, 1], |x| x[0] * (2.0 - x[0]) + x[1]);
        let b = field(n, [-1, 0], [1, 2], |x| (x[0] + 1.0) * x[1].cos());
        let phi = GeneratorSystem::unlabeled(vec![a.clone()]).unwrap();
        let psi = GeneratorSystem::unlabeled(vec![b.clone()]).unwrap();
        let freq = FrequencyGrid::new(1, 6, 4, 8).unwrap();
        let g = bracket(&phi, &psi, &freq).unwrap();
        assert_eq!(g.tail_bound, 0.0);
        let kr = KRange::alias_period(n);
        let fa = fourier_fibers_over(&a, &freq, kr).unwrap();
        let fb = fourier_fibers_over(&b, &freq, kr).unwrap();
        for node in 0..freq.len() {
            let direct: Complex64 = fa.fiber(node).iter().zip(fb.fiber(node)).map(|(x, y)| x * y.conj()).sum();
            assert!((g.fiber(node)[(0, 0)] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn tail_bound_covers_truncation() {
        let a = field(2, [0, 0], [5, 1], |x| (-x[0]).exp());
        let phi = GeneratorSystem::unlabeled(vec![a]).unwrap();
        let freq = FrequencyGrid::new(1, 8, 2, 1).unwrap();
        let small = bracket(&phi, &phi, &freq).unwrap();
        let full = bracket(&phi, &phi, &freq.with_radius(10)).unwrap();
        assert!(small.tail_bound > 0.0);
        assert_eq!(full.tail_bound, 0.0);
        for (x, y) in small.fibers.iter().zip(&full.fibers) {
            assert!((x - y).iter().all(|v| v.norm() <= small.tail_bound + 1e-14));
        }
    }

    #[test]
    fn box_bracket_is_one() {
        let b = field(8, [0, 0], [1, 1], |_| 1.0);
        let phi = GeneratorSystem::unlabeled(vec![b]).unwrap();
        let g = bracket(&phi, &phi, &FrequencyGrid::new(1, 8, 4, 4).unwrap()).unwrap();
        for f in &g.fibers {
            assert!((f[(0, 0)] - 1.0).norm() < 1e-14);
        }
        assert_eq!(g.max_adjacent_difference(), 0.0);
    }
}
