use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::freq::FrequencyGrid;
use crate::error::{Error, Result};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::SampledField;
use crate::tensor::contract_axis;

/// Half-open range `[lo, hi)` of periodization indices `k`, shared by all axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: i64,
    pub hi: i64,
}

impl KRange {
    /// `|k| ≤ J`.
    pub fn symmetric(j: usize) -> Self {
        Self {
            lo: -(j as i64),
            hi: j as i64 + 1,
        }
    }

    /// One full alias period `[−n/2, n − n/2)` of a grid with `n` samples per
    /// unit. Quadrature transforms are `2πn`-periodic, so stacking this range
    /// reproduces the bracket exactly.
    pub fn alias_period(samples_per_unit: usize) -> Self {
        let n = samples_per_unit as i64;
        Self { lo: -n / 2, hi: n - n / 2 }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Values `φ̂(ξ + 2πk)` per frequency node, `k` ranging over `krange^{1+d}`.
#[derive(Debug, Clone)]
pub struct FourierFibers {
    pub freq: FrequencyGrid,
    pub krange: KRange,
    /// Node-major: `values[node * K^{1+d} + k_flat]`, `k_flat` row-major.
    values: Vec<Complex64>,
}

impl FourierFibers {
    pub fn per_node(&self) -> usize {
        self.krange.len().pow(self.freq.dims() as u32)
    }

    pub fn fiber(&self, node: usize) -> &[Complex64] {
        let m = self.per_node();
        &self.values[node * m..(node + 1) * m]
    }

    /// Value at node `node` and periodization index `k`.
    pub fn at(&self, node: usize, k: &[i64]) -> Complex64 {
        let kl = self.krange.len();
        let flat = k.iter().fold(0usize, |acc, &v| acc * kl + (v - self.krange.lo) as usize);
        self.fiber(node)[flat]
    }
}

/// Quadrature transform `h^{1+d} Σ_s φ(x_s) e^{−i ω·x_s}` at
/// `ω = ξ + 2πk` for every node `ξ` and every `k ∈ krange^{1+d}`.
///
/// The sum factorizes over axes, so it is evaluated as one small dense
/// contraction per axis.
pub fn fourier_fibers_over(phi: &SampledField, freq: &FrequencyGrid, krange: KRange) -> Result<FourierFibers> {
    if freq.d != phi.grid().d {
        return Err(Error::DimensionMismatch(format!(
            "frequency grid has d = {}, field has d = {}",
            freq.d,
            phi.grid().d
        )));
    }
    if krange.is_empty() {
        return Err(Error::BadParams("empty periodization range".into()));
    }
    let grid = phi.grid();
    let h = grid.step();
    let dims = freq.dims();
    let kl = krange.len();
    let lo = phi.sample_lo();
    let mut shape = phi.shape();
    let mut data = phi.values().to_vec();
    for axis in 0..dims {
        let xi = freq.axis_nodes(axis);
        let rows = xi.len() * kl;
        let mut m = Vec::with_capacity(rows * shape[axis]);
        for &x in &xi {
            for k in krange.lo..krange.hi {
                let w = x + 2.0 * PI * k as f64;
                for s in 0..shape[axis] {
                    let t = grid.coord(lo[axis] + s as i64);
                    m.push(Complex64::from_polar(h, -w * t));
                }
            }
        }
        data = contract_axis(&data, &shape, axis, &m, rows);
        shape[axis] = rows;
    }
    // Reorder (t₀,k₀,t₁,k₁,…) into node-major (t₀,t₁,…)(k₀,k₁,…).
    let per_node = kl.pow(dims as u32);
    let mut values = vec![Complex64::new(0.0, 0.0); freq.len() * per_node];
    let strides = crate::mixed_norms::Layout::new(shape.clone()).strides;
    for (node, chunk) in values.chunks_mut(per_node).enumerate() {
        let t = freq.node_index(node);
        for (kf, v) in chunk.iter_mut().enumerate() {
            let mut rest = kf;
            let mut src = 0usize;
            for a in (0..dims).rev() {
                let ka = rest % kl;
                rest /= kl;
                src += (t[a] * kl + ka) * strides[a];
            }
            *v = data[src];
        }
    }
    Ok(FourierFibers {
        freq: *freq,
        krange,
        values,
    })
}

/// [`fourier_fibers_over`] with `|k| ≤ J`.
pub fn fourier_fibers(phi: &SampledField, freq: &FrequencyGrid) -> Result<FourierFibers> {
    fourier_fibers_over(phi, freq, KRange::symmetric(freq.j))
}

/// Singular values of the stacked `K^{1+d} × r` pre-Gramian fibers.
#[derive(Debug, Clone)]
pub struct PreGramianProfile {
    pub singular_values: Vec<Vec<f64>>,
    pub ranks: Vec<usize>,
    pub k0: usize,
    pub constancy: bool,
}

/// Rank profile of the pre-Gramian `(φ̂_i(ξ + 2πk))_{k,i}`; rank counts
/// `σ² > rank_tol · max σ²` over the whole grid.
pub fn pre_gramian_profile(
    phi: &GeneratorSystem,
    freq: &FrequencyGrid,
    krange: KRange,
    rank_tol: f64,
) -> Result<PreGramianProfile> {
    let fibers: Vec<FourierFibers> = phi
        .generators()
        .iter()
        .map(|g| fourier_fibers_over(g, freq, krange))
        .collect::<Result<_>>()?;
    let rows = fibers[0].per_node();
    let r = phi.r();
    let singular_values: Vec<Vec<f64>> = (0..freq.len())
        .into_par_iter()
        .map(|node| {
            let m = DMatrix::from_fn(rows, r, |k, i| fibers[i].fiber(node)[k]);
            let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s
        })
        .collect();
    let top = singular_values.iter().flatten().fold(0.0f64, |a, &b| a.max(b * b));
    let ranks: Vec<usize> = singular_values
        .iter()
        .map(|s| s.iter().filter(|&&v| v * v > rank_tol * top).count())
        .collect();
    let k0 = ranks.iter().copied().min().unwrap_or(0);
    let constancy = ranks.iter().all(|&k| k == k0);
    Ok(PreGramianProfile {
        singular_values,
        ranks,
        k0,
        constancy,
    })
}
