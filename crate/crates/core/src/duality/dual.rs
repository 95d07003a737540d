use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiberization::{bracket, hermitian_eigen, spectral_profile, FrequencyGrid, GramianField, SpectralProfile};
use crate::lattice_ops::{synthesize, GeneratorSystem};
use crate::mixed_norms::{CoefficientArray, IBox, Layout};
use crate::tensor::contract_axis;

/// Relative coefficient energy the inverse-transform window may discard.
pub const DEFAULT_ENERGY_CAP: f64 = 1e-20;
/// Discarded energy above this is an error.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    FullRankInverse,
    ConstantRankPseudoinverse,
}

/// Dual generators with the bookkeeping of their construction.
#[derive(Debug, Clone)]
pub struct DualSystem {
    pub psi: GeneratorSystem,
    pub construction: Construction,
    pub k0: usize,
    /// `max_ξ ‖([Φ̂,Ψ̂](ξ) − I)[Φ̂,Φ̂](ξ)‖_F / max_ξ ‖[Φ̂,Φ̂](ξ)‖_F` on a
    /// twice-refined frequency grid.
    pub residual: f64,
    /// Relative coefficient energy dropped by the lattice window.
    pub tail_mass: f64,
    /// Lattice half-width of the mixing filter along each axis.
    pub radius: Vec<usize>,
    /// Mixing filter: `ψ_i = Σ_{i′} φ_{i′} ∗′ filter[i][i′]`.
    pub filter: Vec<Vec<CoefficientArray>>,
}

/// `pinv(G)` keeping eigenvalues above `cut`.
pub(crate) fn truncated_pinv(g: &DMatrix<Complex64>, cut: f64) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(g);
    let mut out = DMatrix::zeros(g.nrows(), g.ncols());
    for (k, &l) in values.iter().enumerate() {
        if l > cut {
            let v = vectors.column(k);
            out += (v * v.adjoint()) * Complex64::new(1.0 / l, 0.0);
        }
    }
    out
}

/// Tunables of [`dual_generators_with`].
#[derive(Debug, Clone, Copy)]
pub struct DualOptions {
    pub rank_tol: f64,
    pub energy_cap: f64,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            rank_tol: crate::fiberization::DEFAULT_RANK_TOL,
            energy_cap: DEFAULT_ENERGY_CAP,
        }
    }
}

pub fn dual_generators(phi: &GeneratorSystem, freq: &FrequencyGrid, rank_tol: f64) -> Result<DualSystem> {
    dual_generators_with(
        phi,
        freq,
        DualOptions {
            rank_tol,
            ..Default::default()
        },
    )
}

/// Fiberwise pseudo-inverse dual `Ψ̂ = pinv([Φ̂,Φ̂]) Φ̂`.
///
/// The pseudo-inverse is sampled on `freq`, turned into lattice filter taps
/// by an inverse DFT, cropped to the smallest window keeping all but
/// `energy_cap` of the tap energy, and applied to `Φ` by semi-convolution.
pub fn dual_generators_with(phi: &GeneratorSystem, freq: &FrequencyGrid, opts: DualOptions) -> Result<DualSystem> {
    let gram = bracket(phi, phi, freq)?;
    let profile = spectral_profile(&gram, opts.rank_tol)?;
    if !profile.constancy {
        return Err(Error::ConditionIIIFails {
            min: profile.k0,
            max: profile.max_rank(),
        });
    }
    let r = phi.r();
    let cut = opts.rank_tol * profile.lambda_max;
    let pinvs: Vec<DMatrix<Complex64>> = gram.fibers.par_iter().map(|g| truncated_pinv(g, cut)).collect();

    let taps = inverse_dft(&pinvs, freq, r);
    let (window, tail_mass) = choose_window(&taps, freq, opts.energy_cap)?;
    let filter: Vec<Vec<CoefficientArray>> = (0..r)
        .map(|i| (0..r).map(|k| crop(&taps, freq, &window, i, k, r)).collect())
        .collect();
    let generators = filter
        .iter()
        .map(|row| synthesize(phi, row))
        .collect::<Result<Vec<_>>>()?;
    let labels = phi.labels().iter().map(|l| format!("dual({l})")).collect();
    let psi = GeneratorSystem::new(generators, labels)?;
    let residual = duality_residual(phi, &psi, freq)?;
    Ok(DualSystem {
        psi,
        construction: if profile.k0 == r {
            Construction::FullRankInverse
        } else {
            Construction::ConstantRankPseudoinverse
        },
        k0: profile.k0,
        residual,
        tail_mass,
        radius: window.hi.iter().map(|&h| (h - 1) as usize).collect(),
        filter,
    })
}

/// Filter taps `c(m) = N⁻¹ Σ_t P(ξ_t) e^{i m·ξ_t}` for `m ∈ Π[−n_a/2, n_a/2)`,
/// stored entry-major: `out[(i·r + k) · M + m_flat]`.
fn inverse_dft(pinvs: &[DMatrix<Complex64>], freq: &FrequencyGrid, r: usize) -> Vec<Complex64> {
    let shape = freq.shape();
    let nodes = freq.len();
    let mut out = Vec::with_capacity(r * r * nodes);
    for i in 0..r {
        for k in 0..r {
            let mut data: Vec<Complex64> = pinvs.iter().map(|p| p[(i, k)]).collect();
            let mut cur = shape.clone();
            for (axis, &n) in shape.iter().enumerate() {
                let xi = freq.axis_nodes(axis);
                let mut m = Vec::with_capacity(n * n);
                for row in 0..n {
                    let lag = row as f64 - (n / 2) as f64;
                    for &x in &xi {
                        m.push(Complex64::from_polar(1.0 / n as f64, lag * x));
                    }
                }
                data = contract_axis(&data, &cur, axis, &m, n);
                cur[axis] = n;
            }
            out.extend(data);
        }
    }
    out
}

/// Lattice window `[−R, R]` per axis with per-axis discarded energy at most
/// `cap / dims`; returns the window and the total discarded fraction.
fn choose_window(taps: &[Complex64], freq: &FrequencyGrid, cap: f64) -> Result<(IBox, f64)> {
    let shape = freq.shape();
    let dims = shape.len();
    let m_len = freq.len();
    let layout = Layout::new(shape.clone());
    let energy: Vec<f64> = (0..m_len)
        .map(|m| taps.iter().skip(m).step_by(m_len).map(|v| v.norm_sqr()).sum())
        .collect();
    let total: f64 = energy.iter().sum();
    let lag = |idx: usize, axis: usize| idx as i64 - (shape[axis] / 2) as i64;
    let mut radius = vec![0i64; dims];
    for a in 0..dims {
        let max_r = (shape[a] / 2).saturating_sub(1) as i64;
        // Energy per |lag| along axis a.
        let mut by_lag = vec![0.0; shape[a] / 2 + 1];
        for (m, e) in energy.iter().enumerate() {
            by_lag[lag(layout.unravel(m)[a], a).unsigned_abs() as usize] += e;
        }
        let mut tail: f64 = by_lag.iter().sum();
        radius[a] = max_r;
        for (rr, e) in by_lag.iter().enumerate().take(max_r as usize + 1) {
            tail -= e;
            if tail <= cap / dims as f64 * total {
                radius[a] = rr as i64;
                break;
            }
        }
    }
    let kept: f64 = energy
        .iter()
        .enumerate()
        .filter(|(m, _)| {
            let idx = layout.unravel(*m);
            (0..dims).all(|a| lag(idx[a], a).abs() <= radius[a])
        })
        .map(|(_, e)| e)
        .sum();
    let tail_mass = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
    if tail_mass > TAIL_MASS_LIMIT {
        return Err(Error::TailMassExceeded {
            tail: tail_mass,
            cap: TAIL_MASS_LIMIT,
        });
    }
    let window = IBox::new(radius.iter().map(|r| -r).collect(), radius.iter().map(|r| r + 1).collect())?;
    Ok((window, tail_mass))
}

fn crop(taps: &[Complex64], freq: &FrequencyGrid, window: &IBox, i: usize, k: usize, r: usize) -> CoefficientArray {
    let shape = freq.shape();
    let layout = Layout::new(shape.clone());
    let m_len = freq.len();
    let base = &taps[(i * r + k) * m_len..(i * r + k + 1) * m_len];
    let mut out = CoefficientArray::zeros(window);
    let points: Vec<Vec<i64>> = window.points().collect();
    for (slot, j) in out.data.iter_mut().zip(points) {
        let idx: Vec<usize> = j
            .iter()
            .enumerate()
            .map(|(a, v)| (v + (shape[a] / 2) as i64) as usize)
            .collect();
        *slot = base[layout.flat(&idx)];
    }
    out
}

/// Relative defect of the duality identity `[Φ̂,Ψ̂]·[Φ̂,Φ̂] = [Φ̂,Φ̂]` on a
/// twice-refined grid, so nodes between the construction nodes are probed.
pub fn duality_residual(phi: &GeneratorSystem, psi: &GeneratorSystem, freq: &FrequencyGrid) -> Result<f64> {
    let width = phi.support_box().max_width() + psi.support_box().max_width();
    let probe = freq.with_fibers(2 * freq.n1, 2 * freq.n2)?.with_radius(width as usize);
    let g = bracket(phi, phi, &probe)?;
    let k = bracket(phi, psi, &probe)?;
    Ok(projector_defect(&g, &k))
}

fn projector_defect(g: &GramianField, k: &GramianField) -> f64 {
    let scale = g.fibers.iter().map(|f| f.norm()).fold(0.0, f64::max);
    let worst = g
        .fibers
        .iter()
        .zip(&k.fibers)
        .map(|(gf, kf)| (kf * gf - gf).norm())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Spectral profile and constancy check used before building a dual.
pub fn gram_profile(phi: &GeneratorSystem, freq: &FrequencyGrid, rank_tol: f64) -> Result<SpectralProfile> {
    spectral_profile(&bracket(phi, phi, freq)?, rank_tol)
}
