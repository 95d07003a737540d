use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_ops::periodize;
use crate::mixed_norms::{Grid, IBox, Layout, MixedExponents, SampledField};

/// Default modulation `h(x, y) = e^{−x² − |y|²}`.
pub fn gaussian_modulation(x: f64, y: &[f64]) -> f64 {
    (-x * x - y.iter().map(|v| v * v).sum::<f64>()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingOptions {
    pub exponents: MixedExponents,
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Modulation support radius in unscaled units: lattice sums run over
    /// `|2^{−n} j|_∞ ≤ truncation`.
    pub truncation: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            exponents: MixedExponents::of(2.0, 2.0),
            epsilon1: 0.5,
            epsilon2: 0.5,
            truncation: 6.0,
        }
    }
}

/// `v_n = 2^{−n(d+1)} ‖Σ_j h(2^{−n} j) φ(· − j)‖_{𝓛^{p,q}}` for `n = 2..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDiagnostic {
    pub options: ScalingOptions,
    pub ns: Vec<u32>,
    pub values: Vec<f64>,
    /// `v_{n+1} / v_n`.
    pub ratios: Vec<f64>,
    /// Per-step decay the modulation's decay exponents predict,
    /// `2^{−(2 − ε₁ − ε₂)}`.
    pub predicted_ratio: f64,
    /// `v_{n_max} ≤ 10⁻² v_2`.
    pub decayed: bool,
}

impl ScalingDiagnostic {
    /// Strictly decreasing from index `n` on.
    pub fn decreasing_from(&self, n: u32) -> bool {
        self.ns
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(k, _)| k[0] >= n)
            .all(|(_, v)| v[1] < v[0])
    }
}

pub fn scaling_limit_diagnostic(phi: &SampledField, n_max: u32) -> Result<ScalingDiagnostic> {
    scaling_limit_diagnostic_with(phi, n_max, &ScalingOptions::default(), gaussian_modulation)
}

/// Replaces a field that is constant on every unit cell by its one-sample-per-cell version.
fn coarsen_if_cell_constant(phi: &SampledField) -> Option<SampledField> {
    let n = phi.grid().samples_per_unit as i64;
    if n == 1 {
        return None;
    }
    let grid = Grid::new(phi.grid().d, 1).ok()?;
    let mut out = SampledField::zeros(grid, phi.bbox().clone());
    let mut s = vec![0i64; phi.dims()];
    let cells: Vec<Vec<i64>> = phi.bbox().points().collect();
    let offsets: Vec<Vec<usize>> = IBox::new(vec![0; phi.dims()], vec![n; phi.dims()])
        .ok()?
        .points()
        .map(|p| p.iter().map(|&v| v as usize).collect())
        .collect();
    for (slot, c) in out.values_mut().iter_mut().zip(&cells) {
        let mut first = None;
        for u in &offsets {
            for a in 0..s.len() {
                s[a] = c[a] * n + u[a] as i64;
            }
            let v = phi.at_sample(&s);
            match first {
                None => first = Some(v),
                Some(f) if f != v => return None,
                _ => {}
            }
        }
        *slot = first.unwrap_or_default();
    }
    Some(out.with_decay(phi.decay()))
}

pub fn scaling_limit_diagnostic_with(
    phi: &SampledField,
    n_max: u32,
    opts: &ScalingOptions,
    h: impl Fn(f64, &[f64]) -> f64,
) -> Result<ScalingDiagnostic> {
    if n_max < 4 {
        return Err(Error::BadParams(format!("n_max = {n_max} gives fewer than 3 terms")));
    }
    if n_max > 20 {
        return Err(Error::BadParams(format!("n_max = {n_max} is beyond reach")));
    }
    if !(opts.truncation > 0.0) {
        return Err(Error::BadParams("truncation must be positive".into()));
    }
    for (name, eps) in [("epsilon1", opts.epsilon1), ("epsilon2", opts.epsilon2)] {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::BadParams(format!("{name} = {eps} must lie in (0, 1)")));
        }
    }
    let max_abs = periodize(phi).max_abs();
    if max_abs > 1e-8 * phi.max_abs().max(1.0) {
        return Err(Error::PreconditionSumNonzero { max_abs });
    }
    let coarse = coarsen_if_cell_constant(phi);
    let phi = coarse.as_ref().unwrap_or(phi);
    let ns: Vec<u32> = (2..=n_max).collect();
    let values: Vec<f64> = ns.iter().map(|&n| scaled_norm(phi, n, opts, &h)).collect();
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let decayed = values[values.len() - 1] <= 1e-2 * values[0];
    Ok(ScalingDiagnostic {
        options: *opts,
        ns,
        values,
        ratios,
        predicted_ratio: 2f64.powf(-(2.0 - opts.epsilon1 - opts.epsilon2)),
        decayed,
    })
}

/// One term `v_n`, computed row by row in the time-lattice index so that the
/// modulated field is never materialized.
fn scaled_norm(phi: &SampledField, n: u32, opts: &ScalingOptions, h: &impl Fn(f64, &[f64]) -> f64) -> f64 {
    let grid = phi.grid();
    let dims = grid.dims();
    let d = grid.d;
    let s = grid.samples_per_unit;
    let scale = 2f64.powi(-(n as i32));
    let radius = (opts.truncation / scale).ceil() as i64;
    let side = (2 * radius + 1) as usize;
    let bbox = phi.bbox();

    // φ as (cell, offset block) pairs.
    let offsets = s.pow(dims as u32);
    let cell_layout = Layout::new(vec![s; dims]);
    let cells: Vec<(Vec<i64>, Vec<Complex64>)> = bbox
        .points()
        .map(|c| {
            let block = (0..offsets)
                .map(|k| {
                    let u = cell_layout.unravel(k);
                    let idx: Vec<i64> = (0..dims).map(|a| c[a] * s as i64 + u[a] as i64).collect();
                    phi.at_sample(&idx)
                })
                .collect();
            (c, block)
        })
        .filter(|(_, b): &(Vec<i64>, Vec<Complex64>)| b.iter().any(|v| v.norm_sqr() > 0.0))
        .collect();

    // Spatial lattice of the modulation, [−R, R]^d, and of the output cells.
    let h_layout = Layout::new(vec![side; d]);
    let out_lo: Vec<i64> = (1..dims).map(|a| bbox.lo[a] - radius).collect();
    let out_shape: Vec<usize> = (1..dims)
        .map(|a| (bbox.hi[a] - bbox.lo[a]) as usize + 2 * radius as usize)
        .collect();
    let out_strides = Layout::new(out_shape.clone()).strides;
    let out_len: usize = out_shape.iter().product();
    // Per modulation node: its spatial coordinate and its output offset
    // relative to the cell's base.
    let mut ys = Vec::with_capacity(h_layout.len() * d);
    let mut h_to_out = Vec::with_capacity(h_layout.len());
    for k in 0..h_layout.len() {
        let idx = h_layout.unravel(k);
        ys.extend(idx.iter().map(|&i| (i as i64 - radius) as f64 * scale));
        h_to_out.push(idx.iter().zip(&out_strides).map(|(i, st)| i * st).sum::<usize>());
    }
    let cell_base: Vec<usize> = cells
        .iter()
        .map(|(c, _)| {
            (0..d)
                .map(|a| (c[a + 1] - radius - out_lo[a]) as usize * out_strides[a])
                .sum()
        })
        .collect();

    let mut rows: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let h_row = |j1: i64, rows: &mut BTreeMap<i64, Vec<f64>>| {
        rows.entry(j1).or_insert_with(|| {
            if j1.abs() > radius {
                Vec::new()
            } else {
                let x = j1 as f64 * scale;
                if d == 0 {
                    vec![h(x, &[])]
                } else {
                    ys.chunks(d).map(|y| h(x, y)).collect()
                }
            }
        });
    };

    let w_inner = grid.step().powi(d as i32);
    let u1_count = s;
    let u2_count = s.pow(d as u32);
    let mut per_u1 = vec![0.0; u1_count];
    let mut field = vec![Complex64::new(0.0, 0.0); out_len * offsets];
    let mut row_sum = vec![0.0; offsets];
    let k1_lo = bbox.lo[0] - radius;
    let k1_hi = bbox.hi[0] + radius;
    for k1 in k1_lo..k1_hi {
        rows.retain(|&j, _| j > k1 - bbox.hi[0]);
        field.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let mut any = false;
        for ((c, block), base) in cells.iter().zip(&cell_base) {
            let j1 = k1 - c[0];
            h_row(j1, &mut rows);
            let hr = &rows[&j1];
            if hr.is_empty() {
                continue;
            }
            any = true;
            // F(k₁, k₂, u) += φ(c, u) · H(k₁ − c₁, k₂ − c₂) for all k₂.
            for (&hv, &off) in hr.iter().zip(&h_to_out) {
                if hv == 0.0 {
                    continue;
                }
                let flat = base + off;
                let dst = &mut field[flat * offsets..(flat + 1) * offsets];
                for (x, p) in dst.iter_mut().zip(block) {
                    *x += p * hv;
                }
            }
        }
        if !any {
            continue;
        }
        row_sum.iter_mut().for_each(|v| *v = 0.0);
        for cell in field.chunks(offsets) {
            for (acc, v) in row_sum.iter_mut().zip(cell) {
                *acc += v.norm();
            }
        }
        for (u1, acc) in per_u1.iter_mut().enumerate() {
            let inner = &row_sum[u1 * u2_count..(u1 + 1) * u2_count];
            *acc += inner_norm(inner, opts.exponents.q(), w_inner);
        }
    }
    let outer = inner_norm(&per_u1, opts.exponents.p(), grid.step());
    outer * 2f64.powi(-(n as i32) * dims as i32)
}

fn inner_norm(v: &[f64], p: f64, w: f64) -> f64 {
    if p.is_infinite() {
        v.iter().copied().fold(0.0, f64::max)
    } else {
        (v.iter().map(|x| w * x.powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Largest observed ratio
/// `|h(x₁,y₁) − h(x₂,y₂)| / ((|x₁−x₂| + |y₁−y₂|) (1+min|x|)^{−1−ε₁} (1+min|y|)^{−d−ε₂})`
/// over random point pairs: a numerical estimate of the constant in the
/// sum-form Lipschitz-decay bound.
pub fn lipschitz_decay_constant(
    h: impl Fn(f64, &[f64]) -> f64,
    d: usize,
    epsilon1: f64,
    epsilon2: f64,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut worst = 0.0f64;
    for k in 0..pairs {
        // Mix global pairs with close pairs so both regimes are probed.
        let spread = if k % 2 == 0 { 8.0 } else { 1.0 };
        let x1: f64 = rng.random_range(-spread..spread);
        let y1: Vec<f64> = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
        let (x2, y2): (f64, Vec<f64>) = if k % 3 == 0 {
            (x1 + rng.random_range(-1e-3..1e-3), y1.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect())
        } else {
            (rng.random_range(-spread..spread), (0..d).map(|_| rng.random_range(-spread..spread)).collect())
        };
        let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let dist = (x1 - x2).abs() + norm(&dy);
        if dist == 0.0 {
            continue;
        }
        let weight = (1.0 + x1.abs().min(x2.abs())).powf(-1.0 - epsilon1)
            * (1.0 + norm(&y1).min(norm(&y2))).powf(-(d as f64) - epsilon2);
        let ratio = (h(x1, &y1) - h(x2, &y2)).abs() / (dist * weight);
        worst = worst.max(ratio);
    }
    worst
}
