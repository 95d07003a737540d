//! The four norm families: `ℓ^{p,q}` on lattice arrays, and `L^{p,q}`,
//! amalgam `𝓛^{p,q}` and Wiener `W(L^{1,1})` on sampled fields.
//!
//! All integrals are midpoint sums over grid nodes; `∞` exponents become
//! maxima over nodes. Reductions run in a fixed sequential order, so results
//! do not depend on thread count.

use super::coeffs::CoefficientArray;
use super::exponents::{MixedExponents, PowerSum};
use super::field::SampledField;

/// `(Σ_{j₁} (Σ_{j₂} |d|^q)^{p/q})^{1/p}`.
pub fn lpq_seq_norm(c: &CoefficientArray, e: MixedExponents) -> f64 {
    let row: usize = c.shape[1..].iter().product();
    let mut outer = PowerSum::new(e.p());
    for chunk in c.data.chunks(row) {
        let mut inner = PowerSum::new(e.q());
        chunk.iter().for_each(|v| inner.push(v.norm(), 1.0));
        outer.push(inner.finish(), 1.0);
    }
    outer.finish()
}

/// `‖ ‖f(x₁, ·)‖_{L^q} ‖_{L^p}`.
pub fn lpq_norm(f: &SampledField, e: MixedExponents) -> f64 {
    let h = f.grid().step();
    let w_inner = h.powi(f.grid().d as i32);
    let shape = f.shape();
    let row: usize = shape[1..].iter().product();
    let mut outer = PowerSum::new(e.p());
    for chunk in f.values().chunks(row) {
        let mut inner = PowerSum::new(e.q());
        chunk.iter().for_each(|v| inner.push(v.norm(), w_inner));
        outer.push(inner.finish(), h);
    }
    outer.finish()
}

/// Splits every sample into (cell, offset-in-cell) coordinates:
/// `(c₁, u₁, c₂, u₂)` with the spatial parts flattened row-major.
struct CellSplit {
    n: usize,
    cells: Vec<usize>,
}

impl CellSplit {
    fn new(f: &SampledField) -> Self {
        Self {
            n: f.grid().samples_per_unit,
            cells: f.bbox().extents(),
        }
    }

    fn spatial_cells(&self) -> usize {
        self.cells[1..].iter().product()
    }

    fn spatial_offsets(&self) -> usize {
        self.n.pow((self.cells.len() - 1) as u32)
    }

    /// Calls `g(c₁, u₁, c₂, u₂, flat)` for every sample in storage order.
    fn for_each(&self, mut g: impl FnMut(usize, usize, usize, usize, usize)) {
        let dims = self.cells.len();
        let shape: Vec<usize> = self.cells.iter().map(|c| c * self.n).collect();
        let total: usize = shape.iter().product();
        let mut idx = vec![0usize; dims];
        for flat in 0..total {
            let mut c2 = 0;
            let mut u2 = 0;
            for a in 1..dims {
                c2 = c2 * self.cells[a] + idx[a] / self.n;
                u2 = u2 * self.n + idx[a] % self.n;
            }
            g(idx[0] / self.n, idx[0] % self.n, c2, u2, flat);
            for a in (0..dims).rev() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

/// `‖ Σ_{j₁} ‖ Σ_{j₂} |f(x₁+j₁, x₂+j₂)| ‖_{L^q([0,1]^d)} ‖_{L^p([0,1])}`.
pub fn amalgam_norm(f: &SampledField, e: MixedExponents) -> f64 {
    let split = CellSplit::new(f);
    let n = split.n;
    let nu2 = split.spatial_offsets();
    let c1n = split.cells[0];
    // s[c₁][u₁][u₂] = Σ_{c₂} |f|
    let mut s = vec![0.0; c1n * n * nu2];
    let vals = f.values();
    split.for_each(|c1, u1, _c2, u2, flat| {
        s[(c1 * n + u1) * nu2 + u2] += vals[flat].norm();
    });
    let w_inner = f.grid().step().powi(f.grid().d as i32);
    let mut outer = PowerSum::new(e.p());
    for u1 in 0..n {
        let mut acc = 0.0;
        for c1 in 0..c1n {
            let base = (c1 * n + u1) * nu2;
            let mut inner = PowerSum::new(e.q());
            s[base..base + nu2].iter().for_each(|&v| inner.push(v, w_inner));
            acc += inner.finish();
        }
        outer.push(acc, f.grid().step());
    }
    outer.finish()
}

/// `Σ_{j₁} sup_{x₁} Σ_{j₂} sup_{x₂} |f(x₁+j₁, x₂+j₂)|` over grid nodes.
pub fn wiener_norm(f: &SampledField) -> f64 {
    let split = CellSplit::new(f);
    let n = split.n;
    let nc2 = split.spatial_cells();
    let c1n = split.cells[0];
    // m[c₁][u₁][c₂] = max_{u₂} |f|
    let mut m = vec![0.0f64; c1n * n * nc2];
    let vals = f.values();
    split.for_each(|c1, u1, c2, _u2, flat| {
        let slot = &mut m[(c1 * n + u1) * nc2 + c2];
        *slot = slot.max(vals[flat].norm());
    });
    (0..c1n)
        .map(|c1| {
            (0..n)
                .map(|u1| {
                    let base = (c1 * n + u1) * nc2;
                    m[base..base + nc2].iter().sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .sum()
}
