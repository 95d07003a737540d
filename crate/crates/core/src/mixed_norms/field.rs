use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{for_each_row, Grid, IBox, Layout};
use crate::error::{Error, Result};

/// Decay class of a sampled function outside its box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// Exactly zero outside the box.
    Compact,
    /// `|f(x)| <= K e^{-rate |x|}`; the box truncation discarded `tail_mass`
    /// of the L^2 energy (estimated at construction time).
    Exponential { rate: f64, tail_mass: f64 },
}

/// Complex samples of a function on `R × R^d`, zero outside `bbox`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid,
    bbox: IBox,
    values: Vec<Complex64>,
    decay: Decay,
}

impl SampledField {
    pub fn new(grid: Grid, bbox: IBox, values: Vec<Complex64>, decay: Decay) -> Result<Self> {
        if bbox.dims() != grid.dims() {
            return Err(Error::DimensionMismatch(format!(
                "box has {} axes, grid has {}",
                bbox.dims(),
                grid.dims()
            )));
        }
        let expected: usize = bbox.extents().iter().map(|e| e * grid.samples_per_unit).product();
        if values.len() != expected {
            return Err(Error::Invalid(format!(
                "expected {expected} samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("non-finite sample".into()));
        }
        Ok(Self {
            grid,
            bbox,
            values,
            decay,
        })
    }

    pub fn zeros(grid: Grid, bbox: IBox) -> Self {
        let n: usize = bbox.extents().iter().map(|e| e * grid.samples_per_unit).product();
        Self {
            grid,
            bbox,
            values: vec![Complex64::new(0.0, 0.0); n],
            decay: Decay::Compact,
        }
    }

    /// Samples `f` at every node midpoint of the box.
    pub fn from_fn(grid: Grid, bbox: IBox, decay: Decay, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut field = Self::zeros(grid, bbox);
        field.decay = decay;
        let layout = field.layout();
        let lo = field.sample_lo();
        let mut x = vec![0.0; grid.dims()];
        for (flat, v) in field.values.iter_mut().enumerate() {
            let idx = layout.unravel(flat);
            for a in 0..x.len() {
                x[a] = grid.coord(lo[a] + idx[a] as i64);
            }
            *v = f(&x);
        }
        Self::new(field.grid, field.bbox, field.values, field.decay)
    }

    /// Real-valued convenience wrapper around [`SampledField::from_fn`].
    pub fn from_real_fn(grid: Grid, bbox: IBox, decay: Decay, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, bbox, decay, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn bbox(&self) -> &IBox {
        &self.bbox
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn with_decay(mut self, decay: Decay) -> Self {
        self.decay = decay;
        self
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bbox
            .extents()
            .iter()
            .map(|e| e * self.grid.samples_per_unit)
            .collect()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.shape())
    }

    /// Sample index of the first node along each axis.
    pub fn sample_lo(&self) -> Vec<i64> {
        let n = self.grid.samples_per_unit as i64;
        self.bbox.lo.iter().map(|l| l * n).collect()
    }

    pub fn sample_hi(&self) -> Vec<i64> {
        let n = self.grid.samples_per_unit as i64;
        self.bbox.hi.iter().map(|l| l * n).collect()
    }

    /// Value at absolute sample index `s`, zero outside the box.
    pub fn at_sample(&self, s: &[i64]) -> Complex64 {
        let lo = self.sample_lo();
        let shape = self.shape();
        let mut flat = 0usize;
        for a in 0..s.len() {
            let i = s[a] - lo[a];
            if i < 0 || i >= shape[a] as i64 {
                return Complex64::new(0.0, 0.0);
            }
            flat = flat * shape[a] + i as usize;
        }
        self.values[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// The field translated by the lattice vector `by`; exact on the grid.
    pub fn translated(&self, by: &[i64]) -> Self {
        let mut out = self.clone();
        out.bbox = self.bbox.translate(by);
        out
    }

    /// Copy of the field embedded in a larger box.
    pub fn embedded(&self, bbox: &IBox) -> Result<Self> {
        if !bbox.contains_box(&self.bbox) {
            return Err(Error::Invalid("embedding box does not contain the field box".into()));
        }
        let mut out = Self::zeros(self.grid, bbox.clone());
        out.decay = self.decay;
        out.add_shifted(self, &vec![0; self.dims()], Complex64::new(1.0, 0.0))?;
        Ok(out)
    }

    /// `self += coeff * other(· - shift)` for a lattice shift; the translated
    /// box of `other` must lie inside `self`'s box.
    pub fn add_shifted(&mut self, other: &SampledField, shift: &[i64], coeff: Complex64) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        let target = other.bbox.translate(shift);
        if !self.bbox.contains_box(&target) {
            return Err(Error::Invalid(format!(
                "shifted box {:?}..{:?} leaves {:?}..{:?}",
                target.lo, target.hi, self.bbox.lo, self.bbox.hi
            )));
        }
        let n = self.grid.samples_per_unit as i64;
        let dst_layout = self.layout();
        let src_shape = other.shape();
        let src_layout = other.layout();
        let offset: Vec<usize> = (0..self.dims())
            .map(|a| ((target.lo[a] - self.bbox.lo[a]) * n) as usize)
            .collect();
        let row_len = *src_shape.last().unwrap();
        let last = self.dims() - 1;
        let mut dst_idx = vec![0usize; self.dims()];
        let mut src_idx = vec![0usize; self.dims()];
        for_each_row(&src_shape, |row| {
            for a in 0..last {
                src_idx[a] = row[a];
                dst_idx[a] = row[a] + offset[a];
            }
            src_idx[last] = 0;
            dst_idx[last] = offset[last];
            let s0 = src_layout.flat(&src_idx);
            let d0 = dst_layout.flat(&dst_idx);
            let src = &other.values[s0..s0 + row_len];
            let dst = &mut self.values[d0..d0 + row_len];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += coeff * s;
            }
        });
        Ok(())
    }

    /// `a * self + b * other` on the union of both boxes.
    pub fn combine(&self, a: Complex64, other: &SampledField, b: Complex64) -> Result<Self> {
        let bbox = self.bbox.union(&other.bbox);
        let mut out = Self::zeros(self.grid, bbox);
        let zero = vec![0; self.dims()];
        out.add_shifted(self, &zero, a)?;
        out.add_shifted(other, &zero, b)?;
        out.decay = match (self.decay, other.decay) {
            (Decay::Compact, Decay::Compact) => Decay::Compact,
            (Decay::Exponential { rate, tail_mass }, Decay::Compact)
            | (Decay::Compact, Decay::Exponential { rate, tail_mass }) => Decay::Exponential { rate, tail_mass },
            (Decay::Exponential { rate: r1, tail_mass: t1 }, Decay::Exponential { rate: r2, tail_mass: t2 }) => {
                Decay::Exponential {
                    rate: r1.min(r2),
                    tail_mass: t1.max(t2),
                }
            }
        };
        Ok(out)
    }

    pub fn sub(&self, other: &SampledField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// Quadrature inner product `∫ self · conj(other)`.
    pub fn inner(&self, other: &SampledField) -> Result<Complex64> {
        if other.grid != self.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        Ok(shifted_dot(self, other, &vec![0; self.dims()]) * self.grid.cell_volume())
    }
}

/// Raw sum `Σ_s a(s) · conj(b(s - shift))` over sample indices, without the
/// quadrature weight. `shift` is in samples.
pub(crate) fn shifted_dot(a: &SampledField, b: &SampledField, shift: &[i64]) -> Complex64 {
    let dims = a.dims();
    let a_lo = a.sample_lo();
    let a_hi = a.sample_hi();
    let b_lo = b.sample_lo();
    let b_hi = b.sample_hi();
    let mut lo = vec![0i64; dims];
    let mut ext = vec![0usize; dims];
    for ax in 0..dims {
        let l = a_lo[ax].max(b_lo[ax] + shift[ax]);
        let h = a_hi[ax].min(b_hi[ax] + shift[ax]);
        if l >= h {
            return Complex64::new(0.0, 0.0);
        }
        lo[ax] = l;
        ext[ax] = (h - l) as usize;
    }
    let la = a.layout();
    let lb = b.layout();
    let last = dims - 1;
    let row_len = ext[last];
    let mut ia = vec![0usize; dims];
    let mut ib = vec![0usize; dims];
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_row(&ext, |row| {
        for ax in 0..dims {
            let r = if ax < last { row[ax] as i64 } else { 0 };
            let s = lo[ax] + r;
            ia[ax] = (s - a_lo[ax]) as usize;
            ib[ax] = (s - shift[ax] - b_lo[ax]) as usize;
        }
        let oa = la.flat(&ia);
        let ob = lb.flat(&ib);
        let ra = &a.values[oa..oa + row_len];
        let rb = &b.values[ob..ob + row_len];
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, y) in ra.iter().zip(rb) {
            // x * conj(y)
            re += x.re * y.re + x.im * y.im;
            im += x.im * y.re - x.re * y.im;
        }
        acc += Complex64::new(re, im);
    });
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize) -> SampledField {
        let g = Grid::new(1, n).unwrap();
        SampledField::from_real_fn(g, IBox::unit(2), Decay::Compact, |_| 1.0).unwrap()
    }

    #[test]
    fn add_shifted_places_translates() {
        let b = unit_box(4);
        let mut out = SampledField::zeros(b.grid(), IBox::new(vec![0, 0], vec![2, 1]).unwrap());
        out.add_shifted(&b, &[1, 0], Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(out.at_sample(&[1, 0]).re, 0.0);
        assert_eq!(out.at_sample(&[4, 3]).re, 2.0);
        assert!(out.add_shifted(&b, &[2, 0], Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn inner_product_of_box_is_unit() {
        let b = unit_box(8);
        assert!((b.inner(&b).unwrap().re - 1.0).abs() < 1e-14);
        let shifted = b.translated(&[1, 0]);
        assert_eq!(b.inner(&shifted).unwrap().norm(), 0.0);
    }

    #[test]
    fn shifted_dot_matches_pointwise_sum() {
        let g = Grid::new(1, 3).unwrap();
        let a = SampledField::from_fn(g, IBox::new(vec![0, -1], vec![2, 1]).unwrap(), Decay::Compact, |x| {
            Complex64::new(x[0] + 0.3 * x[1], x[0] * x[1])
        })
        .unwrap();
        let b = SampledField::from_fn(g, IBox::new(vec![-1, 0], vec![1, 2]).unwrap(), Decay::Compact, |x| {
            Complex64::new(1.0 - x[1], 0.5 * x[0])
        })
        .unwrap();
        for shift in [[0i64, 0], [2, -1], [-3, 2], [4, 0]] {
            let mut brute = Complex64::new(0.0, 0.0);
            for s0 in -10..10 {
                for s1 in -10..10 {
                    brute += a.at_sample(&[s0, s1]) * b.at_sample(&[s0 - shift[0], s1 - shift[1]]).conj();
                }
            }
            assert!((shifted_dot(&a, &b, &shift) - brute).norm() < 1e-12);
        }
    }
}
