use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of `R × R^d` with step `h = 1 / samples_per_unit`.
///
/// Samples sit at cell midpoints `(s + 1/2) h`, `s ∈ Z`, so every unit cell
/// `k + [0,1)^{1+d}` holds exactly `samples_per_unit^{1+d}` nodes and integer
/// translations are index shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub samples_per_unit: usize,
}

impl Grid {
    pub fn new(d: usize, samples_per_unit: usize) -> Result<Self> {
        if samples_per_unit == 0 {
            return Err(Error::BadParams("samples per unit must be positive".into()));
        }
        Ok(Self { d, samples_per_unit })
    }

    /// Number of axes, `1 + d`.
    pub fn dims(&self) -> usize {
        self.d + 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.samples_per_unit as f64
    }

    /// Quadrature weight of one node, `h^{1+d}`.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dims() as i32)
    }

    /// Coordinate of sample index `s` along any axis.
    pub fn coord(&self, s: i64) -> f64 {
        (s as f64 + 0.5) * self.step()
    }
}

/// Integer-cornered half-open box `[lo, hi)` in `Z^{1+d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "box corners have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Invalid(format!("empty box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// The unit cell `[0,1)^{dims}`.
    pub fn unit(dims: usize) -> Self {
        Self {
            lo: vec![0; dims],
            hi: vec![1; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> i64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn extents(&self) -> Vec<usize> {
        (0..self.dims()).map(|a| self.extent(a) as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_width(&self) -> i64 {
        (0..self.dims()).map(|a| self.extent(a)).max().unwrap_or(0)
    }

    pub fn contains_box(&self, other: &IBox) -> bool {
        (0..self.dims()).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn contains_point(&self, p: &[i64]) -> bool {
        (0..self.dims()).all(|a| self.lo[a] <= p[a] && p[a] < self.hi[a])
    }

    pub fn union(&self, other: &IBox) -> IBox {
        IBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.min(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    pub fn translate(&self, by: &[i64]) -> IBox {
        IBox {
            lo: self.lo.iter().zip(by).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }

    /// Points of the box in row-major order (axis 0 slowest).
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let layout = Layout::new(self.extents());
        (0..layout.len()).map(move |flat| {
            let idx = layout.unravel(flat);
            idx.iter().zip(&self.lo).map(|(i, l)| *i as i64 + l).collect()
        })
    }
}

/// Row-major strides for an n-dimensional array (axis 0 slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub shape: Vec<usize>,
    pub strides: Vec<usize>,
}

impl Layout {
    pub fn new(shape: Vec<usize>) -> Self {
        let mut strides = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Self { shape, strides }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }
}

/// Visits every index of the leading axes `shape[..len-1]` of a row-major
/// array, calling `f(row_index, row_offset)`.
pub(super) fn for_each_row(shape: &[usize], mut f: impl FnMut(&[usize])) {
    let lead = shape.len() - 1;
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lead];
    loop {
        f(&idx);
        let mut a = lead;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trips() {
        let l = Layout::new(vec![3, 4, 5]);
        assert_eq!(l.strides, vec![20, 5, 1]);
        for flat in 0..l.len() {
            assert_eq!(l.flat(&l.unravel(flat)), flat);
        }
    }

    #[test]
    fn box_geometry() {
        let b = IBox::new(vec![-1, 0], vec![2, 1]).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.points().collect::<Vec<_>>(), vec![vec![-1, 0], vec![0, 0], vec![1, 0]]);
        assert!(b.contains_box(&IBox::unit(2)));
        assert!(IBox::new(vec![0], vec![0]).is_err());
    }

    #[test]
    fn unit_cell_holds_expected_nodes() {
        let g = Grid::new(1, 8).unwrap();
        let cell = (0..8).filter(|&s| (0.0..1.0).contains(&g.coord(s))).count();
        assert_eq!(cell.pow(g.dims() as u32), 64);
        assert!((g.cell_volume() - 1.0 / 64.0).abs() < 1e-16);
    }

    #[test]
    fn rows_cover_leading_axes() {
        let mut seen = Vec::new();
        for_each_row(&[2, 3, 4], |r| seen.push(r.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[5], vec![1, 2]);
        let mut one = 0;
        for_each_row(&[7], |_| one += 1);
        assert_eq!(one, 1);
    }
}
