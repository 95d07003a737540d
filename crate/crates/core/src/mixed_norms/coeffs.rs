use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{IBox, Layout};
use crate::error::{Error, Result};

/// Finitely supported array `d(j₁, j₂)` on the lattice `Z × Z^d`, stored
/// row-major over the window `offset + [0, shape)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientArray {
    pub d: usize,
    pub offset: Vec<i64>,
    pub shape: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl CoefficientArray {
    pub fn new(d: usize, offset: Vec<i64>, shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if offset.len() != d + 1 || shape.len() != d + 1 {
            return Err(Error::DimensionMismatch(format!(
                "coefficient window has {}/{} axes, expected {}",
                offset.len(),
                shape.len(),
                d + 1
            )));
        }
        if shape.contains(&0) {
            return Err(Error::Invalid("empty coefficient window".into()));
        }
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::Invalid(format!(
                "window holds {} entries, got {}",
                shape.iter().product::<usize>(),
                data.len()
            )));
        }
        Ok(Self { d, offset, shape, data })
    }

    pub fn zeros(window: &IBox) -> Self {
        let shape = window.extents();
        let n = shape.iter().product();
        Self {
            d: window.dims() - 1,
            offset: window.lo.clone(),
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Unit impulse at lattice point `at`.
    pub fn delta(at: &[i64]) -> Self {
        Self {
            d: at.len() - 1,
            offset: at.to_vec(),
            shape: vec![1; at.len()],
            data: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Sparse constructor; the window is the bounding box of the taps.
    pub fn from_taps(d: usize, taps: &[(Vec<i64>, Complex64)]) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Invalid("no taps".into()));
        }
        let mut lo = taps[0].0.clone();
        let mut hi: Vec<i64> = lo.iter().map(|v| v + 1).collect();
        for (j, _) in taps {
            if j.len() != d + 1 {
                return Err(Error::DimensionMismatch(format!("tap {j:?} has wrong arity")));
            }
            for a in 0..=d {
                lo[a] = lo[a].min(j[a]);
                hi[a] = hi[a].max(j[a] + 1);
            }
        }
        let mut out = Self::zeros(&IBox { lo, hi });
        for (j, v) in taps {
            let k = out.flat_of(j).expect("inside bounding box");
            out.data[k] += v;
        }
        Ok(out)
    }

    pub fn dims(&self) -> usize {
        self.d + 1
    }

    pub fn window(&self) -> IBox {
        IBox {
            lo: self.offset.clone(),
            hi: self.offset.iter().zip(&self.shape).map(|(o, s)| o + *s as i64).collect(),
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.shape.clone())
    }

    fn flat_of(&self, j: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for a in 0..self.dims() {
            let i = j[a] - self.offset[a];
            if i < 0 || i >= self.shape[a] as i64 {
                return None;
            }
            flat = flat * self.shape[a] + i as usize;
        }
        Some(flat)
    }

    /// Entry at lattice point `j`, zero outside the window.
    pub fn get(&self, j: &[i64]) -> Complex64 {
        self.flat_of(j).map_or(Complex64::new(0.0, 0.0), |k| self.data[k])
    }

    pub fn set(&mut self, j: &[i64], v: Complex64) -> Result<()> {
        let k = self
            .flat_of(j)
            .ok_or_else(|| Error::Invalid(format!("index {j:?} outside coefficient window")))?;
        self.data[k] = v;
        Ok(())
    }

    /// Nonzero entries with their lattice positions.
    pub fn taps(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        let layout = self.layout();
        self.data.iter().enumerate().filter(|(_, v)| v.norm_sqr() > 0.0).map(move |(k, v)| {
            let idx = layout.unravel(k);
            (idx.iter().zip(&self.offset).map(|(i, o)| *i as i64 + o).collect(), *v)
        })
    }

    /// `d(· − k)`.
    pub fn shifted(&self, k: &[i64]) -> Self {
        let mut out = self.clone();
        for (o, s) in out.offset.iter_mut().zip(k) {
            *o += s;
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a * self + b * other` on the union window.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if other.d != self.d {
            return Err(Error::DimensionMismatch("coefficient arrays of different d".into()));
        }
        let mut out = Self::zeros(&self.window().union(&other.window()));
        for (src, c) in [(self, a), (other, b)] {
            let layout = src.layout();
            for (k, v) in src.data.iter().enumerate() {
                let j: Vec<i64> = layout.unravel(k).iter().zip(&src.offset).map(|(i, o)| *i as i64 + o).collect();
                let t = out.flat_of(&j).expect("union window");
                out.data[t] += c * v;
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.norm_sqr() == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `Σ self · conj(other)` over the lattice.
    pub fn dot(&self, other: &Self) -> Complex64 {
        let layout = self.layout();
        self.data
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let j: Vec<i64> = layout.unravel(k).iter().zip(&self.offset).map(|(i, o)| *i as i64 + o).collect();
                v * other.get(&j).conj()
            })
            .sum()
    }
}
