use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::Layout;

/// Frequency nodes on `[−π, π)^{1+d}` plus the periodization radius `J`.
///
/// Node `t` along an axis with `n` fibers sits at `−π + 2πt/n`; for even `n`
/// this includes both `0` and `−π`. Nodes are flattened row-major with the
/// time axis slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub j: usize,
}

impl FrequencyGrid {
    pub fn new(d: usize, n1: usize, n2: usize, j: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::BadParams(format!("need at least 2 fibers per axis, got {n1}x{n2}")));
        }
        if j < 1 {
            return Err(Error::BadParams("periodization radius must be at least 1".into()));
        }
        Ok(Self { d, n1, n2, j })
    }

    /// Grid with `J` = widest generator support + 16.
    pub fn for_system(phi: &GeneratorSystem, n1: usize, n2: usize) -> Result<Self> {
        Self::new(phi.d(), n1, n2, default_radius(phi))
    }

    pub fn with_radius(mut self, j: usize) -> Self {
        self.j = j.max(1);
        self
    }

    pub fn with_fibers(&self, n1: usize, n2: usize) -> Result<Self> {
        Self::new(self.d, n1, n2, self.j)
    }

    pub fn dims(&self) -> usize {
        self.d + 1
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n1
        } else {
            self.n2
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dims()).map(|a| self.axis_len(a)).collect()
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let n = self.axis_len(axis);
        (0..n).map(|t| -PI + 2.0 * PI * t as f64 / n as f64).collect()
    }

    /// Multi-index of node `flat`.
    pub fn node_index(&self, flat: usize) -> Vec<usize> {
        Layout::new(self.shape()).unravel(flat)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.node_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &t)| -PI + 2.0 * PI * t as f64 / self.axis_len(a) as f64)
            .collect()
    }

    /// Flat index of the node at `−ξ` (mod 2π).
    pub fn mirror(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self
            .node_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &t)| (self.axis_len(a) - t) % self.axis_len(a))
            .collect();
        Layout::new(self.shape()).flat(&idx)
    }
}

pub fn default_radius(phi: &GeneratorSystem) -> usize {
    phi.support_box().max_width() as usize + 16
}
