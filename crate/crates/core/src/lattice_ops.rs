//! Semi-convolution, analysis and synthesis between lattice coefficient
//! arrays and sampled fields.
//!
//! Integer translates are exact index shifts on the sample grid, so every
//! operator here is the exact discrete counterpart of its continuum version
//! under midpoint quadrature.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixed_norms::{shifted_dot, CoefficientArray, Grid, IBox, SampledField};

/// `r` generators on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSystem {
    generators: Vec<SampledField>,
    labels: Vec<String>,
}

impl GeneratorSystem {
    pub fn new(generators: Vec<SampledField>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Invalid("a generator system needs at least one generator".into()));
        };
        if labels.len() != generators.len() {
            return Err(Error::Invalid(format!(
                "{} labels for {} generators",
                labels.len(),
                generators.len()
            )));
        }
        let grid = first.grid();
        for (g, l) in generators.iter().zip(&labels) {
            if g.grid() != grid {
                return Err(Error::DimensionMismatch(format!("generator `{l}` lives on a different grid")));
            }
            if g.is_zero() {
                return Err(Error::Invalid(format!("generator `{l}` is identically zero")));
            }
        }
        Ok(Self { generators, labels })
    }

    /// Labels `phi_1..phi_r`.
    pub fn unlabeled(generators: Vec<SampledField>) -> Result<Self> {
        let labels = (1..=generators.len()).map(|i| format!("phi_{i}")).collect();
        Self::new(generators, labels)
    }

    pub fn r(&self) -> usize {
        self.generators.len()
    }

    pub fn grid(&self) -> Grid {
        self.generators[0].grid()
    }

    pub fn d(&self) -> usize {
        self.grid().d
    }

    pub fn generators(&self) -> &[SampledField] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> &SampledField {
        &self.generators[i]
    }

    /// Smallest box containing every generator box.
    pub fn support_box(&self) -> IBox {
        self.generators[1..]
            .iter()
            .fold(self.generators[0].bbox().clone(), |b, g| b.union(g.bbox()))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            generators: self.generators.iter().map(|g| g.scaled(c)).collect(),
            labels: self.labels.clone(),
        }
    }
}

fn check_d(f: &SampledField, d: &CoefficientArray) -> Result<()> {
    if d.d != f.grid().d {
        return Err(Error::DimensionMismatch(format!(
            "coefficients have d = {}, field has d = {}",
            d.d,
            f.grid().d
        )));
    }
    Ok(())
}

/// Box holding `f ∗′ D`: the Minkowski sum of the field box and the window.
fn convolved_box(f: &IBox, d: &CoefficientArray) -> IBox {
    IBox {
        lo: f.lo.iter().zip(&d.offset).map(|(a, o)| a + o).collect(),
        hi: f
            .hi
            .iter()
            .zip(&d.offset)
            .zip(&d.shape)
            .map(|((a, o), s)| a + o + *s as i64 - 1)
            .collect(),
    }
}

/// `Σ_j d(j) f(· − j)`.
pub fn semi_convolve(f: &SampledField, d: &CoefficientArray) -> Result<SampledField> {
    check_d(f, d)?;
    let mut out = SampledField::zeros(f.grid(), convolved_box(f.bbox(), d)).with_decay(f.decay());
    for (j, v) in d.taps() {
        out.add_shifted(f, &j, v)?;
    }
    Ok(out)
}

/// Lattice points `j` at which `f` and `φ(· − j)` can overlap.
pub fn required_window(f: &SampledField, phi: &SampledField) -> IBox {
    let (fb, pb) = (f.bbox(), phi.bbox());
    IBox {
        lo: fb.lo.iter().zip(&pb.hi).map(|(a, b)| a - b + 1).collect(),
        hi: fb.hi.iter().zip(&pb.lo).map(|(a, b)| a - b).collect(),
    }
}

/// Frame coefficients `c_i(j) = ⟨f, φ_i(· − j)⟩` on `window` (default: the
/// smallest window holding every nonzero coefficient).
pub fn analyze(f: &SampledField, phi: &GeneratorSystem, window: Option<&IBox>) -> Result<Vec<CoefficientArray>> {
    if f.grid() != phi.grid() {
        return Err(Error::DimensionMismatch("field and generators live on different grids".into()));
    }
    let needed: Vec<IBox> = phi.generators().iter().map(|g| required_window(f, g)).collect();
    let window = match window {
        Some(w) => {
            if w.dims() != f.dims() {
                return Err(Error::DimensionMismatch(format!(
                    "window has {} axes, field has {}",
                    w.dims(),
                    f.dims()
                )));
            }
            if let Some(n) = needed.iter().find(|n| !w.contains_box(n)) {
                return Err(Error::WindowTooSmall(format!(
                    "overlaps reach {:?}..{:?}, window is {:?}..{:?}",
                    n.lo, n.hi, w.lo, w.hi
                )));
            }
            w.clone()
        }
        None => needed[1..].iter().fold(needed[0].clone(), |a, b| a.union(b)),
    };
    let n = f.grid().samples_per_unit as i64;
    let weight = f.grid().cell_volume();
    let points: Vec<Vec<i64>> = window.points().collect();
    phi.generators()
        .iter()
        .map(|g| {
            let data: Vec<Complex64> = points
                .par_iter()
                .map(|j| {
                    let shift: Vec<i64> = j.iter().map(|v| v * n).collect();
                    shifted_dot(f, g, &shift) * weight
                })
                .collect();
            CoefficientArray::new(f.grid().d, window.lo.clone(), window.extents(), data)
        })
        .collect()
}

/// `Σ_i φ_i ∗′ D_i`.
pub fn synthesize(phi: &GeneratorSystem, d: &[CoefficientArray]) -> Result<SampledField> {
    if d.len() != phi.r() {
        return Err(Error::ArityMismatch {
            expected: phi.r(),
            got: d.len(),
        });
    }
    for (g, c) in phi.generators().iter().zip(d) {
        check_d(g, c)?;
    }
    let boxes: Vec<IBox> = phi
        .generators()
        .iter()
        .zip(d)
        .map(|(g, c)| convolved_box(g.bbox(), c))
        .collect();
    let bbox = boxes[1..].iter().fold(boxes[0].clone(), |a, b| a.union(b));
    let mut out = SampledField::zeros(phi.grid(), bbox).with_decay(phi.get(0).decay());
    for (g, c) in phi.generators().iter().zip(d) {
        for (j, v) in c.taps() {
            out.add_shifted(g, &j, v)?;
        }
    }
    Ok(out)
}

/// Translate-sum `Σ_j f(· + j)` restricted to the unit cell.
pub fn periodize(f: &SampledField) -> SampledField {
    let n = f.grid().samples_per_unit as i64;
    let mut out = SampledField::zeros(f.grid(), IBox::unit(f.dims()));
    let layout = out.layout();
    let cells: Vec<Vec<i64>> = f.bbox().points().collect();
    let mut s = vec![0i64; f.dims()];
    for (k, v) in out.values_mut().iter_mut().enumerate() {
        let u = layout.unravel(k);
        for c in &cells {
            for a in 0..s.len() {
                s[a] = c[a] * n + u[a] as i64;
            }
            *v += f.at_sample(&s);
        }
    }
    out
}

/// `taps` standard complex normal entries at distinct random points of `window`.
pub fn random_coefficients(window: &IBox, taps: usize, rng: &mut impl Rng) -> Result<CoefficientArray> {
    let len = window.len();
    if taps == 0 || taps > len {
        return Err(Error::BadParams(format!("cannot place {taps} taps in a window of {len} points")));
    }
    let mut out = CoefficientArray::zeros(window);
    for k in sample(rng, len, taps) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.data[k] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    }
    Ok(out)
}
