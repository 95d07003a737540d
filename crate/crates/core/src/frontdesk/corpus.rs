//! Named generator systems with known frame behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::{Decay, Grid, IBox, SampledField};

/// Constructor parameters; unused fields are ignored by entries that do not
/// need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    pub d: usize,
    pub samples_per_unit: usize,
    /// B-spline order (2 = hat).
    pub order: usize,
    /// Tensorize the B-spline over every axis instead of `B_n ⊗ box`.
    pub full_tensor: bool,
    pub sigma: f64,
    pub cutoff: i64,
    /// Base entry of `shifted_pair`.
    pub base: String,
    pub shift: Vec<i64>,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            d: 1,
            samples_per_unit: 32,
            order: 2,
            full_tensor: false,
            sigma: 0.5,
            cutoff: 4,
            base: "box".into(),
            shift: vec![],
        }
    }
}

/// What a corpus entry is known to do.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub frame: bool,
    pub k0: usize,
    pub bracket: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub expected: Expected,
}

pub const ENTRIES: &[CorpusEntry] = &[
    CorpusEntry {
        name: "box",
        summary: "indicator of the unit cell",
        expected: Expected {
            frame: true,
            k0: 1,
            bracket: Some("1"),
        },
    },
    CorpusEntry {
        name: "bspline",
        summary: "B_order(x1) tensor box (or full tensor), support [0,order] x [0,1]^d",
        expected: Expected {
            frame: true,
            k0: 1,
            bracket: Some("order 2: (2 + cos xi)/3 along the spatial zero frequency"),
        },
    },
    CorpusEntry {
        name: "hat",
        summary: "alias of bspline with order 2",
        expected: Expected {
            frame: true,
            k0: 1,
            bracket: Some("(2 + cos xi)/3 along the spatial zero frequency"),
        },
    },
    CorpusEntry {
        name: "gaussian",
        summary: "exp(-|x|^2 / (2 sigma^2)) truncated to [-cutoff, cutoff]^(1+d)",
        expected: Expected {
            frame: true,
            k0: 1,
            bracket: None,
        },
    },
    CorpusEntry {
        name: "shifted_pair",
        summary: "{g, g(. - shift)} for a base entry g",
        expected: Expected {
            frame: true,
            k0: 1,
            bracket: Some("[[a, a e^{i m.xi}], [a e^{-i m.xi}, a]]"),
        },
    },
    CorpusEntry {
        name: "diff_filtered_box",
        summary: "(2 b(x1) - b(x1 - 1) - b(x1 + 1)) tensor box",
        expected: Expected {
            frame: false,
            k0: 0,
            bracket: Some("(2 - 2 cos xi)^2 along the spatial zero frequency"),
        },
    },
];

pub fn entry(name: &str) -> Result<&'static CorpusEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownCorpusEntry(name.to_string()))
}

/// Cardinal B-spline of order `n` (degree `n − 1`) supported on `[0, n]`.
pub fn cardinal_bspline(n: usize, x: f64) -> f64 {
    if x <= 0.0 || x >= n as f64 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        let t = x - k as f64;
        if t > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * t.powi(n as i32 - 1);
        }
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    let fact: f64 = (1..n).map(|v| v as f64).product();
    acc / fact
}

fn unit_box(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        1.0
    } else {
        0.0
    }
}

fn grid_of(p: &CorpusParams) -> Result<Grid> {
    Grid::new(p.d, p.samples_per_unit)
}

fn single(name: &str, field: SampledField) -> Result<GeneratorSystem> {
    GeneratorSystem::new(vec![field], vec![name.to_string()])
}

/// Fraction of `∫ e^{−x²/σ²}` lying outside `[−c, c]`.
fn gaussian_tail_fraction(sigma: f64, c: f64) -> f64 {
    let steps = 4096;
    let upper = c + 12.0 * sigma;
    let dx = (upper - c) / steps as f64;
    let tail: f64 = (0..steps)
        .map(|i| {
            let x = c + (i as f64 + 0.5) * dx;
            (-(x * x) / (sigma * sigma)).exp()
        })
        .sum::<f64>()
        * dx;
    2.0 * tail / (sigma * std::f64::consts::PI.sqrt())
}

/// Builds the generator system of a corpus entry.
pub fn corpus_build(name: &str, p: &CorpusParams) -> Result<GeneratorSystem> {
    let grid = grid_of(p)?;
    let dims = grid.dims();
    match name {
        "box" => single(
            "box",
            SampledField::from_real_fn(grid, IBox::unit(dims), Decay::Compact, |_| 1.0)?,
        ),
        "hat" | "bspline" => {
            let order = if name == "hat" { 2 } else { p.order };
            if !(1..=12).contains(&order) {
                return Err(Error::BadParams(format!("B-spline order {order} outside 1..=12")));
            }
            let full = p.full_tensor;
            let hi: Vec<i64> = (0..dims).map(|a| if a == 0 || full { order as i64 } else { 1 }).collect();
            let field = SampledField::from_real_fn(grid, IBox::new(vec![0; dims], hi)?, Decay::Compact, |x| {
                let spatial: f64 = x[1..]
                    .iter()
                    .map(|&t| if full { cardinal_bspline(order, t) } else { unit_box(t) })
                    .product();
                cardinal_bspline(order, x[0]) * spatial
            })?;
            single(&format!("bspline{order}"), field)
        }
        "gaussian" => {
            if !(p.sigma > 0.0) || p.cutoff < 1 {
                return Err(Error::BadParams(format!(
                    "gaussian needs sigma > 0 and cutoff >= 1, got {} and {}",
                    p.sigma, p.cutoff
                )));
            }
            let s2 = 2.0 * p.sigma * p.sigma;
            // L² energy of e^{−x²/2σ²} is governed by e^{−x²/σ²}.
            let t = gaussian_tail_fraction(p.sigma, p.cutoff as f64);
            let tail_mass = 1.0 - (1.0 - t).powi(dims as i32);
            let decay = Decay::Exponential {
                rate: p.cutoff as f64 / (p.sigma * p.sigma),
                tail_mass,
            };
            let bbox = IBox::new(vec![-p.cutoff; dims], vec![p.cutoff; dims])?;
            let field = SampledField::from_real_fn(grid, bbox, decay, |x| {
                (-x.iter().map(|v| v * v).sum::<f64>() / s2).exp()
            })?;
            single("gaussian", field)
        }
        "shifted_pair" => {
            if p.base == "shifted_pair" {
                return Err(Error::BadParams("shifted_pair cannot nest".into()));
            }
            let base = corpus_build(&p.base, p)?;
            if base.r() != 1 {
                return Err(Error::BadParams(format!("base `{}` has {} generators", p.base, base.r())));
            }
            let shift = if p.shift.is_empty() {
                let mut s = vec![0; dims];
                s[0] = 1;
                s
            } else {
                p.shift.clone()
            };
            if shift.len() != dims {
                return Err(Error::BadParams(format!("shift {:?} needs {dims} components", shift)));
            }
            let g = base.get(0).clone();
            let moved = g.translated(&shift);
            GeneratorSystem::new(vec![g, moved], vec![p.base.clone(), format!("{}(. - {:?})", p.base, shift)])
        }
        "diff_filtered_box" => {
            let mut lo = vec![0; dims];
            let mut hi = vec![1; dims];
            lo[0] = -1;
            hi[0] = 2;
            let field = SampledField::from_real_fn(grid, IBox::new(lo, hi)?, Decay::Compact, |x| {
                2.0 * unit_box(x[0]) - unit_box(x[0] - 1.0) - unit_box(x[0] + 1.0)
            })?;
            single("diff_filtered_box", field)
        }
        other => Err(Error::UnknownCorpusEntry(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_ops::periodize;

    fn params(n: usize) -> CorpusParams {
        CorpusParams {
            samples_per_unit: n,
            ..Default::default()
        }
    }

    #[test]
    fn bsplines_match_low_order_closed_forms() {
        for i in 0..200 {
            let x = -0.5 + 4.0 * i as f64 / 200.0;
            assert_eq!(cardinal_bspline(1, x), if x > 0.0 && x < 1.0 { 1.0 } else { 0.0 });
            let hat = (1.0 - (x - 1.0).abs()).max(0.0);
            assert!((cardinal_bspline(2, x) - hat).abs() < 1e-14);
            let quad = if x <= 0.0 || x >= 3.0 {
                0.0
            } else if x < 1.0 {
                x * x / 2.0
            } else if x < 2.0 {
                (-2.0 * x * x + 6.0 * x - 3.0) / 2.0
            } else {
                (3.0 - x).powi(2) / 2.0
            };
            assert!((cardinal_bspline(3, x) - quad).abs() < 1e-13);
        }
    }

    #[test]
    fn bsplines_partition_unity() {
        for n in 1..=6 {
            for i in 0..50 {
                let x = i as f64 / 50.0 + 0.003;
                let s: f64 = (0..=n).map(|k| cardinal_bspline(n, x + k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "order {n} at {x}");
            }
        }
    }

    #[test]
    fn shapes_and_supports() {
        let b = corpus_build("box", &params(32)).unwrap();
        assert_eq!(b.get(0).bbox(), &IBox::unit(2));
        assert_eq!(b.get(0).decay(), Decay::Compact);
        let hat = corpus_build("hat", &params(8)).unwrap();
        assert_eq!(hat.get(0).bbox(), &IBox::new(vec![0, 0], vec![2, 1]).unwrap());
        let b2 = corpus_build("bspline", &params(8)).unwrap();
        assert_eq!(hat, b2);
        let pair = corpus_build("shifted_pair", &params(4)).unwrap();
        assert_eq!(pair.r(), 2);
        assert_eq!(pair.get(1).bbox().lo, vec![1, 0]);
        assert!(matches!(corpus_build("sinc", &params(4)), Err(Error::UnknownCorpusEntry(_))));
        let bad = CorpusParams {
            sigma: -1.0,
            ..params(4)
        };
        assert!(matches!(corpus_build("gaussian", &bad), Err(Error::BadParams(_))));
    }

    #[test]
    fn diff_filter_translate_sum_vanishes() {
        let f = corpus_build("diff_filtered_box", &params(16)).unwrap();
        assert!(periodize(f.get(0)).max_abs() <= 1e-10);
        let b = corpus_build("box", &params(16)).unwrap();
        assert!((periodize(b.get(0)).max_abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn construction_is_reproducible() {
        let p = CorpusParams {
            sigma: 0.7,
            cutoff: 3,
            ..params(8)
        };
        let a = corpus_build("gaussian", &p).unwrap();
        let b = corpus_build("gaussian", &p).unwrap();
        assert_eq!(a, b);
        match a.get(0).decay() {
            Decay::Exponential { tail_mass, .. } => assert!(tail_mass > 0.0 && tail_mass < 1e-6),
            other => panic!("unexpected decay {other:?}"),
        }
    }
}
