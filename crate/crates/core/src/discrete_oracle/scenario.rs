use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::DiscreteModel;
use crate::error::{Error, Result};
use crate::mixed_norms::Layout;

/// Oracle scenario document: either seeded random systems or explicit
/// generators given as `[re, im]` samples, row-major on the sample group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    #[serde(alias = "ρ")]
    pub rho: usize,
    /// Generator count for random systems; drawn from `{1, 2}` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of random systems.
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<[f64; 2]>>>,
}

fn one() -> usize {
    1
}

pub const BUNDLED: &[&str] = &["delta", "diff-filter", "random-20", "adversarial"];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadScenario(e.to_string()))
    }

    /// Labelled models described by the scenario.
    pub fn models(&self) -> Result<Vec<(String, DiscreteModel)>> {
        match (&self.generators, self.seed) {
            (Some(_), Some(_)) => Err(Error::BadScenario("give either `seed` or `generators`, not both".into())),
            (Some(gens), None) => {
                let generators = gens
                    .iter()
                    .map(|g| g.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                    .collect();
                Ok(vec![(
                    "explicit".into(),
                    DiscreteModel::new(self.n, self.m, self.d, self.rho, generators)?,
                )])
            }
            (None, Some(seed)) => {
                if self.count == 0 {
                    return Err(Error::BadScenario("count must be at least 1".into()));
                }
                if self.r == Some(0) {
                    return Err(Error::BadScenario("r must be at least 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.count)
                    .map(|k| {
                        let r = self.r.unwrap_or_else(|| rng.random_range(1..=2));
                        let model = random_model(self.n, self.m, self.d, self.rho, r, &mut rng)?;
                        Ok((format!("random-{k}"), model))
                    })
                    .collect()
            }
            (None, None) => Err(Error::BadScenario("need `seed` or `generators`".into())),
        }
    }
}

/// Generators with independent standard complex normal samples.
pub fn random_model(n: usize, m: usize, d: usize, rho: usize, r: usize, rng: &mut impl Rng) -> Result<DiscreteModel> {
    let len = rho * n * (rho * m).pow(d as u32);
    let generators = (0..r).map(|_| random_vector(len, rng)).collect();
    DiscreteModel::new(n, m, d, rho, generators)
}

fn random_vector(len: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            Complex64::new(a, b) / std::f64::consts::SQRT_2
        })
        .collect()
}

/// Sparse generator on the sample group: `taps` are lattice offsets
/// (multiples of `ρ`) with weights.
fn lattice_taps(n: usize, m: usize, d: usize, rho: usize, taps: &[(Vec<i64>, f64)]) -> Vec<Complex64> {
    let shape: Vec<usize> = (0..=d).map(|a| rho * if a == 0 { n } else { m }).collect();
    let layout = Layout::new(shape.clone());
    let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
    for (at, w) in taps {
        let idx: Vec<usize> = at
            .iter()
            .enumerate()
            .map(|(a, &k)| (k * rho as i64).rem_euclid(shape[a] as i64) as usize)
            .collect();
        out[layout.flat(&idx)] += Complex64::new(*w, 0.0);
    }
    out
}

fn unit(d: usize, axis: usize, k: i64) -> Vec<i64> {
    let mut v = vec![0; d + 1];
    v[axis] = k;
    v
}

/// `δ₀` generator.
pub fn delta_model(n: usize, m: usize, d: usize, rho: usize) -> Result<DiscreteModel> {
    DiscreteModel::new(n, m, d, rho, vec![lattice_taps(n, m, d, rho, &[(vec![0; d + 1], 1.0)])])
}

/// Lattice Laplacian `2(1+d)δ₀ − Σ_a (δ_{ρe_a} + δ_{−ρe_a})`: its fiber
/// `Σ_a (2 − 2cos 2πν_a/N_a)` vanishes at zero frequency only.
pub fn diff_filter_model(n: usize, m: usize, d: usize, rho: usize) -> Result<DiscreteModel> {
    let mut taps = vec![(vec![0; d + 1], 2.0 * (d + 1) as f64)];
    for a in 0..=d {
        taps.push((unit(d, a, 1), -1.0));
        taps.push((unit(d, a, -1), -1.0));
    }
    DiscreteModel::new(n, m, d, rho, vec![lattice_taps(n, m, d, rho, &taps)])
}

/// Curated hard cases: two redundant systems, a nearly deficient one with
/// eigenvalue ratio `10⁻⁶`, the Laplacian and a notch vanishing at `ν₁ = N/2`.
/// `N` must be even for the notch to hit a node.
pub fn adversarial_models(n: usize, m: usize, d: usize, rho: usize, seed: u64) -> Result<Vec<(String, DiscreteModel)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rho * n * (rho * m).pow(d as u32);
    let base = random_vector(len, &mut rng);
    let shifted = {
        let probe = DiscreteModel::new(n, m, d, rho, vec![base.clone()])?;
        let map = probe.shift_map(Layout::new(probe.shift_shape()).flat(&unit(d, 0, 1).iter().map(|&k| k as usize).collect::<Vec<_>>()));
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (s, v) in base.iter().enumerate() {
            out[map[s]] = *v;
        }
        out
    };
    let a = (1.0 - 1e-3) / (1.0 + 1e-3);
    Ok(vec![
        ("shifted-pair".into(), DiscreteModel::new(n, m, d, rho, vec![base.clone(), shifted])?),
        (
            "near-deficient".into(),
            DiscreteModel::new(n, m, d, rho, vec![lattice_taps(n, m, d, rho, &[(vec![0; d + 1], 1.0), (unit(d, 0, 1), -a)])])?,
        ),
        ("diff-filter".into(), diff_filter_model(n, m, d, rho)?),
        (
            "notch".into(),
            DiscreteModel::new(n, m, d, rho, vec![lattice_taps(n, m, d, rho, &[(vec![0; d + 1], 1.0), (unit(d, 0, 1), 1.0)])])?,
        ),
        (
            "duplicate".into(),
            DiscreteModel::new(n, m, d, rho, vec![base.clone(), base.iter().map(|v| v * 2.0).collect()])?,
        ),
    ])
}

/// Built-in scenarios on `Z_32 × Z_16`, `ρ = 2`.
pub fn bundled(name: &str) -> Result<Vec<(String, DiscreteModel)>> {
    let (n, m, d, rho) = (32, 16, 1, 2);
    match name {
        "delta" => Ok(vec![("delta".into(), delta_model(n, m, d, rho)?)]),
        "diff-filter" => Ok(vec![("diff-filter".into(), diff_filter_model(n, m, d, rho)?)]),
        "random-20" => Scenario {
            n,
            m,
            d,
            rho,
            r: None,
            seed: Some(20),
            count: 20,
            generators: None,
        }
        .models(),
        "adversarial" => adversarial_models(n, m, d, rho, 7),
        other => Err(Error::BadScenario(format!(
            "unknown bundled scenario `{other}` (known: {})",
            BUNDLED.join(", ")
        ))),
    }
}
