//! Flat run configuration, read from JSON or TOML.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `corpus` | `"box"` | corpus entry (ignored when `generators` is set) |
//! | `generators` | `[]` | sampled-field files forming the system |
//! | `d`, `samples_per_unit`, `order`, `full_tensor`, `sigma`, `cutoff`, `base`, `shift` | see [`CorpusParams`] | corpus constructor parameters |
//! | `p`, `q` | `2`, `2` | exponents; numbers or `"inf"` |
//! | `fibers` | `[64, 4]` | frequency nodes per time / spatial axis |
//! | `J` | widest support + 16 | periodization radius |
//! | `rank_tol` | `1e-8` | relative eigenvalue cut |
//! | `trials` | `20` | random trials for frame bounds |
//! | `seed` | `0` | seed of every random draw |
//! | `sweep` | `[[1,1],[2,2],[1,2],["inf","inf"]]` | reconstruction error table |
//! | `refine` | `true` | refinement sweep when the rank is not constant |
//! | `oracle` | `false` | also run the finite-group verdicts on the sampled system |
//! | `scaling_n_max` | `8` | last level of the scaling diagnostic |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::corpus::{corpus_build, CorpusParams};
use super::io::read_field;
use crate::error::{Error, Result};
use crate::fiberization::{default_radius, FrequencyGrid, DEFAULT_RANK_TOL};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::{exponent_value, MixedExponents};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: String,
    pub generators: Vec<PathBuf>,
    pub d: usize,
    pub samples_per_unit: usize,
    pub order: usize,
    pub full_tensor: bool,
    pub sigma: f64,
    pub cutoff: i64,
    pub base: String,
    pub shift: Vec<i64>,
    #[serde(with = "exponent_value")]
    pub p: f64,
    #[serde(with = "exponent_value")]
    pub q: f64,
    pub fibers: [usize; 2],
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    pub rank_tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub sweep: Vec<MixedExponents>,
    pub refine: bool,
    pub oracle: bool,
    pub scaling_n_max: u32,
}

impl Default for Config {
    fn default() -> Self {
        let c = CorpusParams::default();
        let e = |p, q| MixedExponents::of(p, q);
        Self {
            corpus: "box".into(),
            generators: vec![],
            d: c.d,
            samples_per_unit: c.samples_per_unit,
            order: c.order,
            full_tensor: c.full_tensor,
            sigma: c.sigma,
            cutoff: c.cutoff,
            base: c.base,
            shift: c.shift,
            p: 2.0,
            q: 2.0,
            fibers: [64, 4],
            j: None,
            rank_tol: DEFAULT_RANK_TOL,
            trials: 20,
            seed: 0,
            sweep: vec![e(1.0, 1.0), e(2.0, 2.0), e(1.0, 2.0), e(f64::INFINITY, f64::INFINITY)],
            refine: true,
            oracle: false,
            scaling_n_max: 8,
        }
    }
}

impl Config {
    /// TOML for `.toml` files, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadParams(format!("config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::BadParams(format!("config: {e}")))
    }

    pub fn corpus_params(&self) -> CorpusParams {
        CorpusParams {
            d: self.d,
            samples_per_unit: self.samples_per_unit,
            order: self.order,
            full_tensor: self.full_tensor,
            sigma: self.sigma,
            cutoff: self.cutoff,
            base: self.base.clone(),
            shift: self.shift.clone(),
        }
    }

    pub fn exponents(&self) -> Result<MixedExponents> {
        MixedExponents::new(self.p, self.q)
    }

    pub fn validate(&self) -> Result<()> {
        self.exponents()?;
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::BadParams(format!("rank_tol {} must lie in (0, 1)", self.rank_tol)));
        }
        if self.trials == 0 {
            return Err(Error::BadParams("trials must be at least 1".into()));
        }
        if self.fibers.iter().any(|&n| n < 2) {
            return Err(Error::BadParams(format!("fibers {:?} need at least 2 per axis", self.fibers)));
        }
        Ok(())
    }

    /// The generator system: files when given, the corpus entry otherwise.
    pub fn system(&self) -> Result<GeneratorSystem> {
        if self.generators.is_empty() {
            return corpus_build(&self.corpus, &self.corpus_params());
        }
        let fields = self.generators.iter().map(|p| read_field(p)).collect::<Result<Vec<_>>>()?;
        let labels = self.generators.iter().map(|p| p.display().to_string()).collect();
        GeneratorSystem::new(fields, labels)
    }

    pub fn frequency_grid(&self, phi: &GeneratorSystem) -> Result<FrequencyGrid> {
        FrequencyGrid::new(phi.d(), self.fibers[0], self.fibers[1], self.j.unwrap_or_else(|| default_radius(phi)))
    }

    /// SHA-256 over the canonical JSON of the configuration followed by the
    /// bytes of every generator file.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self)?);
        for p in &self.generators {
            h.update(std::fs::read(p)?);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Parses `N1xN2`.
pub fn parse_fibers(s: &str) -> Result<[usize; 2]> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::BadParams(format!("fibers `{s}` must look like 64x16")))?;
    let n = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::BadParams(format!("bad fiber count `{t}`")))
    };
    Ok([n(a)?, n(b)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_toml_agree() {
        let j = Config::from_json(r#"{"corpus": "hat", "p": 1, "q": "inf", "fibers": [32, 8], "J": 20}"#).unwrap();
        let t = Config::from_toml("corpus = \"hat\"\np = 1\nq = \"inf\"\nfibers = [32, 8]\nJ = 20\n").unwrap();
        assert_eq!(j, t);
        assert_eq!(j.exponents().unwrap(), MixedExponents::of(1.0, f64::INFINITY));
        assert_eq!(j.j, Some(20));
        j.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::from_json(r#"{"corpse": "box"}"#).is_err());
        assert!(Config::from_json(r#"{"p": "half"}"#).is_err());
        let c = Config {
            rank_tol: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = Config::default();
        let b = Config {
            seed: 1,
            ..Default::default()
        };
        assert_eq!(a.digest().unwrap(), Config::default().digest().unwrap());
        assert_ne!(a.digest().unwrap(), b.digest().unwrap());
        assert_eq!(a.digest().unwrap().len(), 64);
    }

    #[test]
    fn fiber_strings() {
        assert_eq!(parse_fibers("64x16").unwrap(), [64, 16]);
        assert!(parse_fibers("64").is_err());
    }
}
