//! Finite-group analogue on `Z_{ρN} × (Z_{ρM})^d` with shifts by `ρ`:
//! exact linear algebra for the frame statements, plus a cross-check of the
//! continuum bracket against sampled generators.

mod model;
mod scenario;
mod verdict;

pub use model::{build_synthesis_matrix, exact_fiber_profile, gram_matrix, DiscreteModel, FiberProfile};
pub use scenario::{adversarial_models, bundled, delta_model, diff_filter_model, random_model, Scenario, BUNDLED};
pub use verdict::{verdict_equivalence, Verdict, VerdictDetails, DUAL_TOL};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fiberization::{hermitian_eigen, BracketLags};
use crate::lattice_ops::GeneratorSystem;
use crate::mixed_norms::Layout;

/// Largest eigenvalue disagreement between the two bracket computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub n: usize,
    pub m: usize,
    pub rho: usize,
    pub nodes: usize,
    pub max_abs_diff: f64,
    pub max_eigenvalue: f64,
    /// Lag-series tail on the continuum side.
    pub continuum_tail: f64,
}

/// Wraps `phi` onto the group with `ρ = samples_per_unit` and compares the
/// eigenvalues of the discrete bracket, scaled by `ρ^{-(1+d)}`, with the
/// continuum bracket eigenvalues.
///
/// With the DFT sign used here the discrete fiber at `ν` matches the
/// continuum fiber at `ξ = −2πν/(N, M)` (a conjugation, same spectrum).
pub fn continuum_cross_check(phi: &GeneratorSystem, n: usize, m: usize) -> Result<CrossCheck> {
    let model = DiscreteModel::from_system(phi, n, m)?;
    let profile = exact_fiber_profile(&model);
    let lags = BracketLags::compute(phi, phi)?;
    let radius = phi.support_box().max_width() as usize + 1;
    let scale = (model.phases() as f64).recip();
    let layout = Layout::new(model.shift_shape());
    let diffs: Vec<(f64, f64)> = (0..model.shifts())
        .into_par_iter()
        .map(|nu| {
            let xi: Vec<f64> = layout
                .unravel(nu)
                .iter()
                .zip(&layout.shape)
                .map(|(&k, &len)| {
                    let x = -2.0 * PI * k as f64 / len as f64;
                    if x < -PI {
                        x + 2.0 * PI
                    } else {
                        x
                    }
                })
                .collect();
            let (cont, _) = hermitian_eigen(&lags.evaluate(&xi, radius));
            let (disc, _) = hermitian_eigen(&profile.bracket(nu));
            let diff = cont
                .iter()
                .zip(&disc)
                .map(|(a, b)| (a - b * scale).abs())
                .fold(0.0, f64::max);
            (diff, cont.first().copied().unwrap_or(0.0))
        })
        .collect();
    Ok(CrossCheck {
        n,
        m,
        rho: model.rho,
        nodes: diffs.len(),
        max_abs_diff: diffs.iter().map(|d| d.0).fold(0.0, f64::max),
        max_eigenvalue: diffs.iter().map(|d| d.1).fold(0.0, f64::max),
        continuum_tail: lags.tail_bound(radius),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiberization::DEFAULT_RANK_TOL;
    use crate::frontdesk::corpus::{corpus_build, CorpusParams};

    fn all(v: &Verdict, expected: bool) -> bool {
        v.flags().iter().all(|&f| f == expected)
    }

    #[test]
    fn delta_is_a_frame() {
        let v = verdict_equivalence(&delta_model(8, 4, 1, 2).unwrap(), DEFAULT_RANK_TOL);
        assert!(all(&v, true), "{v:?}");
        assert_eq!(v.details.band_constant, Some(1.0));
    }

    #[test]
    fn laplacian_loses_rank_at_one_fiber() {
        let model = diff_filter_model(8, 4, 1, 2).unwrap();
        let ranks = exact_fiber_profile(&model).ranks(DEFAULT_RANK_TOL);
        assert_eq!(ranks.iter().filter(|&&k| k == 0).count(), 1);
        assert_eq!(ranks[0], 0);
        let v = verdict_equivalence(&model, DEFAULT_RANK_TOL);
        assert!(all(&v, false), "{v:?}");
        assert!(v.agreement);
    }

    #[test]
    fn redundant_systems_have_constant_rank_one() {
        for (name, model) in adversarial_models(8, 4, 1, 2, 3).unwrap() {
            let v = verdict_equivalence(&model, DEFAULT_RANK_TOL);
            assert!(v.agreement, "{name}: {v:?}");
            let expected = !matches!(name.as_str(), "diff-filter" | "notch");
            assert_eq!(v.frame_22, expected, "{name}");
            if name == "shifted-pair" || name == "duplicate" {
                assert!(exact_fiber_profile(&model).ranks(DEFAULT_RANK_TOL).iter().all(|&k| k == 1));
            }
            if name == "near-deficient" {
                let c = v.details.band_constant.unwrap();
                let ratio = v.details.gram_lambda_min_nonzero / v.details.gram_lambda_max;
                assert!((ratio - 1e-6).abs() < 1e-9, "{ratio}");
                assert!(c > 1e5);
            }
        }
    }

    #[test]
    fn scenarios_parse_and_validate() {
        let s = Scenario::from_json(r#"{"N": 4, "M": 2, "d": 1, "ρ": 2, "r": 2, "seed": 1, "count": 3}"#).unwrap();
        let models = s.models().unwrap();
        assert_eq!(models.len(), 3);
        assert!(models.iter().all(|(_, m)| m.r() == 2 && m.samples() == 32));
        assert!(Scenario::from_json(r#"{"N": 4, "M": 2, "d": 1, "rho": 1}"#).unwrap().models().is_err());
        let explicit = Scenario::from_json(r#"{"N": 2, "M": 1, "d": 0, "rho": 1, "generators": [[[1,0],[0,0]]]}"#).unwrap();
        assert!(verdict_equivalence(&explicit.models().unwrap()[0].1, 1e-8).frame_22);
        let short = r#"{"N": 2, "M": 1, "d": 0, "rho": 1, "generators": [[[1,0]]]}"#;
        assert!(Scenario::from_json(short).unwrap().models().is_err());
        assert!(bundled("nope").is_err());
    }

    #[test]
    fn sampled_hat_matches_the_continuum_bracket() {
        let phi = corpus_build(
            "hat",
            &CorpusParams {
                samples_per_unit: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let x = continuum_cross_check(&phi, 8, 4).unwrap();
        assert!(x.max_abs_diff < 1e-12, "{x:?}");
        assert_eq!(x.continuum_tail, 0.0);
    }
}
