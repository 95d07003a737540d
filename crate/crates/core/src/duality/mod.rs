//! Dual generators, reconstruction, empirical frame bounds and the
//! scaling-limit diagnostic.

mod dual;
mod reconstruct;
mod scaling;

pub use dual::{
    dual_generators, dual_generators_with, duality_residual, gram_profile, Construction, DualOptions, DualSystem,
    DEFAULT_ENERGY_CAP, TAIL_MASS_LIMIT,
};
pub use reconstruct::{
    amalgam_sup_sum, coefficient_cost_upper, frame_bounds_empirical, frame_bounds_over, low_frequency_schedule,
    random_schedule, reconstruct, reconstruct_swapped, reconstruction_errors, relative_error, FrameBounds,
    ReconstructionError,
};
pub use scaling::{
    gaussian_modulation, lipschitz_decay_constant, scaling_limit_diagnostic, scaling_limit_diagnostic_with,
    ScalingDiagnostic, ScalingOptions,
};


#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::error::Error;
    use crate::fiberization::{fourier_fibers, FrequencyGrid};
    use crate::frontdesk::corpus::{corpus_build, CorpusParams};
    use crate::lattice_ops::{synthesize, GeneratorSystem};
    use crate::mixed_norms::{lpq_norm, CoefficientArray, MixedExponents};

    fn system(name: &str, n: usize) -> GeneratorSystem {
        corpus_build(
            name,
            &CorpusParams {
                samples_per_unit: n,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn box_is_self_dual() {
        let phi = system("box", 8);
        let freq = FrequencyGrid::for_system(&phi, 16, 4).unwrap();
        let dual = dual_generators(&phi, &freq, 1e-8).unwrap();
        assert_eq!(dual.construction, Construction::FullRankInverse);
        let diff = dual.psi.get(0).sub(phi.get(0)).unwrap();
        assert!(diff.max_abs() <= 1e-8);
        assert!(dual.residual < 1e-12);
    }

    #[test]
    fn hat_dual_inverts_the_discrete_bracket() {
        let n = 16;
        let phi = system("hat", n);
        let freq = FrequencyGrid::for_system(&phi, 64, 4).unwrap();
        let dual = dual_generators(&phi, &freq, 1e-8).unwrap();
        assert!(dual.residual < 1e-7, "residual {}", dual.residual);
        assert!(dual.tail_mass < 1e-12);
        let h = 1.0 / n as f64;
        let probe = FrequencyGrid::new(1, 12, 2, 1).unwrap();
        let a = fourier_fibers(phi.get(0), &probe).unwrap();
        let b = fourier_fibers(dual.psi.get(0), &probe).unwrap();
        for node in 0..probe.len() {
            let xi = probe.node(node);
            if xi[1] != 0.0 {
                continue;
            }
            let g = (2.0 + xi[0].cos()) / 3.0 - h * h / 6.0 * (1.0 - xi[0].cos());
            let (x, y) = (a.at(node, &[0, 0]), b.at(node, &[0, 0]));
            assert!((y - x / g).norm() < 1e-6, "at {xi:?}");
        }
        let _ = PI;
    }

    #[test]
    fn rank_drop_blocks_the_dual() {
        let phi = system("diff_filtered_box", 4);
        let freq = FrequencyGrid::for_system(&phi, 16, 4).unwrap();
        assert!(matches!(
            dual_generators(&phi, &freq, 1e-8),
            Err(Error::ConditionIIIFails { min: 0, max: 1 })
        ));
    }

    #[test]
    fn shifted_pair_uses_the_pseudoinverse() {
        let phi = system("shifted_pair", 4);
        let freq = FrequencyGrid::for_system(&phi, 16, 4).unwrap();
        let dual = dual_generators(&phi, &freq, 1e-8).unwrap();
        assert_eq!(dual.construction, Construction::ConstantRankPseudoinverse);
        assert_eq!(dual.k0, 1);
        assert!(dual.residual < 1e-10);
        let d = vec![CoefficientArray::delta(&[0, 0]), CoefficientArray::delta(&[2, 1])];
        let f = synthesize(&phi, &d).unwrap();
        for e in [MixedExponents::of(2.0, 2.0), MixedExponents::of(1.0, f64::INFINITY)] {
            let back = reconstruct(&f, &phi, &dual.psi, None).unwrap();
            assert!(relative_error(&back, &f, e).unwrap() < 1e-10);
            let swapped = reconstruct_swapped(&f, &phi, &dual.psi, None).unwrap();
            assert!(relative_error(&swapped, &f, e).unwrap() < 1e-10);
        }
    }

    #[test]
    fn coefficient_cost_examples() {
        let phi = system("box", 8);
        let e = MixedExponents::of(2.0, 2.0);
        assert!((coefficient_cost_upper(phi.get(0), &phi, e).unwrap() - 1.0).abs() < 1e-14);
        let zero = phi.get(0).scaled(Complex64::new(0.0, 0.0));
        assert_eq!(coefficient_cost_upper(&zero, &phi, e).unwrap(), 0.0);
    }

    #[test]
    fn frame_ratios_of_box_are_one() {
        let phi = system("box", 4);
        let b = frame_bounds_empirical(&phi, None, MixedExponents::of(2.0, 2.0), 10, 3).unwrap();
        assert!((b.a_lo - 1.0).abs() < 1e-12 && (b.b_hi - 1.0).abs() < 1e-12);
        assert!(b.b_hi <= b.analytic_upper + 1e-9);
    }

    #[test]
    fn low_frequency_trials_expose_the_rank_drop() {
        let phi = system("diff_filtered_box", 2);
        let schedule = low_frequency_schedule(&phi, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        let b = frame_bounds_over(&phi, None, MixedExponents::of(2.0, 2.0), &schedule).unwrap();
        assert!(b.samples.windows(2).all(|w| w[1] < w[0]), "{:?}", b.samples);
        assert!(b.a_lo < 0.05, "{:?}", b.samples);
    }

    #[test]
    fn scaling_diagnostic_decays() {
        let phi = system("diff_filtered_box", 4);
        let diag = scaling_limit_diagnostic(phi.get(0), 7).unwrap();
        assert!(diag.decreasing_from(2));
        for r in &diag.ratios {
            assert!(*r <= 2.0 * diag.predicted_ratio);
        }
        let twice = scaling_limit_diagnostic(&phi.get(0).scaled(Complex64::new(2.0, 0.0)), 7).unwrap();
        for (a, b) in diag.values.iter().zip(&twice.values) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b);
        }
        let boxed = system("box", 4);
        assert!(matches!(
            scaling_limit_diagnostic(boxed.get(0), 6),
            Err(Error::PreconditionSumNonzero { .. })
        ));
    }

    #[test]
    fn scaling_norm_of_a_first_difference() {
        // φ = b − b(· − 1): F = Σ_j (H(j) − H(j − 1)) b(· − j), so for a cell-constant
        // field v_n = 2^{−2n} Σ_j |H(j) − H(j − 1)| with H the 2D Gaussian samples.
        let base = system("box", 1);
        let g = base.get(0);
        let phi = g.sub(&g.translated(&[1, 0])).unwrap();
        let diag = scaling_limit_diagnostic(&phi, 5).unwrap();
        for (&n, &v) in diag.ns.iter().zip(&diag.values) {
            let s = 2f64.powi(-(n as i32));
            let r = (6.0 / s).ceil() as i64;
            let mut expected = 0.0;
            for j1 in -r..=r + 1 {
                for j2 in -r..=r {
                    let hv = |a: i64| if a.abs() <= r { gaussian_modulation(a as f64 * s, &[j2 as f64 * s]) } else { 0.0 };
                    expected += (hv(j1) - hv(j1 - 1)).abs();
                }
            }
            expected *= s * s;
            assert!((v - expected).abs() <= 1e-12 * expected, "n = {n}: {v} vs {expected}");
        }
    }

    #[test]
    fn gaussian_modulation_has_a_finite_sum_form_constant() {
        let c = lipschitz_decay_constant(gaussian_modulation, 1, 0.5, 0.5, 20_000, 1);
        assert!(c.is_finite() && c < 10.0, "{c}");
    }

    #[test]
    fn frame_ratio_stays_under_the_analytic_bound() {
        let phi = system("hat", 4);
        for e in [MixedExponents::of(1.0, 2.0), MixedExponents::of(f64::INFINITY, 1.0)] {
            let b = frame_bounds_empirical(&phi, None, e, 5, 9).unwrap();
            assert!(b.b_hi <= b.analytic_upper * (1.0 + 1e-9));
            assert!(b.a_lo > 0.0);
            let f = synthesize(&phi, &random_schedule(&phi, 1, 20, 3, 2).unwrap()[0]).unwrap();
            assert!(lpq_norm(&f, e) > 0.0);
        }
    }
}
