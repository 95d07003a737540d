use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_ops::{analyze, random_coefficients, synthesize, GeneratorSystem};
use crate::mixed_norms::{amalgam_norm, lpq_norm, lpq_seq_norm, CoefficientArray, IBox, MixedExponents, SampledField};

/// `Σ_i Σ_j ⟨f, ψ_i(· − j)⟩ φ_i(· − j)`.
pub fn reconstruct(
    f: &SampledField,
    phi: &GeneratorSystem,
    psi: &GeneratorSystem,
    window: Option<&IBox>,
) -> Result<SampledField> {
    if phi.r() != psi.r() {
        return Err(Error::ArityMismatch {
            expected: phi.r(),
            got: psi.r(),
        });
    }
    synthesize(phi, &analyze(f, psi, window)?)
}

/// The other expansion: `Σ_i Σ_j ⟨f, φ_i(· − j)⟩ ψ_i(· − j)`.
pub fn reconstruct_swapped(
    f: &SampledField,
    phi: &GeneratorSystem,
    psi: &GeneratorSystem,
    window: Option<&IBox>,
) -> Result<SampledField> {
    reconstruct(f, psi, phi, window)
}

/// Relative `L^{p,q}` distance `‖a − b‖ / ‖b‖`.
pub fn relative_error(a: &SampledField, b: &SampledField, e: MixedExponents) -> Result<f64> {
    let diff = lpq_norm(&a.sub(b)?, e);
    let base = lpq_norm(b, e);
    Ok(if base > 0.0 { diff / base } else { diff })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionError {
    pub exponents: MixedExponents,
    /// Relative error of the `ψ`-analysis / `φ`-synthesis expansion.
    pub primary: f64,
    /// Relative error of the `φ`-analysis / `ψ`-synthesis expansion.
    pub swapped: f64,
    /// Relative distance between the two expansions.
    pub ordering_gap: f64,
}

/// Both expansions of `f`, compared with `f` and each other under every
/// exponent pair.
pub fn reconstruction_errors(
    f: &SampledField,
    phi: &GeneratorSystem,
    psi: &GeneratorSystem,
    exponents: &[MixedExponents],
) -> Result<Vec<ReconstructionError>> {
    let a = reconstruct(f, phi, psi, None)?;
    let b = reconstruct_swapped(f, phi, psi, None)?;
    exponents
        .iter()
        .map(|&e| {
            Ok(ReconstructionError {
                exponents: e,
                primary: relative_error(&a, f, e)?,
                swapped: relative_error(&b, f, e)?,
                ordering_gap: relative_error(&a, &b, e)?,
            })
        })
        .collect()
}

/// `Σ_i ‖⟨f, ψ_i(· − j)⟩‖_{ℓ^{p,q}}`: the cost of the dual coefficients,
/// an upper bound for the smallest coefficient norm representing `f`.
pub fn coefficient_cost_upper(f: &SampledField, psi: &GeneratorSystem, e: MixedExponents) -> Result<f64> {
    Ok(analyze(f, psi, None)?.iter().map(|c| lpq_seq_norm(c, e)).sum())
}

/// `Σ_i ‖g_i‖_{𝓛^{∞,∞}}`.
pub fn amalgam_sup_sum(sys: &GeneratorSystem) -> f64 {
    let e = MixedExponents::of(f64::INFINITY, f64::INFINITY);
    sys.generators().iter().map(|g| amalgam_norm(g, e)).sum()
}

/// Extremes of `Σ_i ‖analyze(f)_i‖_{ℓ^{p,q}} / ‖f‖_{L^{p,q}}` over test fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub exponents: MixedExponents,
    pub a_lo: f64,
    pub b_hi: f64,
    pub samples: Vec<f64>,
    /// `Σ_i ‖φ_i‖_{𝓛^{∞,∞}}`, which no ratio can exceed.
    pub analytic_upper: f64,
    /// `max(Σ‖ψ_i‖, Σ‖φ_i‖)` in `𝓛^{∞,∞}`, when a dual is supplied.
    pub dual_constant: Option<f64>,
}

/// Test fields `synthesize(Φ, D)` for each coefficient set `D` in `schedule`.
pub fn frame_bounds_over(
    phi: &GeneratorSystem,
    psi: Option<&GeneratorSystem>,
    e: MixedExponents,
    schedule: &[Vec<CoefficientArray>],
) -> Result<FrameBounds> {
    if schedule.is_empty() {
        return Err(Error::BadParams("frame bounds need at least one trial".into()));
    }
    let mut samples = Vec::with_capacity(schedule.len());
    for d in schedule {
        let f = synthesize(phi, d)?;
        let norm = lpq_norm(&f, e);
        if norm == 0.0 {
            continue;
        }
        let analysis: f64 = analyze(&f, phi, None)?.iter().map(|c| lpq_seq_norm(c, e)).sum();
        samples.push(analysis / norm);
    }
    if samples.is_empty() {
        return Err(Error::BadParams("every trial field vanished".into()));
    }
    let analytic_upper = amalgam_sup_sum(phi);
    Ok(FrameBounds {
        exponents: e,
        a_lo: samples.iter().copied().fold(f64::INFINITY, f64::min),
        b_hi: samples.iter().copied().fold(0.0, f64::max),
        samples,
        analytic_upper,
        dual_constant: psi.map(|p| amalgam_sup_sum(p).max(analytic_upper)),
    })
}

/// Random coefficient sets: `taps` standard complex normal entries per
/// generator inside the lattice window `[−radius, radius)^{1+d}`.
pub fn random_schedule(phi: &GeneratorSystem, trials: usize, taps: usize, radius: i64, seed: u64) -> Result<Vec<Vec<CoefficientArray>>> {
    let dims = phi.d() + 1;
    let window = IBox::new(vec![-radius; dims], vec![radius; dims])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            (0..phi.r())
                .map(|_| random_coefficients(&window, taps.min(window.len()), &mut rng))
                .collect()
        })
        .collect()
}

/// Smooth, slowly varying coefficient sets `D(j) = exp(−(j₁/L)²)` on the
/// time axis, one per width `L`. Wider `L` concentrates `D̂` near zero
/// frequency, probing the bracket there.
pub fn low_frequency_schedule(phi: &GeneratorSystem, widths: &[f64]) -> Result<Vec<Vec<CoefficientArray>>> {
    let d = phi.d();
    widths
        .iter()
        .map(|&l| {
            if !(l > 0.0) {
                return Err(Error::BadParams(format!("width {l} must be positive")));
            }
            let half = (4.0 * l).ceil() as i64;
            let mut shape = vec![1usize; d + 1];
            shape[0] = (2 * half + 1) as usize;
            let mut offset = vec![0i64; d + 1];
            offset[0] = -half;
            let data = (-half..=half)
                .map(|j| Complex64::new((-(j as f64 / l).powi(2)).exp(), 0.0))
                .collect();
            let arr = CoefficientArray::new(d, offset, shape, data)?;
            Ok(vec![arr; phi.r()])
        })
        .collect()
}

/// Frame-bound estimate over `trials` random 50-tap coefficient sets.
pub fn frame_bounds_empirical(
    phi: &GeneratorSystem,
    psi: Option<&GeneratorSystem>,
    e: MixedExponents,
    trials: usize,
    seed: u64,
) -> Result<FrameBounds> {
    if trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    frame_bounds_over(phi, psi, e, &random_schedule(phi, trials, 50, 4, seed)?)
}
