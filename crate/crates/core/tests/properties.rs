//! Property tests for the norms and the lattice operators.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use siframe::lattice_ops::{analyze, random_coefficients, semi_convolve, synthesize, GeneratorSystem};
use siframe::mixed_norms::{
    amalgam_norm, lpq_norm, lpq_seq_norm, wiener_norm, CoefficientArray, Decay, Grid, IBox, MixedExponents,
    SampledField,
};

const REL: f64 = 1e-12;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(f64::INFINITY), 1.0f64..6.0]
}

fn exponents() -> impl Strategy<Value = MixedExponents> {
    (exponent(), exponent()).prop_map(|(p, q)| MixedExponents::of(p, q))
}

fn normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
    Complex64::new(a, b)
}

/// Random complex field on a random box of `R^{1+d}` with `d ∈ {1, 2}`.
fn field(seed: u64, d: usize) -> SampledField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if d == 2 { 2 } else { 3 };
    let lo: Vec<i64> = (0..=d).map(|_| rng.random_range(-2..=1)).collect();
    let hi: Vec<i64> = lo.iter().map(|l| l + rng.random_range(1..=3)).collect();
    let bbox = IBox::new(lo, hi).unwrap();
    let count: usize = bbox.extents().iter().map(|e| e * n).product();
    let values = (0..count).map(|_| normal(&mut rng)).collect();
    SampledField::new(Grid::new(d, n).unwrap(), bbox, values, Decay::Compact).unwrap()
}

fn taps(seed: u64, d: usize) -> CoefficientArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ef);
    let window = IBox::new(vec![-2; d + 1], vec![3; d + 1]).unwrap();
    let count = rng.random_range(1..=12);
    random_coefficients(&window, count, &mut rng).unwrap()
}

fn all_norms(f: &SampledField, e: MixedExponents) -> [f64; 3] {
    [lpq_norm(f, e), amalgam_norm(f, e), wiener_norm(f)]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs()).max(1e-300)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedding_chain(seed in any::<u64>(), d in 1usize..=2, e in exponents()) {
        let f = field(seed, d);
        let inf = MixedExponents::of(f64::INFINITY, f64::INFINITY);
        let chain = [wiener_norm(&f), amalgam_norm(&f, inf), amalgam_norm(&f, e), lpq_norm(&f, e)];
        for w in chain.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + REL), "{chain:?}");
        }
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), d in 1usize..=2, e in exponents(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let f = field(seed, d);
        let c = Complex64::new(re, im);
        for (a, b) in all_norms(&f.scaled(c), e).iter().zip(all_norms(&f, e)) {
            prop_assert!(close(*a, c.norm() * b));
        }
    }

    #[test]
    fn norms_satisfy_the_triangle_inequality(s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2, e in exponents()) {
        let (f, g) = (field(s1, d), field(s2, d));
        let sum = all_norms(&f.add(&g).unwrap(), e);
        let (nf, ng) = (all_norms(&f, e), all_norms(&g, e));
        for k in 0..3 {
            prop_assert!(sum[k] <= (nf[k] + ng[k]) * (1.0 + REL));
        }
    }

    #[test]
    fn norms_are_translation_invariant(seed in any::<u64>(), d in 1usize..=2, e in exponents(), k in prop::collection::vec(-4i64..=4, 3)) {
        let f = field(seed, d);
        let moved = f.translated(&k[..=d]);
        for (a, b) in all_norms(&moved, e).iter().zip(all_norms(&f, e)) {
            prop_assert!(close(*a, b));
        }
    }

    #[test]
    fn semi_convolution_is_linear(seed in any::<u64>(), d in 1usize..=2, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = field(seed, d);
        let (d1, d2) = (taps(seed, d), taps(seed.wrapping_add(1), d));
        let (a, b) = (Complex64::new(a, 0.5), Complex64::new(-0.25, b));
        let lhs = semi_convolve(&f, &d1.combine(a, &d2, b).unwrap()).unwrap();
        let rhs = semi_convolve(&f, &d1).unwrap().combine(a, &semi_convolve(&f, &d2).unwrap(), b).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn semi_convolution_commutes_with_lattice_shifts(seed in any::<u64>(), d in 1usize..=2, k in prop::collection::vec(-3i64..=3, 3)) {
        let (f, c) = (field(seed, d), taps(seed, d));
        let k = &k[..=d];
        let lhs = semi_convolve(&f, &c.shifted(k)).unwrap();
        let rhs = semi_convolve(&f, &c).unwrap().translated(k);
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-13 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn analysis_commutes_with_lattice_shifts(s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2, k in prop::collection::vec(-3i64..=3, 3)) {
        let (f, g) = (field(s1, d), field(s2, d));
        let phi = GeneratorSystem::unlabeled(vec![g]).unwrap();
        let k = &k[..=d];
        let moved = &analyze(&f.translated(k), &phi, None).unwrap()[0];
        let expected = analyze(&f, &phi, None).unwrap()[0].shifted(k);
        let diff = moved.combine(one(), &expected, -one()).unwrap();
        prop_assert!(diff.max_abs() <= 1e-12 * (1.0 + expected.max_abs()));
    }

    #[test]
    fn synthesis_and_analysis_are_adjoint(s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2) {
        let (f, g) = (field(s1, d), field(s2, d));
        let phi = GeneratorSystem::unlabeled(vec![g]).unwrap();
        let c = taps(s2, d);
        let lhs = synthesize(&phi, std::slice::from_ref(&c)).unwrap().inner(&f).unwrap();
        let rhs = c.dot(&analyze(&f, &phi, None).unwrap()[0]);
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn semi_convolution_bounds(seed in any::<u64>(), d in 1usize..=2, e in exponents()) {
        let (f, c) = (field(seed, d), taps(seed, d));
        let g = semi_convolve(&f, &c).unwrap();
        let l11 = lpq_seq_norm(&c, MixedExponents::of(1.0, 1.0));
        let slack = 1.0 + 1e-9;
        prop_assert!(lpq_norm(&g, e) <= lpq_seq_norm(&c, e) * amalgam_norm(&f, e) * slack);
        prop_assert!(amalgam_norm(&g, e) <= l11 * amalgam_norm(&f, e) * slack);
        prop_assert!(wiener_norm(&g) <= l11 * wiener_norm(&f) * slack);
    }

    #[test]
    fn analysis_bound(s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2, e in exponents()) {
        let (f, g) = (field(s1, d), field(s2, d));
        let inf = MixedExponents::of(f64::INFINITY, f64::INFINITY);
        let bound = lpq_norm(&f, e) * amalgam_norm(&g, inf);
        let phi = GeneratorSystem::unlabeled(vec![g]).unwrap();
        let c = &analyze(&f, &phi, None).unwrap()[0];
        prop_assert!(lpq_seq_norm(c, e) <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn sequence_norm_of_a_delta_is_its_modulus(e in exponents(), k in prop::collection::vec(-5i64..=5, 2), re in -3.0f64..3.0) {
        let c = CoefficientArray::delta(&k).scaled(Complex64::new(re, 1.0));
        prop_assert!(close(lpq_seq_norm(&c, e), Complex64::new(re, 1.0).norm()));
    }
}
