use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{exact_fiber_profile, gram_matrix, DiscreteModel, FiberProfile};
use crate::fiberization::hermitian_eigen;

/// Fiberwise reconstruction must be exact to this relative level.
pub const DUAL_TOL: f64 = 1e-10;
/// Upper limit for `Σ_{m≠0} |tr(Q Sᵐ)|²`; a single fiber losing one rank
/// already contributes `L − 1 ≥ 1`.
const SHIFT_TRACE_TOL: f64 = 0.5;
const MIN_NORM_TRIALS: usize = 4;
const MIN_NORM_SLACK: f64 = 1e-9;

/// The five verdict flags and the numbers behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub frame_22: bool,
    pub rank_constant: bool,
    pub band_ok: bool,
    pub dual_exists: bool,
    pub min_norm_consistent: bool,
    pub agreement: bool,
    pub details: VerdictDetails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDetails {
    pub rank_tol: f64,
    /// Numerical rank of the Gram matrix `TᴴT`.
    pub gram_rank: usize,
    pub gram_dim: usize,
    /// Largest and smallest counted Gram eigenvalues; for a full-rank Gram
    /// these are power / inverse iteration estimates, accurate to about 1%.
    pub gram_lambda_max: f64,
    pub gram_lambda_min_nonzero: f64,
    /// `Σ_{m≠0} |tr(Q Sᵐ)|²` for the projector `Q` onto the Gram range.
    pub shift_trace_defect: f64,
    pub fiber_rank_min: usize,
    pub fiber_rank_max: usize,
    /// Band constant `C` when every eigenvalue branch is uniformly nonzero or zero.
    pub band_constant: Option<f64>,
    /// `max_ν ‖F P G − F‖ / max_ν ‖F‖` with the rank-`k₀` pseudo-inverse `P`.
    pub dual_defect: f64,
    /// Smallest and largest `‖D_min‖ / ‖f‖` over the trial range elements.
    pub min_norm_ratio: [f64; 2],
}

impl Verdict {
    pub fn flags(&self) -> [bool; 5] {
        [
            self.frame_22,
            self.rank_constant,
            self.band_ok,
            self.dual_exists,
            self.min_norm_consistent,
        ]
    }
}

/// Decides the five frame statements independently and records whether
/// they agree.
///
/// `frame_22` never touches the Fourier side: it uses the Gram matrix
/// `TᴴT` built from cyclic correlations. The range restriction of a finite
/// synthesis map always has a positive lower bound, so the statement that
/// survives the passage to finite groups is uniformity: the range projector
/// `Q` must commute with the shifts *and* have a shift-invariant trace
/// density, `tr(Q Sᵐ) = 0` for `m ≠ 0`. A rank drop at any fiber breaks it.
pub fn verdict_equivalence(m: &DiscreteModel, rank_tol: f64) -> Verdict {
    let profile = exact_fiber_profile(m);
    let gram = gram_matrix(m);
    let dim = gram.nrows();

    // (a) brute-force Gram spectrum and range uniformity
    let spectrum = GramSpectrum::of(&gram, rank_tol);
    let (lambda_max, gram_rank, lambda_min_nonzero, shift_trace_defect) = match &spectrum {
        GramSpectrum::Full { lambda_max, lambda_min, .. } => (*lambda_max, dim, *lambda_min, 0.0),
        GramSpectrum::Deficient { values, vectors, cut } => {
            let rank = values.iter().filter(|&&l| l > *cut).count();
            let min = values[..rank].last().copied().unwrap_or(0.0);
            let defect = shift_trace_defect(m, &vectors.columns(0, rank).into_owned());
            (values.first().copied().unwrap_or(0.0), rank, min, defect)
        }
    };
    let frame_22 = gram_rank > 0 && shift_trace_defect <= SHIFT_TRACE_TOL;

    // (b) fiber ranks from singular values
    let ranks = profile.ranks(rank_tol);
    let fiber_rank_min = *ranks.iter().min().unwrap_or(&0);
    let fiber_rank_max = *ranks.iter().max().unwrap_or(&0);
    let rank_constant = fiber_rank_min == fiber_rank_max && fiber_rank_min > 0;

    // (c) eigenvalue branches of the discrete bracket
    let brackets: Vec<(Vec<f64>, DMatrix<Complex64>)> = (0..m.shifts())
        .into_par_iter()
        .map(|nu| hermitian_eigen(&profile.bracket(nu)))
        .collect();
    let (band_ok, band_constant) = band(&brackets, rank_tol);

    // (d) uniform-rank pseudo-inverse
    let dual_defect = dual_defect(&profile, &brackets, rank_tol);
    let dual_exists = dual_defect <= DUAL_TOL;

    // (e) minimum-norm coefficients against the band constant
    let min_norm_ratio = min_norm_ratios(m, &gram, &spectrum);
    let min_norm_consistent = match band_constant {
        Some(c) => {
            let (lo, hi) = (1.0 / c.sqrt(), c.sqrt());
            min_norm_ratio[0] >= lo * (1.0 - MIN_NORM_SLACK) && min_norm_ratio[1] <= hi * (1.0 + MIN_NORM_SLACK)
        }
        None => false,
    };

    let flags = [frame_22, rank_constant, band_ok, dual_exists, min_norm_consistent];
    Verdict {
        frame_22,
        rank_constant,
        band_ok,
        dual_exists,
        min_norm_consistent,
        agreement: flags.iter().all(|&f| f == flags[0]),
        details: VerdictDetails {
            rank_tol,
            gram_rank,
            gram_dim: dim,
            gram_lambda_max: lambda_max,
            gram_lambda_min_nonzero: lambda_min_nonzero,
            shift_trace_defect,
            fiber_rank_min,
            fiber_rank_max,
            band_constant,
            dual_defect,
            min_norm_ratio,
        },
    }
}

/// Gram spectrum without a full eigendecomposition when it can be avoided:
/// `G − cut·I` admits a Cholesky factor exactly when every eigenvalue lies
/// above the cut, so a full-rank Gram only needs `λ_max` (power iteration)
/// and `λ_min` (inverse iteration on the shifted factor).
enum GramSpectrum {
    Full {
        shifted: Cholesky<Complex64, Dyn>,
        lambda_max: f64,
        lambda_min: f64,
    },
    Deficient {
        values: Vec<f64>,
        vectors: DMatrix<Complex64>,
        cut: f64,
    },
}

impl GramSpectrum {
    fn of(gram: &DMatrix<Complex64>, rank_tol: f64) -> Self {
        let dim = gram.nrows();
        let lambda_max = power_lambda_max(gram);
        let cut = rank_tol * lambda_max;
        let shifted = gram - DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(cut, 0.0);
        if dim > 0 && lambda_max > 0.0 {
            if let Some(shifted) = shifted.cholesky().filter(positive_pivots) {
                let lambda_min = cut + 1.0 / power_iterate(|x| shifted.solve(x), dim);
                return GramSpectrum::Full {
                    shifted,
                    lambda_max,
                    lambda_min,
                };
            }
        }
        let (values, vectors) = hermitian_eigen(gram);
        let cut = rank_tol * values.first().copied().unwrap_or(0.0).max(0.0);
        GramSpectrum::Deficient { values, vectors, cut }
    }
}

/// Complex `sqrt` accepts negative pivots, so the factorization itself never
/// fails; a pivot `v` is positive exactly when `|Im √v| < Re √v`.
fn positive_pivots(c: &Cholesky<Complex64, Dyn>) -> bool {
    c.l_dirty().diagonal().iter().all(|l| l.re > 0.0 && l.im.abs() < l.re)
}

const POWER_STEPS: usize = 40;
const POWER_TOL: f64 = 1e-8;

fn power_lambda_max(gram: &DMatrix<Complex64>) -> f64 {
    power_iterate(|x| gram * x, gram.nrows())
}

/// Largest Rayleigh quotient reached by power iteration of a positive
/// semidefinite operator from a seeded start.
fn power_iterate(apply: impl Fn(&DVector<Complex64>) -> DVector<Complex64>, dim: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a1);
    let mut x = DVector::from_fn(dim, |_, _| {
        let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        Complex64::new(a, b)
    });
    let mut best: f64 = 0.0;
    for _ in 0..POWER_STEPS {
        let norm = x.norm();
        if norm == 0.0 {
            break;
        }
        x /= Complex64::new(norm, 0.0);
        let y = apply(&x);
        let rq = x.dotc(&y).re;
        let settled = rq - best <= POWER_TOL * rq;
        best = best.max(rq);
        x = y;
        if settled {
            break;
        }
    }
    best
}

/// `Σ_{m≠0} |tr(V Vᴴ Sᵐ)|²` where `Sᵐ` shifts every coefficient array by `m`.
fn shift_trace_defect(m: &DiscreteModel, v: &DMatrix<Complex64>) -> f64 {
    let shifts = m.shifts();
    let layout = crate::mixed_norms::Layout::new(m.shift_shape());
    let idx: Vec<Vec<usize>> = (0..shifts).map(|j| layout.unravel(j)).collect();
    let rows: Vec<Vec<Complex64>> = (0..v.nrows()).map(|x| v.row(x).iter().copied().collect()).collect();
    (1..shifts)
        .into_par_iter()
        .map(|shift| {
            let mut tr = Complex64::new(0.0, 0.0);
            for x in 0..v.nrows() {
                let (i, j) = (x / shifts, x % shifts);
                let moved: Vec<usize> = (0..idx[j].len())
                    .map(|a| (idx[j][a] + idx[shift][a]) % layout.shape[a])
                    .collect();
                let y = i * shifts + layout.flat(&moved);
                tr += rows[x].iter().zip(&rows[y]).map(|(a, b)| a * b.conj()).sum::<Complex64>();
            }
            tr.norm_sqr()
        })
        .sum()
}

/// Branch `k` (k-th largest eigenvalue) must be above the cut everywhere or
/// nowhere; `C = max max(λ, 1/λ)` over the nonzero branches.
fn band(brackets: &[(Vec<f64>, DMatrix<Complex64>)], rank_tol: f64) -> (bool, Option<f64>) {
    let top = brackets.iter().flat_map(|(v, _)| v.iter().copied()).fold(0.0, f64::max);
    let cut = rank_tol * top;
    let r = brackets.first().map_or(0, |(v, _)| v.len());
    let mut c: f64 = 0.0;
    let mut any = false;
    for k in 0..r {
        let above = brackets.iter().filter(|(v, _)| v[k] > cut).count();
        if above != 0 && above != brackets.len() {
            return (false, None);
        }
        if above == brackets.len() {
            any = true;
            for (v, _) in brackets {
                c = c.max(v[k]).max(1.0 / v[k]);
            }
        }
    }
    if any {
        (true, Some(c))
    } else {
        (false, None)
    }
}

fn dual_defect(profile: &FiberProfile, brackets: &[(Vec<f64>, DMatrix<Complex64>)], rank_tol: f64) -> f64 {
    let top = brackets.iter().flat_map(|(v, _)| v.iter().copied()).fold(0.0, f64::max);
    let cut = rank_tol * top;
    let k0 = brackets
        .iter()
        .map(|(v, _)| v.iter().filter(|&&l| l > cut).count())
        .min()
        .unwrap_or(0);
    let scale = profile.fibers.iter().map(|f| f.norm()).fold(0.0, f64::max);
    let worst = profile
        .fibers
        .par_iter()
        .zip(brackets)
        .map(|(f, (values, vectors))| {
            let mut p = DMatrix::<Complex64>::zeros(values.len(), values.len());
            for k in 0..k0 {
                let v = vectors.column(k);
                p += (v * v.adjoint()) * Complex64::new(1.0 / values[k], 0.0);
            }
            let g = f.adjoint() * f;
            (f * p * g - f).norm()
        })
        .reduce(|| 0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Range elements `f = T c` for seeded random `c`; the minimum-norm
/// coefficients are `D = (TᴴT)⁺ Tᴴ f`. Returns the extremes of `‖D‖/‖f‖`.
fn min_norm_ratios(m: &DiscreteModel, gram: &DMatrix<Complex64>, spectrum: &GramSpectrum) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dim = gram.nrows();
    let maps: Vec<Vec<usize>> = (0..m.shifts()).into_par_iter().map(|j| m.shift_map(j)).collect();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for _ in 0..MIN_NORM_TRIALS {
        let c = DVector::from_fn(dim, |_, _| {
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            Complex64::new(a, b) / std::f64::consts::SQRT_2
        });
        let f = synthesis(m, &maps, &c);
        let rhs = analysis(m, &maps, &f);
        let d = match spectrum {
            // Solve with the shifted factor and refine; each step contracts
            // the error by `cut / (λ_min − cut)`.
            GramSpectrum::Full { shifted, .. } => {
                let mut d = shifted.solve(&rhs);
                for _ in 0..REFINE_STEPS {
                    d += shifted.solve(&(&rhs - gram * &d));
                }
                d
            }
            GramSpectrum::Deficient { values, vectors, cut } => {
                let mut d = DVector::zeros(dim);
                for (k, &l) in values.iter().enumerate().take_while(|(_, &l)| l > *cut) {
                    let v = vectors.column(k);
                    let w = v.adjoint() * &rhs;
                    d += v * (w[(0, 0)] / l);
                }
                d
            }
        };
        let fnorm = f.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if fnorm == 0.0 {
            continue;
        }
        let ratio = d.norm() / fnorm;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    if lo.is_finite() {
        [lo, hi]
    } else {
        [0.0, 0.0]
    }
}

const REFINE_STEPS: usize = 4;

/// `T c` by direct cyclic shifts; `maps[j]` sends each sample to its image
/// under shift `j`.
fn synthesis(m: &DiscreteModel, maps: &[Vec<usize>], c: &DVector<Complex64>) -> Vec<Complex64> {
    let shifts = m.shifts();
    let mut out = vec![Complex64::new(0.0, 0.0); m.samples()];
    for (j, map) in maps.iter().enumerate() {
        for (i, g) in m.generators.iter().enumerate() {
            let coeff = c[i * shifts + j];
            for (s, v) in g.iter().enumerate() {
                out[map[s]] += coeff * v;
            }
        }
    }
    out
}

/// `Tᴴ f`: inner products with every shifted generator.
fn analysis(m: &DiscreteModel, maps: &[Vec<usize>], f: &[Complex64]) -> DVector<Complex64> {
    let shifts = m.shifts();
    let per_shift: Vec<Vec<Complex64>> = maps
        .par_iter()
        .map(|map| {
            m.generators
                .iter()
                .map(|g| g.iter().zip(map).map(|(v, &t)| v.conj() * f[t]).sum())
                .collect()
        })
        .collect();
    DVector::from_fn(m.r() * shifts, |col, _| per_shift[col % shifts][col / shifts])
}
