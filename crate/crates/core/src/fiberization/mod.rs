//! Periodized Fourier fibers, the bracket Gramian and its spectral profile.

mod bracket;
mod fourier;
mod freq;
mod spectral;

pub use bracket::{bracket, bracket_from_lags, BracketLags, GramianField};
pub use fourier::{fourier_fibers, fourier_fibers_over, pre_gramian_profile, FourierFibers, KRange, PreGramianProfile};
pub use freq::{default_radius, FrequencyGrid};
pub use spectral::{condition_iii_check, hermitian_eigen, spectral_profile, ConditionIII, SpectralProfile, DEFAULT_RANK_TOL};
