//! Fourier series, Toeplitz lifting, the frequency-shift operator and the
//! harmonic-major / node-major layouts.

mod index;
mod layout;
mod omega;
mod series;
mod signal;
mod toeplitz;

pub use index::HarmonicIndexSet;
pub use layout::{permute_grouping_matrix, permute_grouping_vector, Grouping, GroupingLayout};
pub use omega::{build_omega, OmegaOperator};
pub use series::FourierSeries;
pub use signal::{
    fourier_from_complex_samples, fourier_from_samples, series_from_samples, HarmonicSignal,
};
pub use toeplitz::{toeplitz_from_fourier, ToeplitzOperator};

/// Samples per period used when a caller does not choose: 8 per retained
/// harmonic coefficient.
pub fn default_sample_count(hmax: usize) -> usize {
    8 * (2 * hmax + 1)
}
