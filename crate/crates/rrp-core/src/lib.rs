//! Ridge detection and mode retrieval for noisy multicomponent AM-FM signals.
//!
//! The crate works on the short-time Fourier transform of a complex discrete
//! signal of length `L` sampled on the normalized time axis `t = n/L`. It
//! provides:
//!
//! * [`signal`] — synthetic multicomponent signals, complex Gaussian noise at a
//!   prescribed SNR, and SNR measurement;
//! * [`tfr`] — Gaussian window families, the discrete STFT and its inverse,
//!   derivative-window STFTs, the second-order chirp-rate estimate, and
//!   Renyi-entropy window selection;
//! * [`classic_rd`] — the baseline peeling ridge detectors S-RD and MB-RD;
//! * [`rrp`] — relevant ridge portions: strengthened local maxima, stable
//!   portion extraction, and gathering into groups;
//! * [`ridge_fit`] — energy-greedy fitting of smooth ridge models (weighted
//!   polynomials or constrained smoothing splines) over gathered groups;
//! * [`retrieve`] — mode reconstruction by band summation or by linear-chirp
//!   column resynthesis.
//!
//! Frequency conventions used throughout: grid bin `k` corresponds to the
//! frequency `k*L/N` (in cycles per unit of normalized time, written "Hz"
//! below), chirp rates are carried in Hz per unit normalized time, and the
//! per-sample ridge drift in bins is `chirp * N / L^2`.

pub mod classic_rd;
mod error;
pub mod retrieve;
pub mod ridge_fit;
pub mod rrp;
pub mod signal;
pub mod tfr;

pub use error::{Error, Result};

/// Rounds to the nearest integer, halves away from zero.
///
/// This is the convention used everywhere a real-valued frequency offset is
/// mapped onto the bin grid.
#[inline]
pub(crate) fn round_nearest(x: f64) -> i64 {
    x.round() as i64
}
