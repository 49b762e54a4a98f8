//! Baseline peeling ridge detectors.
//!
//! Both detectors extract `P` full-span ridges one at a time: a candidate is
//! grown from an initialization column by an argmax-per-column recursion, the
//! most energetic candidate over all initialization columns is kept, and the
//! spectrogram band around it is zeroed before the next mode is extracted.
//!
//! * S-RD constrains each step to `+-ceil(N * B_f / L^2)` bins, with `B_f`
//!   the a-priori bound on the chirp rate.
//! * MB-RD centers the step window on the drift predicted by the chirp-rate
//!   estimate and allows a slack of `C` bins on each side.

use ndarray::Array2;

use crate::round_nearest;
use crate::tfr::{ModulationGrid, TfGrid};
use crate::{Error, Result};

/// A full-span ridge: one frequency bin per time index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ridge {
    bins: Vec<usize>,
}

impl Ridge {
    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Instantaneous-frequency estimate in Hz (`bin * L / N`) per time index.
    pub fn freqs_hz(&self, bin_hz: f64) -> Vec<f64> {
        self.bins.iter().map(|&k| k as f64 * bin_hz).collect()
    }
}

/// Step window for the column-to-column recursion.
trait StepRule {
    /// Inclusive bin window searched at the next column when the ridge sits
    /// at `(n, k)`; `dir` is +1 going forward, -1 backward.
    fn window(&self, n: usize, k: usize, dir: i64, n_bins: usize) -> (usize, usize);
}

struct FixedBound {
    half_width: usize,
}

impl StepRule for FixedBound {
    fn window(&self, _n: usize, k: usize, _dir: i64, n_bins: usize) -> (usize, usize) {
        let lo = k.saturating_sub(self.half_width);
        let hi = (k + self.half_width).min(n_bins - 1);
        (lo, hi)
    }
}

struct ModulationSteered<'a> {
    qhat: &'a ModulationGrid,
    slack: usize,
    /// bins of drift per time sample and per Hz-of-chirp: `N / L^2`.
    drift_scale: f64,
}

impl StepRule for ModulationSteered<'_> {
    fn window(&self, n: usize, k: usize, dir: i64, n_bins: usize) -> (usize, usize) {
        let drift = round_nearest(self.qhat.at(n, k) * self.drift_scale);
        let center = (k as i64 + dir * drift).clamp(0, n_bins as i64 - 1);
        let lo = (center - self.slack as i64).max(0) as usize;
        let hi = (center + self.slack as i64).min(n_bins as i64 - 1) as usize;
        (lo, hi)
    }
}

/// Argmax of `row[lo..=hi]`; ties resolve to the lower bin.
fn argmax_window(row: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for k in lo + 1..=hi {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

fn grow_candidate(mags: &Array2<f64>, n0: usize, rule: &dyn StepRule) -> Vec<usize> {
    let (len, n_bins) = mags.dim();
    let mut bins = vec![0usize; len];
    let row0 = mags.row(n0);
    bins[n0] = argmax_window(row0.as_slice().unwrap(), 0, n_bins - 1);
    for n in n0 + 1..len {
        let (lo, hi) = rule.window(n - 1, bins[n - 1], 1, n_bins);
        bins[n] = argmax_window(mags.row(n).as_slice().unwrap(), lo, hi);
    }
    for n in (0..n0).rev() {
        let (lo, hi) = rule.window(n + 1, bins[n + 1], -1, n_bins);
        bins[n] = argmax_window(mags.row(n).as_slice().unwrap(), lo, hi);
    }
    bins
}

fn ridge_energy(mags: &Array2<f64>, bins: &[usize]) -> f64 {
    bins.iter()
        .enumerate()
        .map(|(n, &k)| {
            let v = mags[[n, k]];
            v * v
        })
        .sum()
}

/// Evenly spaced initialization columns in `[M, L-1-M]`.
fn init_indices(len: usize, half_support: usize, count: usize) -> Vec<usize> {
    let lo = half_support.min(len - 1);
    let hi = (len - 1).saturating_sub(half_support).max(lo);
    let count = count.max(1);
    if count == 1 {
        return vec![(lo + hi) / 2];
    }
    let span = (hi - lo) as f64;
    let mut idx: Vec<usize> = (0..count)
        .map(|i| lo + (i as f64 * span / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn peel(
    grid: &TfGrid,
    modes: usize,
    delta_hz: f64,
    init_count: usize,
    rule: &dyn StepRule,
) -> Result<Vec<Ridge>> {
    if modes == 0 {
        return Err(Error::InvalidParameter("mode count must be >= 1".into()));
    }
    let n_bins = grid.n_bins();
    let len = grid.len();
    let zero_half = (delta_hz * n_bins as f64 / len as f64).ceil() as usize;
    if modes * (2 * zero_half + 1) >= n_bins {
        return Err(Error::NoSpectrumLeft {
            modes,
            half_width: zero_half,
            bins: n_bins,
        });
    }

    let mut mags = Array2::from_shape_fn((len, n_bins), |(n, k)| grid.magnitude(n, k));
    let inits = init_indices(len, grid.window().half_support(), init_count);
    let mut ridges = Vec::with_capacity(modes);
    for _ in 0..modes {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for &n0 in &inits {
            let bins = grow_candidate(&mags, n0, rule);
            let energy = ridge_energy(&mags, &bins);
            if best.as_ref().map_or(true, |(e, _)| energy > *e) {
                best = Some((energy, bins));
            }
        }
        let (_, bins) = best.expect("at least one init index");
        for (n, &k) in bins.iter().enumerate() {
            let lo = k.saturating_sub(zero_half);
            let hi = (k + zero_half).min(n_bins - 1);
            for masked in lo..=hi {
                mags[[n, masked]] = 0.0;
            }
        }
        ridges.push(Ridge { bins });
    }
    Ok(ridges)
}

/// Simple ridge detection with a fixed modulation bound `b_f` (Hz per unit
/// time). `delta_hz` is the separation used to zero a band after each
/// extraction; `init_count` initialization columns are tried per mode.
pub fn detect_srd(
    grid: &TfGrid,
    modes: usize,
    b_f: f64,
    delta_hz: f64,
    init_count: usize,
) -> Result<Vec<Ridge>> {
    if !(b_f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "modulation bound must be positive, got {b_f}"
        )));
    }
    let len = grid.len() as f64;
    let half_width = (grid.n_bins() as f64 * b_f / (len * len)).ceil() as usize;
    let rule = FixedBound { half_width };
    peel(grid, modes, delta_hz, init_count, &rule)
}

/// Modulation-based ridge detection: the step window is centered on the
/// drift `round(q * N / L^2)` read from the chirp-rate grid at the current
/// ridge point, with `slack` extra bins on each side.
pub fn detect_mbrd(
    grid: &TfGrid,
    qhat: &ModulationGrid,
    modes: usize,
    slack: usize,
    delta_hz: f64,
    init_count: usize,
) -> Result<Vec<Ridge>> {
    if qhat.len() != grid.len() || qhat.n_bins() != grid.n_bins() {
        return Err(Error::LengthMismatch {
            left: qhat.len(),
            right: grid.len(),
        });
    }
    let len = grid.len() as f64;
    let rule = ModulationSteered {
        qhat,
        slack,
        drift_scale: grid.n_bins() as f64 / (len * len),
    };
    peel(grid, modes, delta_hz, init_count, &rule)
}
