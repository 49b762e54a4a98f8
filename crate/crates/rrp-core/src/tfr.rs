//! Gaussian windows, the discrete STFT and its inverse, derivative-window
//! STFTs, the second-order chirp-rate estimate, and entropy-based window
//! selection.
//!
//! The window is `g(t) = exp(-pi * t^2 / sigma^2)` sampled at `t = n/L` on
//! `n in [-M, M]`, with `M` chosen so that the tail falls below `1e-6` and
//! `2M+1 <= N`. A time-frequency grid holds one spectrum per signal sample:
//!
//! `V[m, k] = sum_n f[n + m - M] * g[n - M] * exp(-2i*pi*k*(n - M)/N)`
//!
//! with out-of-range signal samples treated as zero. Under that convention
//! the transform is inverted exactly by summing each row over frequency and
//! dividing by `g[0] * N`.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::signal::Signal;
use crate::{Error, Result};

/// Tail threshold used to size the window half-support.
const WINDOW_TAIL: f64 = 1e-6;

/// Gaussian window family tabulated on `n in [-M, M]` at `t = n/L`.
///
/// Besides the window itself the set carries its first and second analytic
/// derivatives with respect to normalized time, and the time-weighted
/// variants `t*g` and `t*g'` needed by the chirp-rate estimator.
#[derive(Debug, Clone)]
pub struct WindowSet {
    sigma: f64,
    half_support: usize,
    signal_len: usize,
    n_bins: usize,
    clipped: bool,
    g: Vec<f64>,
    dg: Vec<f64>,
    tg: Vec<f64>,
    ddg: Vec<f64>,
    tdg: Vec<f64>,
}

impl WindowSet {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Half-support `M` in samples; the window covers `2M+1` samples.
    pub fn half_support(&self) -> usize {
        self.half_support
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// True when the requested tail decay did not fit into `(N-1)/2` samples
    /// and the support was clipped.
    pub fn clipped(&self) -> bool {
        self.clipped
    }

    #[inline]
    fn idx(&self, offset: isize) -> usize {
        (offset + self.half_support as isize) as usize
    }

    /// Window value at sample offset `j in [-M, M]`.
    #[inline]
    pub fn g(&self, offset: isize) -> f64 {
        self.g[self.idx(offset)]
    }

    #[inline]
    pub fn g_deriv(&self, offset: isize) -> f64 {
        self.dg[self.idx(offset)]
    }

    #[inline]
    pub fn t_g(&self, offset: isize) -> f64 {
        self.tg[self.idx(offset)]
    }

    #[inline]
    pub fn g_second(&self, offset: isize) -> f64 {
        self.ddg[self.idx(offset)]
    }

    #[inline]
    pub fn t_g_deriv(&self, offset: isize) -> f64 {
        self.tdg[self.idx(offset)]
    }
}

/// Builds the Gaussian window family for a length-`signal_len` signal and
/// `n_bins` frequency bins.
///
/// The half-support is the smallest `M` with `g[M] < 1e-6`; when that would
/// violate `2M+1 <= n_bins` the support is clipped to `(n_bins-1)/2` and the
/// set is marked [`WindowSet::clipped`].
pub fn make_windows(sigma: f64, signal_len: usize, n_bins: usize) -> Result<WindowSet> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(sigma));
    }
    if n_bins < 3 {
        return Err(Error::InvalidBinCount(n_bins));
    }
    if signal_len < 2 {
        return Err(Error::SignalTooShort(signal_len));
    }

    // g[M] < tail  <=>  M > sigma*L*sqrt(ln(1/tail)/pi)
    let reach = sigma * signal_len as f64 * ((1.0 / WINDOW_TAIL).ln() / PI).sqrt();
    let wanted = reach.floor() as usize + 1;
    let max_m = (n_bins - 1) / 2;
    let (half_support, clipped) = if wanted > max_m {
        (max_m, true)
    } else {
        (wanted, false)
    };

    let support = 2 * half_support + 1;
    let mut g = Vec::with_capacity(support);
    let mut dg = Vec::with_capacity(support);
    let mut tg = Vec::with_capacity(support);
    let mut ddg = Vec::with_capacity(support);
    let mut tdg = Vec::with_capacity(support);
    let inv_sigma_sq = 1.0 / (sigma * sigma);
    for j in -(half_support as isize)..=(half_support as isize) {
        let t = j as f64 / signal_len as f64;
        let w = (-PI * t * t * inv_sigma_sq).exp();
        let dw = -2.0 * PI * t * inv_sigma_sq * w;
        g.push(w);
        dg.push(dw);
        tg.push(t * w);
        ddg.push((-2.0 * PI * inv_sigma_sq + (2.0 * PI * t * inv_sigma_sq).powi(2)) * w);
        tdg.push(t * dw);
    }

    Ok(WindowSet {
        sigma,
        half_support,
        signal_len,
        n_bins,
        clipped,
        g,
        dg,
        tg,
        ddg,
        tdg,
    })
}

/// Complex time-frequency grid: one row per signal sample, one column per
/// frequency bin. Bin `k` represents the frequency `k * L / N`.
#[derive(Debug, Clone)]
pub struct TfGrid {
    values: Array2<Complex64>,
    window: WindowSet,
}

impl TfGrid {
    /// Wraps an existing coefficient matrix. The shape must match the
    /// window's signal length and bin count.
    pub fn from_values(values: Array2<Complex64>, window: WindowSet) -> Result<Self> {
        if values.nrows() != window.signal_len || values.ncols() != window.n_bins {
            return Err(Error::LengthMismatch {
                left: values.nrows(),
                right: window.signal_len,
            });
        }
        Ok(Self { values, window })
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn window(&self) -> &WindowSet {
        &self.window
    }

    /// Signal length `L` (number of time rows).
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of frequency bins `N`.
    pub fn n_bins(&self) -> usize {
        self.values.ncols()
    }

    /// Frequency step of one bin, `L / N`, in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.len() as f64 / self.n_bins() as f64
    }

    #[inline]
    pub fn magnitude(&self, n: usize, k: usize) -> f64 {
        self.values[[n, k]].norm()
    }

    /// Spectrogram matrix `|V|^2`.
    pub fn power(&self) -> Array2<f64> {
        self.values.mapv(|c| c.norm_sqr())
    }
}

/// Writes the windowed frame centered at `m` into `buf` so that a length-`N`
/// FFT of `buf` yields `V[m, .]`. Offsets are folded modulo `N`, which is
/// exact because `2M+1 <= N`.
fn fill_frame(samples: &[Complex64], table: &[f64], m: usize, half: usize, buf: &mut [Complex64]) {
    let n_bins = buf.len();
    buf.fill(Complex64::ZERO);
    let len = samples.len() as isize;
    for (i, &w) in table.iter().enumerate() {
        let j = i as isize - half as isize;
        let src = m as isize + j;
        if src < 0 || src >= len {
            continue;
        }
        let slot = if j < 0 { j + n_bins as isize } else { j } as usize;
        buf[slot] = samples[src as usize] * w;
    }
}

struct ColumnFft {
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl ColumnFft {
    fn new(n_bins: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_bins);
        let scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
        Self { fft, scratch }
    }

    fn run(&mut self, buf: &mut [Complex64]) {
        self.fft.process_with_scratch(buf, &mut self.scratch);
    }
}

/// Short-time Fourier transform of `f` with the given window set.
pub fn stft(f: &Signal, window: &WindowSet) -> Result<TfGrid> {
    if f.len() != window.signal_len {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: window.signal_len,
        });
    }
    let len = f.len();
    let n_bins = window.n_bins;
    let mut values = Array2::from_elem((len, n_bins), Complex64::ZERO);
    let mut fft = ColumnFft::new(n_bins);
    let mut buf = vec![Complex64::ZERO; n_bins];
    for m in 0..len {
        fill_frame(f.samples(), &window.g, m, window.half_support, &mut buf);
        fft.run(&mut buf);
        values.row_mut(m).iter_mut().zip(&buf).for_each(|(dst, &v)| *dst = v);
    }
    Ok(TfGrid {
        values,
        window: window.clone(),
    })
}

/// Inverse STFT: `f[n] = (1 / (g[0] * N)) * sum_k V[n, k]`.
pub fn istft(grid: &TfGrid) -> Result<Signal> {
    let g0 = grid.window.g(0);
    if g0 == 0.0 {
        return Err(Error::NonInvertibleWindow);
    }
    let scale = 1.0 / (g0 * grid.n_bins() as f64);
    let samples = grid
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().sum::<Complex64>() * scale)
        .collect();
    Signal::new(samples)
}

/// Grid of chirp-rate estimates, in Hz per unit of normalized time.
#[derive(Debug, Clone)]
pub struct ModulationGrid {
    q_hat: Array2<f64>,
}

impl ModulationGrid {
    /// Wraps a precomputed chirp-rate matrix (Hz per unit time).
    pub fn from_values(q_hat: Array2<f64>) -> Self {
        Self { q_hat }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.q_hat
    }

    #[inline]
    pub fn at(&self, n: usize, k: usize) -> f64 {
        self.q_hat[[n, k]]
    }

    pub fn len(&self) -> usize {
        self.q_hat.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.q_hat.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.q_hat.ncols()
    }
}

/// Second-order chirp-rate estimate.
///
/// Combines the five STFTs taken with `g`, `g'`, `t*g`, `g''` and `t*g'`:
///
/// `q = Re{ (1 / 2i*pi) * (Vg'' * Vg - Vg'^2) / (Vtg * Vg' - Vtg' * Vg) }`
///
/// The ratio has poles at spectrogram zeros, which is exactly where noise
/// kills a ridge, so entries whose denominator magnitude falls below
/// `1e-6 * median(|Vg|^2)` are zeroed (no-modulation assumption).
pub fn modulation_estimate(f: &Signal, window: &WindowSet) -> Result<ModulationGrid> {
    if f.len() != window.signal_len {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: window.signal_len,
        });
    }
    let len = f.len();
    let n_bins = window.n_bins;
    let half = window.half_support;
    let mut fft = ColumnFft::new(n_bins);

    // First pass: the spectrogram median sets the scale of the guard.
    let mut power = Vec::with_capacity(len * n_bins);
    let mut buf = vec![Complex64::ZERO; n_bins];
    for m in 0..len {
        fill_frame(f.samples(), &window.g, m, half, &mut buf);
        fft.run(&mut buf);
        power.extend(buf.iter().map(|c| c.norm_sqr()));
    }
    let mid = power.len() / 2;
    let (_, median, _) = power.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let guard = 1e-6 * *median;

    let mut q_hat = Array2::zeros((len, n_bins));
    let mut vg = vec![Complex64::ZERO; n_bins];
    let mut vdg = vec![Complex64::ZERO; n_bins];
    let mut vtg = vec![Complex64::ZERO; n_bins];
    let mut vddg = vec![Complex64::ZERO; n_bins];
    let mut vtdg = vec![Complex64::ZERO; n_bins];
    for m in 0..len {
        for (table, buf) in [
            (&window.g, &mut vg),
            (&window.dg, &mut vdg),
            (&window.tg, &mut vtg),
            (&window.ddg, &mut vddg),
            (&window.tdg, &mut vtdg),
        ] {
            fill_frame(f.samples(), table, m, half, buf);
            fft.run(buf);
        }
        for k in 0..n_bins {
            let num = vddg[k] * vg[k] - vdg[k] * vdg[k];
            let den = vtg[k] * vdg[k] - vtdg[k] * vg[k];
            if den.norm() <= guard {
                continue;
            }
            let ratio = num / den;
            // (1 / 2i*pi) * z has real part Im(z) / (2*pi).
            q_hat[[m, k]] = ratio.im / (2.0 * PI);
        }
    }
    Ok(ModulationGrid { q_hat })
}

/// Picks the window scale minimizing the order-3 Renyi entropy of the
/// normalized spectrogram. Ties keep the earliest candidate.
pub fn select_sigma_renyi(f: &Signal, candidates: &[f64], n_bins: usize) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut best: Option<(f64, f64)> = None;
    for &sigma in candidates {
        let window = make_windows(sigma, f.len(), n_bins)?;
        let grid = stft(f, &window)?;
        let entropy = renyi_entropy_order3(&grid)?;
        match best {
            Some((_, h)) if entropy >= h => {}
            _ => best = Some((sigma, entropy)),
        }
    }
    Ok(best.expect("nonempty candidates").0)
}

/// Order-3 Renyi entropy of the normalized spectrogram,
/// `-(1/2) * log2( sum p^3 )` with `p = |V|^2 / sum |V|^2`.
pub fn renyi_entropy_order3(grid: &TfGrid) -> Result<f64> {
    let total: f64 = grid.values.iter().map(|c| c.norm_sqr()).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateSpectrogram);
    }
    let cube_sum: f64 = grid
        .values
        .iter()
        .map(|c| {
            let p = c.norm_sqr() / total;
            p * p * p
        })
        .sum();
    Ok(-0.5 * cube_sum.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, ModeSpec, PhaseLaw};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::new(
            (0..len)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn chirp(start_hz: f64, rate: f64, len: usize) -> Signal {
        synthesize(
            &[ModeSpec::unit(PhaseLaw::Linear { start_hz, rate })],
            len,
        )
        .unwrap()
    }

    #[test]
    fn window_center_values() {
        let w = make_windows(0.03, 1024, 512).unwrap();
        assert_eq!(w.g(0), 1.0);
        assert_eq!(w.g_deriv(0), 0.0);
        assert_eq!(w.t_g(0), 0.0);
        for j in 1..=w.half_support() as isize {
            assert_eq!(w.g(j), w.g(-j));
        }
    }

    #[test]
    fn half_support_closed_form() {
        let (sigma, len) = (0.02, 4096usize);
        let w = make_windows(sigma, len, 1024).unwrap();
        let expected = (sigma * len as f64 * ((1e6f64).ln() / PI).sqrt()).ceil() as usize;
        assert_eq!(w.half_support(), expected);
        assert_eq!(w.half_support(), 172);
        assert!(w.g(w.half_support() as isize) < 1e-6);
        assert!(w.g(w.half_support() as isize - 1) >= 1e-6);
        assert!(!w.clipped());
    }

    #[test]
    fn oversize_support_is_clipped() {
        let w = make_windows(0.5, 1024, 128).unwrap();
        assert!(w.clipped());
        assert_eq!(w.half_support(), 63);
        assert!(2 * w.half_support() + 1 <= 128);
    }

    #[test]
    fn tabulated_derivatives_match_finite_differences() {
        let (sigma, len) = (0.025, 2048usize);
        let w = make_windows(sigma, len, 1024).unwrap();
        let g = |t: f64| (-PI * t * t / (sigma * sigma)).exp();
        let h = 1e-7;
        for j in (-(w.half_support() as isize)..=w.half_support() as isize).step_by(17) {
            let t = j as f64 / len as f64;
            let fd1 = (g(t + h) - g(t - h)) / (2.0 * h);
            let fd2 = (g(t + h) - 2.0 * g(t) + g(t - h)) / (h * h);
            assert_relative_eq!(w.g_deriv(j), fd1, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(w.g_second(j), fd2, max_relative = 1e-4, epsilon = 1e-2);
            assert_relative_eq!(w.t_g(j), t * g(t), max_relative = 1e-12, epsilon = 1e-15);
            assert_relative_eq!(w.t_g_deriv(j), t * fd1, max_relative = 1e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn stft_matches_literal_sum() {
        // Brute-force evaluation of the defining sum on a small grid.
        let len = 48;
        let n_bins = 16;
        let f = random_signal(len, 3);
        let w = make_windows(0.05, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let half = w.half_support() as isize;
        for m in [0usize, 5, 23, 47] {
            for k in 0..n_bins {
                let mut acc = Complex64::ZERO;
                for n in 0..n_bins as isize {
                    let j = n - half;
                    let src = m as isize + j;
                    if src < 0 || src >= len as isize || j.abs() > half {
                        continue;
                    }
                    let angle = -2.0 * PI * k as f64 * j as f64 / n_bins as f64;
                    acc += f.samples()[src as usize]
                        * w.g(j)
                        * Complex64::from_polar(1.0, angle);
                }
                let got = grid.values()[[m, k]];
                assert_relative_eq!(got.re, acc.re, epsilon = 1e-10, max_relative = 1e-9);
                assert_relative_eq!(got.im, acc.im, epsilon = 1e-10, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn impulse_columns_follow_window() {
        let len = 256;
        let n_bins = 64;
        let n0 = 100usize;
        let mut samples = vec![Complex64::ZERO; len];
        samples[n0] = Complex64::new(1.0, 0.0);
        let f = Signal::new(samples).unwrap();
        let w = make_windows(0.02, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let half = w.half_support() as isize;
        for m in 0..len {
            let offset = n0 as isize - m as isize;
            let expected = if offset.abs() <= half { w.g(offset) } else { 0.0 };
            for k in (0..n_bins).step_by(7) {
                assert_relative_eq!(grid.magnitude(m, k), expected.abs(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tone_peaks_on_its_bin() {
        let len = 1024;
        let n_bins = 256;
        // 32 bins * L/N = 128 Hz: exactly on a bin center.
        let f = chirp(128.0, 0.0, len);
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let m_margin = w.half_support();
        for m in (m_margin..len - m_margin).step_by(55) {
            let best = (0..n_bins)
                .max_by(|&a, &b| grid.magnitude(m, a).total_cmp(&grid.magnitude(m, b)))
                .unwrap();
            assert_eq!(best, 32);
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for seed in 0..4 {
            let f = random_signal(512, seed);
            let w = make_windows(0.04, 512, 128).unwrap();
            let grid = stft(&f, &w).unwrap();
            let back = istft(&grid).unwrap();
            let err: f64 = f
                .samples()
                .iter()
                .zip(back.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err / f.norm() < 1e-10);
        }
    }

    #[test]
    fn zero_and_constant_grid_inversion() {
        let len = 64;
        let n_bins = 32;
        let w = make_windows(0.05, len, n_bins).unwrap();
        let zero = TfGrid {
            values: Array2::from_elem((len, n_bins), Complex64::ZERO),
            window: w.clone(),
        };
        let f = istft(&zero).unwrap();
        assert!(f.samples().iter().all(|c| c.norm() == 0.0));

        // Only bin zero set to g[0]*N reconstructs the all-ones signal.
        let mut values = Array2::from_elem((len, n_bins), Complex64::ZERO);
        for n in 0..len {
            values[[n, 0]] = Complex64::new(w.g(0) * n_bins as f64, 0.0);
        }
        let ones = istft(&TfGrid { values, window: w }).unwrap();
        for c in ones.samples() {
            assert_relative_eq!(c.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(c.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stft_is_linear() {
        let len = 256;
        let n_bins = 64;
        let w = make_windows(0.03, len, n_bins).unwrap();
        let f = random_signal(len, 10);
        let h = random_signal(len, 11);
        let (a, b) = (Complex64::new(1.3, -0.4), Complex64::new(-0.2, 2.1));
        let combo = Signal::new(
            f.samples()
                .iter()
                .zip(h.samples())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let gf = stft(&f, &w).unwrap();
        let gh = stft(&h, &w).unwrap();
        let gc = stft(&combo, &w).unwrap();
        for (got, (x, y)) in gc.values().iter().zip(gf.values().iter().zip(gh.values())) {
            let want = a * x + b * y;
            assert_relative_eq!(got.re, want.re, epsilon = 1e-10, max_relative = 1e-9);
            assert_relative_eq!(got.im, want.im, epsilon = 1e-10, max_relative = 1e-9);
        }
    }

    #[test]
    fn time_shift_moves_columns() {
        let len = 300;
        let n_bins = 64;
        let w = make_windows(0.02, len, n_bins).unwrap();
        let f = random_signal(len, 21);
        let mut shifted = f.samples().to_vec();
        shifted.rotate_right(1);
        shifted[0] = Complex64::ZERO;
        let g1 = stft(&f, &w).unwrap();
        let g2 = stft(&Signal::new(shifted).unwrap(), &w).unwrap();
        let half = w.half_support();
        for m in (half + 1)..(len - half - 1) {
            for k in (0..n_bins).step_by(9) {
                assert_relative_eq!(
                    g2.magnitude(m + 1, k),
                    g1.magnitude(m, k),
                    epsilon = 1e-9,
                    max_relative = 1e-7
                );
            }
        }
    }

    #[test]
    fn chirp_columns_fit_gaussian_profile() {
        // The magnitude of each interior column must be Gaussian with the
        // standard deviation sqrt(1 + sigma^4 c^2) / (sqrt(2 pi) sigma).
        let len = 1024;
        let n_bins = 512;
        let sigma = 0.03;
        let rate = 400.0;
        let f = chirp(200.0, rate, len);
        let w = make_windows(sigma, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let expected = (1.0 + sigma.powi(4) * rate * rate).sqrt() / ((2.0 * PI).sqrt() * sigma);
        let bin_hz = grid.bin_hz();
        for m in (w.half_support()..len - w.half_support()).step_by(101) {
            let mut mass = 0.0;
            let mut mean = 0.0;
            for k in 0..n_bins {
                let p = grid.magnitude(m, k).powi(2);
                mass += p;
                mean += p * k as f64 * bin_hz;
            }
            mean /= mass;
            let mut var = 0.0;
            for k in 0..n_bins {
                let p = grid.magnitude(m, k).powi(2);
                let d = k as f64 * bin_hz - mean;
                var += p * d * d;
            }
            var /= mass;
            // |V|^2 has std sigma_f / sqrt(2), so sigma_f = sqrt(2 var).
            let measured = (2.0 * var).sqrt();
            assert!(
                (measured / expected - 1.0).abs() < 0.05,
                "column {m}: measured {measured:.4}, expected {expected:.4}"
            );
        }
    }

    #[test]
    fn modulation_of_tone_is_negligible() {
        let len = 1024;
        let n_bins = 256;
        let f = chirp(128.0, 0.0, len);
        let w = make_windows(0.03, len, n_bins).unwrap();
        let q = modulation_estimate(&f, &w).unwrap();
        for m in (w.half_support()..len - w.half_support()).step_by(37) {
            assert!(q.at(m, 32).abs() < 0.05 * len as f64);
        }
    }

    #[test]
    fn modulation_is_exact_for_linear_chirps() {
        let len = 1024;
        let n_bins = 512;
        let rate = 420.0;
        let f = chirp(180.0, rate, len);
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let q = modulation_estimate(&f, &w).unwrap();
        for m in (w.half_support()..len - w.half_support()).step_by(53) {
            let ridge = (0..n_bins)
                .max_by(|&a, &b| grid.magnitude(m, a).total_cmp(&grid.magnitude(m, b)))
                .unwrap();
            let got = q.at(m, ridge);
            assert!(
                (got / rate - 1.0).abs() < 0.01,
                "column {m}: q {got:.3} vs chirp {rate}"
            );
        }
    }

    #[test]
    fn modulation_tracks_quadratic_phase() {
        let len = 2048;
        let n_bins = 512;
        // freq = 300 + 300 cos(2 pi t / 2), chirp = -300 pi sin(pi t).
        let law = PhaseLaw::Cosine {
            center_hz: 600.0,
            amp_hz: 300.0,
            cycles: 0.5,
        };
        let f = synthesize(&[ModeSpec::unit(law)], len).unwrap();
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let q = modulation_estimate(&f, &w).unwrap();
        let margin = 3 * w.half_support();
        for m in (margin..len - margin).step_by(97) {
            let t = m as f64 / len as f64;
            let truth = law.chirp(t);
            if truth.abs() < 100.0 {
                continue; // relative check is meaningless near the zero crossing
            }
            let ridge = (0..n_bins)
                .max_by(|&a, &b| grid.magnitude(m, a).total_cmp(&grid.magnitude(m, b)))
                .unwrap();
            let got = q.at(m, ridge);
            assert!(
                (got / truth - 1.0).abs() < 0.10,
                "t {t:.3}: q {got:.2} vs truth {truth:.2}"
            );
        }
    }

    #[test]
    fn renyi_prefers_wide_window_for_tone() {
        let len = 1024;
        let f = chirp(256.0, 0.0, len);
        let picked = select_sigma_renyi(&f, &[0.01, 0.05], 256).unwrap();
        assert_eq!(picked, 0.05);
        // Single candidate trivially wins.
        assert_eq!(select_sigma_renyi(&f, &[0.02], 256).unwrap(), 0.02);
    }

    #[test]
    fn renyi_prefers_narrow_window_for_impulse() {
        let len = 1024;
        let mut samples = vec![Complex64::ZERO; len];
        samples[500] = Complex64::new(1.0, 0.0);
        let f = Signal::new(samples).unwrap();
        let picked = select_sigma_renyi(&f, &[0.01, 0.05], 256).unwrap();
        assert_eq!(picked, 0.01);
    }
}
