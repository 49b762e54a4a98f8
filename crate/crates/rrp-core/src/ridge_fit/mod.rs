//! Energy-greedy assembly of gathered ridge groups into smooth ridge models.
//!
//! Groups arrive sorted by decreasing energy. The fit seeds one model per
//! mode from the most energetic groups sharing a common time index, then
//! alternates two moves until every group has been considered:
//!
//! * *absorption* — any unused group whose points fall inside a model's
//!   frequency slab joins that model's data and the model is refit;
//! * *accept/reject* — each remaining group is tentatively added to its
//!   closest model; the enlarged fit is kept only when the total score
//!   collected along the curves strictly increases.
//!
//! A post-processing pass reruns absorption with slabs widened by each
//! curve's own chirp rate, and a final guard returns the best state whose
//! curves do not intersect on the time grid. The curve family is a degree-d
//! polynomial for the standard path or a budget-constrained smoothing spline
//! for strongly curved ridges.

pub mod poly;
pub mod spline;

pub use poly::Polynomial;
pub use spline::{fit_budget, fit_lambda, CubicSpline, SmoothingFit};

use crate::rrp::{RidgeGroup, SlcGrid};
use crate::{Error, Result};

/// Smooth frequency curve in bins as a function of normalized time.
#[derive(Debug, Clone)]
pub enum Curve {
    Poly(Polynomial),
    Spline(CubicSpline),
}

impl Curve {
    /// Frequency in bins at normalized time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Curve::Poly(p) => p.eval(t),
            Curve::Spline(s) => s.eval(t),
        }
    }

    /// Derivative in bins per unit normalized time.
    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Curve::Poly(p) => p.deriv(t),
            Curve::Spline(s) => s.deriv(t),
        }
    }
}

/// One fitted mode: its curve and the gathered groups that support it.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    curve: Curve,
    members: Vec<usize>,
}

impl RidgeModel {
    /// Wraps a curve that was obtained outside the group-driven fit (for
    /// example an analytically known ridge).
    pub fn from_curve(curve: Curve) -> Self {
        Self {
            curve,
            members: Vec::new(),
        }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Indices into the group list handed to the fit.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Frequency in bins at `t`.
    pub fn eval_bins(&self, t: f64) -> f64 {
        self.curve.eval(t)
    }

    /// Curve slope in bins per unit time.
    pub fn deriv_bins(&self, t: f64) -> f64 {
        self.curve.deriv(t)
    }
}

/// Per-mode, per-time frequency bands `[lo, hi]` (inclusive, in bins).
/// An entry with `lo > hi` is an empty band.
#[derive(Debug, Clone)]
pub struct BandSet {
    bands: Vec<Vec<(i64, i64)>>,
}

impl BandSet {
    pub fn modes(&self) -> usize {
        self.bands.len()
    }

    pub fn len(&self) -> usize {
        self.bands.first().map(|b| b.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// Band of mode `p` at time `n`, `None` when empty after clipping.
    pub fn band(&self, p: usize, n: usize) -> Option<(usize, usize)> {
        let (lo, hi) = self.bands[p][n];
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    /// Raw signed endpoints (may denote an empty band).
    pub fn raw(&self, p: usize, n: usize) -> (i64, i64) {
        self.bands[p][n]
    }

    pub(crate) fn from_raw(bands: Vec<Vec<(i64, i64)>>) -> Self {
        Self { bands }
    }
}

/// Options shared by the fitting entry points.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Feed the curve derivative to the band formula without converting it
    /// to Hz per unit time. The converted form is the default; this switch
    /// reproduces the dimensionally literal variant.
    pub literal_band_chirp: bool,
}

/// Outcome of a fit: the models (possibly fewer than requested when the
/// groups never share enough common time indices), their bands, and the
/// trace of accepted curve energies.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub models: Vec<RidgeModel>,
    pub bands: BandSet,
    /// Curve energy of the seed fit.
    pub initial_energy: f64,
    /// Energies of the accepted states, starting at the seed fit;
    /// non-decreasing by construction.
    pub energy_trace: Vec<f64>,
    pub final_energy: f64,
}

trait CurveFitter {
    fn fit(&self, points: &[(f64, f64, f64)]) -> Curve;
}

struct PolyFitter {
    degree: usize,
}

impl CurveFitter for PolyFitter {
    fn fit(&self, points: &[(f64, f64, f64)]) -> Curve {
        Curve::Poly(poly::fit_weighted(points, self.degree))
    }
}

struct SplineFitter {
    tol_bins: f64,
}

impl CurveFitter for SplineFitter {
    fn fit(&self, points: &[(f64, f64, f64)]) -> Curve {
        // Budget from the tolerance: tol^2 * sum of point weights, so the
        // weighted RMS misfit along the knots stays near `tol_bins` bins.
        let budget = self.tol_bins * self.tol_bins * points.iter().map(|p| p.2).sum::<f64>();
        Curve::Spline(spline::fit_budget(points, budget).spline)
    }
}

#[derive(Clone, Copy)]
enum SlabRule {
    /// Constant pure-harmonic 3-sigma half-width.
    PureHarmonic,
    /// Half-width from the curve's own chirp rate at each time.
    LinearChirp,
}

#[derive(Clone)]
struct FitState {
    members: Vec<Vec<usize>>,
    used: Vec<bool>,
    curves: Vec<Curve>,
    energy: f64,
}

struct Driver<'a> {
    groups: &'a [RidgeGroup],
    slc: &'a SlcGrid,
    fitter: &'a dyn CurveFitter,
    opts: FitOptions,
}

impl Driver<'_> {
    fn len(&self) -> usize {
        self.slc.len()
    }

    fn bin_hz(&self) -> f64 {
        self.len() as f64 / self.slc.n_bins() as f64
    }

    /// Weighted sample set of a mode: every member group's points, weighted
    /// by the squared group energy.
    fn mode_points(&self, members: &[usize]) -> Vec<(f64, f64, f64)> {
        let l = self.len() as f64;
        let mut pts = Vec::new();
        for &g in members {
            let group = &self.groups[g];
            let w = group.energy() * group.energy();
            for &(n, k) in group.points() {
                pts.push((n as f64 / l, k as f64, w));
            }
        }
        pts
    }

    fn refit(&self, members: &[Vec<usize>]) -> Vec<Curve> {
        members
            .iter()
            .map(|m| self.fitter.fit(&self.mode_points(m)))
            .collect()
    }

    /// Slab half-width in bins around the curve at time index `n`.
    fn slab_half_width(&self, curve: &Curve, n: usize, rule: SlabRule) -> f64 {
        match rule {
            SlabRule::PureHarmonic => self.slc.ph_half_width_bins(),
            SlabRule::LinearChirp => {
                let t = n as f64 / self.len() as f64;
                let chirp = if self.opts.literal_band_chirp {
                    curve.deriv(t)
                } else {
                    curve.deriv(t) * self.bin_hz()
                };
                3.0 * self.slc.std_hz(chirp) * self.slc.n_bins() as f64 / self.len() as f64
            }
        }
    }

    fn group_touches(&self, group: &RidgeGroup, curve: &Curve, rule: SlabRule) -> bool {
        let l = self.len() as f64;
        group.points().iter().any(|&(n, k)| {
            let center = curve.eval(n as f64 / l);
            let w = self.slab_half_width(curve, n, rule);
            let lo = (center - w).floor();
            let hi = (center + w).ceil();
            (k as f64) >= lo && (k as f64) <= hi
        })
    }

    /// Absorbs every unused group intersecting a model's slab, refitting
    /// until no further group joins. Each pass consumes at least one group,
    /// so the loop runs at most `groups.len()` times.
    fn absorb(&self, state: &mut FitState, rule: SlabRule) {
        loop {
            let mut changed = false;
            for q in 0..self.groups.len() {
                if state.used[q] {
                    continue;
                }
                for p in 0..state.curves.len() {
                    if self.group_touches(&self.groups[q], &state.curves[p], rule) {
                        state.members[p].push(q);
                        state.used[q] = true;
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                break;
            }
            state.curves = self.refit(&state.members);
        }
    }

    /// Total strengthened score collected along the curves (nearest-bin).
    /// Times where a curve leaves the frequency grid contribute nothing.
    fn energy(&self, curves: &[Curve]) -> f64 {
        let l = self.len() as f64;
        let n_bins = self.slc.n_bins() as f64;
        curves
            .iter()
            .map(|c| {
                (0..self.len())
                    .map(|n| {
                        let bin = c.eval(n as f64 / l);
                        if bin < -0.5 || bin >= n_bins - 0.5 {
                            0.0
                        } else {
                            self.slc.at_rounded(n, bin)
                        }
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Mode whose curve passes closest to the group, by mean distance.
    fn closest_mode(&self, curves: &[Curve], group: &RidgeGroup) -> usize {
        let l = self.len() as f64;
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (p, curve) in curves.iter().enumerate() {
            let cost: f64 = group
                .points()
                .iter()
                .map(|&(n, k)| (k as f64 - curve.eval(n as f64 / l)).abs())
                .sum::<f64>()
                / group.points().len() as f64;
            if cost < best_cost {
                best_cost = cost;
                best = p;
            }
        }
        best
    }

    /// Strict frequency ordering of the curves at every grid time.
    fn non_intersecting(&self, curves: &[Curve]) -> bool {
        let l = self.len() as f64;
        for n in 0..self.len() {
            let t = n as f64 / l;
            for pair in curves.windows(2) {
                if pair[0].eval(t) >= pair[1].eval(t) {
                    return false;
                }
            }
        }
        true
    }

    /// Initial member sets: the first prefix of the energy-ranked groups in
    /// which `want` of them cover a common time index, ordered by frequency
    /// at that index. Falls back to fewer modes when no such prefix exists.
    fn seed(&self, want: usize) -> Result<Vec<Vec<usize>>> {
        let len = self.len();
        // Largest achievable multiplicity over all times.
        let mut counts = vec![0u32; len];
        let mut reachable = 0u32;
        for group in self.groups {
            for &(n, _) in group.points() {
                counts[n] += 1;
                reachable = reachable.max(counts[n]);
            }
        }
        let target = (want as u32).min(reachable);
        if target == 0 {
            return Err(Error::NoGroups);
        }

        counts.fill(0);
        let mut stop = None;
        'outer: for (q, group) in self.groups.iter().enumerate() {
            for &(n, _) in group.points() {
                counts[n] += 1;
                if counts[n] == target {
                    stop = Some((q, n));
                    break 'outer;
                }
            }
        }
        let (q0, n_star) = stop.expect("target multiplicity is reachable");
        let mut chosen: Vec<usize> = (0..=q0)
            .filter(|&q| self.groups[q].covers(n_star))
            .take(target as usize)
            .collect();
        chosen.sort_by_key(|&q| self.groups[q].bin_at(n_star).unwrap());
        Ok(chosen.into_iter().map(|q| vec![q]).collect())
    }

    fn run(&self, want: usize) -> Result<RidgeFit> {
        let members = self.seed(want)?;
        let mut used = vec![false; self.groups.len()];
        for set in &members {
            for &q in set {
                used[q] = true;
            }
        }
        let curves = self.refit(&members);
        let mut state = FitState {
            members,
            used,
            curves,
            energy: 0.0,
        };
        self.absorb(&mut state, SlabRule::PureHarmonic);
        state.energy = self.energy(&state.curves);

        let initial_energy = state.energy;
        let mut trace = vec![initial_energy];
        let mut snapshots = vec![state.clone()];

        // Accept/reject scan over the remaining groups, in energy order.
        for q in 0..self.groups.len() {
            if state.used[q] {
                continue;
            }
            let mut candidate = state.clone();
            let mode = self.closest_mode(&candidate.curves, &self.groups[q]);
            candidate.members[mode].push(q);
            candidate.used[q] = true;
            candidate.curves = self.refit(&candidate.members);
            self.absorb(&mut candidate, SlabRule::PureHarmonic);
            candidate.energy = self.energy(&candidate.curves);
            if candidate.energy > state.energy {
                trace.push(candidate.energy);
                snapshots.push(candidate.clone());
                state = candidate;
            }
        }

        // Post-processing: rerun absorption with chirp-aware slabs. Kept
        // only when it does not lose curve energy, so the accepted-energy
        // trace stays monotone.
        let mut post = state.clone();
        self.absorb(&mut post, SlabRule::LinearChirp);
        post.energy = self.energy(&post.curves);
        if post.energy >= state.energy {
            trace.push(post.energy);
            snapshots.push(post.clone());
            state = post;
        }

        let chosen = if self.non_intersecting(&state.curves) {
            state
        } else {
            snapshots
                .into_iter()
                .filter(|s| self.non_intersecting(&s.curves))
                .max_by(|a, b| a.energy.total_cmp(&b.energy))
                .ok_or(Error::AllCandidatesIntersect)?
        };

        let final_energy = chosen.energy;
        let bands = ridge_bands_for_curves(
            &chosen.curves,
            self.slc.sigma(),
            self.len(),
            self.slc.n_bins(),
            self.opts.literal_band_chirp,
        );
        let models = chosen
            .curves
            .into_iter()
            .zip(chosen.members)
            .map(|(curve, members)| RidgeModel { curve, members })
            .collect();
        Ok(RidgeFit {
            models,
            bands,
            initial_energy,
            energy_trace: trace,
            final_energy,
        })
    }
}

/// Fits `modes` polynomial ridge models of degree `degree` over the groups
/// (which must be sorted by decreasing energy, as [`crate::rrp::gather`]
/// returns them).
pub fn fit_polynomial_ridges(
    groups: &[RidgeGroup],
    slc: &SlcGrid,
    modes: usize,
    degree: usize,
) -> Result<RidgeFit> {
    fit_polynomial_ridges_with(groups, slc, modes, degree, FitOptions::default())
}

pub fn fit_polynomial_ridges_with(
    groups: &[RidgeGroup],
    slc: &SlcGrid,
    modes: usize,
    degree: usize,
    opts: FitOptions,
) -> Result<RidgeFit> {
    if modes == 0 {
        return Err(Error::InvalidParameter("mode count must be >= 1".into()));
    }
    if degree == 0 {
        return Err(Error::InvalidParameter("degree must be >= 1".into()));
    }
    let fitter = PolyFitter { degree };
    Driver {
        groups,
        slc,
        fitter: &fitter,
        opts,
    }
    .run(modes)
}

/// Fits a single smoothing-spline ridge model with a misfit budget of
/// `tol_bins` frequency bins (weighted RMS along the knots).
pub fn fit_spline_ridge(groups: &[RidgeGroup], slc: &SlcGrid, tol_bins: f64) -> Result<RidgeFit> {
    fit_spline_ridge_with(groups, slc, tol_bins, FitOptions::default())
}

pub fn fit_spline_ridge_with(
    groups: &[RidgeGroup],
    slc: &SlcGrid,
    tol_bins: f64,
    opts: FitOptions,
) -> Result<RidgeFit> {
    if !(tol_bins > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol_bins}"
        )));
    }
    let fitter = SplineFitter { tol_bins };
    Driver {
        groups,
        slc,
        fitter: &fitter,
        opts,
    }
    .run(1)
}

/// Frequency bands of fitted models: at each time the band spans three
/// linear-chirp standard deviations around the curve, and bands of adjacent
/// modes that overlap are split at their midpoint so that they partition
/// the union.
pub fn ridge_bands(
    models: &[RidgeModel],
    sigma: f64,
    len: usize,
    n_bins: usize,
    literal_chirp: bool,
) -> BandSet {
    let curves: Vec<Curve> = models.iter().map(|m| m.curve.clone()).collect();
    ridge_bands_for_curves(&curves, sigma, len, n_bins, literal_chirp)
}

fn ridge_bands_for_curves(
    curves: &[Curve],
    sigma: f64,
    len: usize,
    n_bins: usize,
    literal_chirp: bool,
) -> BandSet {
    let bin_hz = len as f64 / n_bins as f64;
    let bins_per_hz = n_bins as f64 / len as f64;
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let mut bands: Vec<Vec<(i64, i64)>> = vec![Vec::with_capacity(len); curves.len()];
    let mut at_time: Vec<(i64, i64)> = vec![(0, 0); curves.len()];
    for n in 0..len {
        let t = n as f64 / len as f64;
        for (p, curve) in curves.iter().enumerate() {
            let center = curve.eval(t);
            let chirp = if literal_chirp {
                curve.deriv(t)
            } else {
                curve.deriv(t) * bin_hz
            };
            let std_hz = (1.0 + sigma.powi(4) * chirp * chirp).sqrt() / (sqrt_2pi * sigma);
            let w = 3.0 * std_hz * bins_per_hz;
            let lo = ((center - w).floor() as i64).max(0);
            let hi = ((center + w).ceil() as i64).min(n_bins as i64 - 1);
            at_time[p] = (lo, hi);
        }
        split_adjacent_bands(&mut at_time);
        for (p, &band) in at_time.iter().enumerate() {
            bands[p].push(band);
        }
    }
    BandSet::from_raw(bands)
}

/// Splits overlapping bands of adjacent modes at the midpoint
/// `(hi_p + lo_{p+1}) / 2`, producing disjoint bands whose union matches
/// the union of the inputs. Bands must be ordered by increasing frequency.
pub(crate) fn split_adjacent_bands(bands: &mut [(i64, i64)]) {
    for p in 0..bands.len().saturating_sub(1) {
        let (lo_a, hi_a) = bands[p];
        let (lo_b, hi_b) = bands[p + 1];
        if lo_a > hi_a || lo_b > hi_b {
            continue; // empty band: nothing to split
        }
        if hi_a >= lo_b {
            let mid = (hi_a + lo_b).div_euclid(2);
            bands[p] = (lo_a, mid);
            bands[p + 1] = (mid + 1, hi_b.max(mid + 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rrp::{compute_slc, extract_rrps, gather};
    use crate::signal::{add_noise, synthesize, ModeSpec, PhaseLaw};
    use crate::tfr::{make_windows, modulation_estimate, stft};
    use ndarray::Array2;

    fn two_chirp_groups(
        snr_db: f64,
        seed: u64,
    ) -> (Vec<RidgeGroup>, SlcGrid, [ModeSpec; 2], usize, usize) {
        let len = 1024;
        let n_bins = 256;
        // Separation of ~100 bins dwarfs the ~10-bin gathering slab, as in
        // the benchmark presets; see `gather` for the bridging hazard when
        // modes come too close.
        let m1 = ModeSpec::unit(PhaseLaw::Linear {
            start_hz: 100.0,
            rate: 120.0,
        });
        let m2 = ModeSpec::unit(PhaseLaw::Linear {
            start_hz: 600.0,
            rate: 200.0,
        });
        let clean = synthesize(&[m1, m2], len).unwrap();
        let noisy = add_noise(&clean, snr_db, seed).unwrap();
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&noisy, &w).unwrap();
        let qhat = modulation_estimate(&noisy, &w).unwrap();
        let slc = compute_slc(&grid, &qhat).unwrap();
        let rrps = extract_rrps(&slc, &qhat, 2, 8, 1).unwrap();
        let groups = gather(&rrps, &slc, 20);
        (groups, slc, [m1, m2], len, n_bins)
    }

    #[test]
    fn noiseless_chirp_fits_within_one_bin() {
        let len = 1024;
        let n_bins = 256;
        let law = PhaseLaw::Linear {
            start_hz: 200.0,
            rate: 300.0,
        };
        let f = synthesize(&[ModeSpec::unit(law)], len).unwrap();
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let qhat = modulation_estimate(&f, &w).unwrap();
        let slc = compute_slc(&grid, &qhat).unwrap();
        let rrps = extract_rrps(&slc, &qhat, 1, 8, 1).unwrap();
        let groups = gather(&rrps, &slc, 20);
        let fit = fit_polynomial_ridges(&groups, &slc, 1, 5).unwrap();
        assert_eq!(fit.models.len(), 1);
        let bin_hz = len as f64 / n_bins as f64;
        for n in 0..len {
            let t = n as f64 / len as f64;
            let err = (fit.models[0].eval_bins(t) - law.freq(t) / bin_hz).abs();
            assert!(err < 1.0, "time {n}: {err:.3} bins off");
        }
    }

    #[test]
    fn exact_polynomial_group_is_interpolated() {
        // A single group lying on a cubic: the degree-5 fit reproduces it.
        let len = 256;
        let n_bins = 64;
        let curve = |t: f64| 10.0 + 30.0 * t - 15.0 * t * t + 8.0 * t * t * t;
        let points: Vec<(usize, usize)> = (40..200)
            .map(|n| {
                let t = n as f64 / len as f64;
                (n, curve(t).round() as usize)
            })
            .collect();
        // Scores: make the exact curve bins carry all the energy.
        let mut values = Array2::zeros((len, n_bins));
        for &(n, k) in &points {
            values[[n, k]] = 1.0;
        }
        let slc = SlcGrid::from_parts(values, 0.05, 0);
        let group = RidgeGroup::from_parts(points.clone(), 42.0);
        let fit = fit_polynomial_ridges(&[group], &slc, 1, 5).unwrap();
        // Residual at the sample points: zero for data in the model space
        // (up to rounding of the synthetic bins).
        for &(n, k) in &points {
            let t = n as f64 / len as f64;
            assert!((fit.models[0].eval_bins(t) - k as f64).abs() < 0.51);
        }
    }

    #[test]
    fn noisy_two_chirp_fit_recovers_both_modes() {
        let (groups, slc, modes, len, n_bins) = two_chirp_groups(-5.0, 33);
        let fit = fit_polynomial_ridges(&groups, &slc, 2, 5).unwrap();
        assert_eq!(fit.models.len(), 2);
        let bin_hz = len as f64 / n_bins as f64;
        let margin = slc.margin();
        for (model, mode) in fit.models.iter().zip(&modes) {
            let mut worst = 0.0f64;
            let mut sq = 0.0;
            let mut count = 0;
            for n in margin..len - margin {
                let t = n as f64 / len as f64;
                let err = (model.eval_bins(t) * bin_hz - mode.freq(t)).abs() / bin_hz;
                worst = worst.max(err);
                sq += err * err;
                count += 1;
            }
            let rms = (sq / count as f64).sqrt();
            assert!(worst < 4.0, "worst interior error {worst:.2} bins");
            assert!(rms < 1.5, "interior rms {rms:.2} bins");
        }
    }

    #[test]
    fn energy_trace_is_monotone_and_final_dominates() {
        let (groups, slc, _, _, _) = two_chirp_groups(-5.0, 33);
        let fit = fit_polynomial_ridges(&groups, &slc, 2, 5).unwrap();
        assert_eq!(fit.energy_trace[0], fit.initial_energy);
        for pair in fit.energy_trace.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert!(fit.final_energy >= fit.initial_energy);
    }

    #[test]
    fn final_curves_do_not_intersect() {
        for seed in [1u64, 7, 19] {
            let (groups, slc, _, len, _) = two_chirp_groups(-5.0, seed);
            let fit = fit_polynomial_ridges(&groups, &slc, 2, 5).unwrap();
            if fit.models.len() < 2 {
                continue;
            }
            for n in 0..len {
                let t = n as f64 / len as f64;
                assert!(
                    fit.models[0].eval_bins(t) < fit.models[1].eval_bins(t),
                    "intersection at n={n} (seed {seed})"
                );
            }
        }
    }

    #[test]
    fn global_energy_rescaling_preserves_the_fit() {
        let (groups, slc, _, len, _) = two_chirp_groups(-5.0, 3);
        let fit_a = fit_polynomial_ridges(&groups, &slc, 2, 5).unwrap();
        let scaled: Vec<RidgeGroup> = groups
            .iter()
            .map(|g| RidgeGroup::from_parts(g.points().to_vec(), g.energy() * 1.0e4))
            .collect();
        let fit_b = fit_polynomial_ridges(&scaled, &slc, 2, 5).unwrap();
        assert_eq!(fit_a.models.len(), fit_b.models.len());
        for (a, b) in fit_a.models.iter().zip(&fit_b.models) {
            for n in (0..len).step_by(37) {
                let t = n as f64 / len as f64;
                assert!(
                    (a.eval_bins(t) - b.eval_bins(t)).abs() < 1e-6,
                    "curves differ at t={t}"
                );
            }
        }
    }

    #[test]
    fn spline_path_tracks_a_curved_ridge() {
        let len = 1024;
        let n_bins = 256;
        let law = PhaseLaw::Exponential {
            start_hz: 100.0,
            growth: 1.5,
        };
        let f = synthesize(&[ModeSpec::unit(law)], len).unwrap();
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&f, &w).unwrap();
        let qhat = modulation_estimate(&f, &w).unwrap();
        let slc = compute_slc(&grid, &qhat).unwrap();
        let rrps = extract_rrps(&slc, &qhat, 1, 8, 1).unwrap();
        let groups = gather(&rrps, &slc, 20);
        let fit = fit_spline_ridge(&groups, &slc, 1.0).unwrap();
        let bin_hz = len as f64 / n_bins as f64;
        let margin = slc.margin();
        let mut sq = 0.0;
        let mut count = 0;
        for n in margin..len - margin {
            let t = n as f64 / len as f64;
            let err = (fit.models[0].eval_bins(t) * bin_hz - law.freq(t)).abs() / bin_hz;
            // The natural end condition trades edge accuracy for smoothness
            // within the misfit budget.
            assert!(err < 2.5, "time {n}: {err:.2} bins off");
            sq += err * err;
            count += 1;
        }
        let rms = (sq / count as f64).sqrt();
        assert!(rms < 1.0, "interior rms {rms:.2} bins");
    }

    #[test]
    fn zero_chirp_bands_have_constant_width() {
        // A constant integer-valued curve: half-width is the ceil of the
        // pure-harmonic three-sigma width.
        let len = 128;
        let n_bins = 64;
        let sigma = 0.05;
        let pts: Vec<(f64, f64, f64)> = (0..len)
            .map(|n| (n as f64 / len as f64, 20.0, 1.0))
            .collect();
        let model = RidgeModel {
            curve: Curve::Poly(poly::fit_weighted(&pts, 1)),
            members: vec![],
        };
        let bands = ridge_bands(&[model], sigma, len, n_bins, false);
        let w = 3.0 * n_bins as f64 / (len as f64 * (2.0 * std::f64::consts::PI).sqrt() * sigma);
        let half = w.ceil() as i64;
        for n in 0..len {
            assert_eq!(bands.raw(0, n), (20 - half, 20 + half));
        }
    }

    #[test]
    fn distant_bands_are_untouched_and_overlaps_partition() {
        let mut far = [(10i64, 20i64), (30, 40)];
        split_adjacent_bands(&mut far);
        assert_eq!(far, [(10, 20), (30, 40)]);

        let mut overlap = [(10i64, 25i64), (18, 40)];
        let union: Vec<i64> = (10..=40).collect();
        split_adjacent_bands(&mut overlap);
        assert!(overlap[0].1 < overlap[1].0, "disjoint after split");
        let rebuilt: Vec<i64> = (overlap[0].0..=overlap[0].1)
            .chain(overlap[1].0..=overlap[1].1)
            .collect();
        assert_eq!(rebuilt, union);
        assert_eq!(overlap[0].1, (25 + 18) / 2);
    }
}
