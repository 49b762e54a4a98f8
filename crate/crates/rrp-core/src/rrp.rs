//! Relevant ridge portions.
//!
//! Heavy noise splits a mode's ridge into short chains of local maxima, so
//! instead of forcing one full-span ridge per mode this module extracts the
//! portions that survive noise:
//!
//! 1. every spectrogram point is strengthened by summing `|V|^2` over the
//!    local linear-chirp bandwidth around it ([`compute_slc`]);
//! 2. from a seed column, `P` portions are grown by hopping to the nearest
//!    local maximum of the strengthened score, pruned to the `2P+1` largest
//!    maxima per column ([`grow_portions`]);
//! 3. a portion is *relevant* when the identical chain is reproduced for `s`
//!    consecutive seed columns ([`extract_rrps`]);
//! 4. relevant portions whose time-frequency neighborhoods intersect are
//!    gathered transitively into groups ([`gather`]).

use ndarray::Array2;
use std::collections::HashMap;

use crate::round_nearest;
use crate::tfr::{ModulationGrid, TfGrid};
use crate::{Error, Result};

/// Strengthened spectrogram score: at each point, the spectrogram energy
/// summed over the interval implied by the local chirp-rate estimate.
///
/// The grid also indexes the spectrogram local maxima of every column —
/// the candidate set for portion growth — ranked by their strengthened
/// score. The chirp-rate estimate is only trustworthy at spectral peaks, so
/// ridge chains hop across spectrogram maxima while the strengthened score
/// decides which of those maxima are worth following.
#[derive(Debug, Clone)]
pub struct SlcGrid {
    values: Array2<f64>,
    sigma: f64,
    margin: usize,
    maxima: MaximaIndex,
}

impl SlcGrid {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    #[inline]
    pub fn at(&self, n: usize, k: usize) -> f64 {
        self.values[[n, k]]
    }

    /// Score at a real-valued bin position, by nearest-bin lookup (clamped).
    pub fn at_rounded(&self, n: usize, bin: f64) -> f64 {
        let k = round_nearest(bin).clamp(0, self.n_bins() as i64 - 1) as usize;
        self.values[[n, k]]
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.values.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Window half-support of the grid this score was computed from; seed
    /// columns are restricted to `[margin, L-1-margin]`.
    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Linear-chirp standard deviation in Hz for a chirp rate `q`:
    /// `sqrt(1 + sigma^4 q^2) / (sqrt(2 pi) sigma)`.
    pub fn std_hz(&self, q: f64) -> f64 {
        (1.0 + self.sigma.powi(4) * q * q).sqrt()
            / ((2.0 * std::f64::consts::PI).sqrt() * self.sigma)
    }

    /// Pure-harmonic 3-sigma half-width in bins: `3N / (L sqrt(2 pi) sigma)`.
    pub fn ph_half_width_bins(&self) -> f64 {
        3.0 * self.n_bins() as f64
            / (self.len() as f64 * (2.0 * std::f64::consts::PI).sqrt() * self.sigma)
    }

    /// Number of candidate maxima in column `n`.
    pub fn maxima_count(&self, n: usize) -> usize {
        self.maxima.bins[n].len()
    }

    /// Whether `bin` ranks among the `limit` best candidates of column `n`.
    pub fn ranks_within(&self, n: usize, bin: usize, limit: usize) -> bool {
        self.maxima.in_top(n, bin as u32, limit)
    }

    #[cfg(test)]
    pub(crate) fn from_parts(values: Array2<f64>, sigma: f64, margin: usize) -> Self {
        let maxima = MaximaIndex::build(&values, &values);
        Self {
            values,
            sigma,
            margin,
            maxima,
        }
    }
}

/// Computes the strengthened score for every grid point.
///
/// At `(n, k)` the interval half-width is the linear-chirp standard
/// deviation for the local chirp-rate estimate, converted to bins; the score
/// is `sum |V[n, j]|^2` over `j` in that interval (clipped to the grid), so
/// it always includes the center bin.
pub fn compute_slc(grid: &TfGrid, qhat: &ModulationGrid) -> Result<SlcGrid> {
    let (len, n_bins) = (grid.len(), grid.n_bins());
    if qhat.len() != len || qhat.n_bins() != n_bins {
        return Err(Error::LengthMismatch {
            left: qhat.len(),
            right: len,
        });
    }
    let sigma = grid.window().sigma();
    let bins_per_hz = n_bins as f64 / len as f64;
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();

    let power = grid.power();
    let mut values = Array2::zeros((len, n_bins));
    let mut prefix = vec![0.0f64; n_bins + 1];
    for n in 0..len {
        prefix[0] = 0.0;
        for k in 0..n_bins {
            prefix[k + 1] = prefix[k] + power[[n, k]];
        }
        for k in 0..n_bins {
            let q = qhat.at(n, k);
            let std_hz = (1.0 + sigma.powi(4) * q * q).sqrt() / (sqrt_2pi * sigma);
            let w = std_hz * bins_per_hz;
            let lo = (k as f64 - w).floor().max(0.0) as usize;
            let hi = ((k as f64 + w).ceil() as usize).min(n_bins - 1);
            values[[n, k]] = prefix[hi + 1] - prefix[lo];
        }
    }
    let maxima = MaximaIndex::build(&power, &values);
    Ok(SlcGrid {
        values,
        sigma,
        margin: grid.window().half_support(),
        maxima,
    })
}

/// A time-contiguous chain of strengthened local maxima, one bin per time
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePortion {
    start: usize,
    bins: Vec<u32>,
    energy: f64,
    origin: usize,
}

impl RidgePortion {
    /// First time index of the chain.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Last time index of the chain (inclusive).
    pub fn end(&self) -> usize {
        self.start + self.bins.len() - 1
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bin at time `n`, when the chain covers it.
    pub fn bin_at(&self, n: usize) -> Option<usize> {
        if n < self.start || n > self.end() {
            None
        } else {
            Some(self.bins[n - self.start] as usize)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .map(move |(i, &k)| (self.start + i, k as usize))
    }

    /// Sum of the strengthened score over the chain.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Seed column the chain was first grown from.
    pub fn origin(&self) -> usize {
        self.origin
    }
}

/// Spectrogram local maxima of each column, ranked by strengthened score.
///
/// A local maximum is strictly greater than both frequency neighbors;
/// boundary bins are excluded and a plateau counts once, at its lowest bin.
#[derive(Debug, Clone)]
struct MaximaIndex {
    /// Per column, maxima bins in ascending order.
    bins: Vec<Vec<u32>>,
    /// Per column, maxima bins sorted by (score desc, bin asc).
    ranked: Vec<Vec<u32>>,
}

impl MaximaIndex {
    /// Finds the local maxima of each `peaks` row and ranks them by the
    /// corresponding `score` value.
    fn build(peaks: &Array2<f64>, score: &Array2<f64>) -> Self {
        let (len, n_bins) = peaks.dim();
        let mut bins = Vec::with_capacity(len);
        let mut ranked = Vec::with_capacity(len);
        for n in 0..len {
            let row = peaks.row(n);
            let row = row.as_slice().unwrap();
            let mut maxima: Vec<u32> = Vec::new();
            let mut k = 1;
            while k < n_bins - 1 {
                // Plateau run [k, run_end] of equal values.
                let mut run_end = k;
                while run_end + 1 < n_bins && row[run_end + 1] == row[k] {
                    run_end += 1;
                }
                if row[k] > row[k - 1] && run_end + 1 < n_bins && row[k] > row[run_end + 1] {
                    maxima.push(k as u32);
                }
                k = run_end + 1;
            }
            let mut by_value = maxima.clone();
            by_value.sort_by(|&a, &b| {
                score[[n, b as usize]]
                    .total_cmp(&score[[n, a as usize]])
                    .then(a.cmp(&b))
            });
            bins.push(maxima);
            ranked.push(by_value);
        }
        Self { bins, ranked }
    }

    /// Nearest maximum to the predicted bin; ties resolve to the lower bin.
    fn nearest(&self, n: usize, predicted: i64) -> Option<u32> {
        let col = &self.bins[n];
        if col.is_empty() {
            return None;
        }
        let pos = col.partition_point(|&b| (b as i64) < predicted);
        let right = col.get(pos).copied();
        let left = pos.checked_sub(1).map(|i| col[i]);
        match (left, right) {
            (Some(l), Some(r)) => {
                let dl = (predicted - l as i64).abs();
                let dr = (r as i64 - predicted).abs();
                Some(if dl <= dr { l } else { r })
            }
            (Some(l), None) => Some(l),
            (None, Some(r)) => Some(r),
            (None, None) => None,
        }
    }

    /// Whether `bin` ranks among the `limit` largest maxima of column `n`.
    fn in_top(&self, n: usize, bin: u32, limit: usize) -> bool {
        self.ranked[n].iter().take(limit).any(|&b| b == bin)
    }

    /// The `count` largest maxima of column `n`.
    fn seeds(&self, n: usize, count: usize) -> &[u32] {
        let col = &self.ranked[n];
        &col[..count.min(col.len())]
    }
}

fn grow_one(
    slc: &SlcGrid,
    qhat: &ModulationGrid,
    n0: usize,
    seed: u32,
    prune_limit: usize,
) -> RidgePortion {
    let index = &slc.maxima;
    let len = slc.len();
    let drift_scale = slc.n_bins() as f64 / (len as f64 * len as f64);
    let mut forward: Vec<u32> = Vec::new();
    let mut backward: Vec<u32> = Vec::new();

    for (dir, out) in [(1i64, &mut forward), (-1i64, &mut backward)] {
        let mut n = n0;
        let mut k = seed;
        loop {
            let next = n as i64 + dir;
            if next < 0 || next >= len as i64 {
                break;
            }
            let next = next as usize;
            let drift = round_nearest(qhat.at(n, k as usize) * drift_scale);
            let predicted = k as i64 + dir * drift;
            let Some(candidate) = index.nearest(next, predicted) else {
                break;
            };
            if !index.in_top(next, candidate, prune_limit) {
                break;
            }
            out.push(candidate);
            n = next;
            k = candidate;
        }
    }

    backward.reverse();
    let start = n0 - backward.len();
    let mut bins = backward;
    bins.push(seed);
    bins.extend_from_slice(&forward);
    let energy = bins
        .iter()
        .enumerate()
        .map(|(i, &k)| slc.at(start + i, k as usize))
        .sum();
    RidgePortion {
        start,
        bins,
        energy,
        origin: n0,
    }
}

/// Grows up to `modes` portions from seed column `n0`.
///
/// Seeds are the `modes` candidates of the column with the largest
/// strengthened score (fewer when the column does not have that many). Each
/// chain extends forward and backward: the next point is the candidate
/// maximum nearest to the drift-predicted bin, and the chain stops as soon
/// as that candidate does not rank among the `2*modes+1` best of its column.
pub fn grow_portions(
    slc: &SlcGrid,
    qhat: &ModulationGrid,
    n0: usize,
    modes: usize,
) -> Vec<RidgePortion> {
    let prune_limit = 2 * modes + 1;
    slc.maxima
        .seeds(n0, modes)
        .to_vec()
        .into_iter()
        .map(|seed| grow_one(slc, qhat, n0, seed, prune_limit))
        .collect()
}

/// Extracts the relevant ridge portions at stability scale `s`.
///
/// Portions are grown from every seed column in `[margin, L-1-margin]`
/// (stride `init_stride`); a chain qualifies when the identical chain shows
/// up in the output of `s` consecutive seed columns. Duplicates collapse to
/// one portion whose origin is the first seed that produced it. The result
/// is deterministic: portions are listed in first-seen order.
pub fn extract_rrps(
    slc: &SlcGrid,
    qhat: &ModulationGrid,
    modes: usize,
    scale: usize,
    init_stride: usize,
) -> Result<Vec<RidgePortion>> {
    if scale == 0 {
        return Err(Error::InvalidParameter("scale must be >= 1".into()));
    }
    if init_stride == 0 {
        return Err(Error::InvalidParameter("init stride must be >= 1".into()));
    }
    let len = slc.len();
    let lo = slc.margin.min(len - 1);
    let hi = len.saturating_sub(1 + slc.margin);
    if hi < lo {
        return Ok(Vec::new());
    }

    // Chain -> (first-seen order, seed ordinals that reproduced it).
    let mut seen: HashMap<(usize, Vec<u32>), (usize, Vec<usize>)> = HashMap::new();
    let mut order: Vec<(usize, Vec<u32>, usize)> = Vec::new(); // (start, bins, first origin)
    for (ordinal, n0) in (lo..=hi).step_by(init_stride).enumerate() {
        for portion in grow_portions(slc, qhat, n0, modes) {
            let key = (portion.start, portion.bins);
            match seen.get_mut(&key) {
                Some((_, ordinals)) => ordinals.push(ordinal),
                None => {
                    let id = order.len();
                    order.push((key.0, key.1.clone(), n0));
                    seen.insert(key, (id, vec![ordinal]));
                }
            }
        }
    }

    let mut relevant: Vec<Option<RidgePortion>> = vec![None; order.len()];
    for ((start, bins), (id, ordinals)) in seen {
        let mut stable = scale == 1;
        let mut run = 1usize;
        for pair in ordinals.windows(2) {
            if pair[1] == pair[0] + 1 {
                run += 1;
            } else {
                run = 1;
            }
            if run >= scale {
                stable = true;
                break;
            }
        }
        if stable {
            let energy = bins
                .iter()
                .enumerate()
                .map(|(i, &k)| slc.at(start + i, k as usize))
                .sum();
            relevant[id] = Some(RidgePortion {
                start,
                bins,
                energy,
                origin: order[id].2,
            });
        }
    }
    Ok(relevant.into_iter().flatten().collect())
}

/// A gathered set of portions belonging to one mode: at most one
/// time-frequency point per time index, plus the total strengthened energy
/// of the underlying union.
#[derive(Debug, Clone)]
pub struct RidgeGroup {
    points: Vec<(usize, usize)>,
    energy: f64,
    members: Vec<usize>,
}

impl RidgeGroup {
    /// Deduplicated points, sorted by time, one per time index.
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    /// Total score of the union of member portions (before per-time
    /// deduplication).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Indices into the gathered portion list.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn min_time(&self) -> usize {
        self.points.first().map(|&(n, _)| n).unwrap_or(0)
    }

    pub fn max_time(&self) -> usize {
        self.points.last().map(|&(n, _)| n).unwrap_or(0)
    }

    /// True when the group has a point at time `n`.
    pub fn covers(&self, n: usize) -> bool {
        self.points.binary_search_by_key(&n, |&(t, _)| t).is_ok()
    }

    /// Bin of the group's point at time `n`, when covered.
    pub fn bin_at(&self, n: usize) -> Option<usize> {
        self.points
            .binary_search_by_key(&n, |&(t, _)| t)
            .ok()
            .map(|i| self.points[i].1)
    }

    #[cfg(test)]
    pub(crate) fn from_parts(points: Vec<(usize, usize)>, energy: f64) -> Self {
        Self {
            points,
            energy,
            members: Vec::new(),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, mut id: usize) -> usize {
        while self.parent[id] != id {
            self.parent[id] = self.parent[self.parent[id]];
            id = self.parent[id];
        }
        id
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            self.parent[ra] = rb;
            self.size[rb] += self.size[ra];
        } else {
            self.parent[rb] = ra;
            self.size[ra] += self.size[rb];
        }
    }
}

/// Gathers portions whose neighborhoods intersect, transitively.
///
/// A portion's neighborhood is the pure-harmonic 3-sigma slab around each of
/// its points, extended `delta_t` time bins outward past each end (at the
/// end frequency). Within a group, per-time conflicts keep the point coming
/// from the member with the largest own energy (ties to the lower bin), and
/// the groups are returned by decreasing energy.
///
/// The output is invariant under permutation of the input list.
pub fn gather(portions: &[RidgePortion], slc: &SlcGrid, delta_t: usize) -> Vec<RidgeGroup> {
    let len = slc.len();
    let n_bins = slc.n_bins() as i64;
    let w = slc.ph_half_width_bins();
    let slab = |k: usize| -> (i64, i64) {
        let lo = (k as f64 - w).floor().max(0.0) as i64;
        let hi = ((k as f64 + w).ceil() as i64).min(n_bins - 1);
        (lo, hi)
    };

    // Per-column interval lists: overlapping intervals on the same column
    // mean intersecting neighborhoods.
    let mut columns: Vec<Vec<(i64, i64, usize)>> = vec![Vec::new(); len];
    for (id, portion) in portions.iter().enumerate() {
        for (n, k) in portion.points() {
            let (lo, hi) = slab(k);
            columns[n].push((lo, hi, id));
        }
        let (first_lo, first_hi) = slab(portion.bins[0] as usize);
        for n in portion.start.saturating_sub(delta_t)..portion.start {
            columns[n].push((first_lo, first_hi, id));
        }
        let (last_lo, last_hi) = slab(*portion.bins.last().unwrap() as usize);
        for n in portion.end() + 1..=(portion.end() + delta_t).min(len - 1) {
            columns[n].push((last_lo, last_hi, id));
        }
    }

    let mut uf = UnionFind::new(portions.len());
    for column in &mut columns {
        column.sort_unstable();
        let mut reach: Option<(i64, usize)> = None; // (max hi so far, any id in the run)
        for &(lo, hi, id) in column.iter() {
            match reach {
                Some((cur_hi, cur_id)) if lo <= cur_hi => {
                    uf.union(cur_id, id);
                    reach = Some((cur_hi.max(hi), cur_id));
                }
                _ => reach = Some((hi, id)),
            }
        }
    }

    // Collect members per root, ordered by portion index for determinism.
    let mut clusters: HashMap<usize, Vec<usize>> = HashMap::new();
    for id in 0..portions.len() {
        clusters.entry(uf.find(id)).or_default().push(id);
    }

    let mut groups: Vec<RidgeGroup> = clusters
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            // Union of member points: per (n, k) keep the best source energy.
            let mut union: HashMap<(usize, usize), f64> = HashMap::new();
            for &id in &members {
                let source = portions[id].energy();
                for point in portions[id].points() {
                    union
                        .entry(point)
                        .and_modify(|e| *e = e.max(source))
                        .or_insert(source);
                }
            }
            let energy: f64 = union.keys().map(|&(n, k)| slc.at(n, k)).sum();
            // One point per time index: strongest source, then lower bin.
            let mut per_time: HashMap<usize, (f64, usize)> = HashMap::new();
            for (&(n, k), &source) in &union {
                per_time
                    .entry(n)
                    .and_modify(|best| {
                        if source > best.0 || (source == best.0 && k < best.1) {
                            *best = (source, k);
                        }
                    })
                    .or_insert((source, k));
            }
            let mut points: Vec<(usize, usize)> =
                per_time.into_iter().map(|(n, (_, k))| (n, k)).collect();
            points.sort_unstable();
            RidgeGroup {
                points,
                energy,
                members,
            }
        })
        .collect();

    groups.sort_by(|a, b| {
        b.energy
            .total_cmp(&a.energy)
            .then_with(|| a.points.cmp(&b.points))
    });
    groups
}
