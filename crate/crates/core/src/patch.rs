//! Nonlocal self-similarity: group similar patches, complete each stacked group
//! as a low-rank quaternion matrix, and average the reconstructions back.
//!
//! Patches are addressed by their top-left pixel. A patch has `patch_rows`
//! rows and `patch_cols` columns and is vectorized column by column, so pixel
//! `(r, c)` of the patch lands at index `c·patch_rows + r`.
//!
//! The engine works on a stack of slices (one for an image, one per frame for
//! a video). Groups are matched and solved in parallel; their contributions
//! are merged in key order, so the output does not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::clip_to_pixels;
use crate::mask::ObservationMask;
use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;
use crate::solver::{self, SolverConfig};

/// How member patches are weighted when overlapping reconstructions are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `exp(−f²/σ²)` with `f` the distance to the key patch and `σ` the median
    /// distance within the group.
    Similarity,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSpec {
    pub patch_rows: usize,
    pub patch_cols: usize,
    /// Spacing of the key-patch grid.
    pub stride: usize,
    /// Number of patches per group, including the key patch.
    pub group_size: usize,
    /// Searching window size; 0 searches the whole slice.
    pub window: usize,
    pub weighting: Weighting,
    /// Passes of match/solve/aggregate; later passes match on the previous output.
    pub outer_iters: usize,
    /// Side of the square blocks processed independently; 0 disables tiling.
    pub block: usize,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            patch_rows: 6,
            patch_cols: 6,
            stride: 3,
            group_size: 60,
            window: 20,
            weighting: Weighting::Similarity,
            outer_iters: 1,
            block: 0,
        }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.patch_rows == 0 || self.patch_cols == 0 {
            return Err(Error::param("patch", "patch sides must be positive"));
        }
        if self.stride == 0 || self.stride > self.patch_rows.min(self.patch_cols) {
            return Err(Error::param(
                "stride",
                format!("must lie in 1..={}, got {}", self.patch_rows.min(self.patch_cols), self.stride),
            ));
        }
        if self.group_size == 0 {
            return Err(Error::param("group_size", "must be at least 1"));
        }
        if self.outer_iters == 0 {
            return Err(Error::param("outer_iters", "must be at least 1"));
        }
        if self.block != 0 && (self.block < self.patch_rows || self.block < self.patch_cols) {
            return Err(Error::param("block", "blocks must be at least as large as a patch"));
        }
        Ok(())
    }

    fn check_fits(&self, rows: usize, cols: usize) -> Result<()> {
        if self.patch_rows > rows || self.patch_cols > cols {
            return Err(Error::PatchTooLarge {
                w: self.patch_rows,
                h: self.patch_cols,
                rows,
                cols,
            });
        }
        Ok(())
    }

    /// Number of valid top-left positions along rows and columns.
    fn positions(&self, rows: usize, cols: usize) -> (usize, usize) {
        (rows - self.patch_rows + 1, cols - self.patch_cols + 1)
    }
}

/// Half-width of a searching window of size `window`: `(D−1)/2` for odd `D`,
/// `D/2` for even `D`, `None` for a whole-slice search.
pub fn window_half_width(window: usize) -> Option<usize> {
    match window {
        0 => None,
        d if d % 2 == 1 => Some((d - 1) / 2),
        d => Some(d / 2),
    }
}

/// Positions `(s, t)` in `0..rows × 0..cols` with `max(|s−i|, |t−j|)` within the
/// half-width of `window`, in row-major order.
pub fn search_window(i: usize, j: usize, window: usize, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let (r0, r1, c0, c1) = match window_half_width(window) {
        None => (0, rows, 0, cols),
        Some(hw) => (i.saturating_sub(hw), (i + hw + 1).min(rows), j.saturating_sub(hw), (j + hw + 1).min(cols)),
    };
    (r0..r1).flat_map(|s| (c0..c1).map(move |t| (s, t))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchPos {
    pub slice: usize,
    pub row: usize,
    pub col: usize,
}

impl PatchPos {
    pub fn new(slice: usize, row: usize, col: usize) -> Self {
        PatchPos { slice, row, col }
    }
}

/// A key patch and its most similar patches. `members[0]` is the key and
/// `distances` (Frobenius, to the key) are nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGroup {
    pub key: PatchPos,
    pub members: Vec<PatchPos>,
    pub distances: Vec<f64>,
}

pub fn extract_patch(x: &QMatrix, row: usize, col: usize, patch_rows: usize, patch_cols: usize) -> Result<QMatrix> {
    if patch_rows > x.rows() || patch_cols > x.cols() {
        return Err(Error::PatchTooLarge {
            w: patch_rows,
            h: patch_cols,
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    if row + patch_rows > x.rows() || col + patch_cols > x.cols() {
        return Err(Error::param("position", format!("patch at ({row}, {col}) leaves the image")));
    }
    Ok(x.block(row, col, patch_rows, patch_cols))
}

pub fn insert_patch(x: &mut QMatrix, row: usize, col: usize, patch: &QMatrix) -> Result<()> {
    if row + patch.rows() > x.rows() || col + patch.cols() > x.cols() {
        return Err(Error::param("position", format!("patch at ({row}, {col}) leaves the image")));
    }
    x.set_block(row, col, patch);
    Ok(())
}

/// Column-major vectorization of a patch.
pub fn vec_patch(p: &QMatrix) -> Vec<Quaternion> {
    let mut out = Vec::with_capacity(p.len());
    for c in 0..p.cols() {
        for r in 0..p.rows() {
            out.push(p.get(r, c));
        }
    }
    out
}

/// Inverse of [`vec_patch`].
pub fn unvec_patch(v: &[Quaternion], patch_rows: usize, patch_cols: usize) -> QMatrix {
    QMatrix::from_fn(patch_rows, patch_cols, |r, c| v[c * patch_rows + r])
}

/// Top-left corners of the key patches: every `stride` pixels, plus the last
/// valid offset in each direction so that the key patches cover the slice.
pub fn key_patch_grid(rows: usize, cols: usize, spec: &PatchSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    spec.check_fits(rows, cols)?;
    let axis = |n: usize, p: usize| {
        let last = n - p;
        let mut v: Vec<usize> = (0..=last).step_by(spec.stride).collect();
        if *v.last().expect("offset 0 always present") != last {
            v.push(last);
        }
        v
    };
    let rs = axis(rows, spec.patch_rows);
    let cs = axis(cols, spec.patch_cols);
    Ok(rs.iter().flat_map(|&r| cs.iter().map(move |&c| (r, c))).collect())
}

/// Squared Frobenius distance between the patches at `(ar, ac)` of `a` and
/// `(br, bc)` of `b`. Summation runs plane by plane, row-major within the patch.
fn sq_dist(a: &QMatrix, ar: usize, ac: usize, b: &QMatrix, br: usize, bc: usize, pr: usize, pc: usize) -> f64 {
    let (aw, bw) = (a.cols(), b.cols());
    let mut acc = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        for r in 0..pr {
            let ra = &pa[(ar + r) * aw + ac..(ar + r) * aw + ac + pc];
            let rb = &pb[(br + r) * bw + bc..(br + r) * bw + bc + pc];
            for (x, y) in ra.iter().zip(rb) {
                let d = x - y;
                acc += d * d;
            }
        }
    }
    acc
}

/// `‖A − B‖_F`.
pub fn patch_distance(a: &QMatrix, b: &QMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    Ok(sq_dist(a, 0, 0, b, 0, 0, a.rows(), a.cols()).sqrt())
}

/// Positive weights `a(ς, ϑ)` on the offsets `|ς|, |ϑ| ≤ radius`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetWeights {
    radius: usize,
    values: Vec<f64>,
}

impl OffsetWeights {
    pub fn new(radius: usize, values: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if values.len() != side * side {
            return Err(Error::dims(format!("{} weights", side * side), format!("{}", values.len())));
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::param("weights", "offset weights must be positive"));
        }
        Ok(OffsetWeights { radius, values })
    }

    pub fn uniform(radius: usize) -> Self {
        let side = 2 * radius + 1;
        OffsetWeights {
            radius,
            values: vec![1.0; side * side],
        }
    }

    pub fn gaussian(radius: usize, sigma: f64) -> Self {
        let side = 2 * radius + 1;
        let r = radius as f64;
        let values = (0..side * side)
            .map(|n| {
                let (y, x) = ((n / side) as f64 - r, (n % side) as f64 - r);
                (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        OffsetWeights { radius, values }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn get(&self, dr: isize, dc: isize) -> f64 {
        let side = 2 * self.radius + 1;
        let r = self.radius as isize;
        self.values[((dr + r) as usize) * side + (dc + r) as usize]
    }
}

/// Weighted mean of squared distances between the patch pairs shifted by each
/// offset of `weights`. Shifts that push either patch out of its slice are left
/// out and the remaining weights renormalized.
pub fn weighted_patch_distance(
    a: &QMatrix,
    (s, t): (usize, usize),
    b: &QMatrix,
    (i, j): (usize, usize),
    patch_rows: usize,
    patch_cols: usize,
    weights: &OffsetWeights,
) -> Result<f64> {
    if row_col_fits(a, s, t, patch_rows, patch_cols).is_none() || row_col_fits(b, i, j, patch_rows, patch_cols).is_none() {
        return Err(Error::param("position", "patch leaves the image"));
    }
    let r = weights.radius as isize;
    let mut num = 0.0;
    let mut den = 0.0;
    for dr in -r..=r {
        for dc in -r..=r {
            let pa = shifted(a, s, t, dr, dc, patch_rows, patch_cols);
            let pb = shifted(b, i, j, dr, dc, patch_rows, patch_cols);
            if let (Some((sr, sc)), Some((ir, ic))) = (pa, pb) {
                let wgt = weights.get(dr, dc);
                num += wgt * sq_dist(a, sr, sc, b, ir, ic, patch_rows, patch_cols);
                den += wgt;
            }
        }
    }
    Ok(num / den)
}

fn row_col_fits(x: &QMatrix, r: usize, c: usize, pr: usize, pc: usize) -> Option<(usize, usize)> {
    (r + pr <= x.rows() && c + pc <= x.cols()).then_some((r, c))
}

fn shifted(x: &QMatrix, r: usize, c: usize, dr: isize, dc: isize, pr: usize, pc: usize) -> Option<(usize, usize)> {
    let r = r.checked_add_signed(dr)?;
    let c = c.checked_add_signed(dc)?;
    row_col_fits(x, r, c, pr, pc)
}

/// Block matching across all slices of `refs`: candidates are the positions in
/// the searching window around the key on every slice. The key comes first;
/// the rest are ordered by (distance, slice, row, col) and the best
/// `group_size − 1` kept.
pub(crate) fn match_in_slices(refs: &[QMatrix], key: PatchPos, spec: &PatchSpec) -> Result<PatchGroup> {
    let (rows, cols) = refs[key.slice].shape();
    spec.check_fits(rows, cols)?;
    let (pr, pc) = (spec.patch_rows, spec.patch_cols);
    let (nr, nc) = spec.positions(rows, cols);
    if key.row >= nr || key.col >= nc {
        return Err(Error::param("key", format!("patch at ({}, {}) leaves the image", key.row, key.col)));
    }
    let win = search_window(key.row, key.col, spec.window, nr, nc);
    let found = win.len() * refs.len();
    if found < spec.group_size {
        return Err(Error::TooFewCandidates {
            found,
            needed: spec.group_size,
        });
    }
    let kref = &refs[key.slice];
    let mut cand: Vec<(f64, PatchPos)> = Vec::with_capacity(found - 1);
    for (k, slice) in refs.iter().enumerate() {
        for &(s, t) in &win {
            let pos = PatchPos::new(k, s, t);
            if pos != key {
                cand.push((sq_dist(kref, key.row, key.col, slice, s, t, pr, pc), pos));
            }
        }
    }
    let keep = spec.group_size - 1;
    let by_rank = |a: &(f64, PatchPos), b: &(f64, PatchPos)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if keep < cand.len() {
        cand.select_nth_unstable_by(keep, by_rank);
        cand.truncate(keep);
    }
    cand.sort_unstable_by(by_rank);

    let mut members = Vec::with_capacity(spec.group_size);
    let mut distances = Vec::with_capacity(spec.group_size);
    members.push(key);
    distances.push(0.0);
    for (d2, pos) in cand {
        members.push(pos);
        distances.push(d2.sqrt());
    }
    Ok(PatchGroup { key, members, distances })
}

/// The `group_size` patches most similar to the key patch at `key`, searched in
/// the window of `spec` (or the whole image when the window is 0).
pub fn match_block(reference: &QMatrix, key: (usize, usize), spec: &PatchSpec) -> Result<PatchGroup> {
    spec.validate()?;
    match_in_slices(std::slice::from_ref(reference), PatchPos::new(0, key.0, key.1), spec)
}

/// Stacks the vectorized members as columns; an entry of the stacked mask is
/// observed iff its source pixel is.
pub(crate) fn stack_slices(
    slices: &[QMatrix],
    masks: &[ObservationMask],
    members: &[PatchPos],
    patch_rows: usize,
    patch_cols: usize,
) -> (QMatrix, ObservationMask) {
    let m = patch_rows * patch_cols;
    let d = members.len();
    let mut planes: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; m * d]);
    let mut flags = vec![false; m * d];
    for (k, pos) in members.iter().enumerate() {
        let src = slices[pos.slice].planes();
        let cols = slices[pos.slice].cols();
        let mask = &masks[pos.slice];
        for c in 0..patch_cols {
            for r in 0..patch_rows {
                let n = (pos.row + r) * cols + pos.col + c;
                let dst = (c * patch_rows + r) * d + k;
                for p in 0..4 {
                    planes[p][dst] = src[p][n];
                }
                flags[dst] = mask.at(n);
            }
        }
    }
    (
        QMatrix::from_planes(m, d, planes).expect("sizes agree"),
        ObservationMask::from_flags(m, d, flags).expect("sizes agree"),
    )
}

/// `(wh) × d` matrix whose column `k` is the vectorized member `k`, with the
/// matching stacked mask.
pub fn stack_group(
    x: &QMatrix,
    mask: &ObservationMask,
    group: &PatchGroup,
    spec: &PatchSpec,
) -> Result<(QMatrix, ObservationMask)> {
    if x.shape() != mask.shape() {
        return Err(Error::dims(
            format!("{}x{}", x.rows(), x.cols()),
            format!("{}x{}", mask.rows(), mask.cols()),
        ));
    }
    let (nr, nc) = spec.positions(x.rows(), x.cols());
    if group.members.iter().any(|p| p.slice != 0 || p.row >= nr || p.col >= nc) {
        return Err(Error::param("group", "member patch leaves the image"));
    }
    Ok(stack_slices(
        std::slice::from_ref(x),
        std::slice::from_ref(mask),
        &group.members,
        spec.patch_rows,
        spec.patch_cols,
    ))
}

/// Stacked matrices of `samples` groups whose keys are spread evenly over the
/// key grid of a fully observed image, in key order.
pub fn sample_group_matrices(x: &QMatrix, spec: &PatchSpec, samples: usize) -> Result<Vec<(PatchGroup, QMatrix)>> {
    let keys = key_patch_grid(x.rows(), x.cols(), spec)?;
    let n = samples.min(keys.len());
    let full = ObservationMask::full(x.rows(), x.cols());
    (0..n)
        .map(|s| {
            let key = keys[s * keys.len() / n];
            let group = match_block(x, key, spec)?;
            let (m, _) = stack_group(x, &full, &group, spec)?;
            Ok((group, m))
        })
        .collect()
}

/// A solved group: column `k` of `patches` is the reconstruction of member `k`.
#[derive(Debug, Clone)]
pub struct ReconstructedGroup {
    pub group: PatchGroup,
    pub patches: QMatrix,
    pub weights: Vec<f64>,
}

/// Running weighted sums of patch reconstructions over a stack of slices.
struct Accumulator {
    rows: usize,
    cols: usize,
    sums: Vec<[Vec<f64>; 4]>,
    weight: Vec<Vec<f64>>,
    coverage: Vec<Vec<u32>>,
}

impl Accumulator {
    fn new(slices: usize, rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Accumulator {
            rows,
            cols,
            sums: (0..slices).map(|_| std::array::from_fn(|_| vec![0.0; n])).collect(),
            weight: vec![vec![0.0; n]; slices],
            coverage: vec![vec![0; n]; slices],
        }
    }

    fn add(&mut self, rg: &ReconstructedGroup, patch_rows: usize, patch_cols: usize) {
        let d = rg.group.members.len();
        let src = rg.patches.planes();
        for (k, pos) in rg.group.members.iter().enumerate() {
            let wgt = rg.weights[k];
            let sums = &mut self.sums[pos.slice];
            let weight = &mut self.weight[pos.slice];
            let coverage = &mut self.coverage[pos.slice];
            for c in 0..patch_cols {
                for r in 0..patch_rows {
                    let n = (pos.row + r) * self.cols + pos.col + c;
                    let s = (c * patch_rows + r) * d + k;
                    for p in 0..4 {
                        sums[p][n] += wgt * src[p][s];
                    }
                    weight[n] += wgt;
                    coverage[n] += 1;
                }
            }
        }
    }

    fn finish(self) -> Result<(Vec<QMatrix>, Vec<Vec<u32>>)> {
        let mut out = Vec::with_capacity(self.sums.len());
        for (k, (mut planes, weight)) in self.sums.into_iter().zip(&self.weight).enumerate() {
            if let Some(n) = weight.iter().position(|&w| !(w > 0.0)) {
                return Err(Error::Uncovered {
                    slice: k,
                    row: n / self.cols,
                    col: n % self.cols,
                });
            }
            for p in planes.iter_mut() {
                for (v, w) in p.iter_mut().zip(weight) {
                    *v /= w;
                }
            }
            out.push(QMatrix::from_planes(self.rows, self.cols, planes).expect("sizes agree"));
        }
        Ok((out, self.coverage))
    }
}

/// Weighted per-pixel average of all reconstructed patches of an image with
/// `rows × cols` pixels, plus the number of patches covering each pixel.
pub fn aggregate(
    groups: &[ReconstructedGroup],
    rows: usize,
    cols: usize,
    patch_rows: usize,
    patch_cols: usize,
) -> Result<(QMatrix, Vec<u32>)> {
    let mut acc = Accumulator::new(1, rows, cols);
    for g in groups {
        let d = g.group.members.len();
        if g.patches.shape() != (patch_rows * patch_cols, d) || g.weights.len() != d {
            return Err(Error::dims(
                format!("{}x{} patches with {d} weights", patch_rows * patch_cols, d),
                format!("{}x{} with {} weights", g.patches.rows(), g.patches.cols(), g.weights.len()),
            ));
        }
        if g.group.members.iter().any(|p| p.slice != 0 || p.row + patch_rows > rows || p.col + patch_cols > cols) {
            return Err(Error::param("group", "member patch leaves the image"));
        }
        acc.add(g, patch_rows, patch_cols);
    }
    let (mut img, mut cov) = acc.finish()?;
    Ok((img.remove(0), cov.remove(0)))
}

/// `exp(−f²/σ²)` with `σ` the median of `f`; uniform when the median is zero.
pub fn similarity_weights(f: &[f64]) -> Vec<f64> {
    let mut sorted = f.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    if !(median > 0.0) {
        return vec![1.0; n];
    }
    let s2 = median * median;
    f.iter().map(|&v| (-(v * v / s2).min(700.0)).exp()).collect()
}

/// Offset kernel of the weighted distance used for aggregation weights when a
/// searching window is active.
fn aggregation_kernel() -> OffsetWeights {
    OffsetWeights::gaussian(1, 1.0)
}

/// Observed pixels unchanged; every missing pixel takes the mean of the
/// observed pixels in the smallest square neighbourhood (starting at
/// `radius`) that contains any.
pub fn mean_fill(x: &QMatrix, mask: &ObservationMask, radius: usize) -> Result<QMatrix> {
    if x.shape() != mask.shape() {
        return Err(Error::dims(
            format!("{}x{}", x.rows(), x.cols()),
            format!("{}x{}", mask.rows(), mask.cols()),
        ));
    }
    if mask.count() == 0 {
        return Ok(x.scale(0.0));
    }
    let (rows, cols) = x.shape();
    let w = cols + 1;
    // Summed-area tables of the observed values and counts.
    let mut sat: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; (rows + 1) * w]);
    let mut cnt = vec![0.0; (rows + 1) * w];
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c;
            let o = mask.at(n);
            let idx = (r + 1) * w + c + 1;
            for p in 0..4 {
                let v = if o { x.planes()[p][n] } else { 0.0 };
                sat[p][idx] = v + sat[p][idx - 1] + sat[p][idx - w] - sat[p][idx - w - 1];
            }
            cnt[idx] = f64::from(o as u8) + cnt[idx - 1] + cnt[idx - w] - cnt[idx - w - 1];
        }
    }
    let rect = |t: &[f64], r0: usize, r1: usize, c0: usize, c1: usize| t[r1 * w + c1] - t[r0 * w + c1] - t[r1 * w + c0] + t[r0 * w + c0];
    let mut out = x.clone();
    let planes = out.planes_mut();
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c;
            if mask.at(n) {
                continue;
            }
            let mut rad = radius.max(1);
            loop {
                let (r0, r1) = (r.saturating_sub(rad), (r + rad + 1).min(rows));
                let (c0, c1) = (c.saturating_sub(rad), (c + rad + 1).min(cols));
                let k = rect(&cnt, r0, r1, c0, c1);
                if k > 0.0 {
                    for p in 0..4 {
                        planes[p][n] = rect(&sat[p], r0, r1, c0, c1) / k;
                    }
                    break;
                }
                rad *= 2;
            }
        }
    }
    Ok(out)
}

/// Aggregate iteration counts of the per-group solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupStats {
    pub groups: usize,
    /// Groups without a single observed entry; their reference patches are used.
    pub empty_groups: usize,
    pub unconverged: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
}

impl GroupStats {
    pub fn merge(&mut self, o: &GroupStats) {
        self.groups += o.groups;
        self.empty_groups += o.empty_groups;
        self.unconverged += o.unconverged;
        self.total_iterations += o.total_iterations;
        self.max_iterations = self.max_iterations.max(o.max_iterations);
    }

    pub fn mean_iterations(&self) -> f64 {
        let solved = self.groups - self.empty_groups;
        if solved == 0 {
            0.0
        } else {
            self.total_iterations as f64 / solved as f64
        }
    }
}

/// Keys handled per parallel batch; bounds the memory held by solved groups.
const KEY_CHUNK: usize = 128;

fn solve_group(
    observed: &[QMatrix],
    masks: &[ObservationMask],
    refs: &[QMatrix],
    key: PatchPos,
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(ReconstructedGroup, GroupStats)> {
    let (pr, pc) = (spec.patch_rows, spec.patch_cols);
    let group = match_in_slices(refs, key, spec)?;
    let (x, m) = stack_slices(observed, masks, &group.members, pr, pc);
    let mut stats = GroupStats {
        groups: 1,
        ..GroupStats::default()
    };
    let patches = if m.count() == 0 {
        stats.empty_groups = 1;
        stack_slices(refs, masks, &group.members, pr, pc).0
    } else {
        let res = solver::solve(&x, &m, cfg)?;
        stats.total_iterations = res.iterations;
        stats.max_iterations = res.iterations;
        stats.unconverged = usize::from(!res.converged);
        res.l
    };
    let weights = match spec.weighting {
        Weighting::Uniform => vec![1.0; group.members.len()],
        Weighting::Similarity if spec.window == 0 => similarity_weights(&group.distances),
        Weighting::Similarity => {
            let kernel = aggregation_kernel();
            let kref = &refs[key.slice];
            let f: Vec<f64> = group
                .members
                .iter()
                .map(|p| {
                    weighted_patch_distance(kref, (key.row, key.col), &refs[p.slice], (p.row, p.col), pr, pc, &kernel)
                        .map(f64::sqrt)
                })
                .collect::<Result<_>>()?;
            similarity_weights(&f)
        }
    };
    Ok((ReconstructedGroup { group, patches, weights }, stats))
}

/// One match/solve/aggregate pass over all slices.
fn nss_pass(
    observed: &[QMatrix],
    masks: &[ObservationMask],
    refs: &[QMatrix],
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<QMatrix>, GroupStats)> {
    let (rows, cols) = observed[0].shape();
    let grid = key_patch_grid(rows, cols, spec)?;
    let keys: Vec<PatchPos> = (0..observed.len())
        .flat_map(|k| grid.iter().map(move |&(r, c)| PatchPos::new(k, r, c)))
        .collect();
    let mut acc = Accumulator::new(observed.len(), rows, cols);
    let mut stats = GroupStats::default();
    for chunk in keys.chunks(KEY_CHUNK) {
        let solved: Vec<(ReconstructedGroup, GroupStats)> = chunk
            .par_iter()
            .map(|&key| solve_group(observed, masks, refs, key, spec, cfg))
            .collect::<Result<_>>()?;
        for (rg, st) in &solved {
            acc.add(rg, spec.patch_rows, spec.patch_cols);
            stats.merge(st);
        }
    }
    let (out, _) = acc.finish()?;
    Ok((out, stats))
}

fn inpaint_untiled(
    observed: &[QMatrix],
    masks: &[ObservationMask],
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<QMatrix>, GroupStats)> {
    let radius = spec.patch_rows.max(spec.patch_cols);
    let mut refs: Vec<QMatrix> = observed
        .iter()
        .zip(masks)
        .map(|(x, m)| mean_fill(x, m, radius))
        .collect::<Result<_>>()?;
    let mut stats = GroupStats::default();
    for _ in 0..spec.outer_iters {
        let (mut out, st) = nss_pass(observed, masks, &refs, spec, cfg)?;
        for x in out.iter_mut() {
            clip_to_pixels(x);
        }
        stats.merge(&st);
        refs = out;
    }
    Ok((refs, stats))
}

/// Splits `0..n` into consecutive spans of length `block`, folding a short
/// remainder into the previous span.
fn block_spans(n: usize, block: usize) -> Vec<(usize, usize)> {
    if block == 0 || block >= n {
        return vec![(0, n)];
    }
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        spans.push((start, end));
        start = end;
    }
    if spans.len() > 1 && spans.last().map(|s| s.1 - s.0) < Some(block) {
        let last = spans.pop().expect("nonempty");
        spans.last_mut().expect("nonempty").1 = last.1;
    }
    spans
}

/// Runs the full pipeline on a stack of equally sized slices.
pub(crate) fn inpaint_slices(
    observed: &[QMatrix],
    masks: &[ObservationMask],
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<QMatrix>, GroupStats)> {
    spec.validate()?;
    cfg.validate()?;
    let Some(first) = observed.first() else {
        return Err(Error::param("slices", "nothing to inpaint"));
    };
    let (rows, cols) = first.shape();
    if masks.len() != observed.len() {
        return Err(Error::dims(format!("{} masks", observed.len()), format!("{}", masks.len())));
    }
    for (x, m) in observed.iter().zip(masks) {
        if x.shape() != (rows, cols) || m.shape() != (rows, cols) {
            return Err(Error::dims(
                format!("{rows}x{cols}"),
                format!("{}x{} with mask {}x{}", x.rows(), x.cols(), m.rows(), m.cols()),
            ));
        }
        if !x.is_pure() {
            return Err(Error::param("observed", "color data must be purely imaginary"));
        }
    }
    spec.check_fits(rows, cols)?;

    let row_spans = block_spans(rows, spec.block);
    let col_spans = block_spans(cols, spec.block);
    if row_spans.len() == 1 && col_spans.len() == 1 {
        return inpaint_untiled(observed, masks, spec, cfg);
    }
    let mut out: Vec<QMatrix> = vec![QMatrix::zeros(rows, cols); observed.len()];
    let mut stats = GroupStats::default();
    for &(r0, r1) in &row_spans {
        for &(c0, c1) in &col_spans {
            let sub_x: Vec<QMatrix> = observed.iter().map(|x| x.block(r0, c0, r1 - r0, c1 - c0)).collect();
            let sub_m: Vec<ObservationMask> = masks
                .iter()
                .map(|m| ObservationMask::from_fn(r1 - r0, c1 - c0, |r, c| m.contains(r0 + r, c0 + c)))
                .collect();
            let (rec, st) = inpaint_untiled(&sub_x, &sub_m, spec, cfg)?;
            for (o, b) in out.iter_mut().zip(&rec) {
                o.set_block(r0, c0, b);
            }
            stats.merge(&st);
        }
    }
    Ok((out, stats))
}

/// Patch-group completion of an encoded color image with per-group statistics.
pub fn inpaint_nss_with_stats(
    x: &QMatrix,
    mask: &ObservationMask,
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(QMatrix, GroupStats)> {
    let (mut out, stats) = inpaint_slices(std::slice::from_ref(x), std::slice::from_ref(mask), spec, cfg)?;
    Ok((out.remove(0), stats))
}

/// Patch-group completion of an encoded color image. The result is purely
/// imaginary with channels clipped to `[0, 255]`.
pub fn inpaint_nss(x: &QMatrix, mask: &ObservationMask, spec: &PatchSpec, cfg: &SolverConfig) -> Result<QMatrix> {
    inpaint_nss_with_stats(x, mask, spec, cfg).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_mask, random_qmatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(pr: usize, pc: usize, stride: usize, d: usize, window: usize) -> PatchSpec {
        PatchSpec {
            patch_rows: pr,
            patch_cols: pc,
            stride,
            group_size: d,
            window,
            ..PatchSpec::default()
        }
    }

    fn pure_image(rng: &mut impl Rng, rows: usize, cols: usize) -> QMatrix {
        QMatrix::from_fn(rows, cols, |_, _| {
            Quaternion::pure(rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0))
        })
    }

    #[test]
    fn extract_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_qmatrix(&mut rng, 5, 4);
        assert_eq!(extract_patch(&x, 0, 0, 5, 4).unwrap(), x);
        assert_eq!(extract_patch(&x, 2, 3, 1, 1).unwrap().get(0, 0), x.get(2, 3));
        assert!(matches!(extract_patch(&x, 0, 0, 6, 1), Err(Error::PatchTooLarge { .. })));
        assert!(extract_patch(&x, 3, 0, 3, 1).is_err());

        let p = extract_patch(&x, 1, 1, 3, 2).unwrap();
        let mut y = QMatrix::zeros(5, 4);
        insert_patch(&mut y, 1, 1, &p).unwrap();
        for r in 1..4 {
            for c in 1..3 {
                assert_eq!(y.get(r, c), x.get(r, c));
            }
        }
        let v = vec_patch(&p);
        assert_eq!(v[1], p.get(1, 0));
        assert_eq!(v[3], p.get(0, 1));
        assert_eq!(unvec_patch(&v, 3, 2), p);
    }

    #[test]
    fn key_grid_examples() {
        assert_eq!(key_patch_grid(4, 4, &spec(4, 4, 4, 1, 0)).unwrap(), vec![(0, 0)]);
        assert_eq!(key_patch_grid(8, 8, &spec(4, 4, 4, 1, 0)).unwrap().len(), 4);
        let g = key_patch_grid(10, 10, &spec(4, 4, 4, 1, 0)).unwrap();
        let offsets = [0, 4, 6];
        let expected: Vec<(usize, usize)> = offsets.iter().flat_map(|&r| offsets.iter().map(move |&c| (r, c))).collect();
        assert_eq!(g, expected);
        // Coverage oracle.
        let mut covered = [[false; 10]; 10];
        for (r, c) in g {
            for rr in r..r + 4 {
                for cc in c..c + 4 {
                    covered[rr][cc] = true;
                }
            }
        }
        assert!(covered.iter().flatten().all(|&b| b));
        assert!(key_patch_grid(10, 10, &spec(4, 4, 5, 1, 0)).is_err());
    }

    #[test]
    fn window_examples() {
        assert_eq!(search_window(3, 3, 1, 10, 10), vec![(3, 3)]);
        assert_eq!(search_window(3, 3, 3, 10, 10).len(), 9);
        assert_eq!(search_window(0, 0, 5, 10, 10).len(), 9);
        assert_eq!(search_window(0, 0, 0, 4, 3).len(), 12);
        assert_eq!(window_half_width(20), Some(10));
        assert_eq!(window_half_width(21), Some(10));
        assert_eq!(window_half_width(0), None);
    }

    #[test]
    fn distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_qmatrix(&mut rng, 3, 3);
        assert_eq!(patch_distance(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.set(1, 2, b.get(1, 2) + Quaternion::new(0.0, 3.0, 0.0, 4.0));
        assert!((patch_distance(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        let c = random_qmatrix(&mut rng, 3, 3);
        let (ab, bc, ac) = (
            patch_distance(&a, &b).unwrap(),
            patch_distance(&b, &c).unwrap(),
            patch_distance(&a, &c).unwrap(),
        );
        assert!(ac <= ab + bc + 1e-12);
        assert_eq!(ab, patch_distance(&b, &a).unwrap());
        assert!(patch_distance(&a, &random_qmatrix(&mut rng, 3, 2)).is_err());
    }

    #[test]
    fn weighted_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_qmatrix(&mut rng, 9, 8);
        assert_eq!(
            weighted_patch_distance(&x, (3, 3), &x, (3, 3), 2, 2, &OffsetWeights::uniform(1)).unwrap(),
            0.0
        );
        // All mass on the zero offset.
        let mut vals = vec![1e-300; 9];
        vals[4] = 1.0;
        let point = OffsetWeights::new(1, vals).unwrap();
        let plain = patch_distance(&x.block(2, 1, 3, 2), &x.block(5, 4, 3, 2)).unwrap();
        let wd = weighted_patch_distance(&x, (2, 1), &x, (5, 4), 3, 2, &point).unwrap();
        assert!((wd - plain * plain).abs() <= 1e-12 * plain * plain);

        // Direct double-sum oracle with the border offsets excluded.
        let k = OffsetWeights::gaussian(1, 0.8);
        let (s, t, i, j) = (0usize, 2usize, 4usize, 5usize);
        let (pr, pc) = (3usize, 2usize);
        let mut num = 0.0;
        let mut den = 0.0;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let (a0, a1, b0, b1) = (s as isize + dr, t as isize + dc, i as isize + dr, j as isize + dc);
                let ok = |r: isize, c: isize| r >= 0 && c >= 0 && r as usize + pr <= 9 && c as usize + pc <= 8;
                if !(ok(a0, a1) && ok(b0, b1)) {
                    continue;
                }
                let pa = x.block(a0 as usize, a1 as usize, pr, pc);
                let pb = x.block(b0 as usize, b1 as usize, pr, pc);
                let wgt = (-((dr * dr + dc * dc) as f64) / (2.0 * 0.64)).exp();
                num += wgt * pa.sub(&pb).unwrap().fro_norm_sqr();
                den += wgt;
            }
        }
        let got = weighted_patch_distance(&x, (s, t), &x, (i, j), pr, pc, &k).unwrap();
        assert!((got - num / den).abs() <= 1e-12 * (num / den));
        assert!(OffsetWeights::new(1, vec![1.0; 8]).is_err());
        assert!(OffsetWeights::new(0, vec![0.0]).is_err());
    }

    fn exhaustive(reference: &QMatrix, key: (usize, usize), pr: usize, pc: usize, d: usize) -> Vec<(usize, usize)> {
        let kp = reference.block(key.0, key.1, pr, pc);
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for s in 0..=reference.rows() - pr {
            for t in 0..=reference.cols() - pc {
                if (s, t) != key {
                    all.push((patch_distance(&kp, &reference.block(s, t, pr, pc)).unwrap(), s, t));
                }
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        std::iter::once(key).chain(all.into_iter().take(d - 1).map(|e| (e.1, e.2))).collect()
    }

    #[test]
    fn match_block_examples() {
        let constant = QMatrix::from_fn(8, 8, |_, _| Quaternion::pure(10.0, 20.0, 30.0));
        let g = match_block(&constant, (2, 3), &spec(3, 3, 1, 4, 0)).unwrap();
        let pos: Vec<(usize, usize)> = g.members.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(pos, vec![(2, 3), (0, 0), (0, 1), (0, 2)]);
        assert!(g.distances.iter().all(|&d| d == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = pure_image(&mut rng, 32, 32);
        let g = match_block(&x, (5, 7), &spec(6, 6, 3, 1, 0)).unwrap();
        assert_eq!(g.members, vec![PatchPos::new(0, 5, 7)]);

        for key in [(0, 0), (13, 21), (26, 26)] {
            let g = match_block(&x, key, &spec(6, 6, 3, 8, 0)).unwrap();
            let pos: Vec<(usize, usize)> = g.members.iter().map(|p| (p.row, p.col)).collect();
            assert_eq!(pos, exhaustive(&x, key, 6, 6, 8));
            assert!(g.distances.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(matches!(
            match_block(&x, (10, 10), &spec(6, 6, 3, 10, 3)),
            Err(Error::TooFewCandidates { found: 9, needed: 10 })
        ));
    }

    #[test]
    fn stack_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_qmatrix(&mut rng, 6, 6);
        let mask = random_mask(&mut rng, 6, 6, 0.6);
        let sp = spec(2, 3, 1, 1, 0);
        let key_only = PatchGroup {
            key: PatchPos::new(0, 1, 2),
            members: vec![PatchPos::new(0, 1, 2)],
            distances: vec![0.0],
        };
        let (m, _) = stack_group(&x, &ObservationMask::full(6, 6), &key_only, &sp).unwrap();
        assert_eq!(m.column(0), vec_patch(&x.block(1, 2, 2, 3)));

        let g = PatchGroup {
            key: PatchPos::new(0, 0, 0),
            members: vec![PatchPos::new(0, 0, 0), PatchPos::new(0, 1, 1)],
            distances: vec![0.0, 1.0],
        };
        let (m, om) = stack_group(&x, &ObservationMask::full(6, 6), &g, &sp).unwrap();
        assert_eq!(om.count(), 12);
        // Pixel (1, 1) is entry (1, 1) of member 0 and (0, 0) of member 1.
        assert_eq!(m.get(2 + 1, 0), m.get(0, 1));
        let (_, om) = stack_group(&x, &mask, &g, &sp).unwrap();
        assert_eq!(om.contains(3, 0), mask.contains(1, 1));
        assert_eq!(om.contains(0, 1), mask.contains(1, 1));
    }

    #[test]
    fn aggregate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let truth = random_qmatrix(&mut rng, 5, 5);
        let sp = spec(3, 3, 2, 2, 0);
        let mut groups = Vec::new();
        for (r, c) in key_patch_grid(5, 5, &sp).unwrap() {
            let members = vec![PatchPos::new(0, r, c), PatchPos::new(0, 4 - r.max(2), 0)];
            let g = PatchGroup {
                key: members[0],
                members: members.clone(),
                distances: vec![0.0, 2.0],
            };
            let (patches, _) = stack_group(&truth, &ObservationMask::full(5, 5), &g, &sp).unwrap();
            groups.push(ReconstructedGroup {
                group: g,
                patches,
                weights: vec![1.0, 0.3],
            });
        }
        let (img, cov) = aggregate(&groups, 5, 5, 3, 3).unwrap();
        assert!(img.sub(&truth).unwrap().fro_norm() <= 1e-12 * truth.fro_norm());
        assert!(cov.iter().all(|&c| c >= 1));

        // Two overlapping 1x2 patches on a 1x3 image.
        let mk = |c: usize, v: f64, w: f64| ReconstructedGroup {
            group: PatchGroup {
                key: PatchPos::new(0, 0, c),
                members: vec![PatchPos::new(0, 0, c)],
                distances: vec![0.0],
            },
            patches: QMatrix::from_fn(2, 1, |_, _| Quaternion::pure(v, 0.0, 0.0)),
            weights: vec![w],
        };
        let (img, cov) = aggregate(&[mk(0, 2.0, 1.0), mk(1, 5.0, 3.0)], 1, 3, 1, 2).unwrap();
        assert_eq!(img.get(0, 0).i, 2.0);
        assert!((img.get(0, 1).i - (2.0 + 15.0) / 4.0).abs() < 1e-15);
        assert_eq!(img.get(0, 2).i, 5.0);
        assert_eq!(cov, vec![1, 2, 1]);
        assert!(matches!(aggregate(&[mk(0, 1.0, 1.0)], 1, 3, 1, 2), Err(Error::Uncovered { col: 2, .. })));
    }

    #[test]
    fn similarity_weight_rule() {
        let w = similarity_weights(&[0.0, 1.0, 2.0]);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w[2] - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(similarity_weights(&[0.0, 0.0, 3.0]), vec![1.0; 3]);
    }

    #[test]
    fn mean_fill_uses_local_observed_mean() {
        let x = QMatrix::from_fn(3, 5, |r, c| Quaternion::pure((r * 5 + c) as f64, 1.0, 2.0));
        let mask = ObservationMask::from_fn(3, 5, |r, c| !(r == 1 && c == 2));
        let f = mean_fill(&x, &mask, 1).unwrap();
        let nb = [1, 2, 3, 6, 8, 11, 12, 13];
        let mean = nb.iter().sum::<usize>() as f64 / 8.0;
        assert!((f.get(1, 2).i - mean).abs() < 1e-12);
        assert_eq!(f.get(0, 0), x.get(0, 0));
        // Nothing observed nearby: the neighbourhood grows.
        let sparse = ObservationMask::from_fn(3, 5, |r, c| r == 0 && c == 0);
        let f = mean_fill(&x, &sparse, 1).unwrap();
        assert_eq!(f.get(2, 4), x.get(0, 0));
    }

    #[test]
    fn full_observation_rank_one_is_near_identity() {
        let u: Vec<f64> = (0..12).map(|r| 40.0 + 10.0 * r as f64).collect();
        let v: Vec<f64> = (0..12).map(|c| 0.5 + 0.06 * c as f64).collect();
        let x = QMatrix::from_fn(12, 12, |r, c| Quaternion::pure(u[r] * v[c], 0.8 * u[r] * v[c], 0.5 * u[r] * v[c]));
        // The splitting converges slowly at pixel scale, hence the iteration budget.
        let cfg = SolverConfig {
            max_iters: 2000,
            ..SolverConfig::default()
        };
        let out = inpaint_nss(&x, &ObservationMask::full(12, 12), &spec(6, 6, 6, 10, 0), &cfg).unwrap();
        let a = crate::imaging::decode(&x);
        let b = crate::imaging::decode(&out);
        let p = crate::imaging::psnr(&a, &b).unwrap();
        assert!(p >= 40.0, "{p:.2} dB");
        assert!(out.is_pure());
    }

    #[test]
    fn disjoint_tiles_with_singleton_groups_match_tilewise_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = pure_image(&mut rng, 8, 12);
        let mask = random_mask(&mut rng, 8, 12, 0.7);
        let observed = solver::project(&x, &mask).unwrap();
        let sp = spec(4, 4, 4, 1, 0);
        let cfg = SolverConfig::default();
        let out = inpaint_nss(&observed, &mask, &sp, &cfg).unwrap();

        let mut expected = QMatrix::zeros(8, 12);
        for (r, c) in key_patch_grid(8, 12, &sp).unwrap() {
            let g = PatchGroup {
                key: PatchPos::new(0, r, c),
                members: vec![PatchPos::new(0, r, c)],
                distances: vec![0.0],
            };
            let (xs, ms) = stack_group(&observed, &mask, &g, &sp).unwrap();
            let l = solver::solve(&xs, &ms, &cfg).unwrap().l;
            expected.set_block(r, c, &unvec_patch(&l.column(0), 4, 4));
        }
        clip_to_pixels(&mut expected);
        assert_eq!(out, expected);
    }

    #[test]
    fn tiled_texture_recovers_missing_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tile = pure_image(&mut rng, 8, 8);
        let truth = QMatrix::from_fn(64, 64, |r, c| tile.get(r % 8, c % 8));
        let mask = random_mask(&mut rng, 64, 64, 0.5);
        let observed = solver::project(&truth, &mask).unwrap();
        // Whole-image search reaches every copy of the tile.
        let sp = PatchSpec {
            stride: 6,
            group_size: 30,
            window: 0,
            ..PatchSpec::default()
        };
        let cfg = SolverConfig {
            max_iters: 100,
            ..SolverConfig::default()
        };
        let out = inpaint_nss(&observed, &mask, &sp, &cfg).unwrap();
        let t = crate::imaging::decode(&truth);
        let base = crate::imaging::psnr(&t, &crate::imaging::decode(&observed)).unwrap();
        let got = crate::imaging::psnr(&t, &crate::imaging::decode(&out)).unwrap();
        assert!(got >= base + 10.0, "zero-filled {base:.2} dB, nss {got:.2} dB");
    }

    #[test]
    fn rejects_bad_input() {
        let x = QMatrix::from_fn(8, 8, |_, _| Quaternion::new(1.0, 0.0, 0.0, 0.0));
        let m = ObservationMask::full(8, 8);
        assert!(inpaint_nss(&x, &m, &spec(4, 4, 2, 2, 0), &SolverConfig::default()).is_err());
        let y = QMatrix::zeros(8, 8);
        assert!(matches!(
            inpaint_nss(&y, &m, &spec(9, 4, 2, 2, 0), &SolverConfig::default()),
            Err(Error::PatchTooLarge { .. })
        ));
    }

    #[test]
    fn block_spans_fold_remainder() {
        assert_eq!(block_spans(10, 4), vec![(0, 4), (4, 10)]);
        assert_eq!(block_spans(8, 4), vec![(0, 4), (4, 8)]);
        assert_eq!(block_spans(8, 0), vec![(0, 8)]);
    }

    #[test]
    fn sampled_groups_are_spread_and_stacked() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = random_qmatrix(&mut rng, 16, 16);
        let sp = spec(4, 4, 4, 5, 0);
        let all = key_patch_grid(16, 16, &sp).unwrap();
        let got = sample_group_matrices(&x, &sp, 3).unwrap();
        assert_eq!(got.len(), 3);
        let keys: Vec<_> = got.iter().map(|(g, _)| (g.key.row, g.key.col)).collect();
        assert_eq!(keys, vec![all[0], all[5], all[10]]);
        for (g, m) in &got {
            assert_eq!(m.shape(), (16, 5));
            let p = extract_patch(&x, g.key.row, g.key.col, 4, 4).unwrap();
            assert_eq!(m.column(0), vec_patch(&p));
        }
        assert_eq!(sample_group_matrices(&x, &sp, 100).unwrap().len(), all.len());
    }
}
