//! Color videos as third-order quaternion tensors and cross-frame patch-group
//! completion: the groups of a key patch are searched in the same window on
//! every frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{apply_pattern, decode, draw_pattern, encode, RgbImage};
use crate::mask::ObservationMask;
use crate::patch::{self, GroupStats, PatchGroup, PatchPos, PatchSpec};
use crate::qmatrix::QMatrix;
use crate::solver::SolverConfig;

/// Stack of equally sized frontal slices.
#[derive(Debug, Clone, PartialEq)]
pub struct QTensor {
    rows: usize,
    cols: usize,
    slices: Vec<QMatrix>,
}

impl QTensor {
    pub fn new(slices: Vec<QMatrix>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::param("slices", "a tensor needs at least one slice"));
        };
        let (rows, cols) = first.shape();
        if let Some(bad) = slices.iter().find(|s| s.shape() != (rows, cols)) {
            return Err(Error::dims(format!("{rows}x{cols}"), format!("{}x{}", bad.rows(), bad.cols())));
        }
        Ok(QTensor { rows, cols, slices })
    }

    pub fn zeros(rows: usize, cols: usize, n_slices: usize) -> Self {
        QTensor {
            rows,
            cols,
            slices: vec![QMatrix::zeros(rows, cols); n_slices],
        }
    }

    pub fn from_frames(frames: &[RgbImage]) -> Result<Self> {
        QTensor::new(frames.iter().map(encode).collect())
    }

    pub fn to_frames(&self) -> Vec<RgbImage> {
        self.slices.iter().map(decode).collect()
    }

    /// `(n₁, n₂, n₃)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.slices.len())
    }

    pub fn slice(&self, k: usize) -> &QMatrix {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[QMatrix] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<QMatrix> {
        self.slices
    }

    pub fn is_pure(&self) -> bool {
        self.slices.iter().all(QMatrix::is_pure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeMode {
    /// Every frame is missing or noisy at the same pixels.
    Tube,
    /// Each frame draws its own pattern.
    NonTube,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeMaskSpec {
    pub mode: TubeMode,
    pub missing: f64,
    pub noise: f64,
}

#[derive(Debug, Clone)]
pub struct DegradedVideo {
    pub observed: QTensor,
    pub masks: Vec<ObservationMask>,
    /// Sorted noise locations per frame.
    pub noisy: Vec<Vec<usize>>,
}

/// Per-frame missing pixels and impulse noise with exact counts. In tube mode
/// the pattern is drawn once and shared; noise values are always drawn per
/// frame and channel.
pub fn degrade_video(x: &QTensor, spec: &TubeMaskSpec, seed: u64) -> Result<DegradedVideo> {
    for (name, v) in [("missing", spec.missing), ("noise", spec.noise)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, format!("fraction must lie in [0, 1], got {v}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = match spec.mode {
        TubeMode::Tube => Some(draw_pattern(&mut rng, x.rows, x.cols, spec.missing, spec.noise)),
        TubeMode::NonTube => None,
    };
    let mut slices = Vec::with_capacity(x.slices.len());
    let mut masks = Vec::with_capacity(x.slices.len());
    let mut noisy = Vec::with_capacity(x.slices.len());
    for s in &x.slices {
        let (mask, locs) = match &shared {
            Some(p) => p.clone(),
            None => draw_pattern(&mut rng, x.rows, x.cols, spec.missing, spec.noise),
        };
        slices.push(apply_pattern(&mut rng, s, &mask, &locs));
        masks.push(mask);
        noisy.push(locs);
    }
    Ok(DegradedVideo {
        observed: QTensor::new(slices)?,
        masks,
        noisy,
    })
}

/// Positions within the searching window of size `window` around `(i, j)`,
/// restricted to `0..rows × 0..cols`.
pub fn window(i: usize, j: usize, window: usize, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    patch::search_window(i, j, window, rows, cols)
}

/// The `group_size` patches most similar to the key patch at `(row, col)` of
/// slice `slice`, searched in the same window on every slice.
pub fn match_block_3d(reference: &QTensor, key: (usize, usize, usize), spec: &PatchSpec) -> Result<PatchGroup> {
    spec.validate()?;
    let (row, col, slice) = key;
    if slice >= reference.slices.len() {
        return Err(Error::param("key", format!("slice {slice} out of range")));
    }
    patch::match_in_slices(&reference.slices, PatchPos::new(slice, row, col), spec)
}

fn check_masks(x: &QTensor, masks: &[ObservationMask]) -> Result<()> {
    if masks.len() != x.slices.len() {
        return Err(Error::dims(format!("{} masks", x.slices.len()), format!("{}", masks.len())));
    }
    Ok(())
}

/// Cross-frame patch-group completion with per-group statistics.
pub fn inpaint_tnss_with_stats(
    x: &QTensor,
    masks: &[ObservationMask],
    spec: &PatchSpec,
    cfg: &SolverConfig,
) -> Result<(QTensor, GroupStats)> {
    check_masks(x, masks)?;
    let (slices, stats) = patch::inpaint_slices(&x.slices, masks, spec, cfg)?;
    Ok((QTensor::new(slices)?, stats))
}

/// Cross-frame patch-group completion of an encoded color video. The result is
/// purely imaginary with channels clipped to `[0, 255]`.
pub fn inpaint_tnss(x: &QTensor, masks: &[ObservationMask], spec: &PatchSpec, cfg: &SolverConfig) -> Result<QTensor> {
    inpaint_tnss_with_stats(x, masks, spec, cfg).map(|r| r.0)
}
