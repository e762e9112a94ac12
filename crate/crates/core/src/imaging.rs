//! RGB images as pure quaternion matrices, synthetic degradation and quality
//! metrics.

use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::qmatrix::QMatrix;

/// 8-bit RGB image stored as three row-major planes of `height × width` bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    planes: [Vec<u8>; 3],
}

impl RgbImage {
    pub fn new(width: usize, height: usize, planes: [Vec<u8>; 3]) -> Result<Self> {
        let n = width * height;
        for p in &planes {
            if p.len() != n {
                return Err(Error::dims(format!("{n} samples per plane"), format!("{}", p.len())));
            }
        }
        Ok(RgbImage { width, height, planes })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut planes = [vec![0; width * height], vec![0; width * height], vec![0; width * height]];
        for row in 0..height {
            for col in 0..width {
                let px = f(row, col);
                for c in 0..3 {
                    planes[c][row * width + col] = px[c];
                }
            }
        }
        RgbImage { width, height, planes }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[Vec<u8>; 3] {
        &self.planes
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let n = row * self.width + col;
        [self.planes[0][n], self.planes[1][n], self.planes[2][n]]
    }

    fn check_same_shape(&self, other: &RgbImage) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(())
    }
}

/// `R·i + G·j + B·k` per pixel; rows follow image rows.
pub fn encode(img: &RgbImage) -> QMatrix {
    let [r, g, b] = img.planes.each_ref().map(|p| p.iter().map(|&v| v as f64).collect::<Vec<_>>());
    QMatrix::from_imaginary(img.height, img.width, r, g, b).expect("planes have image shape")
}

/// Drops the real part, clips each channel to `[0, 255]` and rounds half up.
pub fn decode(q: &QMatrix) -> RgbImage {
    let planes = q.planes();
    let conv = |p: &Vec<f64>| p.iter().map(|&v| to_byte(v)).collect::<Vec<u8>>();
    RgbImage {
        width: q.cols(),
        height: q.rows(),
        planes: [conv(&planes[1]), conv(&planes[2]), conv(&planes[3])],
    }
}

fn to_byte(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Clips the imaginary planes to the pixel range and zeroes the real plane.
pub fn clip_to_pixels(q: &mut QMatrix) {
    let planes = q.planes_mut();
    planes[0].iter_mut().for_each(|v| *v = 0.0);
    for p in planes[1..].iter_mut() {
        for v in p.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 255.0) };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    /// Fraction of pixels removed, `1 − ρ`.
    pub missing: f64,
    /// Fraction of pixel locations replaced by noise, `γ`.
    pub noise: f64,
    pub seed: u64,
}

impl DegradeSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("missing", self.missing), ("noise", self.noise)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("fraction must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Output of a degradation: the observation (zero off the mask), the mask and
/// the sorted linear indices of the noise locations.
#[derive(Debug, Clone)]
pub struct Degraded {
    pub observed: QMatrix,
    pub mask: ObservationMask,
    pub noisy: Vec<usize>,
}

/// Observation mask with exactly `round((1 − missing)·n)` pixels and noise at
/// exactly `round(noise·n)` locations, drawn from `rng`.
pub(crate) fn draw_pattern(rng: &mut impl Rng, rows: usize, cols: usize, missing: f64, noise: f64) -> (ObservationMask, Vec<usize>) {
    let n = rows * cols;
    let keep = ((1.0 - missing) * n as f64).round() as usize;
    let mut flags = vec![false; n];
    for idx in index::sample(rng, n, keep.min(n)) {
        flags[idx] = true;
    }
    let mask = ObservationMask::from_flags(rows, cols, flags).expect("flag count matches shape");
    let count = (noise * n as f64).round() as usize;
    let mut noisy = index::sample(rng, n, count.min(n)).into_vec();
    noisy.sort_unstable();
    (mask, noisy)
}

/// Replaces the listed pixels by integer-uniform values in `[0, 255]`, drawn
/// independently per channel, then zeroes everything off the mask.
pub(crate) fn apply_pattern(rng: &mut impl Rng, x: &QMatrix, mask: &ObservationMask, noisy: &[usize]) -> QMatrix {
    let mut out = x.clone();
    {
        let planes = out.planes_mut();
        for &n in noisy {
            for p in planes[1..].iter_mut() {
                p[n] = rng.random_range(0..=255u8) as f64;
            }
        }
    }
    crate::solver::project(&out, mask).expect("mask matches image shape")
}

/// Degrades an encoded image: random missing pixels plus sparse impulse noise.
/// Noise is applied before masking, so a pixel that is both noisy and missing
/// is simply missing.
pub fn degrade_matrix(x: &QMatrix, spec: &DegradeSpec) -> Result<Degraded> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mask, noisy) = draw_pattern(&mut rng, x.rows(), x.cols(), spec.missing, spec.noise);
    let observed = apply_pattern(&mut rng, x, &mask, &noisy);
    Ok(Degraded { observed, mask, noisy })
}

pub fn degrade(img: &RgbImage, spec: &DegradeSpec) -> Result<Degraded> {
    degrade_matrix(&encode(img), spec)
}

/// Sentinel returned by [`psnr`] for identical images.
pub const PSNR_CAP: f64 = 100.0;

/// `10·log₁₀(255²/MSE)` with the MSE taken jointly over all pixels and channels.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    a.check_same_shape(b)?;
    let mut sse = 0.0;
    let mut n = 0usize;
    for (pa, pb) in a.planes.iter().zip(&b.planes) {
        for (&x, &y) in pa.iter().zip(pb) {
            let d = x as f64 - y as f64;
            sse += d * d;
        }
        n += pa.len();
    }
    if sse == 0.0 || n == 0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (255.0f64 * 255.0 / (sse / n as f64)).log10()).min(PSNR_CAP))
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WIN] {
    let half = (SSIM_WIN / 2) as f64;
    let mut g = [0.0; SSIM_WIN];
    for (t, v) in g.iter_mut().enumerate() {
        let x = t as f64 - half;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.map(|v| v / s)
}

/// Separable Gaussian filter over the windows that fit entirely in the image.
fn filter_valid(src: &[f64], width: usize, height: usize, g: &[f64; SSIM_WIN]) -> Vec<f64> {
    let ow = width + 1 - SSIM_WIN;
    let oh = height + 1 - SSIM_WIN;
    let mut tmp = vec![0.0; height * ow];
    for r in 0..height {
        let row = &src[r * width..(r + 1) * width];
        for c in 0..ow {
            tmp[r * ow + c] = g.iter().zip(&row[c..c + SSIM_WIN]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..SSIM_WIN).map(|t| g[t] * tmp[(r + t) * ow + c]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[u8], b: &[u8], width: usize, height: usize, g: &[f64; SSIM_WIN]) -> f64 {
    let c1 = (SSIM_K1 * 255.0).powi(2);
    let c2 = (SSIM_K2 * 255.0).powi(2);
    let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| s * t).collect::<Vec<f64>>();
    let mx = filter_valid(&x, width, height, g);
    let my = filter_valid(&y, width, height, g);
    let mxx = filter_valid(&prod(&x, &x), width, height, g);
    let myy = filter_valid(&prod(&y, &y), width, height, g);
    let mxy = filter_valid(&prod(&x, &y), width, height, g);
    let mut total = 0.0;
    for n in 0..mx.len() {
        let (ux, uy) = (mx[n], my[n]);
        let vx = mxx[n] - ux * ux;
        let vy = myy[n] - uy * uy;
        let cxy = mxy[n] - ux * uy;
        total += (2.0 * ux * uy + c1) * (2.0 * cxy + c2) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    total / mx.len() as f64
}

/// Mean structural similarity: 11×11 Gaussian window (σ = 1.5), `K₁ = 0.01`,
/// `K₂ = 0.03`, dynamic range 255, averaged over the valid windows of each
/// channel and then over channels.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.width < SSIM_WIN || a.height < SSIM_WIN {
        return Err(Error::param(
            "image",
            format!("SSIM needs at least {SSIM_WIN}x{SSIM_WIN} pixels, got {}x{}", a.width, a.height),
        ));
    }
    let g = gaussian_kernel();
    let sum: f64 = (0..3)
        .map(|c| ssim_plane(&a.planes[c], &b.planes[c], a.width, a.height, &g))
        .sum();
    Ok(sum / 3.0)
}

/// Reads an 8-bit RGB PNG. Other pixel layouts (alpha, grey, 16-bit) are refused.
pub fn read_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let dynimg = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    let rgb = match dynimg {
        image::DynamicImage::ImageRgb8(buf) => buf,
        other => {
            return Err(Error::Image(format!(
                "{}: expected 8-bit RGB without alpha, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let raw = rgb.into_raw();
    Ok(RgbImage::from_fn(w, h, |r, c| {
        let n = 3 * (r * w + c);
        [raw[n], raw[n + 1], raw[n + 2]]
    }))
}

pub fn write_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut raw = Vec::with_capacity(3 * img.width * img.height);
    for n in 0..img.width * img.height {
        raw.extend(img.planes.iter().map(|p| p[n]));
    }
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, raw)
        .ok_or_else(|| Error::Image("buffer size does not match image shape".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// File name of frame `k` (0-based) in a frame directory: `frame_0001.png`, ...
pub fn frame_name(k: usize) -> String {
    format!("frame_{:04}.png", k + 1)
}

/// Reads every `*.png` in `dir`, ordered by the number embedded in the file name.
pub fn read_frames(dir: impl AsRef<Path>) -> Result<Vec<RgbImage>> {
    let mut files: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
        let Ok(num) = digits.parse::<u64>() else { continue };
        files.push((num, path));
    }
    if files.is_empty() {
        return Err(Error::Image(format!("no numbered PNG frames in {}", dir.as_ref().display())));
    }
    files.sort();
    files.iter().map(|(_, p)| read_png(p)).collect()
}

pub fn write_frames(frames: &[RgbImage], dir: impl AsRef<Path>) -> Result<()> {
    std::fs::create_dir_all(dir.as_ref())?;
    for (k, f) in frames.iter().enumerate() {
        write_png(f, dir.as_ref().join(frame_name(k)))?;
    }
    Ok(())
}
