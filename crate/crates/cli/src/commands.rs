//! The four subcommands. Each reads its inputs from a [`RunConfig`] and writes
//! human-readable progress to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qcomplete::imaging::{self, DegradeSpec, RgbImage};
use qcomplete::patch::{self, GroupStats, PatchSpec};
use qcomplete::video::{self, QTensor, TubeMaskSpec};
use qcomplete::{accumulation_energy, energy_at_fraction, singular_values, ObservationMask, QMatrix};

use crate::config::{Algorithm, Command, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, ReportRow};

/// How a picture or video is stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaKind {
    Png,
    Frames,
    Tensor,
}

impl MediaKind {
    /// A directory holds frames, `.qten` is a raw tensor, anything else a PNG.
    pub fn of_input(path: &Path) -> MediaKind {
        if path.is_dir() {
            MediaKind::Frames
        } else {
            Self::of_output(path)
        }
    }

    /// Like [`MediaKind::of_input`] for paths that may not exist yet: a path
    /// without a `.png` or `.qten` extension names a frame directory.
    pub fn of_output(path: &Path) -> MediaKind {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("qten") => MediaKind::Tensor,
            Some("png") => MediaKind::Png,
            _ => MediaKind::Frames,
        }
    }
}

/// Loaded input: a single PNG is a one-slice tensor that is not a video.
#[derive(Debug, Clone)]
pub struct Media {
    pub kind: MediaKind,
    pub tensor: QTensor,
}

impl Media {
    pub fn is_video(&self) -> bool {
        self.kind != MediaKind::Png && self.tensor.shape().2 > 1
    }

    pub fn frames(&self) -> Vec<RgbImage> {
        self.tensor.to_frames()
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str, cmd: Command) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::user(format!("`{}` needs `{key}`", cmd.name())))
}

pub fn read_media(path: &Path) -> Result<Media> {
    if !path.exists() {
        return Err(CliError::user(format!("{}: no such file or directory", path.display())));
    }
    let kind = MediaKind::of_input(path);
    let tensor = match kind {
        MediaKind::Png => QTensor::from_frames(&[imaging::read_png(path)?])?,
        MediaKind::Frames => QTensor::from_frames(&imaging::read_frames(path)?)?,
        MediaKind::Tensor => formats::decode_tensor(&std::fs::read(path)?)?,
    };
    Ok(Media { kind, tensor })
}

pub fn write_media(path: &Path, tensor: &QTensor) -> Result<()> {
    match MediaKind::of_output(path) {
        MediaKind::Png => {
            if tensor.shape().2 != 1 {
                return Err(CliError::user(format!(
                    "{}: a PNG holds one frame, got {}",
                    path.display(),
                    tensor.shape().2
                )));
            }
            imaging::write_png(&tensor.to_frames()[0], path)?;
        }
        MediaKind::Frames => imaging::write_frames(&tensor.to_frames(), path)?,
        MediaKind::Tensor => std::fs::write(path, formats::encode_tensor(tensor))?,
    }
    Ok(())
}

/// Mask path used when none is configured: `<output>.qmask`.
pub fn default_mask_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".qmask");
    PathBuf::from(s)
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    match cfg.command {
        Command::Degrade => cmd_degrade(cfg, out),
        Command::Inpaint => cmd_inpaint(cfg, out),
        Command::Metrics => cmd_metrics(cfg, out),
        Command::Spectrum => cmd_spectrum(cfg, out),
    }
}

pub fn cmd_degrade(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let input = required(&cfg.input, "input", cfg.command)?;
    let output = required(&cfg.output, "output", cfg.command)?;
    let mask_path = cfg.mask.clone().unwrap_or_else(|| default_mask_path(output));
    cfg.degrade.validate()?;
    let media = read_media(input)?;
    let (rows, cols, slices) = media.tensor.shape();

    if cfg.degrade.missing == 0.0 && cfg.degrade.noise == 0.0 {
        copy_verbatim(input, output, media.kind)?;
        formats::write_mask(&mask_path, &vec![ObservationMask::full(rows, cols); slices])?;
        writeln!(out, "copied {} unchanged; mask {}", input.display(), mask_path.display())?;
        return Ok(());
    }

    let (observed, masks) = if media.is_video() {
        let spec = TubeMaskSpec {
            mode: cfg.tube,
            missing: cfg.degrade.missing,
            noise: cfg.degrade.noise,
        };
        let d = video::degrade_video(&media.tensor, &spec, cfg.degrade.seed)?;
        (d.observed, d.masks)
    } else {
        let mut observed = Vec::with_capacity(slices);
        let mut masks = Vec::with_capacity(slices);
        for (k, s) in media.tensor.slices().iter().enumerate() {
            let spec = DegradeSpec {
                seed: cfg.degrade.seed.wrapping_add(k as u64),
                ..cfg.degrade
            };
            let d = imaging::degrade_matrix(s, &spec)?;
            observed.push(d.observed);
            masks.push(d.mask);
        }
        (QTensor::new(observed)?, masks)
    };
    write_media(output, &observed)?;
    formats::write_mask(&mask_path, &masks)?;
    let kept: usize = masks.iter().map(|m| m.count()).sum();
    writeln!(
        out,
        "degraded {}x{}x{}: {} of {} pixels observed; mask {}",
        rows,
        cols,
        slices,
        kept,
        rows * cols * slices,
        mask_path.display()
    )?;
    Ok(())
}

fn copy_verbatim(input: &Path, output: &Path, kind: MediaKind) -> Result<()> {
    if kind != MediaKind::Frames {
        std::fs::copy(input, output)?;
        return Ok(());
    }
    std::fs::create_dir_all(output)?;
    for entry in std::fs::read_dir(input)? {
        let path = entry?.path();
        if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some("png") {
            std::fs::copy(&path, output.join(path.file_name().expect("file has a name")))?;
        }
    }
    Ok(())
}

/// Completed slices plus the mean iteration count per solve.
pub struct Reconstruction {
    pub tensor: QTensor,
    pub iters: f64,
    pub stats: Option<GroupStats>,
}

pub fn reconstruct(observed: &Media, masks: &[ObservationMask], cfg: &RunConfig) -> Result<Reconstruction> {
    let solver = cfg.solver_for(observed.is_video());
    let x = &observed.tensor;
    match cfg.algorithm {
        Algorithm::Qmc => {
            let mut slices = Vec::with_capacity(masks.len());
            let mut iters = 0usize;
            for (s, m) in x.slices().iter().zip(masks) {
                let r = qcomplete::solve(s, m, &solver)?;
                iters += r.iterations;
                let mut l = r.l;
                imaging::clip_to_pixels(&mut l);
                slices.push(l);
            }
            Ok(Reconstruction {
                tensor: QTensor::new(slices)?,
                iters: iters as f64 / masks.len() as f64,
                stats: None,
            })
        }
        Algorithm::NssQmc => {
            let mut slices = Vec::with_capacity(masks.len());
            let mut stats = GroupStats::default();
            for (s, m) in x.slices().iter().zip(masks) {
                let (r, st) = patch::inpaint_nss_with_stats(s, m, &cfg.patch, &solver)?;
                slices.push(r);
                stats.merge(&st);
            }
            Ok(Reconstruction {
                tensor: QTensor::new(slices)?,
                iters: stats.mean_iterations(),
                stats: Some(stats),
            })
        }
        Algorithm::TnssQmc => {
            if !observed.is_video() {
                return Err(CliError::user("tnss-qmc needs a video input (frame directory or multi-slice tensor)"));
            }
            let (t, stats) = video::inpaint_tnss_with_stats(x, masks, &cfg.patch, &solver)?;
            Ok(Reconstruction {
                tensor: t,
                iters: stats.mean_iterations(),
                stats: Some(stats),
            })
        }
    }
}

pub fn cmd_inpaint(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let input = required(&cfg.input, "input", cfg.command)?;
    let output = required(&cfg.output, "output", cfg.command)?;
    let mask_path = required(&cfg.mask, "mask", cfg.command)?;
    let observed = read_media(input)?;
    let masks = formats::read_mask(mask_path)?;
    let (rows, cols, slices) = observed.tensor.shape();
    if masks.len() != slices || masks.iter().any(|m| m.shape() != (rows, cols)) {
        return Err(CliError::user(format!(
            "mask is {}x{}x{} but the input is {rows}x{cols}x{slices}",
            masks[0].rows(),
            masks[0].cols(),
            masks.len()
        )));
    }
    if matches!(cfg.algorithm, Algorithm::NssQmc | Algorithm::TnssQmc) {
        check_patch_spec(&cfg.patch)?;
    }
    let truth = cfg.truth.as_deref().map(read_media).transpose()?;

    let start = Instant::now();
    let rec = reconstruct(&observed, &masks, cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    write_media(output, &rec.tensor)?;

    writeln!(
        out,
        "{} on {}x{}x{}: {:.1} iterations per solve, {:.3} s",
        cfg.algorithm.name(),
        rows,
        cols,
        slices,
        rec.iters,
        seconds
    )?;
    if let Some(st) = &rec.stats {
        writeln!(
            out,
            "groups {} empty {} unconverged {} mean_iters {:.1} max_iters {}",
            st.groups,
            st.empty_groups,
            st.unconverged,
            st.mean_iterations(),
            st.max_iterations
        )?;
    }
    let (psnr_db, ssim) = match &truth {
        Some(t) => {
            let (p, s) = compare(&t.frames(), &rec.tensor.to_frames())?;
            writeln!(out, "psnr_db {p:.4} ssim {s:.4}")?;
            (Some(p), Some(s))
        }
        None => (None, None),
    };
    if let Some(report) = &cfg.report {
        let total = (rows * cols * slices) as f64;
        let kept: usize = masks.iter().map(|m| m.count()).sum();
        formats::append_report(
            report,
            &ReportRow {
                input: input.display().to_string(),
                algorithm: cfg.algorithm.name().into(),
                missing: 1.0 - kept as f64 / total,
                noise: cfg.degrade.noise,
                psnr_db,
                ssim,
                iters: rec.iters,
                seconds,
            },
        )?;
    }
    Ok(())
}

fn check_patch_spec(spec: &PatchSpec) -> Result<()> {
    spec.validate().map_err(CliError::from)
}

/// Mean per-frame PSNR and SSIM.
pub fn compare(a: &[RgbImage], b: &[RgbImage]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(CliError::user(format!("frame counts differ: {} vs {}", a.len(), b.len())));
    }
    let mut p = 0.0;
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        p += imaging::psnr(x, y)?;
        s += imaging::ssim(x, y)?;
    }
    Ok((p / a.len() as f64, s / a.len() as f64))
}

pub fn cmd_metrics(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let a = read_media(required(&cfg.input, "input", cfg.command)?)?;
    let b = read_media(required(&cfg.truth, "truth", cfg.command)?)?;
    if a.tensor.shape() != b.tensor.shape() {
        let (r, c, s) = a.tensor.shape();
        let (r2, c2, s2) = b.tensor.shape();
        return Err(CliError::user(format!("shape mismatch: {r}x{c}x{s} vs {r2}x{c2}x{s2}")));
    }
    let (fa, fb) = (a.frames(), b.frames());
    if fa.len() > 1 {
        for (k, (x, y)) in fa.iter().zip(&fb).enumerate() {
            writeln!(
                out,
                "frame {} psnr_db {:.4} ssim {:.4}",
                k + 1,
                imaging::psnr(x, y)?,
                imaging::ssim(x, y)?
            )?;
        }
    }
    let (p, s) = compare(&fa, &fb)?;
    writeln!(out, "psnr_db {p:.4} ssim {s:.4}")?;
    Ok(())
}

pub const SPECTRUM_HEADER: &str = "source,k,sigma,acc_egy";

/// CSV of singular values and accumulation energies of the whole image and of
/// `samples` patched matrices. All-zero groups are left out.
pub fn spectrum_csv(x: &QMatrix, spec: &PatchSpec, samples: usize) -> Result<String> {
    let mut csv = format!("{SPECTRUM_HEADER}\n");
    let mut push = |source: &str, m: &QMatrix| -> Result<()> {
        let sigma = singular_values(m)?;
        let acc = qcomplete::qsvd::energy_from_sigma(&sigma)?;
        for (k, (s, e)) in sigma.iter().zip(&acc).enumerate() {
            csv.push_str(&format!("{source},{},{s:.6e},{e:.8}\n", k + 1));
        }
        Ok(())
    };
    push("image", x)?;
    for (g, m) in patch::sample_group_matrices(x, spec, samples)? {
        if m.fro_norm_sqr() == 0.0 {
            continue;
        }
        push(&format!("group_{}_{}", g.key.row + 1, g.key.col + 1), &m)?;
    }
    Ok(csv)
}

/// Whole-image energy and mean patched-matrix energy at `fraction` of the
/// spectrum, over the nonzero sampled groups.
pub fn energy_summary(x: &QMatrix, spec: &PatchSpec, samples: usize, fraction: f64) -> Result<(f64, f64)> {
    let whole = energy_at_fraction(&accumulation_energy(x)?, fraction, x.rows().min(x.cols()))?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (_, m) in patch::sample_group_matrices(x, spec, samples)? {
        if m.fro_norm_sqr() > 0.0 {
            sum += energy_at_fraction(&accumulation_energy(&m)?, fraction, m.cols())?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(CliError::user("every sampled patch group is zero"));
    }
    Ok((whole, sum / n as f64))
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let media = read_media(required(&cfg.input, "input", cfg.command)?)?;
    if media.tensor.shape().2 != 1 {
        return Err(CliError::user("spectrum needs a single image"));
    }
    if cfg.samples == 0 {
        return Err(CliError::user("`samples` must be at least 1"));
    }
    let x = media.tensor.slice(0);
    let csv = spectrum_csv(x, &cfg.patch, cfg.samples)?;
    let (whole, patched) = energy_summary(x, &cfg.patch, cfg.samples, 0.1)?;
    match &cfg.output {
        Some(p) => {
            std::fs::write(p, &csv)?;
            writeln!(out, "acc_egy at 10%: image {whole:.6} patched mean {patched:.6}")?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}
