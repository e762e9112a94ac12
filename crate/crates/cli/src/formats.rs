//! On-disk formats.
//!
//! Mask files are text: a header `QMASK rows cols [slices]` followed by one
//! observed index per line (`row col [slice]`, 1-based, sorted by slice, row,
//! column).
//!
//! Raw tensors start with the magic `QTEN`, then rows, cols and slices as
//! little-endian `u32`, then the `i`, `j`, `k` components as little-endian
//! `f32`, frame by frame, row-major, channel-interleaved.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use qcomplete::video::QTensor;
use qcomplete::{ObservationMask, QMatrix};

use crate::error::{CliError, Result};

pub fn format_mask(masks: &[ObservationMask]) -> String {
    let (rows, cols) = masks.first().map(|m| m.shape()).unwrap_or((0, 0));
    let mut out = if masks.len() == 1 {
        format!("QMASK {rows} {cols}\n")
    } else {
        format!("QMASK {rows} {cols} {}\n", masks.len())
    };
    for (k, m) in masks.iter().enumerate() {
        for (r, c) in m.indices() {
            if masks.len() == 1 {
                let _ = writeln!(out, "{} {}", r + 1, c + 1);
            } else {
                let _ = writeln!(out, "{} {} {}", r + 1, c + 1, k + 1);
            }
        }
    }
    out
}

pub fn parse_mask(text: &str) -> Result<Vec<ObservationMask>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |n: usize, what: &str| CliError::user(format!("mask line {}: {what}", n + 1));
    let (hn, header) = lines.next().ok_or_else(|| CliError::user("empty mask file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"QMASK") || !(fields.len() == 3 || fields.len() == 4) {
        return Err(bad(hn, "expected header `QMASK rows cols [slices]`"));
    }
    let dims: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse().map_err(|_| bad(hn, "dimensions must be integers")))
        .collect::<Result<_>>()?;
    let (rows, cols) = (dims[0], dims[1]);
    let slices = dims.get(2).copied().unwrap_or(1);
    let video = dims.len() == 3;
    if slices == 0 {
        return Err(bad(hn, "at least one slice required"));
    }
    let mut indices: Vec<Vec<(usize, usize)>> = vec![Vec::new(); slices];
    for (n, line) in lines {
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| bad(n, "indices must be positive integers")))
            .collect::<Result<_>>()?;
        let want = if video { 3 } else { 2 };
        if v.len() != want {
            return Err(bad(n, &format!("expected {want} indices")));
        }
        let k = if video { v[2] } else { 1 };
        if v[0] == 0 || v[1] == 0 || k == 0 || v[0] > rows || v[1] > cols || k > slices {
            return Err(bad(n, "index out of range"));
        }
        indices[k - 1].push((v[0] - 1, v[1] - 1));
    }
    indices
        .into_iter()
        .map(|idx| ObservationMask::from_indices(rows, cols, idx).map_err(CliError::from))
        .collect()
}

pub fn read_mask(path: &Path) -> Result<Vec<ObservationMask>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    parse_mask(&text)
}

pub fn write_mask(path: &Path, masks: &[ObservationMask]) -> Result<()> {
    std::fs::write(path, format_mask(masks)).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

const MAGIC: &[u8; 4] = b"QTEN";

pub fn encode_tensor(t: &QTensor) -> Vec<u8> {
    let (rows, cols, slices) = t.shape();
    let mut out = Vec::with_capacity(16 + 12 * rows * cols * slices);
    out.extend_from_slice(MAGIC);
    for d in [rows, cols, slices] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in t.slices() {
        let p = s.planes();
        for n in 0..rows * cols {
            for plane in &p[1..] {
                out.extend_from_slice(&(plane[n] as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<QTensor> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(CliError::user("not a QTEN tensor file"));
    }
    let dim = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols, slices) = (dim(4), dim(8), dim(12));
    let n = rows * cols;
    if bytes.len() != 16 + 12 * n * slices {
        return Err(CliError::user(format!(
            "QTEN payload holds {} bytes, expected {} for {rows}x{cols}x{slices}",
            bytes.len() - 16,
            12 * n * slices
        )));
    }
    let mut frames = Vec::with_capacity(slices);
    for k in 0..slices {
        let mut planes: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
        for px in 0..n {
            for (c, plane) in planes.iter_mut().enumerate() {
                let o = 16 + 4 * (3 * (k * n + px) + c);
                plane.push(f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64);
            }
        }
        let [i, j, kk] = planes;
        frames.push(QMatrix::from_imaginary(rows, cols, i, j, kk)?);
    }
    Ok(QTensor::new(frames)?)
}

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub input: String,
    pub algorithm: String,
    pub missing: f64,
    pub noise: f64,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub iters: f64,
    pub seconds: f64,
}

pub const REPORT_HEADER: &str = "input,algorithm,missing,noise,psnr_db,ssim,iters,seconds";

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        format!(
            "{},{},{:.4},{:.4},{},{},{:.1},{:.3}",
            self.input.replace(',', "_"),
            self.algorithm,
            self.missing,
            self.noise,
            opt(self.psnr_db),
            opt(self.ssim),
            self.iters,
            self.seconds
        )
    }
}

/// Appends a row, writing the header first when the file is new or empty.
pub fn append_report(path: &Path, row: &ReportRow) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    if fresh {
        writeln!(f, "{REPORT_HEADER}")?;
    }
    writeln!(f, "{}", row.to_csv())?;
    Ok(())
}
