//! Run configuration as flat `key=value` lines. Command-line flags go through
//! the same [`RunConfig::set`] as file lines, after the file.

use std::fmt::Write as _;
use std::path::PathBuf;

use qcomplete::imaging::DegradeSpec;
use qcomplete::patch::{PatchSpec, Weighting};
use qcomplete::tol;
use qcomplete::video::TubeMode;
use qcomplete::SolverConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Degrade,
    Inpaint,
    Metrics,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Degrade => "degrade",
            Command::Inpaint => "inpaint",
            Command::Metrics => "metrics",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Whole-image (or framewise) completion.
    Qmc,
    NssQmc,
    /// Cross-frame grouping; videos only.
    TnssQmc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qmc => "qmc",
            Algorithm::NssQmc => "nss-qmc",
            Algorithm::TnssQmc => "tnss-qmc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    /// Ground truth for inpaint reports; second operand of `metrics`.
    pub truth: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub degrade: DegradeSpec,
    pub tube: TubeMode,
    pub patch: PatchSpec,
    /// `max_iters` here is ignored in favour of [`RunConfig::max_iters`].
    pub solver: SolverConfig,
    /// `None`: 500 for images, 100 for videos.
    pub max_iters: Option<usize>,
    pub threads: Option<usize>,
    /// Patched matrices sampled by `spectrum`.
    pub samples: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            output: None,
            mask: None,
            truth: None,
            report: None,
            algorithm: Algorithm::NssQmc,
            degrade: DegradeSpec {
                missing: 0.5,
                noise: 0.1,
                seed: 0,
            },
            tube: TubeMode::Tube,
            patch: PatchSpec::default(),
            solver: SolverConfig::default(),
            max_iters: None,
            threads: None,
            samples: 16,
        }
    }

    /// Effective solver settings for an image or a video run.
    pub fn solver_for(&self, video: bool) -> SolverConfig {
        let default = if video {
            tol::SOLVER_MAX_ITERS_VIDEO
        } else {
            tol::SOLVER_MAX_ITERS
        };
        SolverConfig {
            max_iters: self.max_iters.unwrap_or(default),
            ..self.solver.clone()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| CliError::user(format!("`{key}`: {what}, got `{v}`"));
        let num = || v.parse::<f64>().map_err(|_| bad("expected a number"));
        let int = || v.parse::<usize>().map_err(|_| bad("expected a nonnegative integer"));
        let auto_f = || if v == "auto" { Ok(None) } else { num().map(Some) };
        let auto_u = || if v == "auto" { Ok(None) } else { int().map(Some) };
        let path = || (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "command" => {
                self.command = match v {
                    "degrade" => Command::Degrade,
                    "inpaint" => Command::Inpaint,
                    "metrics" => Command::Metrics,
                    "spectrum" => Command::Spectrum,
                    _ => return Err(bad("unknown command")),
                }
            }
            "input" => self.input = path(),
            "output" => self.output = path(),
            "mask" => self.mask = path(),
            "truth" => self.truth = path(),
            "report" => self.report = path(),
            "algorithm" => {
                self.algorithm = match v {
                    "qmc" => Algorithm::Qmc,
                    "nss-qmc" => Algorithm::NssQmc,
                    "tnss-qmc" => Algorithm::TnssQmc,
                    _ => return Err(bad("expected qmc, nss-qmc or tnss-qmc")),
                }
            }
            "missing" => self.degrade.missing = num()?,
            "noise" => self.degrade.noise = num()?,
            "seed" => self.degrade.seed = v.parse().map_err(|_| bad("expected an integer"))?,
            "tube" => {
                self.tube = match v {
                    "tube" => TubeMode::Tube,
                    "non-tube" => TubeMode::NonTube,
                    _ => return Err(bad("expected tube or non-tube")),
                }
            }
            "patch_rows" => self.patch.patch_rows = int()?,
            "patch_cols" => self.patch.patch_cols = int()?,
            "stride" => self.patch.stride = int()?,
            "group_size" => self.patch.group_size = int()?,
            "window" => self.patch.window = int()?,
            "weighting" => {
                self.patch.weighting = match v {
                    "similarity" => Weighting::Similarity,
                    "uniform" => Weighting::Uniform,
                    _ => return Err(bad("expected similarity or uniform")),
                }
            }
            "outer_iters" => self.patch.outer_iters = int()?,
            "block" => self.patch.block = int()?,
            "lambda" => self.solver.lambda = auto_f()?,
            "mu" => self.solver.mu = auto_f()?,
            "tol" => self.solver.tol = num()?,
            "max_iters" => self.max_iters = auto_u()?,
            "threads" => self.threads = auto_u()?,
            "samples" => self.samples = int()?,
            _ => return Err(CliError::user(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::user(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::new(Command::Inpaint);
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Every setting as `key=value` lines; [`RunConfig::parse`] reads it back.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let auto_f = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_else(|| "auto".into());
        let auto_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        put("command", self.command.name().into());
        put("input", p(&self.input));
        put("output", p(&self.output));
        put("mask", p(&self.mask));
        put("truth", p(&self.truth));
        put("report", p(&self.report));
        put("algorithm", self.algorithm.name().into());
        put("missing", format!("{:?}", self.degrade.missing));
        put("noise", format!("{:?}", self.degrade.noise));
        put("seed", self.degrade.seed.to_string());
        put(
            "tube",
            match self.tube {
                TubeMode::Tube => "tube",
                TubeMode::NonTube => "non-tube",
            }
            .into(),
        );
        put("patch_rows", self.patch.patch_rows.to_string());
        put("patch_cols", self.patch.patch_cols.to_string());
        put("stride", self.patch.stride.to_string());
        put("group_size", self.patch.group_size.to_string());
        put("window", self.patch.window.to_string());
        put(
            "weighting",
            match self.patch.weighting {
                Weighting::Similarity => "similarity",
                Weighting::Uniform => "uniform",
            }
            .into(),
        );
        put("outer_iters", self.patch.outer_iters.to_string());
        put("block", self.patch.block.to_string());
        put("lambda", auto_f(self.solver.lambda));
        put("mu", auto_f(self.solver.mu));
        put("tol", format!("{:?}", self.solver.tol));
        put("max_iters", auto_u(self.max_iters));
        put("threads", auto_u(self.threads));
        put("samples", self.samples.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_parse_round_trip() {
        let mut cfg = RunConfig::new(Command::Degrade);
        cfg.input = Some("in put.png".into());
        cfg.truth = Some("t.png".into());
        cfg.algorithm = Algorithm::TnssQmc;
        cfg.degrade = DegradeSpec {
            missing: 0.3,
            noise: 0.1 + 0.2,
            seed: u64::MAX,
        };
        cfg.tube = TubeMode::NonTube;
        cfg.patch.window = 0;
        cfg.patch.weighting = Weighting::Uniform;
        cfg.solver.mu = Some(1.0 / 3.0);
        cfg.max_iters = Some(77);
        cfg.threads = Some(2);
        assert_eq!(RunConfig::parse(&cfg.dump()).unwrap(), cfg);
        let fresh = RunConfig::new(Command::Metrics);
        assert_eq!(RunConfig::parse(&fresh.dump()).unwrap(), fresh);
    }

    #[test]
    fn comments_and_errors() {
        let cfg = RunConfig::parse("# run\nalgorithm = qmc  # whole image\n\nlambda=auto\n").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Qmc);
        assert!(RunConfig::parse("bogus=1").is_err());
        assert!(RunConfig::parse("stride=-1").is_err());
        assert!(RunConfig::parse("algorithm").is_err());
    }

    #[test]
    fn iteration_defaults_depend_on_media() {
        let cfg = RunConfig::new(Command::Inpaint);
        assert_eq!(cfg.solver_for(false).max_iters, 500);
        assert_eq!(cfg.solver_for(true).max_iters, 100);
        assert_eq!(cfg.solver_for(true).tol, 1e-4);
        assert_eq!(cfg.patch.group_size, 60);
        assert_eq!(cfg.patch.window, 20);
    }
}
