use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcomplete_cli::commands;
use qcomplete_cli::{CliError, Command, Result, RunConfig};

/// Thread count override, taking precedence over `threads=`.
const THREADS_ENV: &str = "QCOMPLETE_THREADS";

#[derive(Parser)]
#[command(name = "qcomplete", version, about = "Color image and video inpainting by quaternion matrix completion")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Remove pixels and add impulse noise; writes the observation and a mask file.
    Degrade(Opts),
    /// Complete an observation from its mask.
    Inpaint(Opts),
    /// PSNR and SSIM between two images or videos.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Singular values and accumulation energy of an image and its patch groups as CSV.
    Spectrum(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// File of key=value lines, applied before any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,

    #[arg(short, long)]
    input: Option<String>,
    #[arg(short, long)]
    output: Option<String>,
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// qmc, nss-qmc or tnss-qmc.
    #[arg(short, long)]
    algorithm: Option<String>,
    /// Fraction of missing pixels.
    #[arg(long)]
    missing: Option<String>,
    /// Fraction of noisy pixels.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// tube or non-tube.
    #[arg(long)]
    tube: Option<String>,
    #[arg(long)]
    patch_rows: Option<String>,
    #[arg(long)]
    patch_cols: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    group_size: Option<String>,
    /// Search window side; 0 searches the whole image.
    #[arg(long)]
    window: Option<String>,
    /// similarity or uniform.
    #[arg(long)]
    weighting: Option<String>,
    #[arg(long)]
    outer_iters: Option<String>,
    #[arg(long)]
    block: Option<String>,
    /// Number or `auto`.
    #[arg(long)]
    lambda: Option<String>,
    /// Number or `auto`.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Number or `auto`.
    #[arg(long)]
    max_iters: Option<String>,
    /// Number or `auto`.
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    samples: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("input", &self.input),
            ("output", &self.output),
            ("mask", &self.mask),
            ("truth", &self.truth),
            ("report", &self.report),
            ("algorithm", &self.algorithm),
            ("missing", &self.missing),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("tube", &self.tube),
            ("patch_rows", &self.patch_rows),
            ("patch_cols", &self.patch_cols),
            ("stride", &self.stride),
            ("group_size", &self.group_size),
            ("window", &self.window),
            ("weighting", &self.weighting),
            ("outer_iters", &self.outer_iters),
            ("block", &self.block),
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("tol", &self.tol),
            ("max_iters", &self.max_iters),
            ("threads", &self.threads),
            ("samples", &self.samples),
        ]
    }

    fn build(&self, command: Command) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(command);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
            cfg.command = command;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::user(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        if cfg.command != command {
            return Err(CliError::user("`command` cannot be changed by flags"));
        }
        if let Ok(v) = std::env::var(THREADS_ENV) {
            cfg.set("threads", &v)
                .map_err(|_| CliError::user(format!("{THREADS_ENV} must be a positive integer or auto, got `{v}`")))?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (opts, command, pair) = match cli.command {
        Sub::Degrade(o) => (o, Command::Degrade, None),
        Sub::Inpaint(o) => (o, Command::Inpaint, None),
        Sub::Metrics { a, b, opts } => (opts, Command::Metrics, Some((a, b))),
        Sub::Spectrum(o) => (o, Command::Spectrum, None),
    };
    let mut cfg = opts.build(command)?;
    if let Some((a, b)) = pair {
        cfg.input = Some(a);
        cfg.truth = Some(b);
    }
    if opts.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::user("`threads` must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::user(format!("cannot start worker pool: {e}")))?;
    pool.install(|| commands::run(&cfg, &mut std::io::stdout()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qcomplete: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
