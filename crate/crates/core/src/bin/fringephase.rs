use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fringephase::cli::io::{write_image, BitDepth};
use fringephase::cli::{error_stats, read_image, run_pipeline, Mask, PipelineConfig};
use fringephase::fields::PhaseMap;
use fringephase::synth::{
    add_noise, default_center, fringe_from_model, quadrature_truth, test_phase, FringeModel,
};
use fringephase::{Error, Result};

/// Single-frame fringe demodulation.
#[derive(Parser)]
#[command(name = "fringephase", version)]
struct Cli {
    /// Worker threads for the line loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic fringe pattern, its exact quadrature and the true phase.
    Synth(PipelineArgs),
    /// Demodulate an input image (no ground truth).
    Demod(PipelineArgs),
    /// Run the whole pipeline and score it when ground truth exists.
    Full(PipelineArgs),
    /// Score an unwrapped phase image against a reference image.
    Metrics(MetricsArgs),
}

/// Flags mirror the configuration keys and override `--config`.
#[derive(Args)]
struct PipelineArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Image path, or `synthetic`.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    fringe_bias: Option<String>,
    #[arg(long)]
    fringe_visibility: Option<String>,
    #[arg(long)]
    center_frequency: Option<String>,
    #[arg(long)]
    min_scale: Option<String>,
    #[arg(long)]
    max_scale: Option<String>,
    #[arg(long)]
    n_scales: Option<String>,
    /// `log` or `linear`.
    #[arg(long)]
    spacing: Option<String>,
    /// `global_mean` or `gaussian_highpass`.
    #[arg(long)]
    bias_method: Option<String>,
    #[arg(long)]
    bias_sigma: Option<String>,
    #[arg(long)]
    window_sigma: Option<String>,
    /// `rows`, `columns` or `both`.
    #[arg(long)]
    scan_axis: Option<String>,
    #[arg(long)]
    sign_correction: Option<String>,
    /// `hilbert` or `exact`.
    #[arg(long)]
    quadrature: Option<String>,
    /// `one_sided` or `two_sided`.
    #[arg(long)]
    ridge_search: Option<String>,
    /// `raw` or `chirp_corrected`.
    #[arg(long)]
    ridge_phase: Option<String>,
    #[arg(long)]
    noise_sigma: Option<String>,
    #[arg(long)]
    noise_seed: Option<String>,
    #[arg(long)]
    mask_border: Option<String>,
    #[arg(long)]
    mask_radius: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Also write PNG copies of every image.
    #[arg(long)]
    png: Option<String>,
}

impl PipelineArgs {
    fn to_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let overrides = [
            ("input", &self.input),
            ("width", &self.width),
            ("height", &self.height),
            ("fringe_bias", &self.fringe_bias),
            ("fringe_visibility", &self.fringe_visibility),
            ("center_frequency", &self.center_frequency),
            ("min_scale", &self.min_scale),
            ("max_scale", &self.max_scale),
            ("n_scales", &self.n_scales),
            ("spacing", &self.spacing),
            ("bias_method", &self.bias_method),
            ("bias_sigma", &self.bias_sigma),
            ("window_sigma", &self.window_sigma),
            ("scan_axis", &self.scan_axis),
            ("sign_correction", &self.sign_correction),
            ("quadrature", &self.quadrature),
            ("ridge_search", &self.ridge_search),
            ("ridge_phase", &self.ridge_phase),
            ("noise_sigma", &self.noise_sigma),
            ("noise_seed", &self.noise_seed),
            ("mask_border", &self.mask_border),
            ("mask_radius", &self.mask_radius),
            ("output_dir", &self.output_dir),
            ("png", &self.png),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct MetricsArgs {
    /// Unwrapped phase image (with its range sidecar).
    #[arg(long)]
    estimate: PathBuf,
    /// Reference phase image (with its range sidecar).
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 32)]
    mask_border: usize,
    #[arg(long, default_value_t = 32.0)]
    mask_radius: f64,
}

fn synth(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    if !cfg.is_synthetic() {
        return Err(Error::validation("input", "synth only generates synthetic data"));
    }
    let phase = test_phase(cfg.width, cfg.height)?;
    let model = FringeModel::uniform(phase.clone(), cfg.fringe_bias, cfg.fringe_visibility)?;
    let fringe = add_noise(&fringe_from_model(&model)?, cfg.noise_sigma, cfg.noise_seed)?;
    let quad = quadrature_truth(&model)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, field) in [("fringe", &fringe), ("quadrature_truth", &quad), ("phase", phase.field())] {
        write_image(field, &dir.join(format!("{name}.pgm")), BitDepth::Sixteen)?;
        if cfg.png {
            write_image(field, &dir.join(format!("{name}.png")), BitDepth::Sixteen)?;
        }
    }
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let est = read_image(&args.estimate)?;
    let truth = read_image(&args.truth)?;
    let (w, h) = (truth.width(), truth.height());
    let mask = Mask::border_and_disk(w, h, args.mask_border, args.mask_radius, default_center(w, h));
    let stats = error_stats(&PhaseMap::unwrapped(est), &PhaseMap::unwrapped(truth), &mask)?;
    println!("rms_error_rad = {}", stats.rms);
    println!("max_abs_error_rad = {}", stats.max_abs);
    println!("masked_fraction = {}", mask.masked_fraction());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(&a.to_config()?),
        Command::Demod(a) => {
            let cfg = a.to_config()?;
            if cfg.is_synthetic() {
                return Err(Error::validation("input", "demod needs an image path"));
            }
            print!("{}", run_pipeline(&cfg)?.to_text());
            Ok(())
        }
        Command::Full(a) => {
            print!("{}", run_pipeline(&a.to_config()?)?.to_text());
            Ok(())
        }
        Command::Metrics(a) => metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(Error::InvalidArgument(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
