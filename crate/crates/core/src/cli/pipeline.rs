//! End-to-end run: input, quadrature, demodulation, unwrapping, scoring and
//! artifact files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::config::{PipelineConfig, QuadratureSource};
use super::io::{read_image, write_image, write_profile, BitDepth};
use super::metrics::{error_stats, ErrorStats, Mask};
use crate::demod::{demodulate_image, fuse_axes, DemodOptions, DemodResult};
use crate::error::{Error, Result};
use crate::fields::{Axis, PhaseMap, ScalarField};
use crate::quadrature::{
    corrected_quadrature, direction_unwrap, orientation_map, remove_bias_along, DirectionField,
    OrientationField, QuadratureConfig, ScanAxes, SignField,
};
use crate::synth::{
    add_noise, default_center, fringe_from_model, quadrature_truth, test_phase, FringeModel,
};
use crate::unwrap::unwrap_2d;

/// Every intermediate field of a run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub fringe: ScalarField,
    pub quadrature: ScalarField,
    pub orientation: OrientationField,
    pub direction: DirectionField,
    /// Sign map along the primary scan axis (rows unless scanning columns).
    pub sign: SignField,
    pub demod: DemodResult,
    pub unwrapped: PhaseMap,
    pub truth: Option<PhaseMap>,
    pub mask: Mask,
    pub stats: Option<ErrorStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// `None` when there is no ground truth to compare against.
    pub rms_error: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub masked_fraction: f64,
    pub wall_time: f64,
    pub config: PipelineConfig,
}

impl RunReport {
    fn opt(v: Option<f64>) -> String {
        v.map_or_else(|| "n/a".to_string(), |v| v.to_string())
    }

    /// Metric lines followed by the `[config]` echo.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rms_error_rad = {}", Self::opt(self.rms_error));
        let _ = writeln!(out, "max_abs_error_rad = {}", Self::opt(self.max_abs_error));
        let _ = writeln!(out, "masked_fraction = {}", self.masked_fraction);
        let _ = writeln!(out, "wall_time_s = {}", self.wall_time);
        out.push_str("\n[config]\n");
        out.push_str(&self.config.to_text());
        out
    }
}

fn scan_axis_options(cfg: &PipelineConfig, axis: Axis) -> DemodOptions {
    DemodOptions {
        params: cfg.wavelet(),
        axis,
        search: cfg.ridge_search,
        ridge_phase: cfg.ridge_phase,
    }
}

/// Runs every stage in memory. Only the input image is read from disk.
pub fn compute(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (fringe, truth, exact_quadrature) = match &cfg.input {
        None => {
            let phase = test_phase(cfg.width, cfg.height)?;
            let model = FringeModel::uniform(phase.clone(), cfg.fringe_bias, cfg.fringe_visibility)?;
            let clean = fringe_from_model(&model)?;
            let fringe = add_noise(&clean, cfg.noise_sigma, cfg.noise_seed)?;
            let exact = match cfg.quadrature {
                QuadratureSource::Exact => Some(quadrature_truth(&model)?),
                QuadratureSource::Hilbert => None,
            };
            (fringe, Some(phase), exact)
        }
        Some(path) => (read_image(path)?, None, None),
    };
    let (w, h) = (fringe.width(), fringe.height());
    if w < 8 || h < 8 {
        return Err(Error::validation(
            "input",
            format!("image must be at least 8x8, got {w}x{h}"),
        ));
    }

    let qcfg = QuadratureConfig {
        bias: cfg.bias(),
        window_sigma: cfg.window_sigma,
        scan: cfg.scan_axis,
        sign_correction: cfg.sign_correction,
    };
    let primary = match cfg.scan_axis {
        ScanAxes::Columns => Axis::Columns,
        ScanAxes::Rows | ScanAxes::Both => Axis::Rows,
    };
    let (quadrature, orientation, direction, sign) = match exact_quadrature {
        Some(q) => {
            let o = orientation_map(&fringe, cfg.window_sigma)?;
            let d = direction_unwrap(&o)?;
            let s = crate::quadrature::sign_map(&d, primary)?;
            (q, o, d, s)
        }
        None => {
            let q = corrected_quadrature(&fringe, &qcfg)?;
            let s = q.sign(primary).clone();
            (q.pattern, q.orientation, q.direction, s)
        }
    };

    let pass = |axis: Axis| -> Result<DemodResult> {
        let flat = remove_bias_along(&fringe, cfg.bias(), axis)?;
        demodulate_image(&flat, &quadrature, &scan_axis_options(cfg, axis))
    };
    let demod = match cfg.scan_axis {
        ScanAxes::Rows => pass(Axis::Rows)?,
        ScanAxes::Columns => pass(Axis::Columns)?,
        ScanAxes::Both => fuse_axes(&pass(Axis::Rows)?, &pass(Axis::Columns)?, &direction)?,
    };
    let unwrapped = unwrap_2d(&demod.wrapped_phase, &demod.quality)?.phase;

    let mask = Mask::border_and_disk(w, h, cfg.mask_border, cfg.mask_radius, default_center(w, h));
    let stats = match &truth {
        Some(t) => Some(error_stats(&unwrapped, t, &mask)?),
        None => None,
    };
    if let Some(s) = &stats {
        if !s.rms.is_finite() || !s.max_abs.is_finite() {
            return Err(Error::Numerical("phase error is not finite".into()));
        }
    }
    Ok(PipelineOutput {
        fringe,
        quadrature,
        orientation,
        direction,
        sign,
        demod,
        unwrapped,
        truth,
        mask,
        stats,
    })
}

/// Writes images, the profile table and nothing else.
pub fn write_artifacts(out: &PipelineOutput, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let images: [(&str, &ScalarField); 7] = [
        ("fringe", &out.fringe),
        ("quadrature", &out.quadrature),
        ("wrapped", out.demod.wrapped_phase.field()),
        ("unwrapped", out.unwrapped.field()),
        ("quality", &out.demod.quality),
        ("orientation", out.orientation.angle()),
        ("sign", out.sign.field()),
    ];
    for (name, field) in images {
        write_image(field, &dir.join(format!("{name}.pgm")), BitDepth::Sixteen)?;
        if cfg.png {
            write_image(field, &dir.join(format!("{name}.png")), BitDepth::Sixteen)?;
        }
    }

    let row = (default_center(out.fringe.width(), out.fringe.height()).0 as usize)
        .min(out.fringe.height() - 1);
    let raw = out.unwrapped.field().row(row);
    let estimated: Vec<f64> = match &out.stats {
        Some(s) => raw.iter().map(|v| s.sign * v - s.piston).collect(),
        None => raw.to_vec(),
    };
    write_profile(
        &dir.join("profile_row256.csv"),
        out.truth.as_ref().map(|t| t.field().row(row)),
        &estimated,
        out.demod.wrapped_phase.field().row(row),
    )
}

/// Validates, computes, then writes all artifacts and `report.txt` into
/// the configured output directory. Nothing is written if any stage fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let out = compute(cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let report = RunReport {
        rms_error: out.stats.map(|s| s.rms),
        max_abs_error: out.stats.map(|s| s.max_abs),
        masked_fraction: out.mask.masked_fraction(),
        wall_time,
        config: cfg.clone(),
    };
    write_artifacts(&out, cfg, &cfg.output_dir)?;
    let path = cfg.output_dir.join("report.txt");
    fs::write(&path, report.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
