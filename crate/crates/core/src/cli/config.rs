//! Pipeline configuration and its flat `key = value` text form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::demod::{RidgePhase, RidgeSearch};
use crate::error::{Error, Result};
use crate::quadrature::{BiasMethod, ScanAxes};
use crate::wavelet::{Spacing, WaveletParams};

/// Source of the second pattern fed to the demodulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureSource {
    /// Sign-corrected Hilbert transform of the input.
    Hilbert,
    /// The exact π/2-shifted pattern (synthetic input only).
    Exact,
}

impl QuadratureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadratureSource::Hilbert => "hilbert",
            QuadratureSource::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiasKind {
    GlobalMean,
    GaussianHighpass,
}

impl BiasKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasKind::GlobalMean => "global_mean",
            BiasKind::GaussianHighpass => "gaussian_highpass",
        }
    }
}

/// Every knob of a run. `Default` reproduces the 512x512 paraboloid
/// benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `None` for the synthetic benchmark, else a PGM or PNG path.
    pub input: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub fringe_bias: f64,
    pub fringe_visibility: f64,
    pub center_frequency: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    pub n_scales: usize,
    pub spacing: Spacing,
    pub bias_method: BiasKind,
    pub bias_sigma: f64,
    pub window_sigma: f64,
    pub scan_axis: ScanAxes,
    pub sign_correction: bool,
    pub quadrature: QuadratureSource,
    pub ridge_search: RidgeSearch,
    pub ridge_phase: RidgePhase,
    pub noise_sigma: f64,
    pub noise_seed: u64,
    pub mask_border: usize,
    pub mask_radius: f64,
    pub output_dir: PathBuf,
    pub png: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let w = WaveletParams::default();
        Self {
            input: None,
            width: 512,
            height: 512,
            fringe_bias: 1.0,
            fringe_visibility: 0.5,
            center_frequency: w.center_frequency,
            min_scale: w.min_scale,
            max_scale: w.max_scale,
            n_scales: w.n_scales,
            spacing: w.spacing,
            bias_method: BiasKind::GlobalMean,
            bias_sigma: 30.0,
            window_sigma: 8.0,
            scan_axis: ScanAxes::Both,
            sign_correction: true,
            quadrature: QuadratureSource::Hilbert,
            ridge_search: RidgeSearch::TwoSided,
            ridge_phase: RidgePhase::ChirpCorrected,
            noise_sigma: 0.0,
            noise_seed: 0,
            mask_border: 32,
            mask_radius: 32.0,
            output_dir: PathBuf::from("out"),
            png: false,
        }
    }
}

/// Accepted keys, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "input",
    "width",
    "height",
    "fringe_bias",
    "fringe_visibility",
    "center_frequency",
    "min_scale",
    "max_scale",
    "n_scales",
    "spacing",
    "bias_method",
    "bias_sigma",
    "window_sigma",
    "scan_axis",
    "sign_correction",
    "quadrature",
    "ridge_search",
    "ridge_phase",
    "noise_sigma",
    "noise_seed",
    "mask_border",
    "mask_radius",
    "output_dir",
    "png",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::validation(key, format!("cannot parse {value:?}")))
}

fn parse_choice<T: Copy>(key: &str, value: &str, choices: &[(&str, T)]) -> Result<T> {
    choices
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<_> = choices.iter().map(|(n, _)| *n).collect();
            Error::validation(key, format!("{value:?} is not one of {}", names.join(", ")))
        })
}

impl PipelineConfig {
    pub fn wavelet(&self) -> WaveletParams {
        WaveletParams {
            center_frequency: self.center_frequency,
            min_scale: self.min_scale,
            max_scale: self.max_scale,
            n_scales: self.n_scales,
            spacing: self.spacing,
        }
    }

    pub fn bias(&self) -> BiasMethod {
        match self.bias_method {
            BiasKind::GlobalMean => BiasMethod::GlobalMean,
            BiasKind::GaussianHighpass => BiasMethod::GaussianHighpass {
                sigma: self.bias_sigma,
            },
        }
    }

    pub fn is_synthetic(&self) -> bool {
        self.input.is_none()
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "input" => {
                self.input = (value != "synthetic").then(|| PathBuf::from(value));
            }
            "width" => self.width = parse_num(key, value)?,
            "height" => self.height = parse_num(key, value)?,
            "fringe_bias" => self.fringe_bias = parse_num(key, value)?,
            "fringe_visibility" => self.fringe_visibility = parse_num(key, value)?,
            "center_frequency" => self.center_frequency = parse_num(key, value)?,
            "min_scale" => self.min_scale = parse_num(key, value)?,
            "max_scale" => self.max_scale = parse_num(key, value)?,
            "n_scales" => self.n_scales = parse_num(key, value)?,
            "spacing" => {
                self.spacing = parse_choice(
                    key,
                    value,
                    &[("log", Spacing::Logarithmic), ("linear", Spacing::Linear)],
                )?
            }
            "bias_method" => {
                self.bias_method = parse_choice(
                    key,
                    value,
                    &[
                        ("global_mean", BiasKind::GlobalMean),
                        ("gaussian_highpass", BiasKind::GaussianHighpass),
                    ],
                )?
            }
            "bias_sigma" => self.bias_sigma = parse_num(key, value)?,
            "window_sigma" => self.window_sigma = parse_num(key, value)?,
            "scan_axis" => {
                self.scan_axis = parse_choice(
                    key,
                    value,
                    &[
                        ("rows", ScanAxes::Rows),
                        ("columns", ScanAxes::Columns),
                        ("both", ScanAxes::Both),
                    ],
                )?
            }
            "sign_correction" => self.sign_correction = parse_num(key, value)?,
            "quadrature" => {
                self.quadrature = parse_choice(
                    key,
                    value,
                    &[
                        ("hilbert", QuadratureSource::Hilbert),
                        ("exact", QuadratureSource::Exact),
                    ],
                )?
            }
            "ridge_search" => {
                self.ridge_search = parse_choice(
                    key,
                    value,
                    &[
                        ("one_sided", RidgeSearch::OneSided),
                        ("two_sided", RidgeSearch::TwoSided),
                    ],
                )?
            }
            "ridge_phase" => {
                self.ridge_phase = parse_choice(
                    key,
                    value,
                    &[
                        ("raw", RidgePhase::Raw),
                        ("chirp_corrected", RidgePhase::ChirpCorrected),
                    ],
                )?
            }
            "noise_sigma" => self.noise_sigma = parse_num(key, value)?,
            "noise_seed" => self.noise_seed = parse_num(key, value)?,
            "mask_border" => self.mask_border = parse_num(key, value)?,
            "mask_radius" => self.mask_radius = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "png" => self.png = parse_num(key, value)?,
            _ => return Err(Error::validation(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    /// If a `[config]` header is present only the lines after it are read,
    /// so a run report is itself a valid configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let body = match text.lines().position(|l| l.trim() == "[config]") {
            Some(i) => text.lines().skip(i + 1).collect::<Vec<_>>(),
            None => text.lines().collect(),
        };
        let mut cfg = Self::default();
        for (n, line) in body.iter().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(
                    format!("line {}", n + 1),
                    format!("expected `key = value`, got {line:?}"),
                )
            })?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Value of `key` as written by [`PipelineConfig::to_text`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "input" => match &self.input {
                None => "synthetic".into(),
                Some(p) => p.display().to_string(),
            },
            "width" => self.width.to_string(),
            "height" => self.height.to_string(),
            "fringe_bias" => self.fringe_bias.to_string(),
            "fringe_visibility" => self.fringe_visibility.to_string(),
            "center_frequency" => self.center_frequency.to_string(),
            "min_scale" => self.min_scale.to_string(),
            "max_scale" => self.max_scale.to_string(),
            "n_scales" => self.n_scales.to_string(),
            "spacing" => self.spacing.as_str().into(),
            "bias_method" => self.bias_method.as_str().into(),
            "bias_sigma" => self.bias_sigma.to_string(),
            "window_sigma" => self.window_sigma.to_string(),
            "scan_axis" => self.scan_axis.as_str().into(),
            "sign_correction" => self.sign_correction.to_string(),
            "quadrature" => self.quadrature.as_str().into(),
            "ridge_search" => self.ridge_search.as_str().into(),
            "ridge_phase" => self.ridge_phase.as_str().into(),
            "noise_sigma" => self.noise_sigma.to_string(),
            "noise_seed" => self.noise_seed.to_string(),
            "mask_border" => self.mask_border.to_string(),
            "mask_radius" => self.mask_radius.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "png" => self.png.to_string(),
            _ => return None,
        })
    }

    /// One `key = value` line per key. Floats use the shortest text that
    /// parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    /// Checks every precondition of the modules the run will call. The
    /// error names the offending key.
    pub fn validate(&self) -> Result<()> {
        self.wavelet().validate()?;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(key, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.is_synthetic() {
            if self.width < 8 || self.height < 8 {
                return Err(Error::validation(
                    "width",
                    format!("synthetic grid must be at least 8x8, got {}x{}", self.width, self.height),
                ));
            }
            if !(0.0..=1.0).contains(&self.fringe_visibility) {
                return Err(Error::validation("fringe_visibility", "must lie in [0, 1]"));
            }
            if !self.fringe_bias.is_finite() {
                return Err(Error::validation("fringe_bias", "must be finite"));
            }
        } else if self.quadrature == QuadratureSource::Exact {
            return Err(Error::validation(
                "quadrature",
                "the exact quadrature is only available for synthetic input",
            ));
        }
        if self.bias_method == BiasKind::GaussianHighpass {
            positive("bias_sigma", self.bias_sigma)?;
        }
        positive("window_sigma", self.window_sigma)?;
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::validation("noise_sigma", "must be finite and >= 0"));
        }
        if !(self.mask_radius >= 0.0) || !self.mask_radius.is_finite() {
            return Err(Error::validation("mask_radius", "must be finite and >= 0"));
        }
        Ok(())
    }
}
