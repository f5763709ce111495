//! Grayscale image files and the profile table.
//!
//! Images are written with a linear min–max mapping onto the full gray
//! range. The `min max` pair goes to a sidecar `<stem>.range.txt` next to the
//! image so [`read_image`] can map gray levels back to field values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

/// `<dir>/<stem>.range.txt` for an image path.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let stem = image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    image.with_file_name(format!("{stem}.range.txt"))
}

/// Gray levels for `f`: `floor((v − min) / (max − min) · maxval + 0.5)`, or
/// mid-gray everywhere for a constant field.
pub fn quantize(f: &ScalarField, depth: BitDepth) -> Vec<u32> {
    let (lo, hi) = f.min_max();
    let maxval = depth.max_value() as f64;
    if hi == lo {
        return vec![depth.max_value() / 2; f.len()];
    }
    f.data()
        .iter()
        .map(|&v| (((v - lo) / (hi - lo)) * maxval + 0.5).floor().min(maxval) as u32)
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `f` as a binary PGM, or as PNG when the extension is `.png`, plus
/// the range sidecar.
pub fn write_image(f: &ScalarField, path: &Path, depth: BitDepth) -> Result<()> {
    let levels = quantize(f, depth);
    let (w, h) = (f.width() as u32, f.height() as u32);
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        let result = match depth {
            BitDepth::Eight => {
                let buf: Vec<u8> = levels.iter().map(|&v| v as u8).collect();
                image::GrayImage::from_raw(w, h, buf)
                    .expect("buffer matches dimensions")
                    .save(path)
            }
            BitDepth::Sixteen => {
                let buf: Vec<u16> = levels.iter().map(|&v| v as u16).collect();
                image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, buf)
                    .expect("buffer matches dimensions")
                    .save(path)
            }
        };
        result.map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
    } else {
        let mut bytes = format!("P5\n{w} {h}\n{}\n", depth.max_value()).into_bytes();
        match depth {
            BitDepth::Eight => bytes.extend(levels.iter().map(|&v| v as u8)),
            BitDepth::Sixteen => {
                for &v in &levels {
                    bytes.extend_from_slice(&(v as u16).to_be_bytes());
                }
            }
        }
        write_file(path, &bytes)?;
    }
    let (lo, hi) = f.min_max();
    write_file(&sidecar_path(path), format!("{lo} {hi}\n").as_bytes())
}

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Gray levels, dimensions and maxval of a binary PGM.
fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(Vec<u32>, usize, usize, u32)> {
    if !bytes.starts_with(b"P5") {
        return Err(format_error(path, "not a binary PGM (P5)"));
    }
    let mut pos = 2;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format_error(path, "truncated PGM header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields.push(
            text.parse::<u32>()
                .map_err(|_| format_error(path, "bad PGM header number"))?,
        );
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let (w, h, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(format_error(path, "unsupported PGM dimensions or maxval"));
    }
    let per = if maxval < 256 { 1 } else { 2 };
    let raster = bytes
        .get(pos..pos + w * h * per)
        .ok_or_else(|| format_error(path, "truncated PGM raster"))?;
    let levels = if per == 1 {
        raster.iter().map(|&b| b as u32).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
            .collect()
    };
    Ok((levels, w, h, maxval))
}

fn read_sidecar(path: &Path) -> Result<Option<(f64, f64)>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format_error(&side, "expected two numbers"))?;
    match nums.as_slice() {
        [lo, hi] if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(Some((*lo, *hi))),
        _ => Err(format_error(&side, "expected `min max`")),
    }
}

/// Reads a PGM (P5) or PNG grayscale image. With a range sidecar the gray
/// levels are mapped back onto `[min, max]`; otherwise onto `[0, 1]`.
pub fn read_image(path: &Path) -> Result<ScalarField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (levels, w, h, maxval) = if bytes.starts_with(b"P5") {
        parse_pgm(path, &bytes)?
    } else {
        let img = image::load_from_memory(&bytes).map_err(|e| format_error(path, e.to_string()))?;
        let sixteen = matches!(
            img.color(),
            image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16
        );
        if sixteen {
            let g = img.to_luma16();
            let (w, h) = g.dimensions();
            (g.into_raw().into_iter().map(u32::from).collect(), w as usize, h as usize, 65535)
        } else {
            let g = img.to_luma8();
            let (w, h) = g.dimensions();
            (g.into_raw().into_iter().map(u32::from).collect(), w as usize, h as usize, 255)
        }
    };
    let data: Vec<f64> = match read_sidecar(path)? {
        Some((lo, hi)) if hi > lo => levels
            .iter()
            .map(|&v| lo + (hi - lo) * v as f64 / maxval as f64)
            .collect(),
        Some((lo, _)) => vec![lo; levels.len()],
        None => levels.iter().map(|&v| v as f64 / maxval as f64).collect(),
    };
    ScalarField::new(w, h, data, Units::Intensity)
}

/// Formats `v` with 9 significant digits.
pub fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// One scan line as CSV with header `y,truth,estimated,wrapped`. A missing
/// truth column is left empty.
pub fn write_profile(
    path: &Path,
    truth: Option<&[f64]>,
    estimated: &[f64],
    wrapped: &[f64],
) -> Result<()> {
    let mut out = String::from("y,truth,estimated,wrapped\n");
    for y in 0..estimated.len() {
        let t = truth.map(|t| sig9(t[y])).unwrap_or_default();
        let _ = writeln!(out, "{y},{t},{},{}", sig9(estimated[y]), sig9(wrapped[y]));
    }
    write_file(path, out.as_bytes())
}
