//! Phase error after piston and sign resolution, over a scoring mask.

use crate::error::{Error, Result};
use crate::fields::PhaseMap;

/// Pixels that take part in scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    keep: Vec<bool>,
}

/// Fewest pixels a mask may select.
pub const MIN_MASK_PIXELS: usize = 100;

impl Mask {
    pub fn new(width: usize, height: usize, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != width * height {
            return Err(Error::mismatch(format!(
                "{} mask samples for a {width}x{height} field",
                keep.len()
            )));
        }
        Ok(Self {
            width,
            height,
            keep,
        })
    }

    /// Excludes a `border`-pixel frame and the disk of `radius` pixels about
    /// `center` (row, column). Pixels exactly on the circle are excluded.
    pub fn border_and_disk(
        width: usize,
        height: usize,
        border: usize,
        radius: f64,
        center: (f64, f64),
    ) -> Self {
        let mut keep = Vec::with_capacity(width * height);
        for x in 0..height {
            for y in 0..width {
                let inside = x >= border
                    && y >= border
                    && x + border < height
                    && y + border < width;
                let (dx, dy) = (x as f64 - center.0, y as f64 - center.1);
                keep.push(inside && dx * dx + dy * dy > radius * radius);
            }
        }
        Self {
            width,
            height,
            keep,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.keep[x * self.width + y]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.keep
    }

    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Fraction of pixels left out of scoring.
    pub fn masked_fraction(&self) -> f64 {
        1.0 - self.count() as f64 / self.keep.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub rms: f64,
    pub max_abs: f64,
    /// `+1` or `-1`: the sign applied to the estimate before comparing.
    pub sign: f64,
    /// Mean of `sign·est − truth` over the mask.
    pub piston: f64,
}

/// Residual statistics of `est` against `truth`. Both signs of `est` are
/// tried after removing the mean difference; the one with the lower RMS
/// wins (`+1` on a tie).
pub fn error_stats(est: &PhaseMap, truth: &PhaseMap, mask: &Mask) -> Result<ErrorStats> {
    let (e, t) = (est.field(), truth.field());
    e.check_shape(t, "estimate vs truth")?;
    if (mask.width, mask.height) != (e.width(), e.height()) {
        return Err(Error::mismatch("mask does not match the phase maps"));
    }
    let n = mask.count();
    if n < MIN_MASK_PIXELS {
        return Err(Error::invalid(format!(
            "mask selects {n} pixels, need at least {MIN_MASK_PIXELS}"
        )));
    }
    let score = |sign: f64| {
        let diffs: Vec<f64> = e
            .data()
            .iter()
            .zip(t.data())
            .zip(&mask.keep)
            .filter(|(_, &k)| k)
            .map(|((a, b), _)| sign * a - b)
            .collect();
        let piston = diffs.iter().sum::<f64>() / n as f64;
        let ss: f64 = diffs.iter().map(|d| (d - piston).powi(2)).sum();
        let max_abs = diffs.iter().map(|d| (d - piston).abs()).fold(0.0, f64::max);
        ErrorStats {
            rms: (ss / n as f64).sqrt(),
            max_abs,
            sign,
            piston,
        }
    };
    let pos = score(1.0);
    let neg = score(-1.0);
    Ok(if neg.rms < pos.rms { neg } else { pos })
}

/// RMS residual after piston and sign resolution.
pub fn rms_error(est: &PhaseMap, truth: &PhaseMap, mask: &Mask) -> Result<f64> {
    error_stats(est, truth, mask).map(|s| s.rms)
}

/// Largest absolute residual after piston and sign resolution.
pub fn max_abs_error(est: &PhaseMap, truth: &PhaseMap, mask: &Mask) -> Result<f64> {
    error_stats(est, truth, mask).map(|s| s.max_abs)
}
