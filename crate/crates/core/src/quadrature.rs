//! Synthesizing the π/2-shifted pattern from a single fringe image.
//!
//! The Hilbert transform of a line is exact only where the local frequency
//! keeps one sign. Closed fringes reverse it, so the raw transform is
//! multiplied by a sign map derived from the fringe direction: the fringe
//! orientation (defined modulo π) is lifted to a direction modulo 2π by
//! unwrapping, and the sign of the fringe normal along the scan axis gives
//! the sign of the local frequency.
//!
//! Along a single axis the correction still breaks down where the normal is
//! nearly perpendicular to that axis, because the line there carries almost
//! no phase variation. [`ScanAxes::Both`] blends the row and column
//! transforms with weights `n_y²` and `n_x²` from the fringe normal
//! `n = (n_x, n_y)`, so each pixel relies on the axis that actually crosses
//! its fringes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{
    angular_frequency, fft_in_place, gaussian_smooth, gradient, wrap_angle, Axis, PhaseMap,
    ScalarField, Units, TWO_PI,
};
use crate::unwrap::unwrap_2d;
use std::f64::consts::{FRAC_PI_2, PI};

/// Below this coherence an orientation estimate is treated as undefined.
pub const MIN_COHERENCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasMethod {
    /// Subtract the mean of every scan line.
    GlobalMean,
    /// Subtract a Gaussian low-pass with the given sigma in pixels.
    GaussianHighpass { sigma: f64 },
}

/// Which axes the Hilbert transform (and the demodulation) run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanAxes {
    Rows,
    Columns,
    Both,
}

impl ScanAxes {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanAxes::Rows => "rows",
            ScanAxes::Columns => "columns",
            ScanAxes::Both => "both",
        }
    }
}

/// Fringe tangent orientation in `[0, π)` and its confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    angle: ScalarField,
    coherence: ScalarField,
}

impl OrientationField {
    pub fn new(angle: ScalarField, coherence: ScalarField) -> Result<Self> {
        angle.check_shape(&coherence, "orientation vs coherence")?;
        if angle.data().iter().any(|a| !(0.0..PI).contains(a)) {
            return Err(Error::invalid("orientation angles must lie in [0, π)"));
        }
        if coherence.data().iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::invalid("coherence must lie in [0, 1]"));
        }
        Ok(Self {
            angle: angle.with_units(Units::Radians),
            coherence: coherence.with_units(Units::Quality),
        })
    }

    pub fn angle(&self) -> &ScalarField {
        &self.angle
    }

    pub fn coherence(&self) -> &ScalarField {
        &self.coherence
    }
}

/// Fringe tangent direction in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionField {
    angle: ScalarField,
}

impl DirectionField {
    pub fn new(angle: ScalarField) -> Result<Self> {
        if angle.data().iter().any(|a| !(0.0..TWO_PI).contains(a)) {
            return Err(Error::invalid("direction angles must lie in [0, 2π)"));
        }
        Ok(Self {
            angle: angle.with_units(Units::Radians),
        })
    }

    pub fn angle(&self) -> &ScalarField {
        &self.angle
    }

    /// Squared components `(n_x², n_y²)` of the unit fringe normal at a
    /// pixel index; they sum to one.
    pub fn normal_weights(&self, i: usize) -> (f64, f64) {
        let d = self.angle.data()[i];
        let (s, c) = d.sin_cos();
        (s * s, c * c)
    }
}

/// Per-pixel sign of the local frequency along a scan axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SignField {
    sign: ScalarField,
}

impl SignField {
    pub fn new(sign: ScalarField) -> Result<Self> {
        if sign.data().iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::invalid("sign samples must be exactly -1 or +1"));
        }
        Ok(Self {
            sign: sign.with_units(Units::Sign),
        })
    }

    /// All `+1`: no correction.
    pub fn positive(width: usize, height: usize) -> Result<Self> {
        Self::new(ScalarField::filled(width, height, 1.0, Units::Sign)?)
    }

    pub fn field(&self) -> &ScalarField {
        &self.sign
    }

    pub fn negate(&self) -> SignField {
        SignField {
            sign: ScalarField::from_parts(
                self.sign.width(),
                self.sign.height(),
                self.sign.data().iter().map(|s| -s).collect(),
                Units::Sign,
            ),
        }
    }
}

fn map_lines(
    f: &ScalarField,
    axis: Axis,
    units: Units,
    op: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
) -> Result<ScalarField> {
    let (n_lines, _) = f.line_shape(axis);
    let lines = (0..n_lines)
        .into_par_iter()
        .map(|i| op(&f.line(axis, i)))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::from_lines(f.width(), f.height(), axis, &lines, units)
}

/// Removes the fringe background. [`BiasMethod::GlobalMean`] subtracts the
/// mean of each row.
pub fn remove_bias(i: &ScalarField, method: BiasMethod) -> Result<ScalarField> {
    remove_bias_along(i, method, Axis::Rows)
}

/// As [`remove_bias`], with line means taken along `axis`.
pub fn remove_bias_along(i: &ScalarField, method: BiasMethod, axis: Axis) -> Result<ScalarField> {
    match method {
        BiasMethod::GlobalMean => map_lines(i, axis, Units::Intensity, |line| {
            let m = line.iter().sum::<f64>() / line.len() as f64;
            Ok(line.iter().map(|v| v - m).collect())
        }),
        BiasMethod::GaussianHighpass { sigma } => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::validation(
                    "bias sigma",
                    format!("high-pass sigma must be finite and > 0, got {sigma}"),
                ));
            }
            let low = gaussian_smooth(i, sigma)?;
            i.zip_map(&low, |a, b| a - b)
                .map(|f| f.with_units(Units::Intensity))
        }
    }
}

/// Discrete Hilbert transform of a real line: multiplies bin `j` by
/// `-i·sgn(ω_j)`, with DC and the Nyquist bin set to zero.
pub fn hilbert_row(signal: &[f64]) -> Result<Vec<f64>> {
    let n = signal.len();
    if n < 8 {
        return Err(Error::invalid(format!(
            "Hilbert transform needs at least 8 samples, got {n}"
        )));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    for (j, b) in buf.iter_mut().enumerate() {
        let w = angular_frequency(j, n);
        let nyquist = n.is_multiple_of(2) && j == n / 2;
        *b = if j == 0 || nyquist {
            Complex64::new(0.0, 0.0)
        } else if w > 0.0 {
            Complex64::new(b.im, -b.re)
        } else {
            Complex64::new(-b.im, b.re)
        };
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 + signal.iter().map(|v| v.abs()).sum::<f64>();
    let residual = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residual > 1e-12 * scale {
        return Err(Error::Numerical(format!(
            "Hilbert output has imaginary residual {residual:e}"
        )));
    }
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// [`hilbert_row`] applied to every line along `axis`.
pub fn hilbert_lines(f: &ScalarField, axis: Axis) -> Result<ScalarField> {
    map_lines(f, axis, Units::Intensity, hilbert_row)
}

/// Structure-tensor estimate of the fringe tangent orientation.
///
/// The doubled-angle tensor components are averaged with a Gaussian window
/// of `window_sigma` pixels. Angles are measured from the row-index (`x`)
/// axis towards the column-index (`y`) axis.
pub fn orientation_map(i: &ScalarField, window_sigma: f64) -> Result<OrientationField> {
    if i.width() < 5 || i.height() < 5 {
        return Err(Error::invalid(format!(
            "orientation needs at least a 5x5 field, got {}x{}",
            i.width(),
            i.height()
        )));
    }
    if !(window_sigma > 0.0) || !window_sigma.is_finite() {
        return Err(Error::validation(
            "window sigma",
            format!("must be finite and > 0, got {window_sigma}"),
        ));
    }
    let (gx, gy) = gradient(i)?;
    let j20 = gaussian_smooth(&gx.zip_map(&gy, |a, b| a * a - b * b)?, window_sigma)?;
    let j11 = gaussian_smooth(&gx.zip_map(&gy, |a, b| 2.0 * a * b)?, window_sigma)?;
    let energy = gaussian_smooth(&gx.zip_map(&gy, |a, b| a * a + b * b)?, window_sigma)?;

    let angle = j20.zip_map(&j11, |c, s| {
        let a = (0.5 * s.atan2(c) + FRAC_PI_2).rem_euclid(PI);
        if a >= PI {
            0.0
        } else {
            a
        }
    })?;
    let mut coherence = Vec::with_capacity(i.len());
    for ((c, s), e) in j20.data().iter().zip(j11.data()).zip(energy.data()) {
        coherence.push((c.hypot(*s) / (e + 1e-12)).clamp(0.0, 1.0));
    }
    OrientationField::new(
        angle,
        ScalarField::new(i.width(), i.height(), coherence, Units::Quality)?,
    )
}

/// Lifts the orientation to a direction modulo 2π.
///
/// `2·angle` is a wrapped phase that is continuous wherever the orientation
/// is; it is unwrapped with coherence as the quality map and halved. Pixels
/// whose coherence is below [`MIN_COHERENCE`] copy the direction of their
/// most coherent neighbour unwrapped before them.
pub fn direction_unwrap(o: &OrientationField) -> Result<DirectionField> {
    let doubled = PhaseMap::wrapped(o.angle.map(|a| wrap_angle(2.0 * a))?)?;
    let lifted = unwrap_2d(&doubled, &o.coherence)?;
    let mut dir: Vec<f64> = lifted
        .phase
        .field()
        .data()
        .iter()
        .map(|v| {
            let d = (0.5 * v).rem_euclid(TWO_PI);
            if d >= TWO_PI {
                0.0
            } else {
                d
            }
        })
        .collect();

    let (w, h) = (o.angle.width(), o.angle.height());
    let q = o.coherence.data();
    let mut rank = vec![usize::MAX; w * h];
    for (r, &p) in lifted.visited_order.iter().enumerate() {
        rank[p] = r;
    }
    for &p in &lifted.visited_order {
        if q[p] >= MIN_COHERENCE {
            continue;
        }
        let (x, y) = (p / w, p % w);
        let candidates = [
            (x > 0).then(|| p - w),
            (y > 0).then(|| p - 1),
            (y + 1 < w).then(|| p + 1),
            (x + 1 < h).then(|| p + w),
        ];
        let best = candidates
            .into_iter()
            .flatten()
            .filter(|&nb| rank[nb] < rank[p])
            .max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)));
        if let Some(nb) = best {
            dir[p] = dir[nb];
        }
    }
    DirectionField::new(ScalarField::new(w, h, dir, Units::Radians)?)
}

/// Sign of the fringe normal `(sin d, −cos d)` along the scan axis, with
/// `+1` for a component within `1e-12` of zero.
pub fn sign_map(d: &DirectionField, scan_axis: Axis) -> Result<SignField> {
    let sign = d.angle.map(|a| {
        let component = match scan_axis {
            Axis::Rows => -a.cos(),
            Axis::Columns => a.sin(),
        };
        if component >= -1e-12 {
            1.0
        } else {
            -1.0
        }
    })?;
    SignField::new(sign)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub bias: BiasMethod,
    pub window_sigma: f64,
    pub scan: ScanAxes,
    /// When false every sign is forced to `+1`.
    pub sign_correction: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            bias: BiasMethod::GlobalMean,
            window_sigma: 8.0,
            scan: ScanAxes::Both,
            sign_correction: true,
        }
    }
}

/// The synthesized pattern `≈ −M sin φ` and the fields it was built from.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub pattern: ScalarField,
    pub row_sign: SignField,
    pub column_sign: SignField,
    pub orientation: OrientationField,
    pub direction: DirectionField,
}

impl Quadrature {
    pub fn sign(&self, axis: Axis) -> &SignField {
        match axis {
            Axis::Rows => &self.row_sign,
            Axis::Columns => &self.column_sign,
        }
    }
}

/// Bias removal, Hilbert transform along the configured axes and sign
/// correction: `I_q = −s ⊙ H(I_f)` per axis, blended by the squared normal
/// components for [`ScanAxes::Both`].
pub fn corrected_quadrature(i: &ScalarField, cfg: &QuadratureConfig) -> Result<Quadrature> {
    let orientation = orientation_map(i, cfg.window_sigma)?;
    let direction = direction_unwrap(&orientation)?;
    let (w, h) = (i.width(), i.height());
    let (row_sign, column_sign) = if cfg.sign_correction {
        (sign_map(&direction, Axis::Rows)?, sign_map(&direction, Axis::Columns)?)
    } else {
        (SignField::positive(w, h)?, SignField::positive(w, h)?)
    };

    let along = |axis: Axis| -> Result<Vec<f64>> {
        let h = hilbert_lines(&remove_bias_along(i, cfg.bias, axis)?, axis)?;
        let s = match axis {
            Axis::Rows => &row_sign,
            Axis::Columns => &column_sign,
        };
        Ok(h
            .data()
            .iter()
            .zip(s.field().data())
            .map(|(v, s)| -s * v)
            .collect())
    };
    let data = match cfg.scan {
        ScanAxes::Rows => along(Axis::Rows)?,
        ScanAxes::Columns => along(Axis::Columns)?,
        ScanAxes::Both => {
            let r = along(Axis::Rows)?;
            let c = along(Axis::Columns)?;
            (0..w * h)
                .map(|k| {
                    let (wx, wy) = direction.normal_weights(k);
                    wy * r[k] + wx * c[k]
                })
                .collect()
        }
    };
    Ok(Quadrature {
        pattern: ScalarField::new(w, h, data, Units::Intensity)?,
        row_sign,
        column_sign,
        orientation,
        direction,
    })
}
