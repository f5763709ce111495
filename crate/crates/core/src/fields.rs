//! Grid types and the elementary numeric operations every other module
//! builds on: phase wrapping, finite differences, Gaussian smoothing and the
//! 1D discrete Fourier transform.
//!
//! # Coordinates
//!
//! A [`ScalarField`] is stored row-major. A pixel is addressed as `(x, y)`
//! where `x` is the **row** index and `y` the **column** index, so a single
//! row `x` is a signal running along `y`. This is the convention of the
//! row-wise demodulation: "row `x`, scanned in the `y` direction". `height`
//! counts rows and `width` counts columns.
//!
//! # Fourier convention
//!
//! The forward transform uses the negative exponent and no normalization,
//! the inverse carries `1/N`. Bin `j` of a length-`N` transform carries the
//! angular frequency `2πj/N` for `j <= N/2` and `2π(j-N)/N` above that, in
//! radians per pixel (see [`angular_frequency`]).

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Physical meaning of the samples in a [`ScalarField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    Intensity,
    Radians,
    Quality,
    Sign,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Intensity => "intensity",
            Units::Radians => "radians",
            Units::Quality => "quality",
            Units::Sign => "sign",
        }
    }
}

/// One of the two grid axes a 1D operation can run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Along each row, i.e. in the `y` (column index) direction.
    Rows,
    /// Along each column, i.e. in the `x` (row index) direction.
    Columns,
}

/// A 2D grid of finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
    units: Units,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>, units: Units) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "field dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::mismatch(format!(
                "{} samples for a {width}x{height} field",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite sample at index {i} ({})",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            units,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64, units: Units) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], units)
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel (`x` = row,
    /// `y` = column).
    pub fn from_fn(
        width: usize,
        height: usize,
        units: Units,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for x in 0..height {
            for y in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, units)
    }

    /// Internal constructor for operations that preserve finiteness.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>, units: Units) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
            units,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Sample at row `x`, column `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.width + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.width..(x + 1) * self.width]
    }

    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.height).map(|x| self.get(x, y)).collect()
    }

    /// Extracts line `i` along `axis`: row `i` for [`Axis::Rows`], column `i`
    /// for [`Axis::Columns`].
    pub fn line(&self, axis: Axis, i: usize) -> Vec<f64> {
        match axis {
            Axis::Rows => self.row(i).to_vec(),
            Axis::Columns => self.column(i),
        }
    }

    /// Number of lines along `axis` and the length of each.
    pub fn line_shape(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::Rows => (self.height, self.width),
            Axis::Columns => (self.width, self.height),
        }
    }

    /// Reassembles a field from lines produced along `axis`.
    pub fn from_lines(
        width: usize,
        height: usize,
        axis: Axis,
        lines: &[Vec<f64>],
        units: Units,
    ) -> Result<Self> {
        let mut data = vec![0.0; width * height];
        match axis {
            Axis::Rows => {
                for (x, line) in lines.iter().enumerate() {
                    data[x * width..(x + 1) * width].copy_from_slice(line);
                }
            }
            Axis::Columns => {
                for (y, line) in lines.iter().enumerate() {
                    for (x, v) in line.iter().enumerate() {
                        data[x * width + y] = *v;
                    }
                }
            }
        }
        Self::new(width, height, data, units)
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &ScalarField, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
            self.units,
        )
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_shape(other, "zip_map")?;
        Self::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.units,
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// One scan line of complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal(Vec<Complex64>);

impl ComplexSignal {
    pub const MIN_LEN: usize = 4;

    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "signal length {} is below the minimum of {}",
                samples.len(),
                Self::MIN_LEN
            )));
        }
        if samples.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical("non-finite signal sample".into()));
        }
        Ok(Self(samples))
    }

    pub fn from_real(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

/// A field of radians, either wrapped into `(-π, π]` or unwrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    field: ScalarField,
    wrapped: bool,
}

impl PhaseMap {
    /// Tags `field` as wrapped; every sample must already lie in `(-π, π]`.
    pub fn wrapped(field: ScalarField) -> Result<Self> {
        if let Some(v) = field.data().iter().find(|&&v| !(v > -PI && v <= PI)) {
            return Err(Error::invalid(format!(
                "wrapped phase sample {v} outside (-pi, pi]"
            )));
        }
        Ok(Self {
            field: field.with_units(Units::Radians),
            wrapped: true,
        })
    }

    pub fn unwrapped(field: ScalarField) -> Self {
        Self {
            field: field.with_units(Units::Radians),
            wrapped: false,
        }
    }

    /// Wraps every sample of `field` and tags the result as wrapped.
    pub fn wrap(field: &ScalarField) -> Self {
        let data = field.data().iter().map(|&v| wrap_angle(v)).collect();
        Self {
            field: ScalarField::from_parts(field.width(), field.height(), data, Units::Radians),
            wrapped: true,
        }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn is_wrapped(&self) -> bool {
        self.wrapped
    }
}

/// Canonical representative of `v` modulo `2π` in `(-π, π]`.
pub fn wrap_phase(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("cannot wrap non-finite value {v}")));
    }
    Ok(wrap_angle(v))
}

/// Unchecked [`wrap_phase`] for callers that already hold finite values.
#[inline]
pub fn wrap_angle(v: f64) -> f64 {
    let r = v.rem_euclid(TWO_PI);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Central differences in the interior, one-sided at the edges.
///
/// Returns `(gx, gy)`: the derivative along the row index and along the
/// column index, in input units per pixel.
pub fn gradient(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let (w, h) = (f.width(), f.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "gradient needs at least a 3x3 field, got {w}x{h}"
        )));
    }
    let d = f.data();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for x in 0..h {
        for y in 0..w {
            let i = x * w + y;
            gx[i] = if x == 0 {
                d[i + w] - d[i]
            } else if x == h - 1 {
                d[i] - d[i - w]
            } else {
                0.5 * (d[i + w] - d[i - w])
            };
            gy[i] = if y == 0 {
                d[i + 1] - d[i]
            } else if y == w - 1 {
                d[i] - d[i - 1]
            } else {
                0.5 * (d[i + 1] - d[i - 1])
            };
        }
    }
    Ok((
        ScalarField::new(w, h, gx, f.units())?,
        ScalarField::new(w, h, gy, f.units())?,
    ))
}

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Half-sample symmetric reflection: `-1 -> 0`, `-2 -> 1`, `n -> n-1`.
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

fn convolve_line(src: &[f64], taps: &[f64], out: &mut [f64]) {
    let n = src.len();
    let r = (taps.len() / 2) as i64;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, t) in taps.iter().enumerate() {
            acc += t * src[reflect(i as i64 + k as i64 - r, n)];
        }
        *o = acc;
    }
}

/// Separable Gaussian blur with reflective borders. `sigma == 0` returns the
/// input unchanged.
pub fn gaussian_smooth(f: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "smoothing sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let taps = gaussian_kernel(sigma);
    let (w, h) = (f.width(), f.height());

    let mut pass = vec![0.0; w * h];
    for x in 0..h {
        convolve_line(f.row(x), &taps, &mut pass[x * w..(x + 1) * w]);
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for y in 0..w {
        for x in 0..h {
            col[x] = pass[x * w + y];
        }
        convolve_line(&col, &taps, &mut col_out);
        for x in 0..h {
            out[x * w + y] = col_out[x];
        }
    }
    ScalarField::new(w, h, out, f.units())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place FFT. The inverse includes the `1/N` factor.
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(buf);
    if inverse {
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }
}

/// Unnormalized forward DFT, or the `1/N`-normalized inverse.
pub fn dft_1d(s: &ComplexSignal, inverse: bool) -> ComplexSignal {
    let mut buf = s.as_slice().to_vec();
    fft_in_place(&mut buf, inverse);
    ComplexSignal(buf)
}

/// Angular frequency (rad/pixel) carried by bin `j` of a length-`n` DFT.
#[inline]
pub fn angular_frequency(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        TWO_PI * j as f64 / n as f64
    } else {
        TWO_PI * (j as f64 - n as f64) / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_dft(s: &[Complex64]) -> Vec<Complex64> {
        let n = s.len();
        (0..n)
            .map(|j| {
                s.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        v * Complex64::from_polar(1.0, -TWO_PI * (j * k) as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_phase(0.0).unwrap(), 0.0);
        assert!((wrap_phase(1.5 * PI).unwrap() + 0.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_phase(-PI).unwrap(), PI);
        assert_eq!(wrap_phase(PI).unwrap(), PI);
        assert!(wrap_phase(f64::NAN).is_err());
        assert!(wrap_phase(f64::INFINITY).is_err());
    }

    #[test]
    fn gradient_constant_and_ramp() {
        let c = ScalarField::filled(7, 5, 3.0, Units::Intensity).unwrap();
        let (gx, gy) = gradient(&c).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));

        let ramp = ScalarField::from_fn(9, 8, Units::Radians, |x, _| 0.25 * x as f64).unwrap();
        let (gx, gy) = gradient(&ramp).unwrap();
        for x in 1..7 {
            for y in 0..9 {
                assert_eq!(gx.get(x, y), 0.25);
                assert_eq!(gy.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn gradient_of_paraboloid_matches_analytic() {
        let phi = ScalarField::from_fn(512, 512, Units::Radians, |x, y| {
            let (dx, dy) = (x as f64 - 256.0, y as f64 - 256.0);
            0.0005 * (dx * dx + dy * dy)
        })
        .unwrap();
        let (_, gy) = gradient(&phi).unwrap();
        assert!((gy.get(256, 300) - 0.044).abs() < 1e-9);
    }

    #[test]
    fn gradient_rejects_small_fields() {
        let f = ScalarField::filled(2, 5, 0.0, Units::Intensity).unwrap();
        assert!(matches!(gradient(&f), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn smooth_identity_and_constant() {
        let f = ScalarField::from_fn(11, 6, Units::Intensity, |x, y| (x * 7 + y) as f64).unwrap();
        assert_eq!(gaussian_smooth(&f, 0.0).unwrap(), f);
        let c = ScalarField::filled(10, 12, 2.5, Units::Intensity).unwrap();
        let s = gaussian_smooth(&c, 3.0).unwrap();
        assert!(s.data().iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(gaussian_smooth(&c, -1.0).is_err());
    }

    #[test]
    fn smooth_impulse_center_value() {
        let f = ScalarField::from_fn(33, 33, Units::Intensity, |x, y| {
            if x == 16 && y == 16 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s = gaussian_smooth(&f, 2.0).unwrap();
        // Exact discrete normalization of the 13-tap kernel, squared.
        let norm: f64 = (-6i32..=6).map(|k| (-(k * k) as f64 / 8.0).exp()).sum();
        let expected = 1.0 / (norm * norm);
        assert!((s.get(16, 16) - expected).abs() < 1e-15);
        assert!((expected - 0.0398).abs() < 1e-4);
    }

    #[test]
    fn dft_examples() {
        let ones = ComplexSignal::from_real(&[1.0; 4]).unwrap();
        let f = dft_1d(&ones, false);
        let expect = [4.0, 0.0, 0.0, 0.0];
        for (c, e) in f.as_slice().iter().zip(expect) {
            assert!((c - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let imp = ComplexSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for c in dft_1d(&imp, false).as_slice() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(ComplexSignal::from_real(&[1.0; 3]).is_err());
    }

    #[test]
    fn dft_matches_naive_sum() {
        let s: Vec<Complex64> = (0..24)
            .map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
            .collect();
        let fast = dft_1d(&ComplexSignal::new(s.clone()).unwrap(), false);
        for (a, b) in fast.as_slice().iter().zip(naive_dft(&s)) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn bin_map() {
        assert_eq!(angular_frequency(0, 8), 0.0);
        assert_eq!(angular_frequency(4, 8), PI);
        assert_eq!(angular_frequency(5, 8), -0.75 * PI);
        assert_eq!(angular_frequency(2, 5), 0.8 * PI);
        assert_eq!(angular_frequency(3, 5), -0.8 * PI);
    }

    #[test]
    fn field_rejects_bad_input() {
        assert!(ScalarField::new(2, 2, vec![0.0; 3], Units::Intensity).is_err());
        assert!(ScalarField::new(2, 1, vec![0.0, f64::NAN], Units::Intensity).is_err());
        assert!(ScalarField::new(0, 1, vec![], Units::Intensity).is_err());
        let f = ScalarField::filled(2, 2, 4.0, Units::Radians).unwrap();
        assert!(PhaseMap::wrapped(f).is_err());
    }

    #[test]
    fn line_round_trip_along_columns() {
        let f = ScalarField::from_fn(5, 3, Units::Intensity, |x, y| (10 * x + y) as f64).unwrap();
        let lines: Vec<Vec<f64>> = (0..5).map(|y| f.line(Axis::Columns, y)).collect();
        let g = ScalarField::from_lines(5, 3, Axis::Columns, &lines, Units::Intensity).unwrap();
        assert_eq!(f, g);
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(v in -1e6f64..1e6) {
            let w = wrap_angle(v);
            prop_assert!(w > -PI && w <= PI);
            prop_assert_eq!(wrap_angle(w), w);
        }

        #[test]
        fn wrap_is_periodic(v in -50.0f64..50.0, k in -1_000_000i64..1_000_000) {
            let a = wrap_angle(v);
            let b = wrap_angle(v + TWO_PI * k as f64);
            // compare on the circle: near ±π the representatives can sit on
            // opposite ends of the interval
            let d = wrap_angle(a - b).abs();
            prop_assert!(d < 1e-9, "a={a} b={b}");
            if a.abs() < PI - 1e-6 {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn gradient_exact_on_planes(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -10.0f64..10.0) {
            let f = ScalarField::from_fn(6, 7, Units::Radians, |x, y| a * x as f64 + b * y as f64 + c).unwrap();
            let (gx, gy) = gradient(&f).unwrap();
            for x in 1..6 {
                for y in 1..5 {
                    prop_assert!((gx.get(x, y) - a).abs() < 1e-12);
                    prop_assert!((gy.get(x, y) - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn parseval_holds(seed in 0u64..1000, n in 4usize..4096) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let sig = ComplexSignal::new(s.clone()).unwrap();
            let spec = dft_1d(&sig, false);
            let e_time: f64 = s.iter().map(|c| c.norm_sqr()).sum();
            let e_freq: f64 = spec.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            prop_assert!((e_time - e_freq).abs() <= 1e-10 * e_time);
            let back = dft_1d(&spec, true);
            let err: f64 = back.as_slice().iter().zip(&s).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-12 * e_time.sqrt());
        }

        #[test]
        fn smoothing_preserves_mean(w in 3usize..40, h in 3usize..40, sigma in 0.3f64..12.0, seed in 0u64..100) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(w, h, Units::Intensity, |_, _| rng.random_range(0.0..2.0)).unwrap();
            let s = gaussian_smooth(&f, sigma).unwrap();
            prop_assert!((s.mean() - f.mean()).abs() <= 1e-9 * f.mean().abs());
        }
    }
}
