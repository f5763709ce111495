//! Ridge demodulation of a fringe pattern and its quadrature.
//!
//! Along each scan line the fringe `M cos φ` and its quadrature `−M sin φ`
//! are transformed with the Morlet wavelet and combined as
//! `W_s = W − i·W_d`, the transform of the analytic line `M e^{iφ}`. The
//! coefficient with the largest modulus in each column (the ridge) carries
//! the local phase.
//!
//! A positive-frequency wavelet only responds to `M e^{iφ}` where `φ`
//! increases along the line. Where it decreases, the mirror combination
//! `W + i·W_d` holds the response to `M e^{−iφ}`, so the two-sided search
//! also scans `conj(W + i·W_d)` and keeps whichever branch is stronger.
//!
//! The phase read at the ridge is biased when the local frequency changes
//! within the wavelet support. [`RidgePhase::ChirpCorrected`] models the
//! line around the ridge as a Gaussian-windowed linear chirp, estimates the
//! chirp from the first and second log-derivatives of the coefficients
//! along the shift axis, and subtracts the closed-form phase offset such a
//! chirp produces.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{wrap_angle, Axis, PhaseMap, ScalarField, Units, TWO_PI};
use crate::quadrature::DirectionField;
use crate::wavelet::{CwtMatrix, CwtPlan, WaveletParams};

/// Ridge of one scan line.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeRow {
    pub scale_index: Vec<usize>,
    pub modulus: Vec<f64>,
    pub phase: Vec<f64>,
    /// Columns whose ridge was found on the mirror branch.
    pub negative: Vec<bool>,
}

impl RidgeRow {
    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct DemodResult {
    pub wrapped_phase: PhaseMap,
    /// Ridge modulus per pixel.
    pub quality: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RidgeSearch {
    /// Column maximum of `W − i·W_d` only.
    OneSided,
    /// Column maximum over `W − i·W_d` and `conj(W + i·W_d)`.
    TwoSided,
}

impl RidgeSearch {
    pub fn as_str(self) -> &'static str {
        match self {
            RidgeSearch::OneSided => "one_sided",
            RidgeSearch::TwoSided => "two_sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RidgePhase {
    Raw,
    ChirpCorrected,
}

impl RidgePhase {
    pub fn as_str(self) -> &'static str {
        match self {
            RidgePhase::Raw => "raw",
            RidgePhase::ChirpCorrected => "chirp_corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodOptions {
    pub params: WaveletParams,
    pub axis: Axis,
    pub search: RidgeSearch,
    pub ridge_phase: RidgePhase,
}

impl Default for DemodOptions {
    fn default() -> Self {
        Self {
            params: WaveletParams::default(),
            axis: Axis::Rows,
            search: RidgeSearch::TwoSided,
            ridge_phase: RidgePhase::ChirpCorrected,
        }
    }
}

/// `W_s = W − i·W_d`.
pub fn combine_quadratures(w: &CwtMatrix, w_d: &CwtMatrix) -> Result<CwtMatrix> {
    w.zip_with(w_d, |a, b| a - Complex64::i() * b)
}

/// `W + i·W_d`, the response to the conjugate analytic line.
pub fn mirror_combination(w: &CwtMatrix, w_d: &CwtMatrix) -> Result<CwtMatrix> {
    w.zip_with(w_d, |a, b| a + Complex64::i() * b)
}

fn column_max(m: &CwtMatrix, xi: usize, conj: bool) -> (usize, f64, Complex64) {
    let mut best = (0, -1.0, Complex64::new(0.0, 0.0));
    for k in 0..m.n_scales() {
        let c = m.get(k, xi);
        let a = c.norm();
        if a > best.1 {
            best = (k, a, if conj { c.conj() } else { c });
        }
    }
    best
}

fn ridge_phase(modulus: f64, c: Complex64) -> f64 {
    if modulus == 0.0 {
        0.0
    } else {
        // atan2 yields [-π, π]; fold -π onto π
        let a = c.im.atan2(c.re);
        if a <= -std::f64::consts::PI {
            a + TWO_PI
        } else {
            a
        }
    }
}

/// Column-maximum ridge. Ties go to the smallest scale index; an all-zero
/// column gets phase 0 and modulus 0.
pub fn ridge_extract(w_s: &CwtMatrix) -> RidgeRow {
    let n = w_s.len();
    let mut out = RidgeRow {
        scale_index: Vec::with_capacity(n),
        modulus: Vec::with_capacity(n),
        phase: Vec::with_capacity(n),
        negative: vec![false; n],
    };
    for xi in 0..n {
        let (k, a, c) = column_max(w_s, xi, false);
        out.scale_index.push(k);
        out.modulus.push(a);
        out.phase.push(ridge_phase(a, c));
    }
    out
}

/// Ridge over both branches. The principal branch wins ties.
pub fn ridge_extract_two_sided(principal: &CwtMatrix, mirror: &CwtMatrix) -> Result<RidgeRow> {
    if !principal.same_shape(mirror) {
        return Err(Error::mismatch("principal and mirror coefficient grids differ"));
    }
    let n = principal.len();
    let mut out = RidgeRow {
        scale_index: Vec::with_capacity(n),
        modulus: Vec::with_capacity(n),
        phase: Vec::with_capacity(n),
        negative: Vec::with_capacity(n),
    };
    for xi in 0..n {
        let fwd = column_max(principal, xi, false);
        let bwd = column_max(mirror, xi, true);
        let (best, negative) = if bwd.1 > fwd.1 { (bwd, true) } else { (fwd, false) };
        out.scale_index.push(best.0);
        out.modulus.push(best.1);
        out.phase.push(ridge_phase(best.1, best.2));
        out.negative.push(negative);
    }
    Ok(out)
}

/// Phase offset that a Gaussian-windowed linear chirp leaves at the ridge
/// of coefficient field `b` (unconjugated), or `None` when the local
/// estimate is degenerate.
fn chirp_bias(b: &CwtMatrix, k: usize, xi: usize, fc: f64) -> Option<f64> {
    let n = b.len();
    let s = b.scales()[k];
    let c0 = b.get(k, xi);
    let cp = b.get(k, (xi + 1) % n);
    let cm = b.get(k, (xi + n - 1) % n);
    if c0.norm() == 0.0 || cp.norm() == 0.0 || cm.norm() == 0.0 {
        return None;
    }
    let i = Complex64::i();
    let lp = (cp / c0).ln();
    let lm = (cm / c0).ln();
    let l1 = (lp - lm) * 0.5;
    let l2 = lp + lm;
    let carrier = TWO_PI * fc / s;
    let beta = (l2 / (i * (2.0 + s * s * l2))).re;
    let a = Complex64::new(1.0 / (s * s), -beta);
    let delta = ((l1 - i * carrier) / (i - beta / a)).re;
    let bias = -0.5 * a.arg() - (delta * delta / (a * 4.0)).im;
    bias.is_finite().then_some(bias)
}

/// Replaces each ridge phase by its chirp-corrected value, in place.
pub fn chirp_correct(
    ridge: &mut RidgeRow,
    principal: &CwtMatrix,
    mirror: Option<&CwtMatrix>,
    fc: f64,
) -> Result<()> {
    let mirror_ok = mirror.is_none_or(|m| principal.same_shape(m));
    if !mirror_ok || principal.len() != ridge.len() {
        return Err(Error::mismatch("ridge and coefficient grids differ"));
    }
    for xi in 0..ridge.len() {
        if ridge.modulus[xi] == 0.0 {
            continue;
        }
        let k = ridge.scale_index[xi];
        let negative = ridge.negative[xi];
        let field = match (negative, mirror) {
            (true, Some(m)) => m,
            (true, None) => continue,
            (false, _) => principal,
        };
        if let Some(b) = chirp_bias(field, k, xi, fc) {
            let corrected = if negative {
                ridge.phase[xi] + b
            } else {
                ridge.phase[xi] - b
            };
            ridge.phase[xi] = wrap_angle(corrected);
        }
    }
    Ok(())
}


fn zero_mean(line: &[f64]) -> Vec<Complex64> {
    let m = line.iter().sum::<f64>() / line.len() as f64;
    line.iter().map(|&v| Complex64::new(v - m, 0.0)).collect()
}

/// Ridge of one line pair under `opts`. Both lines are made zero-mean
/// before the transform.
pub fn demodulate_line(
    plan: &CwtPlan,
    line: &[f64],
    quad: &[f64],
    opts: &DemodOptions,
) -> Result<RidgeRow> {
    let w = plan.transform(&zero_mean(line))?;
    let w_d = plan.transform(&zero_mean(quad))?;
    let principal = combine_quadratures(&w, &w_d)?;
    let mirror = match opts.search {
        RidgeSearch::OneSided => None,
        RidgeSearch::TwoSided => Some(mirror_combination(&w, &w_d)?),
    };
    let mut ridge = match &mirror {
        None => ridge_extract(&principal),
        Some(m) => ridge_extract_two_sided(&principal, m)?,
    };
    if opts.ridge_phase == RidgePhase::ChirpCorrected {
        chirp_correct(&mut ridge, &principal, mirror.as_ref(), opts.params.center_frequency)?;
    }
    Ok(ridge)
}

/// Demodulates every line along `opts.axis`. Lines are processed in
/// parallel; the result does not depend on the number of threads.
pub fn demodulate_image(
    i: &ScalarField,
    i_q: &ScalarField,
    opts: &DemodOptions,
) -> Result<DemodResult> {
    i.check_shape(i_q, "fringe vs quadrature")?;
    opts.params.validate()?;
    let (n_lines, len) = i.line_shape(opts.axis);
    let plan = CwtPlan::new(len, &opts.params)?;
    let ridges = (0..n_lines)
        .into_par_iter()
        .map(|k| demodulate_line(&plan, &i.line(opts.axis, k), &i_q.line(opts.axis, k), opts))
        .collect::<Result<Vec<_>>>()?;
    let (phase, quality): (Vec<_>, Vec<_>) =
        ridges.into_iter().map(|r| (r.phase, r.modulus)).unzip();
    let (w, h) = (i.width(), i.height());
    let phase = ScalarField::from_lines(w, h, opts.axis, &phase, Units::Radians)?;
    let quality = ScalarField::from_lines(w, h, opts.axis, &quality, Units::Quality)?;
    Ok(DemodResult {
        wrapped_phase: PhaseMap::wrapped(phase)?,
        quality,
    })
}

/// Merges a row pass and a column pass. Each pixel averages the two phasors
/// weighted by the squared normal component along the respective scan axis.
pub fn fuse_axes(
    rows: &DemodResult,
    columns: &DemodResult,
    d: &DirectionField,
) -> Result<DemodResult> {
    let pr = rows.wrapped_phase.field();
    let pc = columns.wrapped_phase.field();
    pr.check_shape(pc, "row pass vs column pass")?;
    pr.check_shape(d.angle(), "demodulation vs direction")?;
    let n = pr.len();
    let mut phase = Vec::with_capacity(n);
    let mut quality = Vec::with_capacity(n);
    for k in 0..n {
        let (wx, wy) = d.normal_weights(k);
        let z = Complex64::from_polar(wy, pr.data()[k]) + Complex64::from_polar(wx, pc.data()[k]);
        phase.push(ridge_phase(z.norm(), z));
        quality.push(wy * rows.quality.data()[k] + wx * columns.quality.data()[k]);
    }
    let (w, h) = (pr.width(), pr.height());
    Ok(DemodResult {
        wrapped_phase: PhaseMap::wrapped(ScalarField::new(w, h, phase, Units::Radians)?)?,
        quality: ScalarField::new(w, h, quality, Units::Quality)?,
    })
}
