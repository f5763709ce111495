//! Synthetic ground truth: the paraboloid test phase, fringe patterns built
//! from it, their exact quadrature, and seeded additive noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fields::{PhaseMap, ScalarField, Units};

/// Curvature of the paraboloid test phase, radians per pixel squared.
pub const TEST_PHASE_CURVATURE: f64 = 0.0005;
/// Vertex of the test phase on the reference 512x512 grid.
pub const TEST_PHASE_CENTER: f64 = 256.0;

/// Bias, visibility and phase of `I = I0 (1 + V cos φ)`.
#[derive(Debug, Clone)]
pub struct FringeModel {
    bias: ScalarField,
    visibility: ScalarField,
    phase: PhaseMap,
}

impl FringeModel {
    pub fn new(bias: ScalarField, visibility: ScalarField, phase: PhaseMap) -> Result<Self> {
        bias.check_shape(&visibility, "bias vs visibility")?;
        bias.check_shape(phase.field(), "bias vs phase")?;
        if phase.is_wrapped() {
            return Err(Error::invalid("fringe model needs an unwrapped phase"));
        }
        if visibility.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("visibility must lie in [0, 1]"));
        }
        Ok(Self {
            bias: bias.with_units(Units::Intensity),
            visibility,
            phase,
        })
    }

    /// Constant bias and visibility over the phase's grid.
    pub fn uniform(phase: PhaseMap, bias: f64, visibility: f64) -> Result<Self> {
        let (w, h) = (phase.field().width(), phase.field().height());
        Self::new(
            ScalarField::filled(w, h, bias, Units::Intensity)?,
            ScalarField::filled(w, h, visibility, Units::Intensity)?,
            phase,
        )
    }

    pub fn bias(&self) -> &ScalarField {
        &self.bias
    }

    pub fn visibility(&self) -> &ScalarField {
        &self.visibility
    }

    pub fn phase(&self) -> &PhaseMap {
        &self.phase
    }

    fn combine(&self, f: impl Fn(f64, f64, f64) -> f64) -> Result<ScalarField> {
        let data = self
            .bias
            .data()
            .iter()
            .zip(self.visibility.data())
            .zip(self.phase.field().data())
            .map(|((&i0, &v), &phi)| f(i0, v, phi))
            .collect();
        ScalarField::new(self.bias.width(), self.bias.height(), data, Units::Intensity)
    }
}

/// `φ(x, y) = 0.0005 ((x − x0)² + (y − y0)²)` about an explicit vertex
/// `(x0, y0)` given as (row, column).
pub fn test_phase_centered(width: usize, height: usize, center: (f64, f64)) -> Result<PhaseMap> {
    if width < 3 || height < 3 {
        return Err(Error::invalid(format!(
            "test phase needs at least 3x3 pixels, got {width}x{height}"
        )));
    }
    let (cx, cy) = center;
    let f = ScalarField::from_fn(width, height, Units::Radians, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        TEST_PHASE_CURVATURE * (dx * dx + dy * dy)
    })?;
    Ok(PhaseMap::unwrapped(f))
}

/// Default vertex for a grid: `(256, 256)` when it lies inside, the grid
/// midpoint otherwise.
pub fn default_center(width: usize, height: usize) -> (f64, f64) {
    let inside = (TEST_PHASE_CENTER as usize) < width && (TEST_PHASE_CENTER as usize) < height;
    if inside {
        (TEST_PHASE_CENTER, TEST_PHASE_CENTER)
    } else {
        ((height / 2) as f64, (width / 2) as f64)
    }
}

/// The paraboloid test phase with the default vertex.
pub fn test_phase(width: usize, height: usize) -> Result<PhaseMap> {
    test_phase_centered(width, height, default_center(width, height))
}

/// `I = I0 (1 + V cos φ)`.
pub fn fringe_from_model(m: &FringeModel) -> Result<ScalarField> {
    m.combine(|i0, v, phi| i0 * (1.0 + v * phi.cos()))
}

/// The π/2-shifted pattern `I0 (1 − V sin φ)`.
pub fn quadrature_truth(m: &FringeModel) -> Result<ScalarField> {
    m.combine(|i0, v, phi| i0 * (1.0 - v * phi.sin()))
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma`.
/// Deterministic for a given `seed`.
pub fn add_noise(field: &ScalarField, sigma: f64, seed: u64) -> Result<ScalarField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    field.map(|v| v + normal.sample(&mut rng))
}
