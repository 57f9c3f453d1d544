//! Acquisition stacks and the degradation pipeline description.

use serde::{Deserialize, Serialize};

use super::{IlluminationPlan, Plane, SystemGeometry};

/// High-resolution reference maps the stack was simulated from.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub amplitude: Plane,
    pub phase: Plane,
}

/// N low-resolution intensity frames plus the plan and geometry that
/// produced them.
#[derive(Clone, Debug)]
pub struct AcquisitionStack {
    /// One nonnegative intensity frame per plan group, `lr_size` each.
    pub images: Vec<Plane>,
    /// The nominal plan. When LED positions were perturbed during
    /// simulation, this still holds the unperturbed geometry: the
    /// reconstructor is not told about the shift.
    pub plan: IlluminationPlan,
    pub geometry: SystemGeometry,
    pub ground_truth: Option<GroundTruth>,
}

impl AcquisitionStack {
    pub fn n_frames(&self) -> usize {
        self.images.len()
    }

    /// Largest pixel value across all frames.
    pub fn max_intensity(&self) -> f64 {
        self.images
            .iter()
            .flat_map(|img| img.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Which noise branch degrades the frames. Exactly one branch applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Additive white Gaussian noise of the given standard deviation,
    /// in intensity units.
    Gaussian { std: f64 },
    /// Salt-and-pepper impulse noise replacing the given fraction of
    /// pixels, half with zeros and half with the stack's salt value.
    SaltPepper { density: f64 },
    /// Photon-counting noise: each pixel becomes
    /// `Poisson(photon_scale * I) / photon_scale`.
    Poisson { photon_scale: f64 },
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Gaussian { .. } => "gaussian",
            NoiseKind::SaltPepper { .. } => "snp",
            NoiseKind::Poisson { .. } => "poisson",
        }
    }

    /// The scalar level knob of the branch (std, density, or photon
    /// scale; 0 for `None`).
    pub fn level(&self) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { std } => std,
            NoiseKind::SaltPepper { density } => density,
            NoiseKind::Poisson { photon_scale } => photon_scale,
        }
    }
}

/// Soft-window vignetting model: each frame is multiplied by a disc
/// window whose center moves with the illumination tangent, producing
/// partially bright / partially dark frames at oblique illumination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VignettingSpec {
    pub enabled: bool,
    /// Window radius in pixels.
    pub radius: f64,
    /// Edge ramp width in pixels.
    pub softness: f64,
    /// Window center displacement per unit illumination tangent, in
    /// pixels.
    pub shift_gain: f64,
}

impl Default for VignettingSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            radius: 0.0,
            softness: 1.0,
            shift_gain: 0.0,
        }
    }
}

/// Full description of how a clean stack is degraded. Identical specs
/// (including the seed) produce bit-identical stacks regardless of how
/// many worker threads run the simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationSpec {
    pub noise: NoiseKind,
    /// Uneven-illumination strength c in [0, 1]; 0 disables.
    pub uneven_strength: f64,
    /// Sigma, in pixels, of the Gaussian that smooths the illumination
    /// field.
    pub blur_half_waist: f64,
    /// Radius d, in meters, of the per-LED uniform position shift;
    /// 0 disables.
    pub led_shift_radius: f64,
    pub vignetting: VignettingSpec,
    /// Constant additive background, in intensity units.
    pub background: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            noise: NoiseKind::None,
            uneven_strength: 0.0,
            blur_half_waist: 15.0,
            led_shift_radius: 0.0,
            vignetting: VignettingSpec::default(),
            background: 0.0,
            seed: 0,
        }
    }
}

impl DegradationSpec {
    /// Everything off; the pipeline reduces to the ideal forward model.
    pub fn clean(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.noise {
            NoiseKind::Gaussian { std } if std < 0.0 => {
                return Err("gaussian std must be >= 0".into())
            }
            NoiseKind::SaltPepper { density } if !(0.0..=1.0).contains(&density) => {
                return Err("snp density must lie in [0, 1]".into())
            }
            NoiseKind::Poisson { photon_scale } if photon_scale <= 0.0 => {
                return Err("poisson photon scale must be > 0".into())
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.uneven_strength) {
            return Err("uneven strength c must lie in [0, 1]".into());
        }
        if self.led_shift_radius < 0.0 {
            return Err("led shift radius d must be >= 0".into());
        }
        if self.blur_half_waist <= 0.0 {
            return Err("blur half-waist must be > 0".into());
        }
        Ok(())
    }
}
