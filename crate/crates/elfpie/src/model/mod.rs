//! Shared domain types and their invariants. No algorithms live here.

mod config;
mod geometry;
mod object;
mod plan;
mod stack;
mod validate;

use ndarray::Array2;
use num_complex::Complex64;

pub use config::{FidelityMode, PupilSmooth, ReconstructionConfig};
pub use geometry::SystemGeometry;
pub use object::{ObjectEstimate, PupilFunction, PUPIL_GAIN_LIMIT};
pub use plan::{IlluminationPlan, LedEntry};
pub use stack::{
    AcquisitionStack, DegradationSpec, GroundTruth, NoiseKind, VignettingSpec,
};
pub use validate::{validate, validate_geometry, validate_plan};

/// Real-valued image plane, row-major.
pub type Plane = Array2<f64>;

/// Complex-valued field, row-major. Spectra use a centered layout with
/// the DC bin at `(h / 2, w / 2)`.
pub type ComplexField = Array2<Complex64>;

/// True when every entry of a real plane is finite.
pub fn plane_is_finite(plane: &Plane) -> bool {
    plane.iter().all(|v| v.is_finite())
}

/// True when every entry of a complex field is finite.
pub fn field_is_finite(field: &ComplexField) -> bool {
    field.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}
