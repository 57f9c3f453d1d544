//! The recovered object spectrum and the system pupil.

use ndarray::Array2;
use num_complex::Complex64;

use crate::ops::{dft2, idft2};

use super::{field_is_finite, ComplexField, Plane};

/// Modulus bound enforced on learned pupil entries to prevent runaway
/// gain.
pub const PUPIL_GAIN_LIMIT: f64 = 2.0;

/// High-resolution Fourier spectrum of the object field. The
/// object-plane field is its unitary inverse transform.
#[derive(Clone, Debug)]
pub struct ObjectEstimate {
    /// Centered spectrum at `hr_size`.
    pub spectrum: ComplexField,
}

impl ObjectEstimate {
    /// Build the estimate whose object-plane field is `object`.
    pub fn from_object(object: &ComplexField) -> Self {
        Self {
            spectrum: dft2(object),
        }
    }

    /// Object-plane complex field.
    pub fn object(&self) -> ComplexField {
        idft2(&self.spectrum)
    }

    pub fn amplitude(&self) -> Plane {
        self.object().mapv(|z| z.norm())
    }

    pub fn phase(&self) -> Plane {
        self.object().mapv(|z| z.im.atan2(z.re))
    }
}

/// Complex transfer function of the objective, supported on a disc in
/// the camera's frequency band.
#[derive(Clone, Debug)]
pub struct PupilFunction {
    pub field: ComplexField,
    /// Support disc radius in column-axis frequency pixels.
    pub cutoff_radius: f64,
    /// Row-to-column frequency-step ratio dv/du; 1 for square frames.
    pub row_aspect: f64,
    support: Array2<bool>,
}

impl PupilFunction {
    /// Wrap a field with the given support disc. Entries outside the
    /// disc are zeroed immediately.
    pub fn new(field: ComplexField, cutoff_radius: f64, row_aspect: f64) -> Self {
        let support = support_mask(field.dim(), cutoff_radius, row_aspect);
        let mut pupil = Self {
            field,
            cutoff_radius,
            row_aspect,
            support,
        };
        pupil.apply_support();
        pupil
    }

    /// Unit pupil covering the whole frame. Useful for tests and ideal
    /// forward evaluations.
    pub fn uniform(size: (usize, usize)) -> Self {
        let (h, w) = size;
        let radius = (h * h + w * w) as f64; // comfortably covers the frame
        Self::new(
            Array2::from_elem(size, Complex64::new(1.0, 0.0)),
            radius,
            1.0,
        )
    }

    pub fn support(&self) -> &Array2<bool> {
        &self.support
    }

    /// Zero every entry outside the support disc.
    pub fn apply_support(&mut self) {
        for (v, &inside) in self.field.iter_mut().zip(self.support.iter()) {
            if !inside {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Rescale entries whose modulus exceeds `limit` back onto the
    /// bound, keeping their phase.
    pub fn clamp_gain(&mut self, limit: f64) {
        for v in self.field.iter_mut() {
            let m = v.norm();
            if m > limit {
                *v *= limit / m;
            }
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.field.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Check the type invariants: finite entries, zero outside the
    /// support disc, modulus within the gain limit.
    pub fn validate(&self) -> Result<(), String> {
        if !field_is_finite(&self.field) {
            return Err("pupil entries must be finite".into());
        }
        for (v, &inside) in self.field.iter().zip(self.support.iter()) {
            if !inside && (v.re != 0.0 || v.im != 0.0) {
                return Err("pupil has nonzero entries outside the cutoff disc".into());
            }
        }
        if self.max_modulus() > PUPIL_GAIN_LIMIT + 1e-12 {
            return Err(format!(
                "pupil modulus {} exceeds the gain limit {}",
                self.max_modulus(),
                PUPIL_GAIN_LIMIT
            ));
        }
        Ok(())
    }
}

fn support_mask(size: (usize, usize), cutoff: f64, row_aspect: f64) -> Array2<bool> {
    let (h, w) = size;
    let (cr, cc) = (h as f64 / 2.0, w as f64 / 2.0);
    let (cr, cc) = (cr.floor(), cc.floor());
    Array2::from_shape_fn((h, w), |(r, c)| {
        let dr = (r as f64 - cr) * row_aspect;
        let dc = c as f64 - cc;
        dr * dr + dc * dc <= cutoff * cutoff
    })
}
