//! Optical and LED-array parameters of the acquisition system.

use serde::{Deserialize, Serialize};

/// Everything needed to map an LED position to a spectral patch offset
/// and to size the pupil. All lengths are in meters, sizes in pixels as
/// `(rows, cols)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemGeometry {
    /// Illumination wavelength.
    pub wavelength: f64,
    /// Numerical aperture of the objective, in (0, 1).
    pub objective_na: f64,
    /// System magnification.
    pub magnification: f64,
    /// Camera pixel pitch.
    pub camera_pixel: f64,
    /// Spacing between adjacent LEDs on the panel.
    pub led_pitch: f64,
    /// LED grid layout as (rows, cols).
    pub led_grid: (usize, usize),
    /// Distance from the LED panel to the sample.
    pub panel_distance: f64,
    /// Lateral displacement of the panel center from the optical axis,
    /// as (x, y).
    pub panel_offset: (f64, f64),
    /// Camera frame size (rows, cols); this is the patch size `B`.
    pub lr_size: (usize, usize),
    /// Recovered spectrum size (rows, cols); must dominate `lr_size`.
    pub hr_size: (usize, usize),
}

impl SystemGeometry {
    /// Frequency step along the column (x) axis in cycles per meter:
    /// the reciprocal of the camera field of view.
    pub fn du(&self) -> f64 {
        self.magnification / (self.lr_size.1 as f64 * self.camera_pixel)
    }

    /// Frequency step along the row (y) axis.
    pub fn dv(&self) -> f64 {
        self.magnification / (self.lr_size.0 as f64 * self.camera_pixel)
    }

    /// Objective cutoff frequency NA / lambda, in cycles per meter.
    pub fn cutoff_frequency(&self) -> f64 {
        self.objective_na / self.wavelength
    }

    /// Objective cutoff expressed in column-axis frequency pixels.
    pub fn cutoff_pixels(&self) -> f64 {
        self.cutoff_frequency() / self.du()
    }
}
