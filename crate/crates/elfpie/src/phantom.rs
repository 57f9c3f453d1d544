//! Deterministic synthetic ground-truth maps and geometry presets used
//! by benchmarks and tests.

use ndarray::Array2;
use num_complex::Complex64;

use crate::model::{ComplexField, GroundTruth, Plane, SystemGeometry};

/// Full-scale reference geometry: 513x513 recovered grid, 128x128
/// camera frames, 15x15 LED panel at 90 mm with 6 mm pitch, NA 0.10
/// objective at 4x and a 3.65 um camera pixel, 536 nm illumination.
pub fn full_geometry() -> SystemGeometry {
    SystemGeometry {
        wavelength: 536e-9,
        objective_na: 0.10,
        magnification: 4.0,
        camera_pixel: 3.65e-6,
        led_pitch: 6e-3,
        led_grid: (15, 15),
        panel_distance: 90e-3,
        panel_offset: (0.0, 0.0),
        lr_size: (128, 128),
        hr_size: (513, 513),
    }
}

/// Desk-scale variant of [`full_geometry`] sized for fast runs:
/// 257x257 recovered grid, 64x64 frames, 9x9 LEDs. Same optics, so the
/// angular scales (cutoff, per-LED offsets) match the full setup.
pub fn bench_geometry() -> SystemGeometry {
    SystemGeometry {
        led_grid: (9, 9),
        lr_size: (64, 64),
        hr_size: (257, 257),
        ..full_geometry()
    }
}

fn gauss(u: f64, v: f64, cu: f64, cv: f64, sigma: f64) -> f64 {
    let d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Disc with a tanh-rolled edge of width `edge` (same units as r).
fn soft_disc(u: f64, v: f64, cu: f64, cv: f64, radius: f64, edge: f64) -> f64 {
    let r = ((u - cu) * (u - cu) + (v - cv) * (v - cv)).sqrt();
    0.5 * (1.0 + ((radius - r) / edge).tanh())
}

fn soft_box(u: f64, v: f64, u0: f64, u1: f64, v0: f64, v1: f64, edge: f64) -> f64 {
    let ramp = |lo: f64, hi: f64, t: f64| {
        0.5 * (((t - lo) / edge).tanh() - ((t - hi) / edge).tanh())
    };
    ramp(u0, u1, u) * ramp(v0, v1, v)
}

fn normalize_to(mut plane: Plane, lo: f64, hi: f64) -> Plane {
    let min = plane.iter().copied().fold(f64::INFINITY, f64::min);
    let max = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span <= 0.0 {
        plane.fill(0.5 * (lo + hi));
        return plane;
    }
    plane.mapv_inplace(|x| lo + (hi - lo) * (x - min) / span);
    plane
}

/// Synthetic amplitude map, normalized to [0.1, 1]: smooth blobs plus a
/// few soft-edged shapes so the spectrum decays inside the synthetic
/// aperture of the bench geometry.
pub fn phantom_amplitude(h: usize, w: usize) -> Plane {
    let edge = 3.0 / w.min(h) as f64;
    let raw = Array2::from_shape_fn((h, w), |(r, c)| {
        let u = c as f64 / w as f64;
        let v = r as f64 / h as f64;
        0.45 + 0.55 * gauss(u, v, 0.33, 0.37, 0.14)
            + 0.45 * gauss(u, v, 0.70, 0.64, 0.11)
            - 0.40 * gauss(u, v, 0.56, 0.28, 0.17)
            + 0.55 * soft_disc(u, v, 0.40, 0.70, 0.12, edge)
            + 0.40 * soft_box(u, v, 0.62, 0.86, 0.18, 0.34, edge)
            + 0.10 * (2.0 * std::f64::consts::PI * 3.0 * u).sin()
                * (2.0 * std::f64::consts::PI * 2.0 * v).cos()
    });
    normalize_to(raw, 0.1, 1.0)
}

/// Synthetic phase map in radians, normalized to [0.1, 1]; a different
/// layout than the amplitude so the two components are distinguishable.
pub fn phantom_phase(h: usize, w: usize) -> Plane {
    let edge = 3.0 / w.min(h) as f64;
    let raw = Array2::from_shape_fn((h, w), |(r, c)| {
        let u = c as f64 / w as f64;
        let v = r as f64 / h as f64;
        let annulus = soft_disc(u, v, 0.62, 0.38, 0.16, edge) - soft_disc(u, v, 0.62, 0.38, 0.09, edge);
        0.3 * (u + 0.6 * v)
            + 0.55 * gauss(u, v, 0.28, 0.66, 0.12)
            - 0.45 * gauss(u, v, 0.48, 0.50, 0.20)
            + 0.60 * annulus
            + 0.35 * soft_box(u, v, 0.15, 0.33, 0.16, 0.30, edge)
    });
    normalize_to(raw, 0.1, 1.0)
}

/// Ground truth pair at the given size.
pub fn phantom_truth(h: usize, w: usize) -> GroundTruth {
    GroundTruth {
        amplitude: phantom_amplitude(h, w),
        phase: phantom_phase(h, w),
    }
}

/// Complex object field built from a truth pair.
pub fn object_from_truth(truth: &GroundTruth) -> ComplexField {
    let mut field = Array2::from_elem(truth.amplitude.dim(), Complex64::new(0.0, 0.0));
    for ((f, &a), &p) in field
        .iter_mut()
        .zip(truth.amplitude.iter())
        .zip(truth.phase.iter())
    {
        *f = Complex64::from_polar(a, p);
    }
    field
}

/// Phantom object at the given size.
pub fn phantom_object(h: usize, w: usize) -> ComplexField {
    object_from_truth(&phantom_truth(h, w))
}
