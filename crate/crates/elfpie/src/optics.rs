//! Forward optics: LED geometry to spectral offsets, pupil
//! construction, patch extraction, and the ideal intensity model.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    validate_geometry, ComplexField, IlluminationPlan, LedEntry, Plane, PupilFunction,
    SystemGeometry,
};
use crate::ops::dft2;

/// Lateral LED positions (x, y) in meters, row-major over the grid, with
/// the grid center at the panel offset. For odd grids the middle LED
/// sits exactly on the optical axis when the offset is zero.
pub fn led_grid_positions(geometry: &SystemGeometry) -> Vec<(f64, f64)> {
    let (rows, cols) = geometry.led_grid;
    let pitch = geometry.led_pitch;
    let (ox, oy) = geometry.panel_offset;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 - (cols as f64 - 1.0) / 2.0) * pitch + ox;
            let y = (r as f64 - (rows as f64 - 1.0) / 2.0) * pitch + oy;
            out.push((x, y));
        }
    }
    out
}

/// Map lateral LED positions to plan entries: direction sines, integer
/// spectral offsets, and the bright/dark-field split.
///
/// Errors when an LED's patch window would leave the spectrum grid.
pub fn led_spectral_offsets(
    geometry: &SystemGeometry,
    positions: &[(f64, f64)],
) -> Result<Vec<LedEntry>> {
    if geometry.panel_distance <= 0.0 {
        return Err(Error::Invariant("panel distance must be > 0".into()));
    }
    let h = geometry.panel_distance;
    let lambda = geometry.wavelength;
    let (du, dv) = (geometry.du(), geometry.dv());
    positions
        .iter()
        .enumerate()
        .map(|(led_index, &(x, y))| {
            let norm = (x * x + y * y + h * h).sqrt();
            let (sx, sy) = (-x / norm, -y / norm);
            let na = (sx * sx + sy * sy).sqrt();
            let offset = (
                (sy / lambda / dv).round() as i64,
                (sx / lambda / du).round() as i64,
            );
            crate::model::validate::patch_in_bounds(geometry, offset).map_err(|_| {
                Error::LedExceedsAperture { led_index, offset }
            })?;
            Ok(LedEntry {
                led_index,
                spectral_offset: offset,
                illumination_na: na,
                is_dark_field: na > geometry.objective_na,
            })
        })
        .collect()
}

/// Sequential (one LED per exposure) plan for the whole grid.
pub fn sequential_plan(geometry: &SystemGeometry) -> Result<IlluminationPlan> {
    let entries = led_spectral_offsets(geometry, &led_grid_positions(geometry))?;
    Ok(IlluminationPlan::singleton_groups(entries))
}

/// Binary disc pupil of the objective: 1 inside the cutoff, 0 outside.
pub fn pupil_init(geometry: &SystemGeometry) -> Result<PupilFunction> {
    validate_geometry(geometry)?;
    let (bh, bw) = geometry.lr_size;
    let cutoff = geometry.cutoff_pixels();
    let cutoff_rows = geometry.cutoff_frequency() / geometry.dv();
    if cutoff >= bw as f64 / 2.0 || cutoff_rows >= bh as f64 / 2.0 {
        return Err(Error::PupilExceedsBand {
            cutoff,
            height: bh,
            width: bw,
        });
    }
    let row_aspect = geometry.dv() / geometry.du();
    let ones = Array2::from_elem((bh, bw), Complex64::new(1.0, 0.0));
    Ok(PupilFunction::new(ones, cutoff, row_aspect))
}

fn window_start(
    spectrum_dim: (usize, usize),
    patch_dim: (usize, usize),
    offset: (i64, i64),
) -> Result<(usize, usize)> {
    let (ah, aw) = spectrum_dim;
    let (bh, bw) = patch_dim;
    let r0 = (ah / 2) as i64 + offset.0 - (bh / 2) as i64;
    let c0 = (aw / 2) as i64 + offset.1 - (bw / 2) as i64;
    if r0 < 0 || c0 < 0 || r0 + bh as i64 > ah as i64 || c0 + bw as i64 > aw as i64 {
        return Err(Error::OutOfBounds {
            row_start: r0,
            row_end: r0 + bh as i64,
            col_start: c0,
            col_end: c0 + bw as i64,
            height: ah,
            width: aw,
        });
    }
    Ok((r0 as usize, c0 as usize))
}

/// Copy the patch window centered at (spectrum center + offset).
pub fn extract_patch(
    spectrum: &ComplexField,
    size: (usize, usize),
    offset: (i64, i64),
) -> Result<ComplexField> {
    let (r0, c0) = window_start(spectrum.dim(), size, offset)?;
    Ok(spectrum
        .slice(s![r0..r0 + size.0, c0..c0 + size.1])
        .to_owned())
}

/// Add a patch into its window; the exact adjoint of [`extract_patch`].
pub fn embed_add_patch(
    target: &mut ComplexField,
    patch: &ComplexField,
    offset: (i64, i64),
) -> Result<()> {
    let (r0, c0) = window_start(target.dim(), patch.dim(), offset)?;
    let mut window = target.slice_mut(s![r0..r0 + patch.dim().0, c0..c0 + patch.dim().1]);
    window += patch;
    Ok(())
}

/// Overwrite the window with the patch (used by sequential engines).
pub fn write_patch(
    target: &mut ComplexField,
    patch: &ComplexField,
    offset: (i64, i64),
) -> Result<()> {
    let (r0, c0) = window_start(target.dim(), patch.dim(), offset)?;
    let mut window = target.slice_mut(s![r0..r0 + patch.dim().0, c0..c0 + patch.dim().1]);
    window.assign(patch);
    Ok(())
}

/// Camera-plane field of one LED: the transform of the pupil times the
/// LED's spectrum patch.
pub fn camera_field(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    entry: &LedEntry,
) -> Result<ComplexField> {
    let patch = extract_patch(spectrum, pupil.field.dim(), entry.spectral_offset)?;
    let masked = &patch * &pupil.field;
    Ok(dft2(&masked))
}

/// Ideal intensity frames: per group, the incoherent sum of the LED
/// camera fields' squared moduli. Groups evaluate independently and may
/// run concurrently; output order follows the plan.
pub fn forward_ideal(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
) -> Result<Vec<Plane>> {
    plan.groups
        .par_iter()
        .map(|group| {
            let (bh, bw) = pupil.field.dim();
            let mut intensity = Array2::zeros((bh, bw));
            for entry in group {
                let field = camera_field(spectrum, pupil, entry)?;
                for (acc, v) in intensity.iter_mut().zip(field.iter()) {
                    *acc += v.norm_sqr();
                }
            }
            Ok(intensity)
        })
        .collect()
}
