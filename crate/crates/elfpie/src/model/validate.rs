//! Joint invariant checks for geometry, plan and stack.

use std::collections::HashSet;

use crate::error::{Error, Result};

use super::{plane_is_finite, AcquisitionStack, IlluminationPlan, SystemGeometry};

/// Check the geometry invariants in isolation.
pub fn validate_geometry(geometry: &SystemGeometry) -> Result<()> {
    let bad = |msg: &str| Err(Error::Invariant(msg.to_string()));
    if geometry.wavelength <= 0.0 {
        return bad("wavelength must be > 0");
    }
    if geometry.camera_pixel <= 0.0 {
        return bad("camera pixel size must be > 0");
    }
    if geometry.magnification <= 0.0 {
        return bad("magnification must be > 0");
    }
    if geometry.panel_distance <= 0.0 {
        return bad("panel distance must be > 0");
    }
    if geometry.led_pitch <= 0.0 {
        return bad("LED pitch must be > 0");
    }
    if !(geometry.objective_na > 0.0 && geometry.objective_na < 1.0) {
        return bad("objective NA must lie in (0, 1)");
    }
    let (bh, bw) = geometry.lr_size;
    let (ah, aw) = geometry.hr_size;
    if bh == 0 || bw == 0 || ah == 0 || aw == 0 {
        return bad("image sizes must be positive");
    }
    if ah < bh || aw < bw {
        return Err(Error::Invariant(format!(
            "B < A violated: hr_size {:?} must dominate lr_size {:?}",
            geometry.hr_size, geometry.lr_size
        )));
    }
    if geometry.led_grid.0 == 0 || geometry.led_grid.1 == 0 {
        return bad("LED grid must be non-empty");
    }
    if !(geometry.du() > 0.0 && geometry.dv() > 0.0) {
        return bad("frequency steps must be positive");
    }
    Ok(())
}

/// Check the plan against the geometry: unique LED indices, consistent
/// dark-field flags, every patch window inside the spectrum grid.
pub fn validate_plan(geometry: &SystemGeometry, plan: &IlluminationPlan) -> Result<()> {
    if plan.groups.is_empty() {
        return Err(Error::Invariant("plan has no groups".into()));
    }
    let mut seen = HashSet::new();
    for entry in plan.entries() {
        if !seen.insert(entry.led_index) {
            return Err(Error::Invariant(format!(
                "LED {} appears in more than one group",
                entry.led_index
            )));
        }
        let dark = entry.illumination_na > geometry.objective_na;
        if dark != entry.is_dark_field {
            return Err(Error::Invariant(format!(
                "LED {}: dark-field flag {} disagrees with illumination NA {}",
                entry.led_index, entry.is_dark_field, entry.illumination_na
            )));
        }
        patch_in_bounds(geometry, entry.spectral_offset).map_err(|_| {
            Error::LedExceedsAperture {
                led_index: entry.led_index,
                offset: entry.spectral_offset,
            }
        })?;
    }
    Ok(())
}

/// True when the `lr_size` window at the given center offset lies inside
/// the `hr_size` grid.
pub fn patch_in_bounds(geometry: &SystemGeometry, offset: (i64, i64)) -> Result<()> {
    let (bh, bw) = geometry.lr_size;
    let (ah, aw) = geometry.hr_size;
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
    Ok(())
}

/// Full joint validation of an acquisition.
pub fn validate(
    geometry: &SystemGeometry,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
) -> Result<()> {
    validate_geometry(geometry)?;
    validate_plan(geometry, plan)?;
    if stack.images.len() != plan.n_groups() {
        return Err(Error::Invariant(format!(
            "stack has {} frames but the plan has {} groups",
            stack.images.len(),
            plan.n_groups()
        )));
    }
    for (n, img) in stack.images.iter().enumerate() {
        if img.dim() != geometry.lr_size {
            return Err(Error::Invariant(format!(
                "frame {} has size {:?}, expected {:?}",
                n,
                img.dim(),
                geometry.lr_size
            )));
        }
        if !plane_is_finite(img) {
            return Err(Error::Invariant(format!("frame {n} has non-finite pixels")));
        }
        if img.iter().any(|&v| v < 0.0) {
            return Err(Error::Invariant(format!("negative intensity in frame {n}")));
        }
    }
    if let Some(truth) = &stack.ground_truth {
        if truth.amplitude.dim() != geometry.hr_size || truth.phase.dim() != geometry.hr_size {
            return Err(Error::Invariant(
                "ground truth maps must match hr_size".into(),
            ));
        }
    }
    Ok(())
}
