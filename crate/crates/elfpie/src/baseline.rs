//! Sequential amplitude-replacement engine with momentum, used as the
//! comparison baseline.
//!
//! Classic loop: for each LED in spiral order, extract the spectrum
//! patch, apply the pupil, transform, replace the modulus with the
//! measured square root, back-transform, and apply a Gauss-Newton-style
//! patch (and optionally pupil) update. A heavy-ball momentum term on
//! the spectrum accelerates the sweeps.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    AcquisitionStack, ComplexField, ObjectEstimate, PupilFunction, ReconstructionConfig,
    SystemGeometry, PUPIL_GAIN_LIMIT,
};
use crate::ops::{dft2, idft2};
use crate::optics::{extract_patch, pupil_init, write_patch};
use crate::solver::initial_spectrum;

/// Momentum coefficient of the spectrum heavy-ball term.
pub const MOMENTUM: f64 = 0.9;
/// Step size of the patch and pupil updates.
pub const STEP: f64 = 1.0;

/// Spiral visiting order: LEDs sorted by offset radius, ties broken by
/// azimuth, so the bright-field center seeds the recovery first.
fn spiral_order(stack: &AcquisitionStack) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stack.plan.n_groups()).collect();
    order.sort_by(|&a, &b| {
        let key = |n: usize| {
            let off = stack.plan.groups[n][0].spectral_offset;
            let r2 = (off.0 * off.0 + off.1 * off.1) as f64;
            let az = (off.0 as f64).atan2(off.1 as f64);
            (r2, az)
        };
        key(a).partial_cmp(&key(b)).unwrap()
    });
    order
}

/// Run the baseline on a sequential (one LED per frame) stack. Uses
/// `config.iterations` sweeps and honors `config.learn_pupil`; the
/// momentum coefficient and step size are fixed.
pub fn fpie_momentum_reconstruct(
    stack: &AcquisitionStack,
    geometry: &SystemGeometry,
    config: &ReconstructionConfig,
) -> Result<(ObjectEstimate, PupilFunction)> {
    crate::model::validate(geometry, &stack.plan, stack)?;
    if stack.plan.groups.iter().any(|g| g.len() != 1) {
        return Err(Error::Invariant(
            "the sequential baseline needs a one-LED-per-frame plan".into(),
        ));
    }

    let mut spectrum = initial_spectrum(stack, geometry)?;
    let mut pupil = pupil_init(geometry)?;
    let order = spiral_order(stack);
    let mut velocity: ComplexField =
        Array2::from_elem(spectrum.dim(), Complex64::new(0.0, 0.0));

    for _ in 0..config.iterations {
        let before = spectrum.clone();
        for &n in &order {
            let entry = &stack.plan.groups[n][0];
            sweep_led(&mut spectrum, &mut pupil, stack, n, entry, config.learn_pupil)?;
        }
        // heavy-ball acceleration on the whole spectrum
        let swept = spectrum.clone();
        ndarray::Zip::from(&mut velocity)
            .and(&swept)
            .and(&before)
            .for_each(|v, &s, &b| *v = MOMENTUM * *v + (s - b));
        ndarray::Zip::from(&mut spectrum)
            .and(&before)
            .and(&velocity)
            .for_each(|s, &b, &v| *s = b + v);
    }

    Ok((ObjectEstimate { spectrum }, pupil))
}

fn sweep_led(
    spectrum: &mut ComplexField,
    pupil: &mut PupilFunction,
    stack: &AcquisitionStack,
    n: usize,
    entry: &crate::model::LedEntry,
    learn_pupil: bool,
) -> Result<()> {
    let size = pupil.field.dim();
    let patch = extract_patch(spectrum, size, entry.spectral_offset)?;
    let masked = &patch * &pupil.field;
    let camera = dft2(&masked);

    // replace the modulus with the measurement, keep the phase
    let measured = &stack.images[n];
    let replaced = ndarray::Zip::from(&camera)
        .and(measured)
        .map_collect(|&o, &i| {
            let target = i.max(0.0).sqrt();
            let m = o.norm();
            if m > 0.0 {
                o * (target / m)
            } else {
                Complex64::new(target, 0.0)
            }
        });
    let corrected = idft2(&replaced);
    let delta = &corrected - &masked;

    let pupil_peak = pupil
        .field
        .iter()
        .map(|z| z.norm_sqr())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut new_patch = patch.clone();
    ndarray::Zip::from(&mut new_patch)
        .and(&pupil.field)
        .and(&delta)
        .for_each(|p, &pf, &d| {
            *p += STEP * pf.conj() * d / pupil_peak;
        });
    write_patch(spectrum, &new_patch, entry.spectral_offset)?;

    if learn_pupil {
        let patch_peak = patch
            .iter()
            .map(|z| z.norm_sqr())
            .fold(0.0, f64::max)
            .max(1e-12);
        ndarray::Zip::from(&mut pupil.field)
            .and(&patch)
            .and(&delta)
            .for_each(|pf, &p, &d| {
                *pf += STEP * p.conj() * d / patch_peak;
            });
        pupil.apply_support();
        pupil.clamp_gain(PUPIL_GAIN_LIMIT);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DegradationSpec;
    use crate::optics::sequential_plan;
    use crate::phantom;
    use crate::sim::simulate;

    #[test]
    fn zero_iterations_returns_initialization() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let stack = simulate(&object, &geom, &plan, &DegradationSpec::clean(0)).unwrap();
        let config = ReconstructionConfig::default().with_iterations(0);
        let (estimate, _) = fpie_momentum_reconstruct(&stack, &geom, &config).unwrap();
        let init = initial_spectrum(&stack, &geom).unwrap();
        assert_eq!(estimate.spectrum, init);
    }

    #[test]
    fn amplitude_replacement_is_exact_with_unit_pupil() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let stack = simulate(&object, &geom, &plan, &DegradationSpec::clean(0)).unwrap();
        let mut spectrum = initial_spectrum(&stack, &geom).unwrap();
        let mut pupil = PupilFunction::uniform(geom.lr_size);

        let n = 5;
        let entry = stack.plan.groups[n][0].clone();
        sweep_led(&mut spectrum, &mut pupil, &stack, n, &entry, false).unwrap();

        let patch = extract_patch(&spectrum, geom.lr_size, entry.spectral_offset).unwrap();
        let forward = dft2(&patch);
        for (o, &i) in forward.iter().zip(stack.images[n].iter()) {
            assert!((o.norm() - i.max(0.0).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_multiplexed_plans() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let entries: Vec<_> = plan.entries().cloned().collect();
        let multiplexed = crate::model::IlluminationPlan::chunked_groups(entries, 3);
        let object = phantom::phantom_object(257, 257);
        let stack = simulate(&object, &geom, &multiplexed, &DegradationSpec::clean(0)).unwrap();
        let config = ReconstructionConfig::default().with_iterations(1);
        assert!(fpie_momentum_reconstruct(&stack, &geom, &config).is_err());
    }
}
