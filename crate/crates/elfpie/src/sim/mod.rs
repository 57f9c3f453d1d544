//! Degraded acquisition synthesis: uneven illumination, LED position
//! shifts, vignetting, the noise branches, and the dark-field
//! corruption metric.

pub mod noise;
pub mod rng;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    validate_geometry, validate_plan, AcquisitionStack, ComplexField, DegradationSpec,
    GroundTruth, IlluminationPlan, LedEntry, NoiseKind, Plane, SystemGeometry, VignettingSpec,
};
use crate::ops::{convolve, dft2, gaussian_kernel, Boundary};
use crate::optics::{forward_ideal, led_grid_positions, led_spectral_offsets, pupil_init};

pub use noise::{add_gaussian_noise, add_poisson_noise, add_snp_noise, salt_value};
pub use rng::{RngStream, Stage};

/// Smooth multiplicative illumination field in [1 - c, 1]: blurred white
/// noise rescaled to [0, 1] and mixed with strength `c`.
pub fn make_uneven_illumination<R: Rng>(
    size: (usize, usize),
    c: f64,
    sigma_px: f64,
    rng: &mut R,
) -> Plane {
    assert!((0.0..=1.0).contains(&c), "c must lie in [0, 1]");
    if c == 0.0 {
        return Array2::from_elem(size, 1.0);
    }
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("valid normal");
    let seed_plane: Plane =
        Array2::from_shape_fn(size, |_| 0.001 * rand_distr::Distribution::sample(&normal, rng));
    // kernel sized to ~4 sigma, capped so it fits the frame
    let wanted = (4.0 * sigma_px).ceil() as usize * 2 + 1;
    let cap = size.0.min(size.1);
    let ksize = wanted.min(if cap % 2 == 0 { cap - 1 } else { cap });
    let blurred = convolve(
        &seed_plane,
        &gaussian_kernel(ksize, sigma_px),
        Boundary::Periodic,
    );
    let min = blurred.iter().copied().fold(f64::INFINITY, f64::min);
    let max = blurred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span <= 0.0 {
        return Array2::from_elem(size, 1.0 - 0.5 * c);
    }
    blurred.mapv(|v| (1.0 - c) + c * (v - min) / span)
}

/// Displace each LED independently by a uniform draw from the disc of
/// radius `d` meters.
pub fn perturb_led_positions<R: Rng>(
    positions: &[(f64, f64)],
    d: f64,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    assert!(d >= 0.0, "shift radius must be >= 0");
    if d == 0.0 {
        return positions.to_vec();
    }
    positions
        .iter()
        .map(|&(x, y)| {
            let r = d * rng.gen::<f64>().sqrt();
            let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            (x + r * theta.cos(), y + r * theta.sin())
        })
        .collect()
}

/// Per-frame illumination tangent (x, y) recovered from the plan entry
/// offsets; the mean over the group's LEDs.
fn frame_tangent(geometry: &SystemGeometry, group: &[LedEntry]) -> (f64, f64) {
    let mut tx = 0.0;
    let mut ty = 0.0;
    for entry in group {
        let sx = entry.spectral_offset.1 as f64 * geometry.du() * geometry.wavelength;
        let sy = entry.spectral_offset.0 as f64 * geometry.dv() * geometry.wavelength;
        let sz = (1.0 - sx * sx - sy * sy).max(1e-6).sqrt();
        tx += sx / sz;
        ty += sy / sz;
    }
    let m = group.len().max(1) as f64;
    (tx / m, ty / m)
}

/// Multiply each frame by a soft disc window whose center is displaced
/// by `shift_gain` times the frame's illumination tangent. Oblique
/// frames come out partially bright and partially dark.
pub fn apply_vignetting(
    images: &mut [Plane],
    plan: &IlluminationPlan,
    geometry: &SystemGeometry,
    spec: &VignettingSpec,
) {
    if !spec.enabled {
        return;
    }
    for (n, img) in images.iter_mut().enumerate() {
        let (tx, ty) = frame_tangent(geometry, &plan.groups[n]);
        let (h, w) = img.dim();
        let cr = (h / 2) as f64 + spec.shift_gain * ty;
        let cc = (w / 2) as f64 + spec.shift_gain * tx;
        for ((r, c), v) in img.indexed_iter_mut() {
            let dr = r as f64 - cr;
            let dc = c as f64 - cc;
            let dist = (dr * dr + dc * dc).sqrt();
            let window = ((spec.radius - dist) / spec.softness).clamp(0.0, 1.0);
            *v *= window;
        }
    }
}

/// Rebuild the plan with the same grouping but entries recomputed from
/// perturbed LED positions.
fn perturbed_plan(
    geometry: &SystemGeometry,
    nominal: &IlluminationPlan,
    positions: &[(f64, f64)],
) -> Result<IlluminationPlan> {
    let entries = led_spectral_offsets(geometry, positions)?;
    let groups = nominal
        .groups
        .iter()
        .map(|group| {
            group
                .iter()
                .map(|e| {
                    entries.get(e.led_index).cloned().ok_or_else(|| {
                        Error::Invariant(format!(
                            "plan references LED {} beyond the grid",
                            e.led_index
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IlluminationPlan { groups })
}

/// Simulate a degraded stack from a high-resolution complex object.
///
/// The pipeline follows the degraded image model: ideal forward frames
/// (on the possibly shifted LEDs), a fresh illumination field per frame,
/// vignetting, the additive background, then exactly one noise branch.
/// The returned stack records the nominal plan and the ground truth;
/// final intensities are clamped at zero so the stack always validates.
pub fn simulate(
    object: &ComplexField,
    geometry: &SystemGeometry,
    plan: &IlluminationPlan,
    spec: &DegradationSpec,
) -> Result<AcquisitionStack> {
    validate_geometry(geometry)?;
    validate_plan(geometry, plan)?;
    spec.validate().map_err(Error::Invariant)?;
    if object.dim() != geometry.hr_size {
        return Err(Error::Invariant(format!(
            "object size {:?} does not match hr_size {:?}",
            object.dim(),
            geometry.hr_size
        )));
    }

    let streams = RngStream::new(spec.seed);

    let actual_plan = if spec.led_shift_radius > 0.0 {
        let mut rng = streams.substream(0, Stage::LedShift);
        let shifted = perturb_led_positions(
            &led_grid_positions(geometry),
            spec.led_shift_radius,
            &mut rng,
        );
        perturbed_plan(geometry, plan, &shifted)?
    } else {
        plan.clone()
    };

    let spectrum = dft2(object);
    let pupil = pupil_init(geometry)?;
    let mut images = forward_ideal(&spectrum, &pupil, &actual_plan)?;

    if spec.uneven_strength > 0.0 {
        images.par_iter_mut().enumerate().for_each(|(n, img)| {
            let mut rng = streams.substream(n as u64, Stage::Illumination);
            let field =
                make_uneven_illumination(img.dim(), spec.uneven_strength, spec.blur_half_waist, &mut rng);
            *img = &*img * &field;
        });
    }

    apply_vignetting(&mut images, &actual_plan, geometry, &spec.vignetting);

    if spec.background != 0.0 {
        for img in &mut images {
            img.mapv_inplace(|v| v + spec.background);
        }
    }

    match spec.noise {
        NoiseKind::None => {}
        NoiseKind::Gaussian { std } => {
            images.par_iter_mut().enumerate().for_each(|(n, img)| {
                let mut rng = streams.substream(n as u64, Stage::Noise);
                *img = add_gaussian_noise(img, std, &mut rng);
            });
        }
        NoiseKind::SaltPepper { density } => {
            let salt = salt_value(&images);
            images.par_iter_mut().enumerate().for_each(|(n, img)| {
                let mut rng = streams.substream(n as u64, Stage::Noise);
                *img = add_snp_noise(img, density, salt, &mut rng);
            });
        }
        NoiseKind::Poisson { photon_scale } => {
            let results: Vec<Result<Plane>> = images
                .par_iter()
                .enumerate()
                .map(|(n, img)| {
                    let mut rng = streams.substream(n as u64, Stage::Noise);
                    add_poisson_noise(img, photon_scale, &mut rng)
                })
                .collect();
            images = results.into_iter().collect::<Result<Vec<_>>>()?;
        }
    }

    // Noise branches can push pixels negative; camera counts cannot be.
    if !matches!(spec.noise, NoiseKind::None) {
        for img in &mut images {
            img.mapv_inplace(|v| v.max(0.0));
        }
    }

    Ok(AcquisitionStack {
        images,
        plan: plan.clone(),
        geometry: geometry.clone(),
        ground_truth: Some(GroundTruth {
            amplitude: object.mapv(|z| z.norm()),
            phase: object.mapv(|z| z.im.atan2(z.re)),
        }),
    })
}

/// Dark-field corruption level in percent: the mean, over dark-field
/// frames, of the relative L1 deviation of the degraded frame from the
/// clean one.
pub fn noise_level_metric(
    clean: &[Plane],
    degraded: &[Plane],
    plan: &IlluminationPlan,
) -> Result<f64> {
    if clean.len() != degraded.len() || clean.len() != plan.n_groups() {
        return Err(Error::Invariant(
            "stacks and plan must have the same frame count".into(),
        ));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for n in 0..clean.len() {
        if !plan.is_dark_field_frame(n) {
            continue;
        }
        let num: f64 = clean[n]
            .iter()
            .zip(degraded[n].iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let den: f64 = clean[n].iter().map(|v| v.abs()).sum();
        total += num / den;
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoDarkField);
    }
    Ok(total / count as f64 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::sequential_plan;
    use crate::phantom;

    #[test]
    fn uneven_illumination_off_is_all_ones() {
        let mut rng = RngStream::new(1).substream(0, Stage::Illumination);
        let field = make_uneven_illumination((32, 32), 0.0, 15.0, &mut rng);
        assert!(field.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn uneven_illumination_full_strength_spans_unit_interval() {
        let mut rng = RngStream::new(2).substream(0, Stage::Illumination);
        let field = make_uneven_illumination((64, 64), 1.0, 15.0, &mut rng);
        let min = field.iter().copied().fold(f64::INFINITY, f64::min);
        let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((min - 0.0).abs() < 1e-12);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uneven_illumination_is_smooth_and_bounded() {
        use num_complex::Complex64;
        let mut rng = RngStream::new(3).substream(0, Stage::Illumination);
        let field = make_uneven_illumination((64, 64), 0.5, 15.0, &mut rng);
        assert!(field.iter().all(|&v| (0.5..=1.0).contains(&v)));
        // spectral energy above a quarter of Nyquist must be negligible
        let mean = field.iter().sum::<f64>() / field.len() as f64;
        let centered = field.mapv(|v| Complex64::new(v - mean, 0.0));
        let spec = crate::ops::dft2(&centered);
        let (h, w) = spec.dim();
        let mut high = 0.0;
        let mut total = 0.0;
        for ((r, c), v) in spec.indexed_iter() {
            let fr = (r as f64 - (h / 2) as f64) / h as f64;
            let fc = (c as f64 - (w / 2) as f64) / w as f64;
            let e = v.norm_sqr();
            total += e;
            if fr.abs() > 0.125 || fc.abs() > 0.125 {
                high += e;
            }
        }
        assert!(high / total < 0.01, "high-frequency share {}", high / total);
    }

    #[test]
    fn led_perturbation_support_and_mean() {
        let positions: Vec<(f64, f64)> = (0..10000).map(|i| (i as f64, 0.0)).collect();
        let mut rng = RngStream::new(4).substream(0, Stage::LedShift);
        let d = 2e-3;
        let shifted = perturb_led_positions(&positions, d, &mut rng);
        let mut mean_mag = 0.0;
        for ((x0, y0), (x1, y1)) in positions.iter().zip(shifted.iter()) {
            let mag = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
            assert!(mag <= d + 1e-15);
            mean_mag += mag;
        }
        mean_mag /= positions.len() as f64;
        let expect = 2.0 / 3.0 * d;
        assert!((mean_mag - expect).abs() < 0.03 * expect, "mean {mean_mag}");
        let unchanged = perturb_led_positions(&positions, 0.0, &mut rng);
        assert_eq!(positions, unchanged);
    }

    #[test]
    fn vignetting_identity_when_window_covers_frame() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let spectrum = dft2(&object);
        let pupil = pupil_init(&geom).unwrap();
        let clean = forward_ideal(&spectrum, &pupil, &plan).unwrap();
        let mut windowed = clean.clone();
        let spec = VignettingSpec {
            enabled: true,
            radius: 2.0 * 91.0, // beyond the frame diagonal
            softness: 4.0,
            shift_gain: 0.0,
        };
        apply_vignetting(&mut windowed, &plan, &geom, &spec);
        for (a, b) in clean.iter().zip(windowed.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn vignetting_window_follows_azimuth() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        // flat frames isolate the window geometry
        let mut images: Vec<Plane> = (0..plan.n_groups())
            .map(|_| Array2::from_elem(geom.lr_size, 1.0))
            .collect();
        let spec = VignettingSpec {
            enabled: true,
            radius: 30.0,
            softness: 4.0,
            shift_gain: 60.0,
        };
        apply_vignetting(&mut images, &plan, &geom, &spec);

        // center LED: window centered
        let center_n = plan
            .groups
            .iter()
            .position(|g| g[0].spectral_offset == (0, 0))
            .unwrap();
        let img = &images[center_n];
        assert!(img[[32, 32]] == 1.0);
        assert!((img[[32, 2]] - img[[32, 62]]).abs() < 1e-12);

        // near-cutoff LED on the +x side: strong left/right asymmetry
        let oblique_n = plan
            .groups
            .iter()
            .position(|g| {
                let e = &g[0];
                e.spectral_offset.0 == 0 && e.spectral_offset.1 < -20
            })
            .unwrap();
        let img = &images[oblique_n];
        let (h, w) = img.dim();
        let left: f64 = img.slice(ndarray::s![.., ..w / 2]).iter().sum();
        let right: f64 = img.slice(ndarray::s![.., w / 2..]).iter().sum();
        let _ = h;
        // offset.1 < 0 means the LED sits at +x, tangent points to -x,
        // so the window slides left
        assert!(left > 10.0 * right, "left {left} right {right}");
    }

    #[test]
    fn all_off_equals_forward_ideal_bit_exactly() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let stack = simulate(&object, &geom, &plan, &DegradationSpec::clean(7)).unwrap();
        let spectrum = dft2(&object);
        let pupil = pupil_init(&geom).unwrap();
        let ideal = forward_ideal(&spectrum, &pupil, &plan).unwrap();
        for (a, b) in stack.images.iter().zip(ideal.iter()) {
            assert_eq!(a, b);
        }
        crate::model::validate(&geom, &plan, &stack).unwrap();
    }

    #[test]
    fn simulate_is_thread_count_invariant() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let spec = DegradationSpec {
            noise: NoiseKind::Gaussian { std: 1e-4 },
            uneven_strength: 0.25,
            led_shift_radius: 0.5e-3,
            seed: 11,
            ..DegradationSpec::default()
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = pool1.install(|| simulate(&object, &geom, &plan, &spec)).unwrap();
        let b = pool8.install(|| simulate(&object, &geom, &plan, &spec)).unwrap();
        for (x, y) in a.images.iter().zip(b.images.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn degraded_stacks_still_validate() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        for noise in [
            NoiseKind::Gaussian { std: 1e-2 },
            NoiseKind::SaltPepper { density: 0.1 },
            NoiseKind::Poisson { photon_scale: 100.0 },
        ] {
            let spec = DegradationSpec {
                noise,
                uneven_strength: 0.5,
                seed: 3,
                ..DegradationSpec::default()
            };
            let stack = simulate(&object, &geom, &plan, &spec).unwrap();
            crate::model::validate(&geom, &plan, &stack).unwrap();
        }
    }

    #[test]
    fn nl_metric_basics() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let clean = simulate(&object, &geom, &plan, &DegradationSpec::clean(0)).unwrap();
        let zero = noise_level_metric(&clean.images, &clean.images, &plan).unwrap();
        assert_eq!(zero, 0.0);
        let doubled: Vec<Plane> = clean.images.iter().map(|img| img.mapv(|v| 2.0 * v)).collect();
        let hundred = noise_level_metric(&clean.images, &doubled, &plan).unwrap();
        assert!((hundred - 100.0).abs() < 1e-9);
        // scale awareness: scaling both stacks leaves NL unchanged
        let scaled_clean: Vec<Plane> = clean.images.iter().map(|img| img.mapv(|v| 3.0 * v)).collect();
        let scaled_doubled: Vec<Plane> = doubled.iter().map(|img| img.mapv(|v| 3.0 * v)).collect();
        let again = noise_level_metric(&scaled_clean, &scaled_doubled, &plan).unwrap();
        assert!((again - hundred).abs() < 1e-9);
    }

    #[test]
    fn nl_requires_dark_field_frames() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let bright_only = IlluminationPlan {
            groups: plan
                .groups
                .iter()
                .filter(|g| !g[0].is_dark_field)
                .cloned()
                .collect(),
        };
        let images: Vec<Plane> = (0..bright_only.n_groups())
            .map(|_| Array2::from_elem(geom.lr_size, 1.0))
            .collect();
        let err = noise_level_metric(&images, &images, &bright_only).unwrap_err();
        assert!(matches!(err, Error::NoDarkField));
    }

    #[test]
    fn poisson_scale_monotone_in_nl() {
        let geom = phantom::bench_geometry();
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(257, 257);
        let clean = simulate(&object, &geom, &plan, &DegradationSpec::clean(0)).unwrap();
        let mut wins = 0;
        let trials = 20;
        for seed in 0..trials {
            let nl_small = {
                let spec = DegradationSpec {
                    noise: NoiseKind::Poisson { photon_scale: 200.0 },
                    seed,
                    ..DegradationSpec::default()
                };
                let stack = simulate(&object, &geom, &plan, &spec).unwrap();
                noise_level_metric(&clean.images, &stack.images, &plan).unwrap()
            };
            let nl_large = {
                let spec = DegradationSpec {
                    noise: NoiseKind::Poisson { photon_scale: 2000.0 },
                    seed,
                    ..DegradationSpec::default()
                };
                let stack = simulate(&object, &geom, &plan, &spec).unwrap();
                noise_level_metric(&clean.images, &stack.images, &plan).unwrap()
            };
            if nl_large < nl_small {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * trials as f64, "wins {wins}/{trials}");
    }
}
