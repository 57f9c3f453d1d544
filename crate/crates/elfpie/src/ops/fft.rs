//! Unitary 2-D DFT with a centered (DC-at-middle) layout on both sides.
//!
//! `idft2(dft2(x)) == x` to machine precision and both transforms
//! preserve energy, so `dft2` and `idft2` are exact adjoints of each
//! other. The centered convention means a delta at the middle pixel
//! transforms to a constant plane.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::model::ComplexField;

type PlanKey = (usize, bool);

fn plan_for(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let direction = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            planner.plan_fft(n, direction)
        })
        .clone()
}

/// Move the DC bin from index 0 to the center `n / 2` on both axes.
pub fn fftshift(a: &ComplexField) -> ComplexField {
    let (h, w) = a.dim();
    let (ch, cw) = (h / 2, w / 2);
    Array2::from_shape_fn((h, w), |(r, c)| a[[(r + h - ch) % h, (c + w - cw) % w]])
}

/// Inverse of [`fftshift`]: move the center bin back to index 0.
pub fn ifftshift(a: &ComplexField) -> ComplexField {
    let (h, w) = a.dim();
    let (ch, cw) = (h / 2, w / 2);
    Array2::from_shape_fn((h, w), |(r, c)| a[[(r + ch) % h, (c + cw) % w]])
}

fn transpose(a: &ComplexField) -> ComplexField {
    let (h, w) = a.dim();
    Array2::from_shape_fn((w, h), |(r, c)| a[[c, r]])
}

fn rows_in_place(a: &mut ComplexField, inverse: bool) {
    let (_, w) = a.dim();
    let plan = plan_for(w, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for mut row in a.rows_mut() {
        let slice = row.as_slice_mut().expect("rows of a standard-layout array");
        plan.process_with_scratch(slice, &mut scratch);
    }
}

fn transform(a: &ComplexField, inverse: bool) -> ComplexField {
    let (h, w) = a.dim();
    let mut work = ifftshift(a);
    rows_in_place(&mut work, inverse);
    let mut work = transpose(&work);
    rows_in_place(&mut work, inverse);
    let work = transpose(&work);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    fftshift(&work).mapv_into(|v| v * scale)
}

/// Unitary forward DFT, centered layout in and out.
pub fn dft2(a: &ComplexField) -> ComplexField {
    transform(a, false)
}

/// Unitary inverse DFT, centered layout in and out.
pub fn idft2(a: &ComplexField) -> ComplexField {
    transform(a, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(h: usize, w: usize, rng: &mut StdRng) -> ComplexField {
        Array2::from_shape_fn((h, w), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// Definitional double-sum DFT in the same centered convention.
    fn brute_dft2(a: &ComplexField) -> ComplexField {
        let (h, w) = a.dim();
        let (ch, cw) = (h / 2, w / 2);
        let scale = 1.0 / ((h * w) as f64).sqrt();
        Array2::from_shape_fn((h, w), |(k, l)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let ang = -2.0 * std::f64::consts::PI
                        * ((k as f64 - ch as f64) * (r as f64 - ch as f64) / h as f64
                            + (l as f64 - cw as f64) * (c as f64 - cw as f64) / w as f64);
                    acc += a[[r, c]] * Complex64::from_polar(1.0, ang);
                }
            }
            acc * scale
        })
    }

    #[test]
    fn center_delta_maps_to_constant() {
        let mut a = Array2::from_elem((8, 8), Complex64::new(0.0, 0.0));
        a[[4, 4]] = Complex64::new(1.0, 0.0);
        let spec = dft2(&a);
        let expect = 1.0 / 8.0;
        for v in spec.iter() {
            assert!((v.norm() - expect).abs() < 1e-12);
            assert!((v.re - expect).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_maps_to_center_delta() {
        let a = Array2::from_elem((6, 10), Complex64::new(1.0, 0.0));
        let spec = dft2(&a);
        assert!((spec[[3, 5]].re - 60f64.sqrt()).abs() < 1e-10);
        let off_energy: f64 = spec
            .indexed_iter()
            .filter(|((r, c), _)| !(*r == 3 && *c == 5))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        assert!(off_energy < 1e-20);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_field(8, 8, &mut rng);
        let fast = dft2(&a);
        let slow = brute_dft2(&a);
        for (f, s) in fast.iter().zip(slow.iter()) {
            assert!((f - s).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = StdRng::seed_from_u64(7);
        for &(h, w) in &[(8usize, 8usize), (7, 9), (16, 12)] {
            let a = random_field(h, w, &mut rng);
            let back = idft2(&dft2(&a));
            for (x, y) in a.iter().zip(back.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
            let e_in: f64 = a.iter().map(|v| v.norm_sqr()).sum();
            let e_out: f64 = dft2(&a).iter().map(|v| v.norm_sqr()).sum();
            assert!((e_in - e_out).abs() < 1e-12 * e_in.max(1.0));
        }
    }

    #[test]
    fn shifts_are_inverse_of_each_other() {
        let mut rng = StdRng::seed_from_u64(3);
        for &(h, w) in &[(5usize, 7usize), (6, 6)] {
            let a = random_field(h, w, &mut rng);
            assert_eq!(ifftshift(&fftshift(&a)), a);
            assert_eq!(fftshift(&ifftshift(&a)), a);
        }
    }
}
