//! Gradient-feature reconstruction: L1 fidelity on intensity-feature
//! differences, Hessian penalties on amplitude and phase, closed-form
//! Wirtinger gradients, and the optimizer family that consumes them.

pub mod fidelity;
pub mod optim;
pub mod penalty;
mod reconstruct;

use ndarray::Zip;
use num_complex::Complex64;

use crate::model::{ComplexField, FidelityMode, Plane};
use crate::ops::{convolve, Boundary, HessianField3, Kernel, OmegaMode, VectorField2,
    HESSIAN_CROSS_WEIGHT};

pub use fidelity::{
    fidelity_loss, fidelity_pass, fidelity_w, grad_fidelity_pupil, grad_fidelity_spectrum,
    FidelityParams, FidelityPass,
};
pub use optim::{create_optimizer, Optimizer, OptimizerHyper, OPTIMIZER_NAMES};
pub use penalty::{
    amp_hessian_grad, amp_hessian_loss, phase_hessian_grad, phase_hessian_loss, PenaltyParams,
};
pub use reconstruct::{initial_spectrum, reconstruct, LossReport, Reconstruction, ResolvedConfig,
    total_gradient, TotalGradient};

/// Smoothed absolute value: `sqrt(x^2 + eps^2) - eps`. Zero at zero,
/// and its derivative is the smoothed sign used by the normalization.
#[inline]
pub(crate) fn smooth_abs(x: f64, epsilon: f64) -> f64 {
    (x * x + epsilon * epsilon).sqrt() - epsilon
}

/// Smoothed L1 composite of a first-order field, matching the chosen
/// normalization mode.
pub(crate) fn vector_l1(v: &VectorField2, mode: OmegaMode, epsilon: f64) -> f64 {
    match mode {
        OmegaMode::Isotropic => v
            .x
            .iter()
            .zip(v.y.iter())
            .map(|(&a, &b)| (a * a + b * b + epsilon * epsilon).sqrt() - epsilon)
            .sum(),
        OmegaMode::Anisotropic => v
            .x
            .iter()
            .zip(v.y.iter())
            .map(|(&a, &b)| smooth_abs(a, epsilon) + smooth_abs(b, epsilon))
            .sum(),
    }
}

/// Smoothed L1 composite of a second-order field. The mixed component
/// counts twice, matching its multiplicity in the symmetric
/// second-derivative matrix.
pub(crate) fn hessian_l1(hf: &HessianField3, mode: OmegaMode, epsilon: f64) -> f64 {
    match mode {
        OmegaMode::Isotropic => hf
            .xx
            .iter()
            .zip(hf.yy.iter())
            .zip(hf.xy.iter())
            .map(|((&a, &b), &m)| {
                (a * a + b * b + HESSIAN_CROSS_WEIGHT * m * m + epsilon * epsilon).sqrt() - epsilon
            })
            .sum(),
        OmegaMode::Anisotropic => hf
            .xx
            .iter()
            .zip(hf.yy.iter())
            .zip(hf.xy.iter())
            .map(|((&a, &b), &m)| {
                smooth_abs(a, epsilon)
                    + smooth_abs(b, epsilon)
                    + HESSIAN_CROSS_WEIGHT * smooth_abs(m, epsilon)
            })
            .sum(),
    }
}

/// Elementwise product of a complex field with a real plane.
pub(crate) fn mul_complex_real(c: &ComplexField, r: &Plane) -> ComplexField {
    Zip::from(c).and(r).map_collect(|&z, &s| z * s)
}

/// Automatic penalty weight: the mean absolute response of the scaled
/// frames to a 3x3 second-difference probe, times `sqrt(pi/2) / 5`.
pub fn auto_alpha_beta(images: &[Plane], mode: FidelityMode) -> f64 {
    let probe = Kernel::new(ndarray::arr2(&[
        [-1.0, 2.0, -1.0],
        [-2.0, 4.0, -2.0],
        [-1.0, 2.0, -1.0],
    ]))
    .expect("probe kernel is valid");
    let mut acc = 0.0;
    let mut count = 0usize;
    for img in images {
        let scaled: Plane = match mode {
            FidelityMode::Intensity => img.clone(),
            FidelityMode::Amplitude => img.mapv(|v| v.max(0.0).sqrt()),
            FidelityMode::Gamma(p) => img.mapv(|v| v.max(0.0).powf(p)),
            FidelityMode::Log1p => img.mapv(|v| (1.0 + v.max(0.0)).ln()),
        };
        let response = convolve(&scaled, &probe, Boundary::Periodic);
        acc += response.iter().map(|v| v.abs()).sum::<f64>();
        count += response.len();
    }
    0.2 * (std::f64::consts::PI / 2.0).sqrt() * acc / count as f64
}

/// `2 Re <g, dir>`: the first-order change of a real loss along a
/// complex perturbation direction, given its conjugate-variable
/// gradient.
pub fn directional_change(gradient: &ComplexField, direction: &ComplexField) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (g, d) in gradient.iter().zip(direction.iter()) {
        acc += g * d.conj();
    }
    2.0 * acc.re
}
