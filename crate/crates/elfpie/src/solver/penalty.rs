//! Hessian (second-order total variation) penalties on the amplitude
//! and phase of the object field, with their conjugate-spectrum
//! gradients.

use ndarray::Zip;
use num_complex::Complex64;

use crate::model::{ComplexField, Plane, ReconstructionConfig};
use crate::ops::{dft2, hessian, hessian_adjoint, omega_hessian, HessianField3, OmegaMode,
    HESSIAN_CROSS_WEIGHT};

use super::hessian_l1;

#[derive(Clone, Copy, Debug)]
pub struct PenaltyParams {
    pub omega: OmegaMode,
    /// Smoothing epsilon of the L1 composite and normalization.
    pub epsilon: f64,
    /// Guard on the modulus denominators.
    pub eta: f64,
}

impl PenaltyParams {
    pub fn from_config(config: &ReconstructionConfig) -> Self {
        Self {
            omega: config.omega,
            epsilon: config.epsilon_omega,
            eta: config.eta_phase,
        }
    }
}

fn amplitude_map(object: &ComplexField) -> Plane {
    object.mapv(|z| z.norm())
}

fn phase_map(object: &ComplexField) -> Plane {
    object.mapv(|z| z.im.atan2(z.re))
}

/// Adjoint input with the mixed component at its matrix multiplicity.
fn weighted(om: HessianField3) -> HessianField3 {
    HessianField3 {
        xx: om.xx,
        yy: om.yy,
        xy: om.xy.mapv(|v| HESSIAN_CROSS_WEIGHT * v),
    }
}

/// L1 of the amplitude's second differences. Depends on |O| only, so it
/// is invariant to any global phase on the spectrum.
pub fn amp_hessian_loss(object: &ComplexField, params: &PenaltyParams) -> f64 {
    hessian_l1(&hessian(&amplitude_map(object)), params.omega, params.epsilon)
}

/// Gradient of [`amp_hessian_loss`] with respect to the conjugate
/// spectrum, plus the loss itself.
pub fn amp_hessian_grad(object: &ComplexField, params: &PenaltyParams) -> (ComplexField, f64) {
    let amp = amplitude_map(object);
    let hf = hessian(&amp);
    let loss = hessian_l1(&hf, params.omega, params.epsilon);
    let q = hessian_adjoint(&weighted(omega_hessian(&hf, params.omega, params.epsilon)));
    let scaled = Zip::from(object).and(&q).map_collect(|&z, &qv| {
        // 0.5 * O / (|O| + eta) * q
        z * (0.5 * qv / (z.norm() + params.eta))
    });
    (dft2(&scaled), loss)
}

/// L1 of the phase's second differences, on the wrapped four-quadrant
/// angle. Depends on the angle only, so it is invariant to amplitude
/// scaling.
pub fn phase_hessian_loss(object: &ComplexField, params: &PenaltyParams) -> f64 {
    hessian_l1(&hessian(&phase_map(object)), params.omega, params.epsilon)
}

/// Gradient of [`phase_hessian_loss`] with respect to the conjugate
/// spectrum, plus the loss itself.
pub fn phase_hessian_grad(object: &ComplexField, params: &PenaltyParams) -> (ComplexField, f64) {
    let phi = phase_map(object);
    let hf = hessian(&phi);
    let loss = hessian_l1(&hf, params.omega, params.epsilon);
    let q = hessian_adjoint(&weighted(omega_hessian(&hf, params.omega, params.epsilon)));
    let half_i = Complex64::new(0.0, 0.5);
    let scaled = Zip::from(object).and(&q).map_collect(|&z, &qv| {
        // (i/2) * O / (|O|^2 + eta) * q
        half_i * z * (qv / (z.norm_sqr() + params.eta))
    });
    (dft2(&scaled), loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::idft2;
    use ndarray::Array2;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn params() -> PenaltyParams {
        PenaltyParams {
            omega: OmegaMode::Isotropic,
            epsilon: 1e-8,
            eta: 1e-6,
        }
    }

    fn random_object(n: usize, rng: &mut StdRng) -> ComplexField {
        Array2::from_shape_fn((n, n), |_| {
            Complex64::from_polar(0.3 + 0.7 * rng.gen::<f64>(), rng.gen_range(-1.2..1.2))
        })
    }

    #[test]
    fn constant_object_has_zero_amp_penalty() {
        let object = Array2::from_elem((12, 12), Complex64::new(0.8, 0.3));
        let (grad, loss) = amp_hessian_grad(&object, &params());
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn constant_phase_has_zero_phase_penalty() {
        let mut rng = StdRng::seed_from_u64(61);
        let object = Array2::from_shape_fn((12, 12), |_| {
            Complex64::from_polar(0.2 + rng.gen::<f64>(), 0.4)
        });
        let loss = phase_hessian_loss(&object, &params());
        assert!(loss.abs() < 1e-10);
    }

    #[test]
    fn amp_penalty_is_global_phase_invariant() {
        let mut rng = StdRng::seed_from_u64(62);
        let object = random_object(12, &mut rng);
        let rotated = object.mapv(|z| z * Complex64::from_polar(1.0, 0.77));
        let a = amp_hessian_loss(&object, &params());
        let b = amp_hessian_loss(&rotated, &params());
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn phase_penalty_is_amplitude_scale_invariant() {
        let mut rng = StdRng::seed_from_u64(63);
        let object = random_object(12, &mut rng);
        let scaled = object.mapv(|z| z * 2.5);
        let a = phase_hessian_loss(&object, &params());
        let b = phase_hessian_loss(&scaled, &params());
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn amp_gradient_orthogonal_to_global_phase_direction() {
        let mut rng = StdRng::seed_from_u64(64);
        for _ in 0..10 {
            let object = random_object(12, &mut rng);
            let spectrum = dft2(&object);
            let object_back = idft2(&spectrum);
            let (grad, _) = amp_hessian_grad(&object_back, &params());
            // direction of a pure global phase: i * spectrum
            let dir = spectrum.mapv(|z| Complex64::new(0.0, 1.0) * z);
            let change = super::super::directional_change(&grad, &dir);
            let scale: f64 = grad.iter().map(|v| v.norm()).sum::<f64>()
                * dir.iter().map(|v| v.norm()).sum::<f64>()
                / dir.len() as f64;
            assert!(change.abs() <= 1e-8 * scale.max(1e-12), "change {change}");
        }
    }
}
