//! Gradient-feature data fidelity and its Wirtinger gradients.
//!
//! Per exposure group the camera model predicts `S = sum_m |o_m|^2`
//! with `o_m` the transform of the pupil-masked spectrum patch. The
//! fidelity compares first-order differences of the scaled intensities,
//! `grad g(S) - grad g(I)`, under a smoothed L1 composite. Gradients
//! flow back through the scaling function, the difference operator and
//! the patch extraction by the chain rule, so they match central finite
//! differences of the loss.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    AcquisitionStack, ComplexField, FidelityMode, IlluminationPlan, Plane, PupilFunction,
    ReconstructionConfig,
};
use crate::ops::{dft2, grad, grad_adjoint, idft2, omega_grad, OmegaMode, VectorField2};
use crate::optics::{extract_patch, embed_add_patch};

use super::{mul_complex_real, vector_l1};

/// Everything the fidelity evaluation needs besides the data.
#[derive(Clone, Copy, Debug)]
pub struct FidelityParams {
    pub mode: FidelityMode,
    pub omega: OmegaMode,
    /// Smoothing epsilon shared by the L1 composite and the
    /// normalization, so the gradient is exact for the reported loss.
    pub epsilon: f64,
    /// Guard added inside the scaling function where its derivative
    /// would be singular at zero.
    pub eta: f64,
    /// Legacy variant: normalize the amplitude-form residual when the
    /// mode is intensity.
    pub amplitude_residual_w: bool,
}

impl FidelityParams {
    pub fn from_config(config: &ReconstructionConfig) -> Self {
        Self {
            mode: config.fidelity,
            omega: config.omega,
            epsilon: config.epsilon_omega,
            eta: config.eta_phase,
            amplitude_residual_w: config.amplitude_residual_w,
        }
    }

    fn g_value(&self, x: f64) -> f64 {
        match self.mode {
            FidelityMode::Amplitude => (x + self.eta).sqrt(),
            FidelityMode::Intensity => x,
            FidelityMode::Gamma(p) => (x + self.eta).powf(p),
            FidelityMode::Log1p => (1.0 + x).ln(),
        }
    }

    fn g_deriv(&self, x: f64) -> f64 {
        match self.mode {
            FidelityMode::Amplitude => 0.5 / (x + self.eta).sqrt(),
            FidelityMode::Intensity => 1.0,
            FidelityMode::Gamma(p) => p * (x + self.eta).powf(p - 1.0),
            FidelityMode::Log1p => 1.0 / (1.0 + x),
        }
    }

    fn legacy(&self) -> bool {
        self.amplitude_residual_w && matches!(self.mode, FidelityMode::Intensity)
    }
}

/// Per-frame features of the measured stack, precomputed once. Measured
/// intensities are clamped at zero before scaling.
struct MeasuredFeatures {
    g_grad: Vec<VectorField2>,
    /// Amplitude-form gradients, only for the legacy residual.
    sqrt_grad: Option<Vec<VectorField2>>,
}

fn measured_features(stack: &AcquisitionStack, params: &FidelityParams) -> MeasuredFeatures {
    let g_grad = stack
        .images
        .iter()
        .map(|img| grad(&img.mapv(|v| params.g_value(v.max(0.0)))))
        .collect();
    let sqrt_grad = params.legacy().then(|| {
        stack
            .images
            .iter()
            .map(|img| grad(&img.mapv(|v| (v.max(0.0) + params.eta).sqrt())))
            .collect()
    });
    MeasuredFeatures { g_grad, sqrt_grad }
}

struct GroupEval {
    /// Pre-pupil spectrum patches, one per LED.
    patches: Vec<ComplexField>,
    /// Camera-plane fields, one per LED.
    fields: Vec<ComplexField>,
    /// Predicted intensity `S`.
    total_intensity: Plane,
    loss: f64,
    /// Shared real factor of the update fields:
    /// `g'(S) * grad_adjoint(omega(residual))`.
    q: Option<Plane>,
}

fn eval_group(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    group: &[crate::model::LedEntry],
    meas: (&VectorField2, Option<&VectorField2>),
    params: &FidelityParams,
    with_q: bool,
) -> Result<GroupEval> {
    let size = pupil.field.dim();
    let mut patches = Vec::with_capacity(group.len());
    let mut fields = Vec::with_capacity(group.len());
    let mut total_intensity: Plane = Array2::zeros(size);
    for entry in group {
        let patch = extract_patch(spectrum, size, entry.spectral_offset)?;
        let field = dft2(&(&patch * &pupil.field));
        for (s, v) in total_intensity.iter_mut().zip(field.iter()) {
            *s += v.norm_sqr();
        }
        patches.push(patch);
        fields.push(field);
    }

    let predicted = grad(&total_intensity.mapv(|v| params.g_value(v)));
    let residual = VectorField2 {
        x: &predicted.x - &meas.0.x,
        y: &predicted.y - &meas.0.y,
    };
    let loss = vector_l1(&residual, params.omega, params.epsilon);

    let q = with_q.then(|| {
        if params.legacy() {
            let amp_predicted = grad(&total_intensity.mapv(|v| (v + params.eta).sqrt()));
            let meas_sqrt = meas.1.expect("legacy features precomputed");
            let amp_residual = VectorField2 {
                x: &amp_predicted.x - &meas_sqrt.x,
                y: &amp_predicted.y - &meas_sqrt.y,
            };
            grad_adjoint(&omega_grad(&amp_residual, params.omega, params.epsilon))
        } else {
            let adj = grad_adjoint(&omega_grad(&residual, params.omega, params.epsilon));
            Zip::from(&adj)
                .and(&total_intensity)
                .map_collect(|&a, &s| a * params.g_deriv(s))
        }
    });

    Ok(GroupEval {
        patches,
        fields,
        total_intensity,
        loss,
        q,
    })
}

/// Fidelity loss over the whole stack.
pub fn fidelity_loss(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
    params: &FidelityParams,
) -> Result<f64> {
    params.mode.validate().map_err(Error::Invariant)?;
    let meas = measured_features(stack, params);
    let losses: Vec<Result<f64>> = plan
        .groups
        .par_iter()
        .enumerate()
        .map(|(n, group)| {
            Ok(eval_group(spectrum, pupil, group, (&meas.g_grad[n], None), params, false)?.loss)
        })
        .collect();
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total)
}

/// Update field `W` for one (group, member) pair: the camera-plane
/// factor whose back-transform drives both the spectrum and pupil
/// gradients. Zero wherever the data fit is exact.
pub fn fidelity_w(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
    params: &FidelityParams,
    n: usize,
    m: usize,
) -> Result<ComplexField> {
    let meas = measured_features(stack, params);
    let eval = eval_group(
        spectrum,
        pupil,
        &plan.groups[n],
        (&meas.g_grad[n], meas.sqrt_grad.as_ref().map(|v| &v[n])),
        params,
        true,
    )?;
    let q = eval.q.as_ref().expect("q requested");
    Ok(mul_complex_real(&eval.fields[m], q))
}

/// One full gradient evaluation over the stack.
pub struct FidelityPass {
    /// Conjugate-spectrum gradient, full grid.
    pub spectrum_grad: ComplexField,
    /// Conjugate-pupil gradient masked to the support disc, when
    /// requested.
    pub pupil_grad: Option<ComplexField>,
    pub loss: f64,
}

struct GroupContrib {
    loss: f64,
    /// Per-member spectrum-window contribution and its offset.
    spectrum_patches: Vec<(ComplexField, (i64, i64))>,
    pupil_patches: Vec<ComplexField>,
}

/// Evaluate the fidelity loss and its gradients in one pass.
///
/// Group contributions are computed independently (in parallel); with
/// `deterministic` they are accumulated serially in plan order, making
/// runs bit-identical across thread counts. Without it the
/// accumulation itself is parallel and may reassociate rounding.
pub fn fidelity_pass(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
    params: &FidelityParams,
    want_pupil: bool,
    deterministic: bool,
) -> Result<FidelityPass> {
    params.mode.validate().map_err(Error::Invariant)?;
    let meas = measured_features(stack, params);
    let pupil_conj = pupil.field.mapv(|z| z.conj());

    let contribs: Vec<Result<GroupContrib>> = plan
        .groups
        .par_iter()
        .enumerate()
        .map(|(n, group)| {
            let eval = eval_group(
                spectrum,
                pupil,
                group,
                (&meas.g_grad[n], meas.sqrt_grad.as_ref().map(|v| &v[n])),
                params,
                true,
            )?;
            let q = eval.q.as_ref().expect("q requested");
            let mut spectrum_patches = Vec::with_capacity(group.len());
            let mut pupil_patches = Vec::new();
            for (m, entry) in group.iter().enumerate() {
                let w = mul_complex_real(&eval.fields[m], q);
                let back = idft2(&w);
                spectrum_patches.push((&pupil_conj * &back, entry.spectral_offset));
                if want_pupil {
                    let patch_conj = eval.patches[m].mapv(|z| z.conj());
                    pupil_patches.push(&patch_conj * &back);
                }
            }
            Ok(GroupContrib {
                loss: eval.loss,
                spectrum_patches,
                pupil_patches,
            })
        })
        .collect();
    let contribs = contribs.into_iter().collect::<Result<Vec<_>>>()?;

    let hr = spectrum.dim();
    let lr = pupil.field.dim();
    let zero_c = Complex64::new(0.0, 0.0);

    let (spectrum_grad, pupil_sum, loss) = if deterministic {
        let mut grad_acc: ComplexField = Array2::from_elem(hr, zero_c);
        let mut pupil_acc: ComplexField = Array2::from_elem(lr, zero_c);
        let mut loss = 0.0;
        for contrib in &contribs {
            loss += contrib.loss;
            for (patch, offset) in &contrib.spectrum_patches {
                embed_add_patch(&mut grad_acc, patch, *offset)?;
            }
            for patch in &contrib.pupil_patches {
                pupil_acc += patch;
            }
        }
        (grad_acc, pupil_acc, loss)
    } else {
        contribs
            .par_iter()
            .fold(
                || (Array2::from_elem(hr, zero_c), Array2::from_elem(lr, zero_c), 0.0),
                |(mut grad_acc, mut pupil_acc, mut loss), contrib| {
                    loss += contrib.loss;
                    for (patch, offset) in &contrib.spectrum_patches {
                        embed_add_patch(&mut grad_acc, patch, *offset)
                            .expect("offsets validated during evaluation");
                    }
                    for patch in &contrib.pupil_patches {
                        pupil_acc += patch;
                    }
                    (grad_acc, pupil_acc, loss)
                },
            )
            .reduce(
                || (Array2::from_elem(hr, zero_c), Array2::from_elem(lr, zero_c), 0.0),
                |(ga, pa, la), (gb, pb, lb)| (ga + gb, pa + pb, la + lb),
            )
    };

    let pupil_grad = want_pupil.then(|| {
        let mut masked = pupil_sum;
        for (v, &inside) in masked.iter_mut().zip(pupil.support().iter()) {
            if !inside {
                *v = zero_c;
            }
        }
        masked
    });

    Ok(FidelityPass {
        spectrum_grad,
        pupil_grad,
        loss,
    })
}

/// Conjugate-spectrum gradient of the fidelity alone.
pub fn grad_fidelity_spectrum(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
    params: &FidelityParams,
    deterministic: bool,
) -> Result<ComplexField> {
    Ok(fidelity_pass(spectrum, pupil, plan, stack, params, false, deterministic)?.spectrum_grad)
}

/// Conjugate-pupil gradient of the fidelity, masked to the support.
pub fn grad_fidelity_pupil(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    plan: &IlluminationPlan,
    stack: &AcquisitionStack,
    params: &FidelityParams,
    deterministic: bool,
) -> Result<ComplexField> {
    Ok(fidelity_pass(spectrum, pupil, plan, stack, params, true, deterministic)?
        .pupil_grad
        .expect("pupil gradient requested"))
}
