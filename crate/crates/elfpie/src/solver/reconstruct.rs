//! The full reconstruction loop: per-iteration gradient assembly over
//! the whole spectrum, optimizer steps for the spectrum and (optionally)
//! the pupil, and the loss trace.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    AcquisitionStack, ComplexField, ObjectEstimate, PupilFunction, ReconstructionConfig,
    SystemGeometry, PUPIL_GAIN_LIMIT,
};
use crate::ops::{convolve, dft2, gaussian_kernel, idft2, Boundary, Kernel};
use crate::optics::{embed_add_patch, pupil_init};

use super::fidelity::{fidelity_pass, FidelityParams};
use super::optim::{create_optimizer, OptimizerHyper};
use super::penalty::{amp_hessian_grad, phase_hessian_grad, PenaltyParams};
use super::auto_alpha_beta;

/// Loss breakdown at one iteration, recorded before the update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    /// 0-based index of the state the losses were evaluated at; entry 0
    /// is the initialization.
    pub iteration: usize,
    pub fidelity: f64,
    pub amp_hessian: f64,
    pub phase_hessian: f64,
    pub total: f64,
}

/// Configuration with the automatic penalty weights resolved.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub fid: FidelityParams,
    pub pen: PenaltyParams,
    pub alpha: f64,
    pub beta: f64,
    pub learn_pupil: bool,
    pub deterministic: bool,
}

impl ResolvedConfig {
    pub fn resolve(config: &ReconstructionConfig, stack: &AcquisitionStack) -> Result<Self> {
        config.validate().map_err(Error::Invariant)?;
        let auto = if config.alpha.is_none() || config.beta.is_none() {
            auto_alpha_beta(&stack.images, config.fidelity)
        } else {
            0.0
        };
        Ok(Self {
            fid: FidelityParams::from_config(config),
            pen: PenaltyParams::from_config(config),
            alpha: config.alpha.unwrap_or(auto),
            beta: config.beta.unwrap_or(auto),
            learn_pupil: config.learn_pupil,
            deterministic: config.deterministic_reduction,
        })
    }
}

/// Combined gradient of the total cost at the given state.
pub struct TotalGradient {
    pub spectrum: ComplexField,
    /// Fidelity-only pupil gradient; the penalties do not touch the
    /// pupil.
    pub pupil: Option<ComplexField>,
    pub report: LossReport,
}

/// One gradient evaluation of the total cost
/// `fidelity + alpha * amp_hessian + beta * phase_hessian`.
pub fn total_gradient(
    spectrum: &ComplexField,
    pupil: &PupilFunction,
    stack: &AcquisitionStack,
    cfg: &ResolvedConfig,
    iteration: usize,
) -> Result<TotalGradient> {
    let pass = fidelity_pass(
        spectrum,
        pupil,
        &stack.plan,
        stack,
        &cfg.fid,
        cfg.learn_pupil,
        cfg.deterministic,
    )?;
    let object = idft2(spectrum);
    let (amp_grad, amp_loss) = amp_hessian_grad(&object, &cfg.pen);
    let (phase_grad, phase_loss) = phase_hessian_grad(&object, &cfg.pen);

    let mut grad = pass.spectrum_grad;
    ndarray::Zip::from(&mut grad)
        .and(&amp_grad)
        .and(&phase_grad)
        .for_each(|g, &a, &p| {
            *g += cfg.alpha * a + cfg.beta * p;
        });

    let total = pass.loss + cfg.alpha * amp_loss + cfg.beta * phase_loss;
    Ok(TotalGradient {
        spectrum: grad,
        pupil: pass.pupil_grad,
        report: LossReport {
            iteration,
            fidelity: pass.loss,
            amp_hessian: amp_loss,
            phase_hessian: phase_loss,
            total,
        },
    })
}

/// Spectrum initialization: the transform of the square-rooted
/// brightest on-axis frame, zero phase, embedded at the spectrum
/// center.
pub fn initial_spectrum(
    stack: &AcquisitionStack,
    geometry: &SystemGeometry,
) -> Result<ComplexField> {
    let center = stack
        .plan
        .groups
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let na = |g: &[crate::model::LedEntry]| {
                g.iter()
                    .map(|e| e.illumination_na)
                    .fold(f64::INFINITY, f64::min)
            };
            na(a).partial_cmp(&na(b)).unwrap()
        })
        .map(|(n, _)| n)
        .ok_or_else(|| Error::Invariant("plan has no groups".into()))?;
    let sqrt_img = stack.images[center].mapv(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let low_spectrum = dft2(&sqrt_img);
    let mut spectrum = Array2::from_elem(geometry.hr_size, Complex64::new(0.0, 0.0));
    embed_add_patch(&mut spectrum, &low_spectrum, (0, 0))?;
    Ok(spectrum)
}

/// Reconstruction output: the spectrum estimate, the learned (or
/// initial) pupil, and the per-iteration loss trace.
pub struct Reconstruction {
    pub object: ObjectEstimate,
    pub pupil: PupilFunction,
    pub trace: Vec<LossReport>,
}

fn smooth_field(field: &ComplexField, kernel: &Kernel) -> ComplexField {
    let re = convolve(&field.mapv(|z| z.re), kernel, Boundary::Replicate);
    let im = convolve(&field.mapv(|z| z.im), kernel, Boundary::Replicate);
    ndarray::Zip::from(&re).and(&im).map_collect(|&r, &i| Complex64::new(r, i))
}

/// Run the reconstruction loop.
///
/// Every iteration evaluates the loss and the full-spectrum gradient at
/// the current state, records the loss, then steps the spectrum and (if
/// enabled) the pupil. The pupil is smoothed with a small Gaussian
/// before its update, then re-masked to its support and gain-clamped.
/// A zero iteration budget returns the initialization unchanged.
pub fn reconstruct(
    stack: &AcquisitionStack,
    geometry: &SystemGeometry,
    config: &ReconstructionConfig,
) -> Result<Reconstruction> {
    crate::model::validate(geometry, &stack.plan, stack)?;
    let cfg = ResolvedConfig::resolve(config, stack)?;

    let mut spectrum = initial_spectrum(stack, geometry)?;
    let mut pupil = pupil_init(geometry)?;

    let hyper = OptimizerHyper {
        gamma1: config.gamma1,
        gamma2: config.gamma2,
        eta: config.eta_opt,
        lr: config.init_step,
    };
    let mut opt_spectrum = create_optimizer(&config.optimizer, spectrum.dim(), hyper)?;
    let mut opt_pupil = create_optimizer(&config.optimizer, pupil.field.dim(), hyper)?;
    let smooth_kernel = gaussian_kernel(config.pupil_smooth.size, config.pupil_smooth.sigma);

    let mut trace = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        let tg = total_gradient(&spectrum, &pupil, stack, &cfg, t)?;
        if !tg.report.total.is_finite() {
            return Err(Error::NonFinite {
                iteration: t,
                detail: format!(
                    "fidelity {} amp {} phase {}",
                    tg.report.fidelity, tg.report.amp_hessian, tg.report.phase_hessian
                ),
            });
        }
        trace.push(tg.report);

        let inc = opt_spectrum.step(&tg.spectrum);
        spectrum -= &inc;

        if let Some(pupil_grad) = tg.pupil {
            pupil.field = smooth_field(&pupil.field, &smooth_kernel);
            let inc = opt_pupil.step(&pupil_grad);
            pupil.field -= &inc;
            pupil.apply_support();
            pupil.clamp_gain(PUPIL_GAIN_LIMIT);
        }
    }

    Ok(Reconstruction {
        object: ObjectEstimate { spectrum },
        pupil,
        trace,
    })
}

