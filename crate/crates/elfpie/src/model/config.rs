//! Reconstruction configuration.

use serde::{Deserialize, Serialize};

use crate::ops::OmegaMode;

/// Pixel-wise scaling applied to intensities before the gradient
/// feature is extracted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// g(x) = sqrt(x): compare amplitudes.
    Amplitude,
    /// g(x) = x: compare intensities directly.
    Intensity,
    /// g(x) = x^gamma with gamma in (0, 1).
    Gamma(f64),
    /// g(x) = ln(1 + x).
    Log1p,
}

impl FidelityMode {
    pub fn label(&self) -> String {
        match self {
            FidelityMode::Amplitude => "amplitude".into(),
            FidelityMode::Intensity => "intensity".into(),
            FidelityMode::Gamma(g) => format!("gamma({g})"),
            FidelityMode::Log1p => "log1p".into(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let FidelityMode::Gamma(g) = self {
            if *g <= 0.0 {
                return Err(format!("gamma exponent must be > 0, got {g}"));
            }
        }
        Ok(())
    }
}

/// Smoothing kernel applied to the pupil before each pupil update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PupilSmooth {
    /// Odd kernel size in pixels.
    pub size: usize,
    /// Kernel sigma in pixels.
    pub sigma: f64,
}

impl Default for PupilSmooth {
    fn default() -> Self {
        Self { size: 3, sigma: 1.0 }
    }
}

/// All knobs of the reconstruction loop. `alpha`/`beta` set to `None`
/// are resolved automatically from the measured stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub fidelity: FidelityMode,
    pub omega: OmegaMode,
    /// Amplitude-Hessian penalty weight; `None` means automatic.
    pub alpha: Option<f64>,
    /// Phase-Hessian penalty weight; `None` means automatic.
    pub beta: Option<f64>,
    /// First-moment decay of the optimizer.
    pub gamma1: f64,
    /// Belief decay of the optimizer.
    pub gamma2: f64,
    /// Optimizer denominator guard.
    pub eta_opt: f64,
    /// Guard for modulus and phase denominators in the penalty
    /// gradients and for the scaling-function derivative.
    pub eta_phase: f64,
    /// Smoothing epsilon of the component normalization.
    pub epsilon_omega: f64,
    pub iterations: usize,
    pub learn_pupil: bool,
    pub pupil_smooth: PupilSmooth,
    /// Accumulate per-LED gradient contributions in a fixed order so
    /// runs are bit-identical across thread counts.
    pub deterministic_reduction: bool,
    /// Initial per-pixel step scale; the optimizer's adaptive-rate field
    /// starts at `init_step^2`.
    pub init_step: f64,
    /// Optimizer registry name; see `solver::optim::OPTIMIZER_NAMES`.
    pub optimizer: String,
    /// Legacy variant: with intensity fidelity, normalize the amplitude
    /// residual instead of the intensity residual when assembling the
    /// per-LED update fields.
    pub amplitude_residual_w: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            fidelity: FidelityMode::Intensity,
            omega: OmegaMode::Isotropic,
            alpha: None,
            beta: None,
            gamma1: 0.9,
            gamma2: 0.999,
            eta_opt: 1e-8,
            eta_phase: 1e-6,
            epsilon_omega: 1e-8,
            iterations: 100,
            learn_pupil: false,
            pupil_smooth: PupilSmooth::default(),
            deterministic_reduction: true,
            init_step: 1.0,
            optimizer: "adabelief-adaptive".into(),
            amplitude_residual_w: false,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.fidelity.validate()?;
        if !(0.0..1.0).contains(&self.gamma1) || !(0.0..1.0).contains(&self.gamma2) {
            return Err("gamma1 and gamma2 must lie in (0, 1)".into());
        }
        if self.eta_opt <= 0.0 || self.eta_phase <= 0.0 || self.epsilon_omega <= 0.0 {
            return Err("eta_opt, eta_phase and epsilon_omega must be > 0".into());
        }
        if let Some(a) = self.alpha {
            if a < 0.0 {
                return Err("alpha must be >= 0".into());
            }
        }
        if let Some(b) = self.beta {
            if b < 0.0 {
                return Err("beta must be >= 0".into());
            }
        }
        if self.pupil_smooth.size % 2 == 0 || self.pupil_smooth.sigma <= 0.0 {
            return Err("pupil smoothing needs an odd size and sigma > 0".into());
        }
        if self.init_step <= 0.0 {
            return Err("init_step must be > 0".into());
        }
        Ok(())
    }

    pub fn with_fidelity(mut self, mode: FidelityMode) -> Self {
        self.fidelity = mode;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }
}
