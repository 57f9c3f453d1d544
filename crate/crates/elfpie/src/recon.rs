//! Reconstruction method registry: every engine sits behind one trait
//! and is selected by name at runtime (CLI `--method`, benchmark
//! protocol files).

use crate::baseline::fpie_momentum_reconstruct;
use crate::error::{Error, Result};
use crate::model::{
    AcquisitionStack, FidelityMode, ObjectEstimate, PupilFunction, ReconstructionConfig,
    SystemGeometry,
};
use crate::solver;

/// A reconstruction strategy.
pub trait Reconstructor: Sync {
    /// Registry name.
    fn name(&self) -> &'static str;
    fn reconstruct(
        &self,
        stack: &AcquisitionStack,
        geometry: &SystemGeometry,
        config: &ReconstructionConfig,
    ) -> Result<(ObjectEstimate, PupilFunction)>;
}

/// Gradient-feature engine; optionally pins the fidelity mode instead
/// of taking it from the config.
struct GradientFeature {
    name: &'static str,
    mode: Option<FidelityMode>,
}

impl Reconstructor for GradientFeature {
    fn name(&self) -> &'static str {
        self.name
    }

    fn reconstruct(
        &self,
        stack: &AcquisitionStack,
        geometry: &SystemGeometry,
        config: &ReconstructionConfig,
    ) -> Result<(ObjectEstimate, PupilFunction)> {
        let mut config = config.clone();
        if let Some(mode) = self.mode {
            config.fidelity = mode;
        }
        let rec = solver::reconstruct(stack, geometry, &config)?;
        Ok((rec.object, rec.pupil))
    }
}

/// Sequential amplitude-replacement baseline.
struct MomentumFpie;

impl Reconstructor for MomentumFpie {
    fn name(&self) -> &'static str {
        "mfpie"
    }

    fn reconstruct(
        &self,
        stack: &AcquisitionStack,
        geometry: &SystemGeometry,
        config: &ReconstructionConfig,
    ) -> Result<(ObjectEstimate, PupilFunction)> {
        fpie_momentum_reconstruct(stack, geometry, config)
    }
}

static ELFPIE: GradientFeature = GradientFeature {
    name: "elfpie",
    mode: None,
};
static ELFPIE_AMPLITUDE: GradientFeature = GradientFeature {
    name: "elfpie-amplitude",
    mode: Some(FidelityMode::Amplitude),
};
static ELFPIE_INTENSITY: GradientFeature = GradientFeature {
    name: "elfpie-intensity",
    mode: Some(FidelityMode::Intensity),
};
static MFPIE: MomentumFpie = MomentumFpie;

/// All registered methods.
pub fn registry() -> [&'static dyn Reconstructor; 4] {
    [&ELFPIE, &ELFPIE_AMPLITUDE, &ELFPIE_INTENSITY, &MFPIE]
}

/// Look a method up by its registry name.
pub fn lookup(name: &str) -> Result<&'static dyn Reconstructor> {
    registry()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

/// Registered method names, in registry order.
pub fn method_names() -> Vec<&'static str> {
    registry().into_iter().map(|m| m.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_finds_every_registered_name() {
        for name in method_names() {
            assert_eq!(lookup(name).unwrap().name(), name);
        }
        assert!(matches!(lookup("nope"), Err(Error::UnknownMethod(_))));
    }
}
