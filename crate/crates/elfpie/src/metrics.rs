//! Reconstruction scoring (offset-invariant LSNR) and the paired
//! benchmark grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ComplexField, DegradationSpec, GroundTruth, NoiseKind, Plane, ReconstructionConfig,
    SystemGeometry, VignettingSpec,
};
use crate::optics::sequential_plan;
use crate::recon;
use crate::sim::simulate;

/// Scores cap out here: a numerically zero residual reads as 300 dB.
pub const LSNR_CAP_DB: f64 = 300.0;

/// Signal-to-noise ratio maximized over an additive constant:
/// `max_b 10 log10(|truth|^2 / |truth - (rec + b)|^2)`. The optimal
/// constant is the mean difference, so any constant offset of the
/// recovered map is forgiven.
pub fn lsnr(recovered: &Plane, truth: &Plane) -> f64 {
    assert_eq!(recovered.dim(), truth.dim(), "maps must be co-sized");
    let n = truth.len() as f64;
    let b: f64 = truth
        .iter()
        .zip(recovered.iter())
        .map(|(t, r)| t - r)
        .sum::<f64>()
        / n;
    let energy: f64 = truth.iter().map(|t| t * t).sum();
    let residual: f64 = truth
        .iter()
        .zip(recovered.iter())
        .map(|(t, r)| {
            let d = t - (r + b);
            d * d
        })
        .sum();
    if residual == 0.0 {
        return LSNR_CAP_DB;
    }
    (10.0 * (energy / residual).log10()).min(LSNR_CAP_DB)
}

/// Amplitude, phase and mean LSNR of a recovered object field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub lsnr_amp: f64,
    pub lsnr_phase: f64,
    pub mean: f64,
}

/// Score a recovered field against the ground truth. The recovered
/// field's global phase is removed (circular mean of the pointwise
/// phase difference) before the phase map is compared, since the
/// forward model fixes phase only up to a constant.
pub fn score_reconstruction(object: &ComplexField, truth: &GroundTruth) -> Result<Scores> {
    if object.dim() != truth.amplitude.dim() {
        return Err(Error::Invariant(format!(
            "recovered field {:?} does not match ground truth {:?}",
            object.dim(),
            truth.amplitude.dim()
        )));
    }
    let amplitude = object.mapv(|z| z.norm());
    let lsnr_amp = lsnr(&amplitude, &truth.amplitude);

    let mut rot = Complex64::new(0.0, 0.0);
    for (z, &p) in object.iter().zip(truth.phase.iter()) {
        if z.norm_sqr() > 0.0 {
            rot += (z / z.norm()) * Complex64::from_polar(1.0, -p);
        }
    }
    let align = if rot.norm() > 0.0 {
        Complex64::from_polar(1.0, -rot.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let phase = object.mapv(|z| (z * align).im.atan2((z * align).re));
    let lsnr_phase = lsnr(&phase, &truth.phase);

    Ok(Scores {
        lsnr_amp,
        lsnr_phase,
        mean: 0.5 * (lsnr_amp + lsnr_phase),
    })
}

/// One benchmark condition: LED shift (mm), illumination unevenness,
/// noise branch, optional vignetting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchCellSpec {
    pub d_mm: f64,
    pub c: f64,
    pub noise: NoiseKind,
    #[serde(default)]
    pub vignetting: Option<VignettingSpec>,
}

/// A benchmark run description, loadable from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchProtocol {
    pub geometry: SystemGeometry,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Reconstruction method registry names.
    pub methods: Vec<String>,
    #[serde(default)]
    pub config: ReconstructionConfig,
    pub cells: Vec<BenchCellSpec>,
}

fn default_repeats() -> usize {
    1
}

/// One row of the benchmark table: a (condition, method) pair averaged
/// over repeats. `mean_lsnr` is the mean of the amplitude and phase
/// columns.
#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkCell {
    pub d_mm: f64,
    pub c: f64,
    pub noise: String,
    pub level: f64,
    pub method: String,
    pub repeats: usize,
    pub mean_lsnr_amp: f64,
    pub mean_lsnr_phase: f64,
    pub mean_lsnr: f64,
    /// Repeats that errored; their scores are excluded from the means.
    pub failed: usize,
    pub error: Option<String>,
}

/// Seed for (cell, repeat): every method inside the pair consumes the
/// identical stack, so comparisons are paired.
pub fn cell_seed(base: u64, cell_index: usize, repeat: usize) -> u64 {
    base.wrapping_add(cell_index as u64 * 1_000_003)
        .wrapping_add(repeat as u64 * 7919)
}

/// Run the grid: for every cell and repeat, simulate a fresh stack and
/// run each method on it; average the scores per (cell, method). Cells
/// that fail are recorded, not fatal.
pub fn benchmark_grid(protocol: &BenchProtocol, object: &ComplexField) -> Result<Vec<BenchmarkCell>> {
    if protocol.repeats < 1 {
        return Err(Error::Invariant("repeats must be >= 1".into()));
    }
    let plan = sequential_plan(&protocol.geometry)?;
    for name in &protocol.methods {
        recon::lookup(name)?;
    }

    let jobs: Vec<(usize, usize)> = (0..protocol.cells.len())
        .flat_map(|c| (0..protocol.repeats).map(move |r| (c, r)))
        .collect();

    // (cell, method) -> per-repeat scores or error
    let results: Vec<(usize, Vec<std::result::Result<Scores, String>>)> = jobs
        .par_iter()
        .map(|&(cell_index, repeat)| {
            let cell = &protocol.cells[cell_index];
            let spec = DegradationSpec {
                noise: cell.noise,
                uneven_strength: cell.c,
                led_shift_radius: cell.d_mm * 1e-3,
                vignetting: cell.vignetting.unwrap_or_default(),
                seed: cell_seed(protocol.base_seed, cell_index, repeat),
                ..DegradationSpec::default()
            };
            let per_method = match simulate(object, &protocol.geometry, &plan, &spec) {
                Ok(stack) => {
                    let truth = stack.ground_truth.clone().expect("simulate records truth");
                    protocol
                        .methods
                        .iter()
                        .map(|name| {
                            recon::lookup(name)
                                .and_then(|method| {
                                    method.reconstruct(&stack, &protocol.geometry, &protocol.config)
                                })
                                .and_then(|(estimate, _)| {
                                    score_reconstruction(&estimate.object(), &truth)
                                })
                                .map_err(|e| e.to_string())
                        })
                        .collect()
                }
                Err(e) => vec![Err(e.to_string()); protocol.methods.len()],
            };
            (cell_index, per_method)
        })
        .collect();

    let mut table = Vec::new();
    for (cell_index, cell) in protocol.cells.iter().enumerate() {
        for (method_index, method) in protocol.methods.iter().enumerate() {
            let mut amp = 0.0;
            let mut phase = 0.0;
            let mut ok = 0usize;
            let mut failed = 0usize;
            let mut error = None;
            for (ci, per_method) in &results {
                if *ci != cell_index {
                    continue;
                }
                match &per_method[method_index] {
                    Ok(s) => {
                        amp += s.lsnr_amp;
                        phase += s.lsnr_phase;
                        ok += 1;
                    }
                    Err(e) => {
                        failed += 1;
                        error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            let denom = ok.max(1) as f64;
            let mean_amp = if ok > 0 { amp / denom } else { f64::NAN };
            let mean_phase = if ok > 0 { phase / denom } else { f64::NAN };
            table.push(BenchmarkCell {
                d_mm: cell.d_mm,
                c: cell.c,
                noise: cell.noise.label().to_string(),
                level: cell.noise.level(),
                method: method.clone(),
                repeats: protocol.repeats,
                mean_lsnr_amp: mean_amp,
                mean_lsnr_phase: mean_phase,
                mean_lsnr: 0.5 * (mean_amp + mean_phase),
                failed,
                error,
            });
        }
    }
    Ok(table)
}
