//! On-disk formats.
//!
//! A dataset archive is a directory holding `meta.json` plus
//! `stack.bin` (raw little-endian float64, row-major, image index
//! slowest) and optionally `truth_amp.bin` / `truth_phase.bin` at the
//! recovered-grid size. All outputs are deterministic functions of
//! their inputs: no timestamps inside data files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BenchmarkCell;
use crate::model::{
    AcquisitionStack, DegradationSpec, GroundTruth, IlluminationPlan, Plane, SystemGeometry,
};
use crate::solver::{LossReport, Reconstruction};

pub const FORMAT_VERSION: u32 = 1;

/// Loss-trace CSV column header.
pub const TRACE_CSV_HEADER: &str = "iter,fidelity,amp_hessian,phase_hessian,total";

/// Benchmark-table CSV column header.
pub const BENCH_CSV_HEADER: &str = "d_mm,c,noise,level,method,lsnr_amp,lsnr_phase,lsnr_mean";

/// `meta.json` contents of a dataset archive. Geometry fields are SI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub geometry: SystemGeometry,
    pub plan: IlluminationPlan,
    pub degradation: Option<DegradationSpec>,
    pub seed: u64,
    pub has_truth: bool,
}

fn write_f64_slice(path: &Path, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64_exact(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let file = File::open(path)?;
    let actual = file.metadata()?.len();
    let expected_bytes = expected as u64 * 8;
    if actual != expected_bytes {
        return Err(Error::Format(format!(
            "{}: expected {} bytes ({} float64 values), found {}",
            path.display(),
            expected_bytes,
            expected,
            actual
        )));
    }
    let mut r = BufReader::new(file);
    let mut out = Vec::with_capacity(expected);
    for _ in 0..expected {
        out.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(out)
}

/// Write one real plane as raw little-endian float64.
pub fn save_plane_bin(plane: &Plane, path: &Path) -> Result<()> {
    write_f64_slice(path, plane.iter().copied())
}

/// Read one real plane of the given size.
pub fn load_plane_bin(path: &Path, size: (usize, usize)) -> Result<Plane> {
    let values = read_f64_exact(path, size.0 * size.1)?;
    Array2::from_shape_vec(size, values)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Persist a stack (and its provenance) into a directory archive.
pub fn save_dataset(
    stack: &AcquisitionStack,
    degradation: Option<&DegradationSpec>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = DatasetMeta {
        format_version: FORMAT_VERSION,
        geometry: stack.geometry.clone(),
        plan: stack.plan.clone(),
        degradation: degradation.cloned(),
        seed: degradation.map(|d| d.seed).unwrap_or(0),
        has_truth: stack.ground_truth.is_some(),
    };
    let mut meta_file = BufWriter::new(File::create(dir.join("meta.json"))?);
    serde_json::to_writer_pretty(&mut meta_file, &meta)?;
    meta_file.flush()?;

    write_f64_slice(
        &dir.join("stack.bin"),
        stack.images.iter().flat_map(|img| img.iter().copied()),
    )?;
    if let Some(truth) = &stack.ground_truth {
        save_plane_bin(&truth.amplitude, &dir.join("truth_amp.bin"))?;
        save_plane_bin(&truth.phase, &dir.join("truth_phase.bin"))?;
    }
    Ok(())
}

/// Load a dataset archive and validate it against the type invariants.
pub fn load_dataset(dir: &Path) -> Result<(AcquisitionStack, Option<DegradationSpec>)> {
    let meta_file = File::open(dir.join("meta.json"))?;
    let meta: DatasetMeta = serde_json::from_reader(BufReader::new(meta_file))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {} (this build reads {})",
            meta.format_version, FORMAT_VERSION
        )));
    }
    let (bh, bw) = meta.geometry.lr_size;
    let n = meta.plan.n_groups();
    let raw = read_f64_exact(&dir.join("stack.bin"), n * bh * bw)?;
    let images: Vec<Plane> = raw
        .chunks(bh * bw)
        .map(|chunk| Array2::from_shape_vec((bh, bw), chunk.to_vec()).expect("sized above"))
        .collect();
    let ground_truth = if meta.has_truth {
        Some(GroundTruth {
            amplitude: load_plane_bin(&dir.join("truth_amp.bin"), meta.geometry.hr_size)?,
            phase: load_plane_bin(&dir.join("truth_phase.bin"), meta.geometry.hr_size)?,
        })
    } else {
        None
    };
    let stack = AcquisitionStack {
        images,
        plan: meta.plan.clone(),
        geometry: meta.geometry.clone(),
        ground_truth,
    };
    crate::model::validate(&meta.geometry, &meta.plan, &stack)?;
    Ok((stack, meta.degradation))
}

/// `rec_meta.json` of a reconstruction output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionMeta {
    pub format_version: u32,
    pub hr_size: (usize, usize),
    pub lr_size: (usize, usize),
    pub iterations: usize,
}

/// Persist recovered fields, the pupil (interleaved re/im float64) and
/// the loss trace CSV.
pub fn save_reconstruction(rec: &Reconstruction, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let object = rec.object.object();
    let hr = object.dim();
    let lr = rec.pupil.field.dim();

    save_plane_bin(&object.mapv(|z| z.norm()), &dir.join("amplitude.bin"))?;
    save_plane_bin(&object.mapv(|z| z.im.atan2(z.re)), &dir.join("phase.bin"))?;
    write_f64_slice(
        &dir.join("pupil.bin"),
        rec.pupil.field.iter().flat_map(|z| [z.re, z.im]),
    )?;

    let mut trace = BufWriter::new(File::create(dir.join("trace.csv"))?);
    writeln!(trace, "{TRACE_CSV_HEADER}")?;
    for report in &rec.trace {
        writeln!(
            trace,
            "{},{},{},{},{}",
            report.iteration, report.fidelity, report.amp_hessian, report.phase_hessian,
            report.total
        )?;
    }
    trace.flush()?;

    let meta = ReconstructionMeta {
        format_version: FORMAT_VERSION,
        hr_size: hr,
        lr_size: lr,
        iterations: rec.trace.len(),
    };
    let mut meta_file = BufWriter::new(File::create(dir.join("rec_meta.json"))?);
    serde_json::to_writer_pretty(&mut meta_file, &meta)?;
    meta_file.flush()?;
    Ok(())
}

/// Load the recovered amplitude/phase maps back.
pub fn load_reconstruction(dir: &Path) -> Result<(Plane, Plane, ReconstructionMeta)> {
    let meta_file = File::open(dir.join("rec_meta.json"))?;
    let meta: ReconstructionMeta = serde_json::from_reader(BufReader::new(meta_file))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {}",
            meta.format_version
        )));
    }
    let amp = load_plane_bin(&dir.join("amplitude.bin"), meta.hr_size)?;
    let phase = load_plane_bin(&dir.join("phase.bin"), meta.hr_size)?;
    Ok((amp, phase, meta))
}

/// Write the benchmark table with the fixed header.
pub fn write_bench_csv(cells: &[BenchmarkCell], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{BENCH_CSV_HEADER}")?;
    for cell in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            cell.d_mm,
            cell.c,
            cell.noise,
            cell.level,
            cell.method,
            cell.mean_lsnr_amp,
            cell.mean_lsnr_phase,
            cell.mean_lsnr
        )?;
    }
    Ok(())
}

/// Parse a trace CSV back into loss reports (used by tests and the
/// comparison tooling).
pub fn read_trace_csv(path: &Path) -> Result<Vec<LossReport>> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_CSV_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "bad trace header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Format(format!("bad trace row: {line}")));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad trace value {s}: {e}")))
            };
            Ok(LossReport {
                iteration: fields[0]
                    .parse::<usize>()
                    .map_err(|e| Error::Format(format!("bad iteration {}: {e}", fields[0])))?,
                fidelity: parse(fields[1])?,
                amp_hessian: parse(fields[2])?,
                phase_hessian: parse(fields[3])?,
                total: parse(fields[4])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DegradationSpec, NoiseKind};
    use crate::optics::sequential_plan;
    use crate::phantom;
    use crate::sim::simulate;
    use tempfile::tempdir;

    fn small_stack() -> (AcquisitionStack, DegradationSpec) {
        let mut geom = phantom::bench_geometry();
        geom.led_grid = (3, 3);
        geom.lr_size = (16, 16);
        geom.hr_size = (65, 65);
        let plan = sequential_plan(&geom).unwrap();
        let object = phantom::phantom_object(65, 65);
        let spec = DegradationSpec {
            noise: NoiseKind::Gaussian { std: 1e-4 },
            uneven_strength: 0.25,
            seed: 42,
            ..DegradationSpec::default()
        };
        (simulate(&object, &geom, &plan, &spec).unwrap(), spec)
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let (stack, spec) = small_stack();
        let dir = tempdir().unwrap();
        save_dataset(&stack, Some(&spec), dir.path()).unwrap();
        let (loaded, loaded_spec) = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded_spec.as_ref(), Some(&spec));
        assert_eq!(loaded.plan, stack.plan);
        assert_eq!(loaded.geometry, stack.geometry);
        for (a, b) in loaded.images.iter().zip(stack.images.iter()) {
            assert_eq!(a, b);
        }
        let (ta, tb) = (
            loaded.ground_truth.as_ref().unwrap(),
            stack.ground_truth.as_ref().unwrap(),
        );
        assert_eq!(ta.amplitude, tb.amplitude);
        assert_eq!(ta.phase, tb.phase);
    }

    #[test]
    fn truncated_stack_names_byte_counts() {
        let (stack, spec) = small_stack();
        let dir = tempdir().unwrap();
        save_dataset(&stack, Some(&spec), dir.path()).unwrap();
        let path = dir.path().join("stack.bin");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected") && msg.contains("found"), "{msg}");
    }

    #[test]
    fn invalid_geometry_in_meta_is_rejected() {
        let (stack, spec) = small_stack();
        let dir = tempdir().unwrap();
        save_dataset(&stack, Some(&spec), dir.path()).unwrap();
        let meta_path = dir.path().join("meta.json");
        let text = std::fs::read_to_string(&meta_path).unwrap();
        let mut meta: DatasetMeta = serde_json::from_str(&text).unwrap();
        meta.geometry.wavelength = -1.0;
        std::fs::write(&meta_path, serde_json::to_string(&meta).unwrap()).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("wavelength"));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let (stack, spec) = small_stack();
        let dir = tempdir().unwrap();
        save_dataset(&stack, Some(&spec), dir.path()).unwrap();
        let meta_path = dir.path().join("meta.json");
        let text = std::fs::read_to_string(&meta_path).unwrap();
        std::fs::write(&meta_path, text.replace("\"format_version\": 1", "\"format_version\": 9"))
            .unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn trace_round_trip() {
        let reports = vec![
            LossReport {
                iteration: 0,
                fidelity: 1.25,
                amp_hessian: 0.5,
                phase_hessian: 0.125,
                total: 1.9375,
            },
            LossReport {
                iteration: 1,
                fidelity: 0.7351982305970105,
                amp_hessian: 0.25,
                phase_hessian: 0.1,
                total: 1.0851982305970105,
            },
        ];
        let dir = tempdir().unwrap();
        let rec = Reconstruction {
            object: crate::model::ObjectEstimate {
                spectrum: ndarray::Array2::from_elem(
                    (8, 8),
                    num_complex::Complex64::new(0.5, -0.25),
                ),
            },
            pupil: crate::model::PupilFunction::uniform((4, 4)),
            trace: reports.clone(),
        };
        save_reconstruction(&rec, dir.path()).unwrap();
        let loaded = read_trace_csv(&dir.path().join("trace.csv")).unwrap();
        assert_eq!(loaded, reports);
        let (amp, phase, meta) = load_reconstruction(dir.path()).unwrap();
        assert_eq!(meta.hr_size, (8, 8));
        assert_eq!(amp.dim(), (8, 8));
        assert_eq!(phase.dim(), (8, 8));
    }
}
