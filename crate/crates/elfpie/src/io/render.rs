//! Grayscale rendering of planes, recovered fields and raw frames.

use std::path::Path;
use std::str::FromStr;

use image::{GrayImage, Luma};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Plane;
use crate::ops::dft2;

use super::dataset::{load_dataset, load_reconstruction};

/// What to render out of a directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderTarget {
    /// Recovered amplitude map (reconstruction directory).
    Amplitude,
    /// Recovered phase map (reconstruction directory).
    Phase,
    /// log10(|spectrum| + 1) of the recovered field (reconstruction
    /// directory).
    LogSpectrum,
    /// One raw frame of a dataset archive.
    RawFrame(usize),
}

impl FromStr for RenderTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(Self::Amplitude),
            "phase" => Ok(Self::Phase),
            "log_spectrum" => Ok(Self::LogSpectrum),
            other => {
                if let Some(n) = other.strip_prefix("frame=") {
                    let index = n.parse::<usize>().map_err(|_| {
                        Error::Invariant(format!("bad frame index in target '{other}'"))
                    })?;
                    Ok(Self::RawFrame(index))
                } else {
                    Err(Error::Invariant(format!(
                        "unknown render target '{other}' (amplitude | phase | log_spectrum | frame=N)"
                    )))
                }
            }
        }
    }
}

/// Min-max normalize a plane to 8 bits and write a grayscale PNG. A
/// constant plane renders as mid-gray (the documented degenerate rule).
pub fn render_plane(plane: &Plane, path: &Path) -> Result<()> {
    let (h, w) = plane.dim();
    let min = plane.iter().copied().fold(f64::INFINITY, f64::min);
    let max = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut img = GrayImage::new(w as u32, h as u32);
    for ((r, c), &v) in plane.indexed_iter() {
        let level = if span <= 0.0 {
            128u8
        } else {
            ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
        };
        img.put_pixel(c as u32, r as u32, Luma([level]));
    }
    img.save(path)?;
    Ok(())
}

/// Render a target from a dataset or reconstruction directory.
pub fn render_from_dir(dir: &Path, target: RenderTarget, out: &Path) -> Result<()> {
    let plane = match target {
        RenderTarget::Amplitude => load_reconstruction(dir)?.0,
        RenderTarget::Phase => load_reconstruction(dir)?.1,
        RenderTarget::LogSpectrum => {
            let (amp, phase, _) = load_reconstruction(dir)?;
            let object = ndarray::Zip::from(&amp)
                .and(&phase)
                .map_collect(|&a, &p| Complex64::from_polar(a, p));
            dft2(&object).mapv(|z| (z.norm() + 1.0).log10())
        }
        RenderTarget::RawFrame(n) => {
            let (stack, _) = load_dataset(dir)?;
            stack
                .images
                .get(n)
                .cloned()
                .ok_or_else(|| {
                    Error::Invariant(format!(
                        "frame {n} out of range (stack has {})",
                        stack.images.len()
                    ))
                })?
        }
    };
    render_plane(&plane, out)
}
