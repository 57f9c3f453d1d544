//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building, simulating, storing or
/// reconstructing an acquisition.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain-type invariant does not hold. The message names the
    /// violated invariant.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A patch window falls outside the target grid.
    #[error("window out of bounds: rows {row_start}..{row_end}, cols {col_start}..{col_end} on {height}x{width} grid")]
    OutOfBounds {
        row_start: i64,
        row_end: i64,
        col_start: i64,
        col_end: i64,
        height: usize,
        width: usize,
    },

    /// An LED's spectral offset pushes its patch outside the synthetic
    /// aperture grid.
    #[error("LED exceeds synthetic aperture: led {led_index} offset ({0}, {1}) px", offset.0, offset.1)]
    LedExceedsAperture { led_index: usize, offset: (i64, i64) },

    /// Objective cutoff does not fit the camera's frequency band.
    #[error("pupil exceeds camera band: cutoff {cutoff:.2} px on {height}x{width} grid")]
    PupilExceedsBand { cutoff: f64, height: usize, width: usize },

    /// A scoring routine needs ground truth the stack does not carry.
    #[error("missing ground truth")]
    MissingGroundTruth,

    /// The corruption metric requires at least one dark-field frame.
    #[error("no dark-field images in plan")]
    NoDarkField,

    /// The reconstruction loop hit a non-finite loss.
    #[error("non-finite loss at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },

    /// A registry lookup failed.
    #[error("unknown method '{0}'")]
    UnknownMethod(String),

    /// Optimizer registry lookup failed.
    #[error("unknown optimizer '{0}'")]
    UnknownOptimizer(String),

    /// Stored dataset is malformed (bad version, truncated payload, ...).
    #[error("archive format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
