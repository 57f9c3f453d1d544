//! Fourier ptychographic microscopy (FPM) simulation and reconstruction.
//!
//! The crate covers the full desk-scale FPM loop:
//!
//! 1. **Forward model** — LED-array geometry mapped to spectral patch
//!    offsets, a disc pupil, and multiplexed intensity formation
//!    ([`optics`]).
//! 2. **Degradation** — Gaussian / salt-and-pepper / Poisson noise,
//!    uneven illumination, LED misalignment and vignetting, all driven by
//!    seeded counter-style RNG substreams so stacks are reproducible
//!    across thread counts ([`sim`]).
//! 3. **Reconstruction** — a gradient-feature L1 fidelity with Hessian
//!    regularization on amplitude and phase, closed-form Wirtinger
//!    gradients, and a belief-based optimizer with a per-pixel adaptive
//!    learning rate ([`solver`]); plus a classic sequential
//!    amplitude-replacement engine with momentum as a baseline
//!    ([`baseline`]).
//! 4. **Scoring** — offset-invariant LSNR, paired benchmark grids and a
//!    dark-field corruption metric ([`metrics`]).
//!
//! Reconstruction methods are registered by name behind the
//! [`recon::Reconstructor`] trait and selected at runtime; the same goes
//! for the optimizers in [`solver::optim`]. Dataset persistence and
//! rendering live in [`io`].

pub mod baseline;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod optics;
pub mod phantom;
pub mod recon;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use model::{ComplexField, Plane};
