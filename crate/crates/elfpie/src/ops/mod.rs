//! Deterministic discrete operators: unitary centered 2-D DFT,
//! first-order differences and their adjoints, the second-difference
//! field, component normalization, and small-kernel convolution.

mod conv;
mod diff;
mod fft;

pub use conv::{convolve, gaussian_kernel, Boundary, Kernel};
pub use diff::{
    grad, grad_adjoint, hessian, hessian_adjoint, omega_grad, omega_hessian, HessianField3,
    OmegaMode, VectorField2, HESSIAN_CROSS_WEIGHT,
};
pub use fft::{dft2, fftshift, idft2, ifftshift};
