//! Small-kernel convolution with periodic or replicate boundaries.
//!
//! The operation is a correlation: the kernel is not flipped, so a
//! periodic delta image reproduces the point-reflected kernel.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::Plane;

/// Odd-sized real stencil anchored at its center.
#[derive(Clone, Debug)]
pub struct Kernel {
    data: Array2<f64>,
}

impl Kernel {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (h, w) = data.dim();
        if h % 2 == 0 || w % 2 == 0 {
            return Err(Error::Invariant(format!(
                "kernel size must be odd, got {h}x{w}"
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Invariant("kernel entries must be finite".into()));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn size(&self) -> (usize, usize) {
        self.data.dim()
    }
}

/// Boundary rule for samples falling outside the image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Replicate,
}

/// Correlate `img` with `kernel`. The kernel must fit inside the image.
pub fn convolve(img: &Plane, kernel: &Kernel, boundary: Boundary) -> Plane {
    let (h, w) = img.dim();
    let (kh, kw) = kernel.size();
    assert!(kh <= h && kw <= w, "kernel must fit in the image");
    let (ah, aw) = (kh as i64 / 2, kw as i64 / 2);
    let k = kernel.data();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let mut acc = 0.0;
        for i in 0..kh {
            for j in 0..kw {
                let rr = r as i64 + i as i64 - ah;
                let cc = c as i64 + j as i64 - aw;
                let (rr, cc) = match boundary {
                    Boundary::Periodic => (
                        rr.rem_euclid(h as i64) as usize,
                        cc.rem_euclid(w as i64) as usize,
                    ),
                    Boundary::Replicate => (
                        rr.clamp(0, h as i64 - 1) as usize,
                        cc.clamp(0, w as i64 - 1) as usize,
                    ),
                };
                acc += k[[i, j]] * img[[rr, cc]];
            }
        }
        acc
    })
}

/// Gaussian stencil sampled on an odd grid and normalized to sum 1.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Kernel {
    assert!(size % 2 == 1, "kernel size must be odd");
    assert!(sigma > 0.0, "sigma must be > 0");
    let half = size as i64 / 2;
    let mut data = Array2::zeros((size, size));
    let mut total = 0.0;
    for r in 0..size {
        for c in 0..size {
            let dy = (r as i64 - half) as f64;
            let dx = (c as i64 - half) as f64;
            let v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            data[[r, c]] = v;
            total += v;
        }
    }
    data.mapv_inplace(|v| v / total);
    Kernel::new(data).expect("gaussian kernel is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zero_sum_kernel() -> Kernel {
        let data = ndarray::arr2(&[[-1.0, 2.0, -1.0], [-2.0, 4.0, -2.0], [-1.0, 2.0, -1.0]]);
        Kernel::new(data).unwrap()
    }

    #[test]
    fn zero_sum_kernel_kills_constants() {
        let img = Array2::from_elem((9, 9), 5.5);
        for boundary in [Boundary::Periodic, Boundary::Replicate] {
            let out = convolve(&img, &zero_sum_kernel(), boundary);
            assert!(out.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn periodic_delta_reproduces_reflected_kernel() {
        let mut img = Array2::zeros((9, 9));
        img[[4, 4]] = 1.0;
        let k = zero_sum_kernel();
        let out = convolve(&img, &k, Boundary::Periodic);
        for i in 0..3 {
            for j in 0..3 {
                // correlation: response at 4 - (i - 1) equals k[i][j]
                assert_eq!(out[[4 + 1 - i, 4 + 1 - j]], k.data()[[i, j]]);
            }
        }
    }

    #[test]
    fn matches_direct_double_loop() {
        let mut rng = StdRng::seed_from_u64(31);
        let img = Array2::from_shape_fn((9, 9), |_| rng.gen_range(-1.0..1.0));
        let kdata = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-1.0..1.0));
        let kernel = Kernel::new(kdata.clone()).unwrap();
        let out = convolve(&img, &kernel, Boundary::Periodic);
        for r in 0..9usize {
            for c in 0..9usize {
                let mut acc = 0.0;
                for i in 0..3usize {
                    for j in 0..3usize {
                        let rr = (r + 9 + i - 1) % 9;
                        let cc = (c + 9 + j - 1) % 9;
                        acc += kdata[[i, j]] * img[[rr, cc]];
                    }
                }
                assert!((out[[r, c]] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_kernel_degenerate_size_one() {
        let k = gaussian_kernel(1, 2.0);
        assert_eq!(k.size(), (1, 1));
        assert_eq!(k.data()[[0, 0]], 1.0);
    }

    #[test]
    fn gaussian_kernel_normalized_and_center_dominant() {
        let k = gaussian_kernel(3, 1.0);
        let total: f64 = k.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let center = k.data()[[1, 1]];
        assert!(k.data().iter().all(|&v| v <= center));
        assert_eq!(k.data()[[0, 1]], k.data()[[2, 1]]);
        assert_eq!(k.data()[[1, 0]], k.data()[[1, 2]]);
    }

    #[test]
    fn gaussian_kernel_radius_value() {
        // Before normalization the sample at radius sigma is
        // exp(-1/2) times the center; normalization preserves ratios.
        let k = gaussian_kernel(31, 15.0);
        let center = k.data()[[15, 15]];
        let at_radius = k.data()[[15, 30]];
        assert!((at_radius / center - (-0.5f64).exp()).abs() < 1e-12);
    }
}
