//! The three noise branches applied to intensity frames.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::model::Plane;

/// Additive white Gaussian noise: `I + std * n`. The output may go
/// negative; downstream consumers clamp where they need to.
pub fn add_gaussian_noise<R: Rng>(img: &Plane, std: f64, rng: &mut R) -> Plane {
    assert!(std >= 0.0, "std must be >= 0");
    if std == 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, std).expect("valid normal");
    img.mapv(|v| v + normal.sample(rng))
}

/// Salt-and-pepper impulse noise: each pixel is independently replaced
/// with probability `density`, half the replacements with 0 and half
/// with `salt_value`.
pub fn add_snp_noise<R: Rng>(img: &Plane, density: f64, salt_value: f64, rng: &mut R) -> Plane {
    assert!((0.0..=1.0).contains(&density), "density must lie in [0, 1]");
    img.mapv(|v| {
        let u: f64 = rng.gen();
        if u < density / 2.0 {
            0.0
        } else if u < density {
            salt_value
        } else {
            v
        }
    })
}

/// Salt value used by the simulator: the stack's dynamic range, but at
/// least 1 on our O(1)-normalized intensities.
pub fn salt_value(images: &[Plane]) -> f64 {
    images
        .iter()
        .flat_map(|img| img.iter().copied())
        .fold(1.0f64, f64::max)
}

/// Photon-counting noise: `Poisson(photon_scale * I) / photon_scale`
/// per pixel. Errors on negative input.
pub fn add_poisson_noise<R: Rng>(img: &Plane, photon_scale: f64, rng: &mut R) -> Result<Plane> {
    assert!(photon_scale > 0.0, "photon scale must be > 0");
    let (h, w) = img.dim();
    let mut out = Array2::zeros((h, w));
    for (o, &v) in out.iter_mut().zip(img.iter()) {
        if v < 0.0 {
            return Err(Error::Invariant(
                "poisson noise requires nonnegative intensities".into(),
            ));
        }
        let lambda = photon_scale * v;
        *o = if lambda == 0.0 {
            0.0
        } else {
            Poisson::new(lambda)
                .map_err(|e| Error::Invariant(format!("poisson rate {lambda}: {e}")))?
                .sample(rng)
                / photon_scale
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::{RngStream, Stage};
    use ndarray::Array2;

    fn rng_for(seed: u64) -> rand_chacha::ChaCha8Rng {
        RngStream::new(seed).substream(0, Stage::Noise)
    }

    #[test]
    fn zero_std_is_identity() {
        let img = Array2::from_shape_fn((8, 8), |(r, c)| (r * 8 + c) as f64);
        let out = add_gaussian_noise(&img, 0.0, &mut rng_for(1));
        assert_eq!(img, out);
    }

    #[test]
    fn gaussian_sample_std_matches() {
        let img = Array2::zeros((1000, 1000));
        let a = 0.37;
        let out = add_gaussian_noise(&img, a, &mut rng_for(2));
        let n = out.len() as f64;
        let mean: f64 = out.iter().sum::<f64>() / n;
        let var: f64 = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!(std > a * 0.99 && std < a * 1.01, "sample std {std}");
    }

    #[test]
    fn gaussian_fixed_seed_is_bit_identical() {
        let img = Array2::from_elem((16, 16), 0.5);
        let a = add_gaussian_noise(&img, 0.1, &mut rng_for(3));
        let b = add_gaussian_noise(&img, 0.1, &mut rng_for(3));
        assert_eq!(a, b);
    }

    #[test]
    fn snp_zero_density_is_identity() {
        let img = Array2::from_elem((32, 32), 0.25);
        let out = add_snp_noise(&img, 0.0, 1.0, &mut rng_for(4));
        assert_eq!(img, out);
    }

    #[test]
    fn snp_full_density_corrupts_everything() {
        let img = Array2::from_elem((64, 64), 0.25);
        let out = add_snp_noise(&img, 1.0, 2.0, &mut rng_for(5));
        assert!(out.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn snp_corrupted_fraction_is_binomial() {
        let img = Array2::from_elem((1000, 1000), 0.25);
        let a = 0.1;
        let out = add_snp_noise(&img, a, 9.0, &mut rng_for(6));
        let corrupted = out.iter().filter(|&&v| v != 0.25).count() as f64;
        let n = out.len() as f64;
        let frac = corrupted / n;
        let margin = 3.0 * (a * (1.0 - a) / n).sqrt();
        assert!((frac - a).abs() < margin, "fraction {frac}");
    }

    #[test]
    fn poisson_preserves_mean_and_variance() {
        let value = 0.8;
        let s = 50.0;
        let img = Array2::from_elem((1000, 1000), value);
        let out = add_poisson_noise(&img, s, &mut rng_for(7)).unwrap();
        let n = out.len() as f64;
        let mean: f64 = out.iter().sum::<f64>() / n;
        let var: f64 = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((mean - value).abs() < 0.005 * value, "mean {mean}");
        let expect_var = value / s;
        assert!((var - expect_var).abs() < 0.02 * expect_var, "var {var}");
    }

    #[test]
    fn poisson_high_scale_is_nearly_noiseless() {
        let img = Array2::from_shape_fn((32, 32), |(r, c)| 0.5 + (r as f64 + c as f64) / 100.0);
        let out = add_poisson_noise(&img, 1e12, &mut rng_for(8)).unwrap();
        for (a, b) in img.iter().zip(out.iter()) {
            assert!((a - b).abs() / a < 1e-5);
        }
    }

    #[test]
    fn poisson_rejects_negative_pixels() {
        let mut img = Array2::from_elem((4, 4), 0.5);
        img[[1, 1]] = -0.1;
        assert!(add_poisson_noise(&img, 10.0, &mut rng_for(9)).is_err());
    }

    #[test]
    fn salt_value_is_at_least_one() {
        let low = vec![Array2::from_elem((4, 4), 0.2)];
        assert_eq!(salt_value(&low), 1.0);
        let high = vec![Array2::from_elem((4, 4), 3.5)];
        assert_eq!(salt_value(&high), 3.5);
    }
}
