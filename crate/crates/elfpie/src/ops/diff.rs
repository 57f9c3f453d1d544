//! First- and second-order periodic difference operators, their exact
//! adjoints, and the component normalization used by L1 composites.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::model::Plane;

/// Isotropic weight on the mixed second-difference component: the cross
/// term appears twice in the symmetric second-derivative matrix.
pub const HESSIAN_CROSS_WEIGHT: f64 = 2.0;

/// First-order difference field: x runs along columns, y along rows.
#[derive(Clone, Debug)]
pub struct VectorField2 {
    pub x: Plane,
    pub y: Plane,
}

/// Second-order difference field (xx, yy and the mixed xy component).
#[derive(Clone, Debug)]
pub struct HessianField3 {
    pub xx: Plane,
    pub yy: Plane,
    pub xy: Plane,
}

/// How the normalization treats the component vector at each pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    /// Divide each component by the weighted Euclidean magnitude.
    Isotropic,
    /// Smoothed sign of each component (sign(0) = 0).
    Anisotropic,
}

/// Forward differences with periodic boundary.
pub fn grad(img: &Plane) -> VectorField2 {
    let (h, w) = img.dim();
    let x = Array2::from_shape_fn((h, w), |(r, c)| img[[r, (c + 1) % w]] - img[[r, c]]);
    let y = Array2::from_shape_fn((h, w), |(r, c)| img[[(r + 1) % h, c]] - img[[r, c]]);
    VectorField2 { x, y }
}

/// Exact linear adjoint of [`grad`] under the standard inner product.
pub fn grad_adjoint(v: &VectorField2) -> Plane {
    let (h, w) = v.x.dim();
    assert_eq!(v.x.dim(), v.y.dim(), "components must share dimensions");
    Array2::from_shape_fn((h, w), |(r, c)| {
        v.x[[r, (c + w - 1) % w]] - v.x[[r, c]] + v.y[[(r + h - 1) % h, c]] - v.y[[r, c]]
    })
}

/// Second differences: centered 3-point stencils on the diagonal, a
/// forward-forward mixed difference on the cross term. Periodic
/// boundary.
pub fn hessian(img: &Plane) -> HessianField3 {
    let (h, w) = img.dim();
    let xx = Array2::from_shape_fn((h, w), |(r, c)| {
        img[[r, (c + 1) % w]] - 2.0 * img[[r, c]] + img[[r, (c + w - 1) % w]]
    });
    let yy = Array2::from_shape_fn((h, w), |(r, c)| {
        img[[(r + 1) % h, c]] - 2.0 * img[[r, c]] + img[[(r + h - 1) % h, c]]
    });
    let xy = Array2::from_shape_fn((h, w), |(r, c)| {
        img[[(r + 1) % h, (c + 1) % w]] - img[[(r + 1) % h, c]] - img[[r, (c + 1) % w]]
            + img[[r, c]]
    });
    HessianField3 { xx, yy, xy }
}

/// Exact linear adjoint of [`hessian`].
pub fn hessian_adjoint(hf: &HessianField3) -> Plane {
    let (h, w) = hf.xx.dim();
    assert!(
        hf.yy.dim() == (h, w) && hf.xy.dim() == (h, w),
        "components must share dimensions"
    );
    Array2::from_shape_fn((h, w), |(r, c)| {
        let xx = hf.xx[[r, (c + 1) % w]] - 2.0 * hf.xx[[r, c]] + hf.xx[[r, (c + w - 1) % w]];
        let yy = hf.yy[[(r + 1) % h, c]] - 2.0 * hf.yy[[r, c]] + hf.yy[[(r + h - 1) % h, c]];
        let xy = hf.xy[[(r + h - 1) % h, (c + w - 1) % w]] - hf.xy[[(r + h - 1) % h, c]]
            - hf.xy[[r, (c + w - 1) % w]]
            + hf.xy[[r, c]];
        xx + yy + xy
    })
}

fn smooth_sign(v: f64, epsilon: f64) -> f64 {
    v / (v * v + epsilon * epsilon).sqrt()
}

/// Normalize a first-order field: isotropic divides both components by
/// `sqrt(x^2 + y^2 + eps^2)`, anisotropic maps each to its smoothed
/// sign. `epsilon > 0` keeps flat pixels finite.
pub fn omega_grad(v: &VectorField2, mode: OmegaMode, epsilon: f64) -> VectorField2 {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    match mode {
        OmegaMode::Isotropic => {
            let (h, w) = v.x.dim();
            let mut x = Array2::zeros((h, w));
            let mut y = Array2::zeros((h, w));
            for r in 0..h {
                for c in 0..w {
                    let (a, b) = (v.x[[r, c]], v.y[[r, c]]);
                    let m = (a * a + b * b + epsilon * epsilon).sqrt();
                    x[[r, c]] = a / m;
                    y[[r, c]] = b / m;
                }
            }
            VectorField2 { x, y }
        }
        OmegaMode::Anisotropic => VectorField2 {
            x: v.x.mapv(|a| smooth_sign(a, epsilon)),
            y: v.y.mapv(|a| smooth_sign(a, epsilon)),
        },
    }
}

/// Normalize a second-order field. The isotropic magnitude weights the
/// cross term by [`HESSIAN_CROSS_WEIGHT`].
pub fn omega_hessian(hf: &HessianField3, mode: OmegaMode, epsilon: f64) -> HessianField3 {
    assert!(epsilon > 0.0, "epsilon must be > 0");
    match mode {
        OmegaMode::Isotropic => {
            let (h, w) = hf.xx.dim();
            let mut xx = Array2::zeros((h, w));
            let mut yy = Array2::zeros((h, w));
            let mut xy = Array2::zeros((h, w));
            for r in 0..h {
                for c in 0..w {
                    let (a, b, m) = (hf.xx[[r, c]], hf.yy[[r, c]], hf.xy[[r, c]]);
                    let mag =
                        (a * a + b * b + HESSIAN_CROSS_WEIGHT * m * m + epsilon * epsilon).sqrt();
                    xx[[r, c]] = a / mag;
                    yy[[r, c]] = b / mag;
                    xy[[r, c]] = m / mag;
                }
            }
            HessianField3 { xx, yy, xy }
        }
        OmegaMode::Anisotropic => HessianField3 {
            xx: hf.xx.mapv(|a| smooth_sign(a, epsilon)),
            yy: hf.yy.mapv(|a| smooth_sign(a, epsilon)),
            xy: hf.xy.mapv(|a| smooth_sign(a, epsilon)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_plane(h: usize, w: usize, rng: &mut StdRng) -> Plane {
        Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0..1.0))
    }

    fn dot(a: &Plane, b: &Plane) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn constant_plane_has_zero_gradient() {
        let g = grad(&Array2::from_elem((6, 6), 3.25));
        assert!(g.x.iter().all(|&v| v == 0.0));
        assert!(g.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_gradient_wraps() {
        let img = Array2::from_shape_fn((8, 8), |(_, c)| c as f64);
        let g = grad(&img);
        for ((_, c), &v) in g.x.indexed_iter() {
            if c == 7 {
                assert_eq!(v, -7.0);
            } else {
                assert_eq!(v, 1.0);
            }
        }
        assert!(g.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_adjoint_identity() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..100 {
            let img = random_plane(6, 6, &mut rng);
            let v = VectorField2 {
                x: random_plane(6, 6, &mut rng),
                y: random_plane(6, 6, &mut rng),
            };
            let g = grad(&img);
            let lhs = dot(&g.x, &v.x) + dot(&g.y, &v.y);
            let rhs = dot(&img, &grad_adjoint(&v));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_adjoint_identity() {
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..100 {
            let img = random_plane(6, 6, &mut rng);
            let q = HessianField3 {
                xx: random_plane(6, 6, &mut rng),
                yy: random_plane(6, 6, &mut rng),
                xy: random_plane(6, 6, &mut rng),
            };
            let hf = hessian(&img);
            let lhs = dot(&hf.xx, &q.xx) + dot(&hf.yy, &q.yy) + dot(&hf.xy, &q.xy);
            let rhs = dot(&img, &hessian_adjoint(&q));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_kills_affine_interior() {
        let img = Array2::from_shape_fn((8, 8), |(r, c)| 1.5 + 0.25 * r as f64 - 0.5 * c as f64);
        let hf = hessian(&img);
        for r in 1..7 {
            for c in 1..7 {
                assert!(hf.xx[[r, c]].abs() < 1e-12);
                assert!(hf.yy[[r, c]].abs() < 1e-12);
                assert!(hf.xy[[r, c]].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_of_quadratic_is_two() {
        let img = Array2::from_shape_fn((8, 8), |(_, c)| (c as f64) * (c as f64));
        let hf = hessian(&img);
        for r in 0..8 {
            for c in 1..7 {
                assert!((hf.xx[[r, c]] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn operators_are_linear() {
        let mut rng = StdRng::seed_from_u64(23);
        let (a, b) = (0.7, -1.3);
        let p = random_plane(5, 7, &mut rng);
        let q = random_plane(5, 7, &mut rng);
        let mix = p.mapv(|v| a * v) + q.mapv(|v| b * v);

        let g_mix = grad(&mix);
        let (gp, gq) = (grad(&p), grad(&q));
        for ((m, x), y) in g_mix.x.iter().zip(gp.x.iter()).zip(gq.x.iter()) {
            assert!((m - (a * x + b * y)).abs() < 1e-12);
        }
        let h_mix = hessian(&mix);
        let (hp, hq) = (hessian(&p), hessian(&q));
        for ((m, x), y) in h_mix.xy.iter().zip(hp.xy.iter()).zip(hq.xy.iter()) {
            assert!((m - (a * x + b * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_isotropic_three_four_five() {
        let v = VectorField2 {
            x: Array2::from_elem((1, 1), 3.0),
            y: Array2::from_elem((1, 1), 4.0),
        };
        let out = omega_grad(&v, OmegaMode::Isotropic, 1e-12);
        assert!((out.x[[0, 0]] - 0.6).abs() < 1e-9);
        assert!((out.y[[0, 0]] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn omega_anisotropic_is_sign_map() {
        let v = VectorField2 {
            x: Array2::from_elem((1, 1), -2.0),
            y: Array2::from_elem((1, 1), 0.0),
        };
        let out = omega_grad(&v, OmegaMode::Anisotropic, 1e-8);
        assert!((out.x[[0, 0]] + 1.0).abs() < 1e-12);
        assert_eq!(out.y[[0, 0]], 0.0);
    }

    #[test]
    fn omega_isotropic_magnitude_bounded() {
        let mut rng = StdRng::seed_from_u64(24);
        let v = VectorField2 {
            x: random_plane(16, 16, &mut rng),
            y: random_plane(16, 16, &mut rng),
        };
        let out = omega_grad(&v, OmegaMode::Isotropic, 1e-8);
        for (x, y) in out.x.iter().zip(out.y.iter()) {
            assert!((x * x + y * y).sqrt() <= 1.0 + 1e-12);
        }
        let hf = HessianField3 {
            xx: random_plane(16, 16, &mut rng),
            yy: random_plane(16, 16, &mut rng),
            xy: random_plane(16, 16, &mut rng),
        };
        let out = omega_hessian(&hf, OmegaMode::Isotropic, 1e-8);
        for ((a, b), m) in out.xx.iter().zip(out.yy.iter()).zip(out.xy.iter()) {
            assert!(a.abs() <= 1.0 + 1e-12);
            assert!(b.abs() <= 1.0 + 1e-12);
            assert!(m.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn omega_anisotropic_idempotent_up_to_sign() {
        let mut rng = StdRng::seed_from_u64(25);
        let v = VectorField2 {
            x: random_plane(8, 8, &mut rng),
            y: random_plane(8, 8, &mut rng),
        };
        let once = omega_grad(&v, OmegaMode::Anisotropic, 1e-8);
        let twice = omega_grad(&once, OmegaMode::Anisotropic, 1e-8);
        for (a, b) in once.x.iter().zip(twice.x.iter()) {
            assert_eq!(a.signum(), b.signum());
        }
        for (a, b) in once.y.iter().zip(twice.y.iter()) {
            assert_eq!(a.signum(), b.signum());
        }
    }
}
