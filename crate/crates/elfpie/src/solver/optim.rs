//! Optimizers for complex parameter fields, registered by name.
//!
//! `adabelief-adaptive` is the workhorse: belief-tracked second moments
//! with a per-pixel learning rate derived from the history of the
//! parameter increments themselves, so no global step size needs
//! tuning. The others are textbook comparators.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexField, Plane};

/// Shared hyperparameters. `lr` is the explicit step size of the
/// comparators; for `adabelief-adaptive` it seeds the adaptive-rate
/// field at `lr^2`.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerHyper {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta: f64,
    pub lr: f64,
}

impl Default for OptimizerHyper {
    fn default() -> Self {
        Self {
            gamma1: 0.9,
            gamma2: 0.999,
            eta: 1e-8,
            lr: 1.0,
        }
    }
}

/// A stateful update rule: feed the gradient, get the increment to
/// subtract from the parameter.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;
    fn step(&mut self, grad: &ComplexField) -> ComplexField;
}

/// Registry names accepted by [`create_optimizer`].
pub const OPTIMIZER_NAMES: [&str; 4] = ["adabelief-adaptive", "adabelief", "nadam", "sgd"];

/// Instantiate an optimizer for a parameter field of the given shape.
pub fn create_optimizer(
    kind: &str,
    shape: (usize, usize),
    hyper: OptimizerHyper,
) -> Result<Box<dyn Optimizer>> {
    match kind {
        "adabelief-adaptive" => Ok(Box::new(AdaBeliefAdaptive::new(shape, hyper))),
        "adabelief" => Ok(Box::new(AdaBelief::new(shape, hyper))),
        "nadam" => Ok(Box::new(NAdam::new(shape, hyper))),
        "sgd" => Ok(Box::new(Sgd { hyper })),
        other => Err(Error::UnknownOptimizer(other.to_string())),
    }
}

fn zeros_c(shape: (usize, usize)) -> ComplexField {
    Array2::from_elem(shape, Complex64::new(0.0, 0.0))
}

/// Belief optimizer with the per-pixel adaptive learning rate.
///
/// State per pixel: first moment `mu`, belief `v` (squared deviation of
/// the gradient from its running mean) and the adaptive-rate field
/// `delta` tracking past increment magnitudes. The increment is
///
/// ```text
/// (sqrt(delta) + eta) / sqrt(v_hat + eta) * (gamma1 mu_hat + (1 - gamma1) g)
/// ```
///
/// with bias-corrected `mu_hat`, `v_hat`, after which `delta` decays
/// toward `|increment|^2`.
pub struct AdaBeliefAdaptive {
    hyper: OptimizerHyper,
    mu: ComplexField,
    v: Plane,
    delta: Plane,
    t: u32,
}

impl AdaBeliefAdaptive {
    pub fn new(shape: (usize, usize), hyper: OptimizerHyper) -> Self {
        Self {
            hyper,
            mu: zeros_c(shape),
            v: Array2::zeros(shape),
            delta: Array2::from_elem(shape, hyper.lr * hyper.lr),
            t: 0,
        }
    }

    /// (mu, v, delta) views for state inspection in tests.
    pub fn state(&self) -> (&ComplexField, &Plane, &Plane) {
        (&self.mu, &self.v, &self.delta)
    }
}

impl Optimizer for AdaBeliefAdaptive {
    fn name(&self) -> &'static str {
        "adabelief-adaptive"
    }

    fn step(&mut self, grad: &ComplexField) -> ComplexField {
        let h = self.hyper;
        self.t += 1;
        let c1 = 1.0 - h.gamma1.powi(self.t as i32);
        let c2 = 1.0 - h.gamma2.powi(self.t as i32);

        Zip::from(&mut self.mu).and(&mut self.v).and(grad).for_each(|mu, v, &g| {
            *mu = h.gamma1 * *mu + (1.0 - h.gamma1) * g;
            let dev = *mu - g;
            *v = h.gamma2 * *v + (1.0 - h.gamma2) * dev.norm_sqr();
        });

        let mut inc = zeros_c(grad.dim());
        Zip::from(&mut inc)
            .and(&self.mu)
            .and(&self.v)
            .and(&self.delta)
            .and(grad)
            .for_each(|out, &mu, &v, &delta, &g| {
                let mu_hat = mu / c1;
                let v_hat = v / c2;
                let scale = (delta.sqrt() + h.eta) / (v_hat + h.eta).sqrt();
                *out = scale * (h.gamma1 * mu_hat + (1.0 - h.gamma1) * g);
            });

        Zip::from(&mut self.delta).and(&inc).for_each(|d, &i| {
            *d = h.gamma1 * *d + (1.0 - h.gamma1) * i.norm_sqr();
        });

        inc
    }
}

/// Belief optimizer without the adaptive rate: a fixed step `lr`
/// multiplies the same bias-corrected blend.
pub struct AdaBelief {
    hyper: OptimizerHyper,
    mu: ComplexField,
    v: Plane,
    t: u32,
}

impl AdaBelief {
    pub fn new(shape: (usize, usize), hyper: OptimizerHyper) -> Self {
        Self {
            hyper,
            mu: zeros_c(shape),
            v: Array2::zeros(shape),
            t: 0,
        }
    }
}

impl Optimizer for AdaBelief {
    fn name(&self) -> &'static str {
        "adabelief"
    }

    fn step(&mut self, grad: &ComplexField) -> ComplexField {
        let h = self.hyper;
        self.t += 1;
        let c1 = 1.0 - h.gamma1.powi(self.t as i32);
        let c2 = 1.0 - h.gamma2.powi(self.t as i32);
        let mut inc = zeros_c(grad.dim());
        Zip::from(&mut inc)
            .and(&mut self.mu)
            .and(&mut self.v)
            .and(grad)
            .for_each(|out, mu, v, &g| {
                *mu = h.gamma1 * *mu + (1.0 - h.gamma1) * g;
                let dev = *mu - g;
                *v = h.gamma2 * *v + (1.0 - h.gamma2) * dev.norm_sqr();
                let mu_hat = *mu / c1;
                let v_hat = *v / c2;
                *out = h.lr / (v_hat + h.eta).sqrt() * (h.gamma1 * mu_hat + (1.0 - h.gamma1) * g);
            });
        inc
    }
}

/// Adam with Nesterov momentum.
pub struct NAdam {
    hyper: OptimizerHyper,
    mu: ComplexField,
    v: Plane,
    t: u32,
}

impl NAdam {
    pub fn new(shape: (usize, usize), hyper: OptimizerHyper) -> Self {
        Self {
            hyper,
            mu: zeros_c(shape),
            v: Array2::zeros(shape),
            t: 0,
        }
    }
}

impl Optimizer for NAdam {
    fn name(&self) -> &'static str {
        "nadam"
    }

    fn step(&mut self, grad: &ComplexField) -> ComplexField {
        let h = self.hyper;
        self.t += 1;
        let c1 = 1.0 - h.gamma1.powi(self.t as i32);
        let c2 = 1.0 - h.gamma2.powi(self.t as i32);
        let mut inc = zeros_c(grad.dim());
        Zip::from(&mut inc)
            .and(&mut self.mu)
            .and(&mut self.v)
            .and(grad)
            .for_each(|out, mu, v, &g| {
                *mu = h.gamma1 * *mu + (1.0 - h.gamma1) * g;
                *v = h.gamma2 * *v + (1.0 - h.gamma2) * g.norm_sqr();
                let mu_hat = *mu / c1;
                let v_hat = *v / c2;
                let blend = h.gamma1 * mu_hat + (1.0 - h.gamma1) * g / c1;
                *out = h.lr * blend / (v_hat.sqrt() + h.eta);
            });
        inc
    }
}

/// Plain gradient descent.
pub struct Sgd {
    hyper: OptimizerHyper,
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn step(&mut self, grad: &ComplexField) -> ComplexField {
        grad.mapv(|g| g * self.hyper.lr)
    }
}
