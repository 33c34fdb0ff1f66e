//! Small test problems whose optimum and oracle constants are known
//! exactly. Noise is uniform on `[-h, h]` in every coordinate, so it is
//! bounded, unbiased, and has `E ||noise||^2 = n h^2 / 3`.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng;
use crate::solver::{OracleSample, StochasticOracle};
use crate::vector::{check_dims, dist_sq, Vector};

fn add_noise(g: &[f64], half_width: f64, rng: &mut dyn RngCore) -> Result<Vector> {
    let noisy: Vec<f64> = if half_width > 0.0 {
        g.iter().map(|&v| v + rng::uniform(rng, -half_width, half_width)).collect()
    } else {
        g.to_vec()
    };
    Vector::new(noisy)
}

fn check_half_width(h: f64) -> Result<()> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::param("noise", "half-width must be non-negative and finite"));
    }
    Ok(())
}

/// `f(x) = (mu / 2) ||x - center||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOracle {
    pub center: Vector,
    pub mu: f64,
    pub noise: f64,
}

impl QuadraticOracle {
    pub fn new(center: Vector, mu: f64, noise: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", "must be positive and finite"));
        }
        check_half_width(noise)?;
        Ok(QuadraticOracle { center, mu, noise })
    }

    /// `E ||g~ - g||^2`.
    pub fn noise_var(&self) -> f64 {
        self.center.dim() as f64 * self.noise * self.noise / 3.0
    }
}

impl StochasticOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
        check_dims(self.dim(), x.len())?;
        let g: Vec<f64> = x.iter().zip(self.center.iter()).map(|(xi, ci)| self.mu * (xi - ci)).collect();
        let g_tilde = add_noise(&g, self.noise, rng)?;
        Ok(OracleSample { g_tilde, g: Some(Vector::new(g)?) })
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        (x.len() == self.dim()).then(|| 0.5 * self.mu * dist_sq(x, &self.center))
    }
}

/// `f(x) = ||x - center||_1`, with subgradient `sign(x - center)` (0 on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct AbsDeviationOracle {
    pub center: Vector,
    pub noise: f64,
}

impl AbsDeviationOracle {
    pub fn new(center: Vector, noise: f64) -> Result<Self> {
        check_half_width(noise)?;
        Ok(AbsDeviationOracle { center, noise })
    }

    pub fn noise_var(&self) -> f64 {
        self.center.dim() as f64 * self.noise * self.noise / 3.0
    }

    /// `sup ||g||_2^2 = n`.
    pub fn subgradient_bound_sq(&self) -> f64 {
        self.center.dim() as f64
    }
}

impl StochasticOracle for AbsDeviationOracle {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
        check_dims(self.dim(), x.len())?;
        let g: Vec<f64> = x
            .iter()
            .zip(self.center.iter())
            .map(|(xi, ci)| match xi.partial_cmp(ci) {
                Some(core::cmp::Ordering::Greater) => 1.0,
                Some(core::cmp::Ordering::Less) => -1.0,
                _ => 0.0,
            })
            .collect();
        let g_tilde = add_noise(&g, self.noise, rng)?;
        Ok(OracleSample { g_tilde, g: Some(Vector::new(g)?) })
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        (x.len() == self.dim()).then(|| x.iter().zip(self.center.iter()).map(|(a, b)| libm::fabs(a - b)).sum())
    }
}
