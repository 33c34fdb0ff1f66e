//! Stepsize-weighted iterate averaging.
//!
//! After absorbing `x_0..x_k` with stepsizes `alpha_0..alpha_k` the average
//! is `sum (1/alpha_t) x_t / sum (1/alpha_t)`. It is maintained through the
//! convex-combination recursion
//!
//! ```text
//! S_{k+1} = S_k + 1/alpha_k
//! x_hat   = x_hat + (1 / (alpha_k S_{k+1})) (x_k - x_hat)
//! ```
//!
//! so the average stays inside any convex set containing the points.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::{check_dims, check_finite, CompensatedSum, Vector};

#[derive(Debug, Clone, Default)]
pub struct AverageState {
    x_hat: Option<Vector>,
    weight: CompensatedSum,
    count: usize,
}

impl AverageState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current average, `None` before the first point.
    pub fn x_hat(&self) -> Option<&Vector> {
        self.x_hat.as_ref()
    }

    /// Cumulative weight `S = sum 1/alpha_t`.
    pub fn total_weight(&self) -> f64 {
        self.weight.value()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn absorb(&mut self, x: &[f64], alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", "must be positive and finite"));
        }
        check_finite(x)?;
        let w = 1.0 / alpha;
        self.weight.add(w);
        let after = self.weight.value();
        match self.x_hat.as_mut() {
            None => self.x_hat = Some(Vector::new(x.to_vec())?),
            Some(avg) => {
                check_dims(avg.dim(), x.len())?;
                let take = w / after;
                let next: Vec<f64> = avg.iter().zip(x).map(|(&a, &v)| a + take * (v - a)).collect();
                *avg = Vector::from_vec_unchecked(next);
            }
        }
        self.count += 1;
        Ok(())
    }
}

/// Convex weights `beta_t = (1/alpha_t) / sum_s (1/alpha_s)`.
pub fn weights(alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(Error::Empty);
    }
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::param("alpha", "must be positive and finite"));
    }
    let mut total = CompensatedSum::new();
    for a in alphas {
        total.add(1.0 / a);
    }
    let total = total.value();
    Ok(alphas.iter().map(|a| (1.0 / a) / total).collect())
}

/// Plain arithmetic mean of the absorbed points (the comparison baseline).
#[derive(Debug, Clone, Default)]
pub struct UniformAverage {
    sum: Vec<f64>,
    count: usize,
}

impl UniformAverage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, x: &[f64]) -> Result<()> {
        check_finite(x)?;
        if self.count == 0 {
            self.sum = x.to_vec();
        } else {
            check_dims(self.sum.len(), x.len())?;
            for (s, v) in self.sum.iter_mut().zip(x) {
                *s += v;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn mean(&self) -> Option<Vector> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        Some(Vector::from_vec_unchecked(self.sum.iter().map(|s| s / n).collect()))
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorb_examples() {
        let mut s = AverageState::new();
        s.absorb(&[3.0, -1.0], 1.0).unwrap();
        assert_eq!(s.x_hat().unwrap().as_slice(), &[3.0, -1.0]);

        let mut s = AverageState::new();
        s.absorb(&[0.0, 0.0], 1.0).unwrap();
        s.absorb(&[2.0, 2.0], 1.0).unwrap();
        assert_eq!(s.x_hat().unwrap().as_slice(), &[1.0, 1.0]);

        let mut s = AverageState::new();
        for (x, a) in [(0.0, 1.0), (7.0, 1.0), (14.0, 2.0 / 3.0)] {
            s.absorb(&[x], a).unwrap();
        }
        assert!((s.x_hat().unwrap()[0] - 8.0).abs() < 1e-14);
        assert!((s.total_weight() - 3.5).abs() < 1e-15);
        assert_eq!(s.count(), 3);
    }

    #[test]
    fn absorb_errors() {
        let mut s = AverageState::new();
        assert!(s.absorb(&[1.0], 0.0).is_err());
        assert!(s.absorb(&[1.0], -2.0).is_err());
        s.absorb(&[1.0], 1.0).unwrap();
        assert!(matches!(s.absorb(&[1.0, 2.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weights(&[1.0]).unwrap(), [1.0]);
        assert_eq!(weights(&[1.0; 4]).unwrap(), [0.25; 4]);
        let w = weights(&[1.0, 1.0, 2.0 / 3.0]).unwrap();
        for (got, want) in w.iter().zip([2.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(weights(&[]), Err(Error::Empty));
        assert!(weights(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn uniform_average_examples() {
        let mut u = UniformAverage::new();
        for _ in 0..5 {
            u.absorb(&[2.5]).unwrap();
        }
        assert_eq!(u.mean().unwrap().as_slice(), &[2.5]);
        let mut u = UniformAverage::new();
        for t in 0..=4 {
            u.absorb(&[t as f64]).unwrap();
        }
        assert_eq!(u.mean().unwrap().as_slice(), &[2.0]);
        assert!(UniformAverage::new().mean().is_none());
    }
}
