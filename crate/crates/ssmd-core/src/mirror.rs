//! Distance-generating functions, Bregman distances and the prox step.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::vector::{check_dims, dist_sq, dot, Vector};
use crate::FEASIBILITY_TOL;

/// Distance-generating function `w`.
///
/// * `Euclidean`: `w(x) = ||x||^2 / 2`, so `D_w(x, z) = ||x - z||^2 / 2`.
/// * `NegativeEntropy`: `w(x) = sum x_i ln x_i` on the positive orthant.
///   On the simplex it is 1-strongly convex in l2 (its Hessian is
///   `diag(1/x_i)` with `x_i <= 1`), but `D_w <= ||x - z||^2 / 2` fails, so
///   the strongly convex solver refuses it. It is only paired with
///   [`FeasibleSet::Simplex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorMap {
    Euclidean,
    NegativeEntropy,
}

impl MirrorMap {
    /// Strong-convexity modulus of `w` with respect to the l2 norm.
    pub fn mu_w(self) -> f64 {
        1.0
    }

    /// Whether `D_w(x, z) <= ||x - z||_2^2 / 2` holds on the whole domain.
    pub fn satisfies_quadratic_upper_bound(self) -> bool {
        matches!(self, MirrorMap::Euclidean)
    }

    fn check_domain(self, x: &[f64]) -> Result<()> {
        if self == MirrorMap::NegativeEntropy {
            if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::NonPositive { index, value });
            }
        }
        Ok(())
    }

    pub fn w(self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        Ok(match self {
            MirrorMap::Euclidean => 0.5 * dot(x, x),
            MirrorMap::NegativeEntropy => x.iter().map(|&v| v * libm::log(v)).sum(),
        })
    }

    pub fn grad_w(self, x: &[f64]) -> Result<Vector> {
        self.check_domain(x)?;
        let g = match self {
            MirrorMap::Euclidean => x.to_vec(),
            MirrorMap::NegativeEntropy => x.iter().map(|&v| libm::log(v) + 1.0).collect(),
        };
        Vector::new(g)
    }
}

/// `D_w(x, z) = w(z) - w(x) - <grad w(x), z - x>`.
pub fn bregman(map: MirrorMap, x: &[f64], z: &[f64]) -> Result<f64> {
    check_dims(x.len(), z.len())?;
    map.check_domain(x)?;
    map.check_domain(z)?;
    Ok(match map {
        MirrorMap::Euclidean => 0.5 * dist_sq(x, z),
        // Same value as the definition, written to avoid cancellation.
        MirrorMap::NegativeEntropy => x
            .iter()
            .zip(z)
            .map(|(&xi, &zi)| zi * libm::log(zi / xi) - zi + xi)
            .sum(),
    })
}

/// One mirror-descent step:
/// `argmin_{z in X} alpha <g, z - x> + D_w(x, z)`.
pub fn prox_step(
    map: MirrorMap,
    set: &FeasibleSet,
    x: &[f64],
    g: &[f64],
    alpha: f64,
) -> Result<Vector> {
    let n = set.dim();
    check_dims(n, x.len())?;
    check_dims(n, g.len())?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be positive and finite"));
    }
    set.require_feasible(x, FEASIBILITY_TOL)?;
    match (map, set) {
        (MirrorMap::Euclidean, _) => {
            let shifted: Vec<f64> = x.iter().zip(g).map(|(&xi, &gi)| xi - alpha * gi).collect();
            set.project(&shifted)
        }
        (MirrorMap::NegativeEntropy, FeasibleSet::Simplex { .. }) => {
            map.check_domain(x)?;
            // x_i exp(-alpha g_i) normalised, in log space for stability.
            let logits: Vec<f64> = x
                .iter()
                .zip(g)
                .map(|(&xi, &gi)| libm::log(xi) - alpha * gi)
                .collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits.iter().map(|&l| libm::exp(l - top)).collect();
            let total: f64 = weights.iter().sum();
            Vector::new(weights.into_iter().map(|v| v / total).collect())
        }
        (MirrorMap::NegativeEntropy, _) => Err(Error::Unsupported(
            "the negative-entropy map is only paired with the probability simplex",
        )),
    }
}

/// True iff `D_w(x, z) <= ||x - z||^2 / 2 + 1e-12` on every sample pair.
pub fn check_quadratic_upper_bound(map: MirrorMap, samples: &[(Vector, Vector)]) -> bool {
    samples.iter().all(|(x, z)| match bregman(map, x, z) {
        Ok(d) => d <= 0.5 * dist_sq(x, z) + 1e-12,
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let e = MirrorMap::Euclidean;
        assert_eq!(bregman(e, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(bregman(e, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        let kl = bregman(MirrorMap::NegativeEntropy, &[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((kl - 0.368_064_207_168_497_1).abs() < 1e-12, "{kl}");
    }

    #[test]
    fn bregman_errors() {
        assert!(matches!(
            bregman(MirrorMap::Euclidean, &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            bregman(MirrorMap::NegativeEntropy, &[0.5, 0.0], &[0.5, 0.5]),
            Err(Error::NonPositive { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn prox_examples() {
        let set = FeasibleSet::capped_box(2, 10.0, 10.0).unwrap();
        let x = [1.0, 1.0];
        let p = prox_step(MirrorMap::Euclidean, &set, &x, &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 1.0]);
        let p = prox_step(MirrorMap::Euclidean, &set, &x, &[3.0, -2.0], 1e-12).unwrap();
        assert!(p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9));

        let simplex = FeasibleSet::simplex(2).unwrap();
        let p = prox_step(MirrorMap::NegativeEntropy, &simplex, &[0.5, 0.5], &[1.0, 0.0], LN_2)
            .unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn prox_errors() {
        let set = FeasibleSet::capped_box(2, 10.0, 10.0).unwrap();
        assert!(matches!(
            prox_step(MirrorMap::Euclidean, &set, &[11.0, 0.0], &[0.0, 0.0], 1.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            prox_step(MirrorMap::NegativeEntropy, &set, &[1.0, 1.0], &[0.0, 0.0], 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(prox_step(MirrorMap::Euclidean, &set, &[1.0, 1.0], &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn quadratic_upper_bound_examples() {
        assert!(check_quadratic_upper_bound(MirrorMap::NegativeEntropy, &[]));
        let pair = (v(&[0.01, 0.99]), v(&[0.99, 0.01]));
        assert!(!check_quadratic_upper_bound(MirrorMap::NegativeEntropy, &[pair.clone()]));
        assert!(check_quadratic_upper_bound(MirrorMap::Euclidean, &[pair]));
    }

    #[test]
    fn map_flags() {
        assert!(MirrorMap::Euclidean.satisfies_quadratic_upper_bound());
        assert!(!MirrorMap::NegativeEntropy.satisfies_quadratic_upper_bound());
        assert_eq!(MirrorMap::Euclidean.mu_w(), 1.0);
    }
}
