//! Feasible sets with exact Euclidean projection.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::mirror::MirrorMap;
use crate::rng;
use crate::vector::{check_dims, Vector};

/// A closed convex feasible set.
///
/// Build through [`FeasibleSet::capped_box`] / [`FeasibleSet::simplex`],
/// which validate the parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x : 0 <= x_i <= u, sum x_i <= r}`.
    CappedBox { n: usize, u: f64, r: f64 },
    /// `{x : x_i >= 0, sum x_i = 1}`.
    Simplex { n: usize },
}

impl FeasibleSet {
    pub fn capped_box(n: usize, u: f64, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::param("u", "must be positive and finite"));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::param("R", "must be positive and finite"));
        }
        Ok(FeasibleSet::CappedBox { n, u, r })
    }

    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        Ok(FeasibleSet::Simplex { n })
    }

    pub fn dim(&self) -> usize {
        match *self {
            FeasibleSet::CappedBox { n, .. } | FeasibleSet::Simplex { n } => n,
        }
    }

    pub fn is_bounded(&self) -> bool {
        true
    }

    /// Largest constraint violation of `x` (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        check_dims(self.dim(), x.len())?;
        let lower = x.iter().fold(0.0f64, |m, &v| m.max(-v));
        let sum: f64 = x.iter().sum();
        Ok(match *self {
            FeasibleSet::CappedBox { u, r, .. } => {
                let upper = x.iter().fold(0.0f64, |m, &v| m.max(v - u));
                lower.max(upper).max(sum - r)
            }
            FeasibleSet::Simplex { .. } => lower.max((sum - 1.0).abs()),
        })
    }

    /// Membership with every inequality relaxed by `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|v| v.is_finite()) && matches!(self.violation(x), Ok(v) if v <= tol)
    }

    pub(crate) fn require_feasible(&self, x: &[f64], tol: f64) -> Result<()> {
        let violation = self.violation(x)?;
        if violation > tol || violation.is_nan() {
            return Err(Error::Infeasible { violation, tol });
        }
        Ok(())
    }

    /// Euclidean projection `argmin_{v in X} ||v - x||_2`.
    pub fn project(&self, x: &[f64]) -> Result<Vector> {
        check_dims(self.dim(), x.len())?;
        crate::vector::check_finite(x)?;
        let out = match *self {
            FeasibleSet::CappedBox { u, r, .. } => {
                let clamped: Vec<f64> = x.iter().map(|&v| v.clamp(0.0, u)).collect();
                if clamped.iter().sum::<f64>() <= r {
                    clamped
                } else {
                    let tau = solve_threshold(x, u, r, 0.0);
                    let mut p: Vec<f64> = x.iter().map(|&v| (v - tau).clamp(0.0, u)).collect();
                    trim_to_budget(&mut p, r);
                    p
                }
            }
            FeasibleSet::Simplex { .. } => {
                let lowest = x.iter().copied().fold(f64::INFINITY, f64::min);
                let tau = solve_threshold(x, f64::INFINITY, 1.0, lowest - 1.0);
                x.iter().map(|&v| (v - tau).max(0.0)).collect()
            }
        };
        Ok(Vector::from_vec_unchecked(out))
    }

    /// `max_{x,y in X} D_w(x, y)` for the Euclidean map.
    ///
    /// For the capped box the maximum of `||x - y||^2` is attained by two
    /// greedy vectors (`q = floor(R/u)` coordinates at `u`, one at the
    /// remainder `R - q u`) with disjoint supports, which needs
    /// `n >= 2 (q + 1)`. Smaller `n` is rejected.
    pub fn bregman_diameter_sq(&self, map: MirrorMap) -> Result<f64> {
        if map != MirrorMap::Euclidean {
            return Err(Error::Unsupported(
                "Bregman diameter is only available for the Euclidean map",
            ));
        }
        match *self {
            FeasibleSet::CappedBox { n, u, r } => {
                let q = libm::floor(r / u);
                let rem = r - q * u;
                if (n as f64) < 2.0 * (q + 1.0) {
                    return Err(Error::Unsupported(
                        "capped box too narrow for disjoint greedy vertices (need n >= 2(floor(R/u)+1))",
                    ));
                }
                Ok(q * u * u + rem * rem)
            }
            // Two distinct vertices are sqrt(2) apart.
            FeasibleSet::Simplex { n } => Ok(if n >= 2 { 1.0 } else { 0.0 }),
        }
    }

    /// A feasible point drawn componentwise uniformly over the bounding box
    /// and then projected.
    pub fn sample_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vector {
        let (n, hi) = match *self {
            FeasibleSet::CappedBox { n, u, .. } => (n, u),
            FeasibleSet::Simplex { n } => (n, 1.0),
        };
        let raw: Vec<f64> = (0..n).map(|_| rng::uniform(rng, 0.0, hi)).collect();
        self.project(&raw).expect("sampled point has matching dimension")
    }
}

fn threshold_sum(x: &[f64], cap: f64, tau: f64) -> f64 {
    x.iter().map(|&v| (v - tau).clamp(0.0, cap)).sum()
}

/// Finds `tau >= floor` with `sum_i clamp(x_i - tau, 0, cap) = target`.
///
/// The left side is continuous, non-increasing and piecewise linear with
/// breakpoints at `x_i` and `x_i - cap`. The caller guarantees that the sum
/// at `floor` is at least `target` and `target > 0`. A binary search over the
/// sorted breakpoints brackets the root and the linear piece is solved
/// exactly.
/// Removes the rounding excess of `sum(p)` over `r` from the largest entry,
/// so that the output passes the feasibility fast path of [`FeasibleSet::project`].
fn trim_to_budget(p: &mut [f64], r: f64) {
    loop {
        let excess = p.iter().sum::<f64>() - r;
        if excess <= 0.0 {
            return;
        }
        let (i, &largest) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let reduced = (largest - excess).max(0.0);
        p[i] = if reduced < largest { reduced } else { f64::from_bits(largest.to_bits() - 1) };
    }
}

fn solve_threshold(x: &[f64], cap: f64, target: f64, floor: f64) -> f64 {
    let mut breaks: Vec<f64> = x
        .iter()
        .flat_map(|&v| [v, v - cap])
        .filter(|b| b.is_finite() && *b > floor)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // Largest breakpoint whose sum is still >= target; the sum at the last
    // breakpoint (max x_i) is zero, so the bracket's upper end exists.
    let idx = breaks.partition_point(|&b| threshold_sum(x, cap, b) >= target);
    let lo = if idx == 0 { floor } else { breaks[idx - 1] };
    let hi = breaks[idx];

    let mid = 0.5 * (lo + hi);
    let (mut active, mut active_sum, mut capped) = (0usize, 0.0, 0usize);
    for &v in x {
        if v - cap >= hi {
            capped += 1;
        } else if v > mid && v - cap < mid {
            active += 1;
            active_sum += v;
        }
    }
    if active == 0 {
        return hi;
    }
    let capped_mass = if capped == 0 { 0.0 } else { cap * capped as f64 };
    let tau = (active_sum + capped_mass - target) / active as f64;
    tau.clamp(lo, hi)
}
