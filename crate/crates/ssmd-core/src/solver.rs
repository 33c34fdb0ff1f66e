//! SSMD iteration engines, run traces and the theoretical bound formulas.
//!
//! Every engine iterates
//!
//! ```text
//! x_{k+1} = argmin_{z in X} step_k <g~_k, z - x_k> + D_w(x_k, z)
//! ```
//!
//! and folds `x_k` into the running average with weight `1/alpha_k` before
//! stepping. The strongly convex engine uses `step_k = alpha_k / mu_f`; the
//! compact engine uses `step_k = alpha_k = a / sqrt(k + 1)`.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::averaging::{AverageState, UniformAverage};
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::mirror::{prox_step, MirrorMap};
use crate::rng;
use crate::stepsize::StepsizeSchedule;
use crate::vector::{dist_sq, Vector};
use crate::FEASIBILITY_TOL;

/// One oracle answer at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    /// Stochastic subgradient.
    pub g_tilde: Vector,
    /// Exact subgradient, when the problem can supply it.
    pub g: Option<Vector>,
}

/// Source of stochastic subgradients and (optionally) objective values.
pub trait StochasticOracle {
    fn dim(&self) -> usize;

    /// Draws one stochastic subgradient at `x`, consuming randomness from `rng`.
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample>;

    /// Deterministic objective value, if available in closed form.
    fn value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// One unbiased sample `F(x, xi)` of the objective.
    fn sample_value(&self, _x: &[f64], _rng: &mut dyn RngCore) -> Option<f64> {
        None
    }
}

impl<O: StochasticOracle + ?Sized> StochasticOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
        (**self).sample(x, rng)
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        (**self).value(x)
    }
    fn sample_value(&self, x: &[f64], rng: &mut dyn RngCore) -> Option<f64> {
        (**self).sample_value(x, rng)
    }
}

/// Everything a run needs to know about the problem.
#[derive(Debug, Clone)]
pub struct ProblemHandle<O> {
    pub oracle: O,
    pub set: FeasibleSet,
    pub map: MirrorMap,
    /// Strong-convexity modulus of `f`; 0 means merely convex.
    pub mu_f: f64,
    pub f_star: Option<f64>,
    pub x_star: Option<Vector>,
    pub x0: Vector,
}

impl<O: StochasticOracle> ProblemHandle<O> {
    pub fn new(oracle: O, set: FeasibleSet, map: MirrorMap, x0: Vector) -> Result<Self> {
        let n = set.dim();
        if oracle.dim() != n || x0.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if oracle.dim() != n { oracle.dim() } else { x0.dim() },
            });
        }
        set.require_feasible(&x0, FEASIBILITY_TOL)?;
        Ok(ProblemHandle { oracle, set, map, mu_f: 0.0, f_star: None, x_star: None, x0 })
    }

    pub fn with_mu_f(mut self, mu_f: f64) -> Result<Self> {
        if !(mu_f >= 0.0 && mu_f.is_finite()) {
            return Err(Error::param("mu_f", "must be non-negative and finite"));
        }
        self.mu_f = mu_f;
        Ok(self)
    }

    pub fn with_optimum(mut self, f_star: f64, x_star: Option<Vector>) -> Self {
        self.f_star = Some(f_star);
        self.x_star = x_star;
        self
    }
}

/// How trace objective columns are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// Closed-form value when the oracle has one, otherwise the sampled
    /// estimate with the default sample count.
    Exact,
    /// Average of `samples` draws of `F(x, xi)` from a stream re-seeded with
    /// `seed` at every evaluation.
    Sampled { samples: usize, seed: u64 },
}

pub const DEFAULT_EVAL_SAMPLES: usize = 10_000;
pub const DEFAULT_EVAL_SEED: u64 = 0x5eed_f00d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub evaluation: Evaluation,
    /// Runs with at most this many iterations are evaluated at every `k`;
    /// longer ones at geometrically spaced `k`.
    pub dense_up_to: usize,
    /// Keep every iterate in the trace.
    pub keep_iterates: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { evaluation: Evaluation::Exact, dense_up_to: 1000, keep_iterates: false }
    }
}

/// Per-iteration metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x_k)`.
    pub f_iter: f64,
    /// `f(x_hat_k)`.
    pub f_avg: f64,
    /// `min_{t <= k} f(x_t)` over the evaluated iterates.
    pub f_min: f64,
    /// `||x_k - x*||^2`, when `x*` is known.
    pub dist_iter_sq: Option<f64>,
    /// `||x_hat_k - x*||^2`, when `x*` is known.
    pub dist_avg_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub x_hat: Vector,
    pub seed: Option<u64>,
    /// Sample count behind the objective columns when they are estimated.
    pub eval_samples: Option<usize>,
    /// `x_0..=x_K` when requested.
    pub iterates: Option<Vec<Vector>>,
}

/// Indices at which a run of `iterations` steps is evaluated.
pub fn evaluation_points(iterations: usize, dense_up_to: usize) -> Vec<usize> {
    if iterations <= dense_up_to {
        return (0..=iterations).collect();
    }
    let mut points: Vec<usize> = (0..=100.min(iterations)).collect();
    let mut k = 100usize;
    while k < iterations {
        k = (libm::ceil(k as f64 * 1.05) as usize).min(iterations);
        points.push(k);
    }
    points
}

enum Averager {
    Weighted(AverageState),
    Uniform(UniformAverage),
}

impl Averager {
    fn absorb(&mut self, x: &[f64], alpha: f64) -> Result<()> {
        match self {
            Averager::Weighted(s) => s.absorb(x, alpha),
            Averager::Uniform(s) => s.absorb(x),
        }
    }

    fn current(&self) -> Vector {
        match self {
            Averager::Weighted(s) => s.x_hat().cloned().expect("average holds a point"),
            Averager::Uniform(s) => s.mean().expect("average holds a point"),
        }
    }
}

struct Evaluator<'a, O> {
    oracle: &'a O,
    mode: Evaluation,
}

impl<O: StochasticOracle> Evaluator<'_, O> {
    fn samples(&self) -> Option<usize> {
        match self.mode {
            Evaluation::Exact => None,
            Evaluation::Sampled { samples, .. } => Some(samples),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let (samples, seed) = match self.mode {
            Evaluation::Exact => match self.oracle.value(x) {
                Some(v) => return Ok(v),
                None => (DEFAULT_EVAL_SAMPLES, DEFAULT_EVAL_SEED),
            },
            Evaluation::Sampled { samples, seed } => (samples, seed),
        };
        let mut stream = rng::stream(seed);
        let mut total = 0.0;
        for _ in 0..samples.max(1) {
            total += self
                .oracle
                .sample_value(x, &mut stream)
                .ok_or(Error::Unsupported("oracle provides no objective evaluation"))?;
        }
        Ok(total / samples.max(1) as f64)
    }
}

fn run_engine<O: StochasticOracle, R: RngCore>(
    problem: &ProblemHandle<O>,
    iterations: usize,
    rng: &mut R,
    mut alpha: impl FnMut(usize) -> f64,
    step_scale: f64,
    mut averager: Averager,
    options: &TraceOptions,
) -> Result<RunTrace> {
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    let set = &problem.set;
    set.require_feasible(&problem.x0, FEASIBILITY_TOL)?;

    let evaluator = Evaluator {
        oracle: &problem.oracle,
        mode: if problem.oracle.value(&problem.x0).is_some() {
            options.evaluation
        } else {
            match options.evaluation {
                Evaluation::Exact => Evaluation::Sampled {
                    samples: DEFAULT_EVAL_SAMPLES,
                    seed: DEFAULT_EVAL_SEED,
                },
                other => other,
            }
        },
    };
    let points = evaluation_points(iterations, options.dense_up_to);
    let mut next_point = 0usize;

    let mut records = Vec::with_capacity(points.len());
    let mut iterates = options.keep_iterates.then(Vec::new);
    let mut f_min = f64::INFINITY;
    let mut x = problem.x0.clone();

    for k in 0..=iterations {
        let a = alpha(k);
        averager.absorb(&x, a)?;
        if let Some(list) = iterates.as_mut() {
            list.push(x.clone());
        }
        if points.get(next_point) == Some(&k) {
            next_point += 1;
            let x_hat = averager.current();
            let f_iter = evaluator.eval(&x)?;
            let f_avg = evaluator.eval(&x_hat)?;
            f_min = f_min.min(f_iter);
            records.push(TraceRecord {
                k,
                f_iter,
                f_avg,
                f_min,
                dist_iter_sq: problem.x_star.as_ref().map(|s| dist_sq(&x, s)),
                dist_avg_sq: problem.x_star.as_ref().map(|s| dist_sq(&x_hat, s)),
            });
        }
        if k == iterations {
            break;
        }
        let sample = problem.oracle.sample(&x, rng)?;
        x = prox_step(problem.map, set, &x, &sample.g_tilde, a * step_scale)?;
    }

    Ok(RunTrace {
        records,
        x_hat: averager.current(),
        seed: None,
        eval_samples: evaluator.samples(),
        iterates,
    })
}

/// SSMD for a strongly convex objective: prox step `alpha_k / mu_f`.
pub fn run_strongly_convex<O: StochasticOracle, R: RngCore>(
    problem: &ProblemHandle<O>,
    schedule: &StepsizeSchedule,
    iterations: usize,
    rng: &mut R,
    options: &TraceOptions,
) -> Result<RunTrace> {
    if !(problem.mu_f > 0.0) {
        return Err(Error::param("mu_f", "the strongly convex method needs mu_f > 0"));
    }
    if !schedule.kind().meets_step_condition() {
        return Err(Error::Unsupported(
            "the strongly convex method needs the explicit or recursive schedule",
        ));
    }
    if !problem.map.satisfies_quadratic_upper_bound() {
        return Err(Error::Unsupported(
            "the strongly convex method needs D_w(x, z) <= ||x - z||^2 / 2",
        ));
    }
    let mut schedule = schedule.clone();
    run_engine(
        problem,
        iterations,
        rng,
        |k| schedule.alpha(k),
        1.0 / problem.mu_f,
        Averager::Weighted(AverageState::new()),
        options,
    )
}

fn compact_checks<O>(problem: &ProblemHandle<O>, a: f64) -> Result<StepsizeSchedule> {
    if !problem.set.is_bounded() {
        return Err(Error::Unsupported("the compact-set method needs a bounded feasible set"));
    }
    StepsizeSchedule::inverse_sqrt(a)
}

/// SSMD on a compact set with `alpha_k = a / sqrt(k + 1)`.
pub fn run_compact<O: StochasticOracle, R: RngCore>(
    problem: &ProblemHandle<O>,
    a: f64,
    iterations: usize,
    rng: &mut R,
    options: &TraceOptions,
) -> Result<RunTrace> {
    let mut schedule = compact_checks(problem, a)?;
    run_engine(
        problem,
        iterations,
        rng,
        |k| schedule.alpha(k),
        1.0,
        Averager::Weighted(AverageState::new()),
        options,
    )
}

/// Same iterates as [`run_compact`], but the reported average is the plain
/// arithmetic mean.
pub fn run_baseline_uniform<O: StochasticOracle, R: RngCore>(
    problem: &ProblemHandle<O>,
    a: f64,
    iterations: usize,
    rng: &mut R,
    options: &TraceOptions,
) -> Result<RunTrace> {
    let mut schedule = compact_checks(problem, a)?;
    run_engine(
        problem,
        iterations,
        rng,
        |k| schedule.alpha(k),
        1.0,
        Averager::Uniform(UniformAverage::new()),
        options,
    )
}

/// How the second moment of the stochastic subgradient is bounded from
/// `||g|| <= C` and noise variance `nu^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseNorm {
    /// Euclidean norm: `C~^2 = C^2 + nu^2`.
    #[default]
    Euclidean,
    /// Any norm: `C~^2 = 2 (C^2 + nu^2)`.
    General,
}

pub fn c_tilde_sq(c_sq: f64, nu_sq: f64, norm: NoiseNorm) -> f64 {
    match norm {
        NoiseNorm::Euclidean => c_sq + nu_sq,
        NoiseNorm::General => 2.0 * (c_sq + nu_sq),
    }
}

/// Expected-error bounds for the strongly convex method after `k` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StronglyConvexBounds {
    /// `E f(x_hat_k) - f* <= 2 C~^2 / ((k + 1) mu_f mu_w)`.
    pub gap: f64,
    /// `E ||x_hat_k - x*||^2 <= 4 C~^2 / ((k + 1) mu_f^2 mu_w)`.
    pub avg_dist_sq: f64,
    /// `E ||x_{k+1} - x*||^2 <= 4 C~^2 / ((k + 1) mu_f^2 mu_w^2)`.
    pub iter_dist_sq: f64,
}

pub fn strongly_convex_bounds(k: usize, c_tilde_sq: f64, mu_f: f64, mu_w: f64) -> StronglyConvexBounds {
    let kp1 = k as f64 + 1.0;
    StronglyConvexBounds {
        gap: 2.0 * c_tilde_sq / (kp1 * mu_f * mu_w),
        avg_dist_sq: 4.0 * c_tilde_sq / (kp1 * mu_f * mu_f * mu_w),
        iter_dist_sq: 4.0 * c_tilde_sq / (kp1 * mu_f * mu_f * mu_w * mu_w),
    }
}

/// `E f(x_hat_k) - f* <= 3 / (2 sqrt(k + 1)) (d_w^2 / a + a (C^2 + nu^2) / mu_w)`
/// for the compact method.
pub fn compact_gap_bound(k: usize, a: f64, d_w_sq: f64, c_sq: f64, nu_sq: f64, mu_w: f64) -> f64 {
    1.5 / libm::sqrt(k as f64 + 1.0) * (d_w_sq / a + a * (c_sq + nu_sq) / mu_w)
}

/// Noiseless compact bound `3 / (2 sqrt(k + 1)) (d_w^2 / a + a C^2 / (2 mu_w))`.
pub fn noiseless_compact_gap_bound(k: usize, a: f64, d_w_sq: f64, c_sq: f64, mu_w: f64) -> f64 {
    1.5 / libm::sqrt(k as f64 + 1.0) * (d_w_sq / a + a * c_sq / (2.0 * mu_w))
}

/// Which compact bound the stepsize parameter is tuned against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalAConvention {
    /// Minimises [`compact_gap_bound`]: `a* = d_w / sqrt((C^2 + nu^2) / mu_w)`.
    Noisy,
    /// Minimises [`noiseless_compact_gap_bound`]: `a* = d_w sqrt(2 mu_w) / C`.
    Noiseless,
}

pub fn optimal_a(d_w: f64, c_sq: f64, nu_sq: f64, mu_w: f64, convention: OptimalAConvention) -> Result<f64> {
    if !(d_w > 0.0 && c_sq > 0.0 && mu_w > 0.0 && nu_sq >= 0.0) {
        return Err(Error::param("optimal_a", "parameters must be positive"));
    }
    match convention {
        OptimalAConvention::Noisy => Ok(d_w / libm::sqrt((c_sq + nu_sq) / mu_w)),
        OptimalAConvention::Noiseless => {
            if nu_sq > 0.0 {
                return Err(Error::param("nu_sq", "the noiseless convention requires nu^2 = 0"));
            }
            Ok(d_w * libm::sqrt(2.0 * mu_w) / libm::sqrt(c_sq))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strongly_convex_bound_examples() {
        let b = strongly_convex_bounds(0, 1.0, 1.0, 1.0);
        assert_eq!((b.gap, b.avg_dist_sq, b.iter_dist_sq), (2.0, 4.0, 4.0));
        let b = strongly_convex_bounds(17, 3.0, 2.0, 1.0);
        assert_eq!(b.avg_dist_sq, b.iter_dist_sq);
        let b = strongly_convex_bounds(99, 4900.0, 100.0, 1.0);
        assert!((b.gap - 0.98).abs() < 1e-15);
    }

    #[test]
    fn compact_bound_examples() {
        assert_eq!(compact_gap_bound(0, 1.0, 1.0, 1.0, 0.0, 1.0), 3.0);
        // At a* the bracket equals 2 d_w sqrt((C^2 + nu^2) / mu_w).
        let (d_w, c_sq, nu_sq, mu_w) = (3.0, 2.0, 0.5, 0.8);
        let a = optimal_a(d_w, c_sq, nu_sq, mu_w, OptimalAConvention::Noisy).unwrap();
        for k in [0usize, 10, 999] {
            let want = 3.0 * d_w * libm::sqrt((c_sq + nu_sq) / mu_w) / libm::sqrt(k as f64 + 1.0);
            let got = compact_gap_bound(k, a, d_w * d_w, c_sq, nu_sq, mu_w);
            assert!((got - want).abs() < 1e-12 * got, "k = {k}");
            assert!(got <= compact_gap_bound(k, a * 1.05, d_w * d_w, c_sq, nu_sq, mu_w));
            assert!(got <= compact_gap_bound(k, a * 0.95, d_w * d_w, c_sq, nu_sq, mu_w));
        }
    }

    #[test]
    fn optimal_a_examples() {
        use OptimalAConvention::*;
        assert_eq!(optimal_a(1.0, 1.0, 0.0, 1.0, Noisy).unwrap(), 1.0);
        assert_eq!(optimal_a(10.0, 3.0, 1.0, 1.0, Noisy).unwrap(), 5.0);
        assert!((optimal_a(1.0, 1.0, 0.0, 1.0, Noiseless).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(optimal_a(1.0, 1.0, 0.1, 1.0, Noiseless).is_err());
        // a* minimises the noiseless bound.
        let a = optimal_a(2.0, 3.0, 0.0, 1.0, Noiseless).unwrap();
        let at = |a| noiseless_compact_gap_bound(5, a, 4.0, 3.0, 1.0);
        assert!(at(a) <= at(a * 1.01) && at(a) <= at(a * 0.99));
    }

    #[test]
    fn noise_conventions() {
        assert_eq!(c_tilde_sq(3.0, 1.0, NoiseNorm::Euclidean), 4.0);
        assert_eq!(c_tilde_sq(3.0, 1.0, NoiseNorm::General), 8.0);
    }

    #[test]
    fn evaluation_points_layout() {
        assert_eq!(evaluation_points(3, 1000), [0, 1, 2, 3]);
        let p = evaluation_points(100_000, 1000);
        assert_eq!(*p.last().unwrap(), 100_000);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.len() < 300);
    }
}
