//! Stochastic utility benchmark.
//!
//! ```text
//! f(x) = E[ phi( sum_i (a_i + xi_i) x_i ) ] + (lambda / 2) ||x - z||^2,
//! phi(t) = max_j { c_j + d_j t },   xi ~ N(0, I)
//! ```
//!
//! over the capped box. Since `sum (a_i + xi_i) x_i ~ N(a.x, ||x||^2)`, the
//! expectation is a one-dimensional Gaussian integral of a piecewise-affine
//! function and is evaluated in closed form, interval by interval.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::mirror::MirrorMap;
use crate::normal;
use crate::rng;
use crate::solver::{OracleSample, StochasticOracle};
use crate::vector::{check_dims, dist_sq, dot, norm, norm_sq, Vector};

/// The line `t -> c + d t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub c: f64,
    pub d: f64,
}

impl AffinePiece {
    pub fn new(c: f64, d: f64) -> Self {
        AffinePiece { c, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.c + self.d * t
    }
}

/// Upper envelope of a set of lines: the non-dominated pieces sorted by
/// strictly increasing slope, and the points where the maximiser changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pieces: Vec<AffinePiece>,
    breakpoints: Vec<f64>,
}

fn crossing(l: &AffinePiece, r: &AffinePiece) -> f64 {
    (l.c - r.c) / (r.d - l.d)
}

impl Envelope {
    pub fn build(pieces: &[AffinePiece]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Empty);
        }
        if pieces.iter().any(|p| !(p.c.is_finite() && p.d.is_finite())) {
            return Err(Error::param("pieces", "intercepts and slopes must be finite"));
        }
        let mut sorted = pieces.to_vec();
        // Slope ascending; among equal slopes the highest line first.
        sorted.sort_by(|p, q| p.d.total_cmp(&q.d).then(q.c.total_cmp(&p.c)));
        sorted.dedup_by(|later, kept| later.d == kept.d);

        let mut hull: Vec<AffinePiece> = Vec::with_capacity(sorted.len());
        for line in sorted {
            while hull.len() >= 2 {
                let (l1, l2) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
                // l2 is useless if line overtakes l1 no later than l2 does.
                if (l1.c - line.c) * (l2.d - l1.d) <= (l1.c - l2.c) * (line.d - l1.d) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        let breakpoints = hull.windows(2).map(|w| crossing(&w[0], &w[1])).collect();
        Ok(Envelope { pieces: hull, breakpoints })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Index of the active piece; at a breakpoint the larger slope wins.
    fn active(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.pieces[self.active(t)].eval(t)
    }

    /// Slope of a maximising piece, i.e. a subgradient of `phi` at `t`.
    pub fn phi_slope(&self, t: f64) -> f64 {
        self.pieces[self.active(t)].d
    }

    /// `E[phi(s)]` and its partial derivatives in `mu` and `sigma`, for
    /// `s ~ N(mu, sigma^2)`.
    fn gaussian_moments(&self, mu: f64, sigma: f64) -> (f64, f64, f64) {
        if sigma == 0.0 {
            return (self.phi(mu), self.phi_slope(mu), 0.0);
        }
        let (mut value, mut d_mu, mut d_sigma) = (0.0, 0.0, 0.0);
        for (j, piece) in self.pieces.iter().enumerate() {
            let lo = if j == 0 { f64::NEG_INFINITY } else { (self.breakpoints[j - 1] - mu) / sigma };
            let hi = self.breakpoints.get(j).map_or(f64::INFINITY, |&b| (b - mu) / sigma);
            let prob = normal::interval_prob(lo, hi);
            let tilt = normal::pdf(lo) - normal::pdf(hi);
            value += piece.c * prob + piece.d * (mu * prob + sigma * tilt);
            d_mu += piece.d * prob;
            d_sigma += piece.d * tilt;
        }
        (value, d_mu, d_sigma)
    }

    /// `E[phi(s)]` for `s ~ N(mu, sigma^2)`; `sigma = 0` gives `phi(mu)`.
    pub fn expected_gaussian(&self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0) {
            return Err(Error::param("sigma", "must be non-negative"));
        }
        Ok(self.gaussian_moments(mu, sigma).0)
    }
}

/// The ten documented default pieces: slopes `j - 5.5` for `j = 1..=10`,
/// intercepts `c_1 = 0`, `c_{j+1} = c_j - j/10`. Consecutive pieces cross
/// at `t = j/10`, giving nine breakpoints in `[0, 1]`.
pub fn default_pieces() -> Vec<AffinePiece> {
    let mut c = 0.0;
    (1..=10)
        .map(|j| {
            let piece = AffinePiece::new(c, j as f64 - 5.5);
            c -= j as f64 / 10.0;
            piece
        })
        .collect()
}

/// Seed of the stream the default coefficients `a_i ~ U[0, 1]` are drawn from.
pub const DEFAULT_COEFF_SEED: u64 = 0x55_4d44_2013;
pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceLabel {
    Test1,
    Test2,
    Test3,
    Test4,
}

impl InstanceLabel {
    pub const ALL: [InstanceLabel; 4] =
        [InstanceLabel::Test1, InstanceLabel::Test2, InstanceLabel::Test3, InstanceLabel::Test4];

    pub fn budget(self) -> f64 {
        match self {
            InstanceLabel::Test1 | InstanceLabel::Test3 => 10.0,
            InstanceLabel::Test2 | InstanceLabel::Test4 => 100.0,
        }
    }

    /// Starting point: zero for tests 1 and 2; ten leading entries equal to
    /// 1 (test 3) or 10 (test 4), the rest zero.
    pub fn initial_point(self, n: usize) -> Vector {
        let lead = match self {
            InstanceLabel::Test1 | InstanceLabel::Test2 => 0.0,
            InstanceLabel::Test3 => 1.0,
            InstanceLabel::Test4 => 10.0,
        };
        let x: Vec<f64> = (0..n).map(|i| if i < 10 { lead } else { 0.0 }).collect();
        Vector::from_vec_unchecked(x)
    }

    pub fn name(self) -> &'static str {
        match self {
            InstanceLabel::Test1 => "test1",
            InstanceLabel::Test2 => "test2",
            InstanceLabel::Test3 => "test3",
            InstanceLabel::Test4 => "test4",
        }
    }
}

impl core::str::FromStr for InstanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceLabel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or(Error::param("instance", "expected test1, test2, test3 or test4"))
    }
}

/// Draws `n` coefficients uniformly from `[0, 1]`.
pub fn draw_coefficients(n: usize, seed: u64) -> Vector {
    let mut stream = rng::stream(seed);
    Vector::from_vec_unchecked((0..n).map(|_| rng::uniform_open(&mut stream)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityInstance {
    a: Vector,
    envelope: Envelope,
    raw_pieces: Vec<AffinePiece>,
    lambda: f64,
    z: Vector,
    set: FeasibleSet,
    x0: Vector,
    coeff_seed: Option<u64>,
}

/// Feasibility tolerance for objective and oracle evaluation.
pub const EVAL_TOL: f64 = 1e-8;

impl UtilityInstance {
    pub fn new(
        a: Vector,
        pieces: &[AffinePiece],
        lambda: f64,
        z: Vector,
        set: FeasibleSet,
        x0: Vector,
    ) -> Result<Self> {
        let n = set.dim();
        if !matches!(set, FeasibleSet::CappedBox { .. }) {
            return Err(Error::Unsupported("the utility model is posed on the capped box"));
        }
        check_dims(n, a.dim())?;
        check_dims(n, z.dim())?;
        check_dims(n, x0.dim())?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", "must be non-negative and finite"));
        }
        set.require_feasible(&x0, crate::FEASIBILITY_TOL)?;
        Ok(UtilityInstance {
            a,
            envelope: Envelope::build(pieces)?,
            raw_pieces: pieces.to_vec(),
            lambda,
            z,
            set,
            x0,
            coeff_seed: None,
        })
    }

    /// One of the four standard instances (n = 100, u = 10) with the default
    /// pieces, `z = (0.5, 0, ..., 0)` and coefficients from
    /// [`DEFAULT_COEFF_SEED`].
    pub fn standard(label: InstanceLabel, lambda: f64) -> Result<Self> {
        Self::custom(DEFAULT_DIM, DEFAULT_CAP, label.budget(), lambda, DEFAULT_COEFF_SEED, label.initial_point(DEFAULT_DIM))
    }

    /// Default pieces and `z`, with explicit dimensions and coefficient seed.
    pub fn custom(n: usize, u: f64, r: f64, lambda: f64, coeff_seed: u64, x0: Vector) -> Result<Self> {
        let set = FeasibleSet::capped_box(n, u, r)?;
        let mut z = alloc::vec![0.0; n];
        z[0] = 0.5;
        let mut inst = Self::new(
            draw_coefficients(n, coeff_seed),
            &default_pieces(),
            lambda,
            Vector::from_vec_unchecked(z),
            set,
            x0,
        )?;
        inst.coeff_seed = Some(coeff_seed);
        Ok(inst)
    }

    pub fn with_x0(mut self, x0: Vector) -> Result<Self> {
        check_dims(self.dim(), x0.dim())?;
        self.set.require_feasible(&x0, crate::FEASIBILITY_TOL)?;
        self.x0 = x0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn piece_count(&self) -> usize {
        self.raw_pieces.len()
    }

    pub fn a(&self) -> &Vector {
        &self.a
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn raw_pieces(&self) -> &[AffinePiece] {
        &self.raw_pieces
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn coeff_seed(&self) -> Option<u64> {
        self.coeff_seed
    }

    /// Strong-convexity modulus of `f` (the regulariser weight).
    pub fn mu_f(&self) -> f64 {
        self.lambda
    }

    /// The objective without a feasibility check (it is defined on all of R^n).
    fn objective(&self, x: &[f64]) -> f64 {
        let (e, _, _) = self.envelope.gaussian_moments(dot(&self.a, x), norm(x));
        e + 0.5 * self.lambda * dist_sq(x, &self.z)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dims(self.dim(), x.len())?;
        self.set.require_feasible(x, EVAL_TOL)
    }

    pub fn f_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.objective(x))
    }

    /// Exact (sub)gradient of `f`. Where `x = 0` the Gaussian term is not
    /// differentiable and `phi'(0) a` is returned.
    pub fn gradient(&self, x: &[f64]) -> Result<Vector> {
        self.check_point(x)?;
        let sigma = norm(x);
        let (_, d_mu, d_sigma) = self.envelope.gaussian_moments(dot(&self.a, x), sigma);
        let g: Vec<f64> = x
            .iter()
            .zip(self.a.iter())
            .zip(self.z.iter())
            .map(|((&xi, &ai), &zi)| {
                let spread = if sigma > 0.0 { d_sigma * xi / sigma } else { 0.0 };
                ai * d_mu + spread + self.lambda * (xi - zi)
            })
            .collect();
        Vector::new(g)
    }

    /// One-sample stochastic subgradient `phi'(t) (a + xi) + lambda (x - z)`
    /// with `t = (a + xi).x`; draws `n` normals from `rng`.
    pub fn stochastic_subgradient<R: RngCore + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<OracleSample> {
        self.check_point(x)?;
        let perturbed: Vec<f64> = self.a.iter().map(|&ai| ai + rng::standard_normal(rng)).collect();
        let slope = self.envelope.phi_slope(dot(&perturbed, x));
        let g_tilde: Vec<f64> = perturbed
            .iter()
            .zip(x)
            .zip(self.z.iter())
            .map(|((&p, &xi), &zi)| slope * p + self.lambda * (xi - zi))
            .collect();
        Ok(OracleSample { g_tilde: Vector::new(g_tilde)?, g: Some(self.gradient(x)?) })
    }

    /// Largest deterministic-subgradient norm and root-mean-square noise norm
    /// over `sample_count` random feasible points (one noise draw each).
    pub fn estimate_constants<R: RngCore + ?Sized>(&self, sample_count: usize, rng: &mut R) -> Result<(f64, f64)> {
        if sample_count < 1000 {
            return Err(Error::param("sample_count", "must be at least 1000"));
        }
        let mut c_est: f64 = 0.0;
        let mut noise_sq = 0.0;
        for _ in 0..sample_count {
            let x = self.set.sample_point(rng);
            let s = self.stochastic_subgradient(&x, rng)?;
            let g = s.g.expect("utility oracle returns the exact subgradient");
            c_est = c_est.max(norm(&g));
            noise_sq += dist_sq(&s.g_tilde, &g);
        }
        Ok((c_est, libm::sqrt(noise_sq / sample_count as f64)))
    }

    /// High-accuracy minimiser of the closed-form objective by accelerated
    /// projected gradient descent with central finite-difference gradients
    /// (h = 1e-6), a backtracked step and a restart whenever the objective
    /// increases. Stops once both the last move and the projected gradient
    /// `||x - P(x - grad f(x))||` are at most `tol`.
    pub fn reference_solution(&self, tol: f64) -> Result<(Vector, f64)> {
        self.reference_solution_with_cap(tol, REFERENCE_MAX_ITERS)
    }

    pub fn reference_solution_with_cap(&self, tol: f64, max_iters: usize) -> Result<(Vector, f64)> {
        if !(tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        const H: f64 = 1e-6;
        let n = self.dim();
        let fd_gradient = |x: &[f64]| -> Vec<f64> {
            let mut probe = x.to_vec();
            (0..n)
                .map(|i| {
                    probe[i] = x[i] + H;
                    let up = self.objective(&probe);
                    probe[i] = x[i] - H;
                    let down = self.objective(&probe);
                    probe[i] = x[i];
                    (up - down) / (2.0 * H)
                })
                .collect()
        };
        let projected_step = |x: &[f64], g: &[f64], step: f64| -> Vector {
            let moved: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - step * gi).collect();
            self.set.project(&moved).expect("dimension checked")
        };

        let mut x = self.set.project(&self.x0)?;
        let mut fx = self.objective(&x);
        let mut prev = x.clone();
        let mut momentum = 1.0_f64;
        let mut step = 1.0;
        let (mut last_move, mut pg_norm) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..max_iters {
            let next_momentum = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * momentum * momentum));
            let beta = (momentum - 1.0) / next_momentum;
            let y: Vec<f64> = x.iter().zip(prev.iter()).map(|(&xi, &pi)| xi + beta * (xi - pi)).collect();
            let fy = self.objective(&y);
            let g = fd_gradient(&y);
            // Sufficient-decrease test on the quadratic model at y; the
            // additive term absorbs rounding in f near the optimum.
            let slack = 4.0 * f64::EPSILON * (1.0 + libm::fabs(fy));
            let (cand, f_cand) = loop {
                let cand = projected_step(&y, &g, step);
                let f_cand = self.objective(&cand);
                let diff: Vec<f64> = cand.iter().zip(&y).map(|(c, v)| c - v).collect();
                let model = fy + dot(&g, &diff) + norm_sq(&diff) / (2.0 * step);
                if f_cand <= model + slack || step < 1e-12 {
                    break (cand, f_cand);
                }
                step *= 0.5;
            };
            if f_cand > fx && beta > 0.0 {
                // Restart from x without momentum.
                prev = x.clone();
                momentum = 1.0;
                continue;
            }
            last_move = libm::sqrt(dist_sq(&cand, &x));
            prev = core::mem::replace(&mut x, cand);
            fx = f_cand;
            momentum = next_momentum;
            if last_move <= tol {
                let g = fd_gradient(&x);
                pg_norm = libm::sqrt(dist_sq(&x, &projected_step(&x, &g, 1.0)));
                if pg_norm <= tol {
                    return Ok((x, fx));
                }
            }
            step *= 1.25;
        }
        Err(Error::NoConvergence { iterations: max_iters, last_step: last_move, projected_gradient: pg_norm })
    }
}

pub const REFERENCE_MAX_ITERS: usize = 100_000;

impl StochasticOracle for UtilityInstance {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
        self.stochastic_subgradient(x, rng)
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        self.f_value(x).ok()
    }

    fn sample_value(&self, x: &[f64], rng: &mut dyn RngCore) -> Option<f64> {
        if x.len() != self.dim() {
            return None;
        }
        let t: f64 = self.a.iter().zip(x).map(|(&ai, &xi)| (ai + rng::standard_normal(rng)) * xi).sum();
        Some(self.envelope.phi(t) + 0.5 * self.lambda * dist_sq(x, &self.z))
    }
}

/// The instance as a solver problem with the Euclidean map.
pub fn problem(instance: UtilityInstance) -> crate::solver::ProblemHandle<UtilityInstance> {
    let set = instance.set.clone();
    let x0 = instance.x0.clone();
    let mu_f = instance.mu_f();
    crate::solver::ProblemHandle {
        oracle: instance,
        set,
        map: MirrorMap::Euclidean,
        mu_f,
        f_star: None,
        x_star: None,
        x0,
    }
}
