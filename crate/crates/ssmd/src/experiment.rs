//! Monte-Carlo orchestration: many independent seeded runs of one
//! configuration, reduced to per-iteration means and standard errors.

use rayon::prelude::*;
use ssmd_core::rng;
use ssmd_core::solver::{
    c_tilde_sq, compact_gap_bound, optimal_a, run_baseline_uniform, run_compact, run_strongly_convex,
    strongly_convex_bounds, Evaluation, OptimalAConvention, TraceOptions, TraceRecord,
};
use ssmd_core::utility::{self, default_pieces, draw_coefficients, UtilityInstance};
use ssmd_core::{FeasibleSet, MirrorMap, StepsizeSchedule, Vector};

use crate::config::{Averaging, ExperimentConfig, InstanceSpec, Regime, StartPoint, StepRule, StepScale};
use crate::error::{HarnessError, Result};

/// Constants behind the bound column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub mu_f: f64,
    pub mu_w: f64,
    /// Bregman diameter `d_w^2` of the feasible set, when available.
    pub d_w_sq: Option<f64>,
    /// Estimated `sup ||g(x)||`.
    pub c: f64,
    /// Estimated root-mean-square noise norm.
    pub nu: f64,
    pub c_tilde_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub config_text: String,
    pub config_hash: String,
    pub f_ref: Option<f64>,
    pub constants: Constants,
    /// Stepsize parameter of a compact-regime summary.
    pub a: Option<f64>,
    /// Sample count behind sampled objective columns.
    pub eval_samples: Option<usize>,
}

/// Per-iteration statistics over all runs. Every array has one entry per
/// evaluated `k` (all of `0..=K` when `K <= 1000`).
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub k: Vec<usize>,
    pub mean_f_avg: Vec<f64>,
    pub stderr_f_avg: Vec<f64>,
    pub mean_f_iter: Vec<f64>,
    pub mean_f_min: Vec<f64>,
    /// Theoretical bound on `E f(x_hat_k) - f*`.
    pub bound: Vec<f64>,
    pub metadata: Metadata,
}

impl McSummary {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_f_avg.last().expect("summary has rows")
    }
}

/// The utility instance described by `config`, with its configured start point.
pub fn build_instance(config: &ExperimentConfig) -> Result<UtilityInstance> {
    let (n, u, r, table_x0) = match &config.instance {
        InstanceSpec::Standard(l) => {
            (utility::DEFAULT_DIM, utility::DEFAULT_CAP, l.budget(), l.initial_point(utility::DEFAULT_DIM))
        }
        InstanceSpec::Custom { n, u, r } => (*n, *u, *r, Vector::zeros(*n)),
    };
    let set = FeasibleSet::capped_box(n, u, r)?;
    let x0 = match config.x0 {
        StartPoint::Table => table_x0,
        StartPoint::Zero => Vector::zeros(n),
        StartPoint::Random(seed) => set.sample_point(&mut rng::stream(seed)),
    };
    let mut z = vec![0.0; n];
    z[0] = 0.5;
    let pieces = config.pieces.clone().unwrap_or_else(default_pieces);
    let instance = UtilityInstance::new(
        draw_coefficients(n, config.coeff_seed),
        &pieces,
        config.lambda,
        Vector::new(z)?,
        set,
        x0,
    )?;
    Ok(instance)
}

pub fn estimate(config: &ExperimentConfig, instance: &UtilityInstance) -> Result<Constants> {
    let (c, nu) = instance.estimate_constants(config.constants_samples, &mut rng::stream(config.constants_seed))?;
    let d_w_sq = instance.set().bregman_diameter_sq(MirrorMap::Euclidean);
    if config.regime == Regime::Compact {
        d_w_sq.clone()?;
    }
    Ok(Constants {
        mu_f: instance.mu_f(),
        mu_w: MirrorMap::Euclidean.mu_w(),
        d_w_sq: d_w_sq.ok(),
        c,
        nu,
        c_tilde_sq: c_tilde_sq(c * c, nu * nu, config.noise_norm),
    })
}

/// Stepsize parameters the compact regime runs with.
pub fn step_scales(config: &ExperimentConfig, constants: &Constants) -> Result<Vec<f64>> {
    Ok(match &config.a {
        StepScale::Fixed(a) => vec![*a],
        StepScale::Sweep(list) => list.clone(),
        StepScale::Optimal => vec![optimal_a(
            constants.d_w_sq.expect("compact constants carry the diameter").sqrt(),
            constants.c * constants.c,
            constants.nu * constants.nu,
            constants.mu_w,
            OptimalAConvention::Noisy,
        )?],
    })
}

/// Bound on `E f(x_hat_k) - f*` for the configured regime.
pub fn bound_at(config: &ExperimentConfig, constants: &Constants, a: Option<f64>, k: usize) -> f64 {
    match config.regime {
        Regime::StronglyConvex => strongly_convex_bounds(k, constants.c_tilde_sq, constants.mu_f, constants.mu_w).gap,
        Regime::Compact => compact_gap_bound(
            k,
            a.expect("compact summaries carry a"),
            constants.d_w_sq.unwrap_or(f64::NAN),
            constants.c * constants.c,
            constants.nu * constants.nu,
            constants.mu_w,
        ),
    }
}

fn trace_options(config: &ExperimentConfig) -> TraceOptions {
    TraceOptions {
        evaluation: if config.analytic {
            Evaluation::Exact
        } else {
            Evaluation::Sampled { samples: config.eval_samples, seed: config.eval_seed }
        },
        ..TraceOptions::default()
    }
}

fn one_run(config: &ExperimentConfig, instance: &UtilityInstance, a: Option<f64>, run: usize) -> Result<Vec<TraceRecord>> {
    let problem = utility::problem(instance.clone());
    let mut stream = rng::stream(rng::run_seed(config.base_seed, run as u64));
    let options = trace_options(config);
    let trace = match (config.regime, a) {
        (Regime::StronglyConvex, _) => {
            let schedule = match config.schedule {
                StepRule::Step1 => StepsizeSchedule::tseng(),
                StepRule::Step2 => StepsizeSchedule::nesterov(),
            };
            run_strongly_convex(&problem, &schedule, config.iterations, &mut stream, &options)
        }
        (Regime::Compact, Some(a)) => match config.averaging {
            Averaging::Weighted => run_compact(&problem, a, config.iterations, &mut stream, &options),
            Averaging::Uniform => run_baseline_uniform(&problem, a, config.iterations, &mut stream, &options),
        },
        (Regime::Compact, None) => unreachable!("compact runs always have a stepsize parameter"),
    };
    trace.map(|t| t.records).map_err(|source| HarnessError::Run { run, source })
}

fn pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    builder.build().map_err(|e| HarnessError::Pool(e.to_string()))
}

struct Prepared {
    instance: UtilityInstance,
    constants: Constants,
    f_ref: Option<f64>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let instance = build_instance(config)?;
    let constants = estimate(config, &instance)?;
    let f_ref = if config.reference { Some(instance.reference_solution(config.reference_tol)?.1) } else { None };
    Ok(Prepared { instance, constants, f_ref })
}

fn summarize(
    config: &ExperimentConfig,
    prepared: &Prepared,
    a: Option<f64>,
    pool: &rayon::ThreadPool,
) -> Result<McSummary> {
    let traces: Vec<Vec<TraceRecord>> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| one_run(config, &prepared.instance, a, run))
            .collect::<Result<Vec<_>>>()
    })?;

    let rows = traces[0].len();
    let runs = traces.len() as f64;
    let mut s = McSummary {
        k: Vec::with_capacity(rows),
        mean_f_avg: Vec::with_capacity(rows),
        stderr_f_avg: Vec::with_capacity(rows),
        mean_f_iter: Vec::with_capacity(rows),
        mean_f_min: Vec::with_capacity(rows),
        bound: Vec::with_capacity(rows),
        metadata: Metadata {
            config_text: config.canonical_text(),
            config_hash: config.content_hash(),
            f_ref: prepared.f_ref,
            constants: prepared.constants,
            a,
            eval_samples: (!config.analytic).then_some(config.eval_samples),
        },
    };
    for i in 0..rows {
        let k = traces[0][i].k;
        // Fold in run order so the result does not depend on scheduling.
        let mean_of = |f: fn(&TraceRecord) -> f64| traces.iter().map(|t| f(&t[i])).sum::<f64>() / runs;
        let mean = mean_of(|r| r.f_avg);
        let stderr = if traces.len() > 1 {
            let ss: f64 = traces.iter().map(|t| (t[i].f_avg - mean).powi(2)).sum();
            (ss / (runs - 1.0)).sqrt() / runs.sqrt()
        } else {
            0.0
        };
        s.k.push(k);
        s.mean_f_avg.push(mean);
        s.stderr_f_avg.push(stderr);
        s.mean_f_iter.push(mean_of(|r| r.f_iter));
        s.mean_f_min.push(mean_of(|r| r.f_min));
        s.bound.push(bound_at(config, &prepared.constants, a, k));
    }
    Ok(s)
}

/// One summary per stepsize setting: a single entry unless the config sweeps `a`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<McSummary>> {
    let prepared = prepare(config)?;
    let pool = pool(config)?;
    let scales: Vec<Option<f64>> = match config.regime {
        Regime::StronglyConvex => vec![None],
        Regime::Compact => step_scales(config, &prepared.constants)?.into_iter().map(Some).collect(),
    };
    scales.into_iter().map(|a| summarize(config, &prepared, a, &pool)).collect()
}

/// Runs the configuration; with an `a` sweep, returns the setting whose
/// final mean `f(x_hat_K)` is lowest.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McSummary> {
    let summaries = run_sweep(config)?;
    Ok(best_of(summaries))
}

pub fn best_of(summaries: Vec<McSummary>) -> McSummary {
    summaries
        .into_iter()
        .min_by(|x, y| x.final_mean().total_cmp(&y.final_mean()))
        .expect("at least one summary")
}

/// `(k, bound)` curves for every stepsize setting of `config`, without runs.
pub fn bound_curves(config: &ExperimentConfig) -> Result<Vec<(Option<f64>, Vec<(usize, f64)>)>> {
    let instance = build_instance(config)?;
    let constants = estimate(config, &instance)?;
    let scales: Vec<Option<f64>> = match config.regime {
        Regime::StronglyConvex => vec![None],
        Regime::Compact => step_scales(config, &constants)?.into_iter().map(Some).collect(),
    };
    let ks = ssmd_core::solver::evaluation_points(config.iterations, TraceOptions::default().dense_up_to);
    Ok(scales
        .into_iter()
        .map(|a| (a, ks.iter().map(|&k| (k, bound_at(config, &constants, a, k))).collect()))
        .collect())
}
