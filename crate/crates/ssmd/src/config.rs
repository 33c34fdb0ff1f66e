//! Experiment configuration: a plain `key = value` file.
//!
//! Blank lines and everything after `#` are ignored. Keys are
//! case-insensitive, may appear at most once, and unknown keys are rejected.
//! Syntax problems are reported with their line number; once the file parses,
//! every violated constraint is reported together.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ssmd_core::solver::NoiseNorm;
use ssmd_core::utility::{AffinePiece, InstanceLabel, DEFAULT_COEFF_SEED};

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "regime",
    "instance",
    "n",
    "u",
    "r",
    "coeff_seed",
    "pieces",
    "lambda",
    "schedule",
    "a",
    "a_sweep",
    "iterations",
    "runs",
    "seed",
    "x0",
    "analytic",
    "eval_samples",
    "eval_seed",
    "averaging",
    "workers",
    "out",
    "reference",
    "reference_tol",
    "constants_samples",
    "constants_seed",
    "noise_norm",
];

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_STRONGLY_CONVEX_ITERATIONS: usize = 100;
pub const DEFAULT_COMPACT_ITERATIONS: usize = 1000;
pub const DEFAULT_STRONGLY_CONVEX_LAMBDA: f64 = 100.0;
pub const DEFAULT_EVAL_SAMPLES: usize = ssmd_core::solver::DEFAULT_EVAL_SAMPLES;
pub const DEFAULT_EVAL_SEED: u64 = ssmd_core::solver::DEFAULT_EVAL_SEED;
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-8;
pub const DEFAULT_CONSTANTS_SAMPLES: usize = 10_000;
pub const DEFAULT_CONSTANTS_SEED: u64 = 0xc0_457a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    StronglyConvex,
    Compact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Standard(InstanceLabel),
    Custom { n: usize, u: f64, r: f64 },
}

/// Stepsize choice for the strongly convex regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `alpha_0 = 1`, `alpha_k = 2 / (k + 1)`.
    Step1,
    /// The recursive rule `alpha_{k+1}^2 = (1 - alpha_{k+1}) alpha_k^2`.
    Step2,
}

/// The compact-regime parameter `a` in `alpha_k = a / sqrt(k + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepScale {
    /// `a* = d_w / sqrt(C^2 + nu^2)` from the estimated constants.
    Optimal,
    Fixed(f64),
    Sweep(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPoint {
    /// The instance's own starting point (zero for custom instances).
    Table,
    Zero,
    /// Uniform draw over the bounding box from this seed, then projected.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    Weighted,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub regime: Regime,
    pub instance: InstanceSpec,
    pub coeff_seed: u64,
    /// Utility pieces; `None` means the default ten.
    pub pieces: Option<Vec<AffinePiece>>,
    pub lambda: f64,
    pub schedule: StepRule,
    pub a: StepScale,
    pub iterations: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub x0: StartPoint,
    /// Closed-form objective evaluation; when false, sampled estimates.
    pub analytic: bool,
    pub eval_samples: usize,
    pub eval_seed: u64,
    pub averaging: Averaging,
    /// Worker threads; never affects results.
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub reference: bool,
    pub reference_tol: f64,
    pub constants_samples: usize,
    pub constants_seed: u64,
    pub noise_norm: NoiseNorm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Invalid(issues) => {
                write!(f, "invalid configuration:")?;
                for issue in issues {
                    write!(f, "\n  - {issue}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.0.get(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| ConfigError::Syntax {
                line: e.line,
                message: format!("cannot parse `{}` for `{key}`", e.value),
            }),
        }
    }

    fn get_with<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>, expected: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).ok_or_else(|| ConfigError::Syntax {
                line: e.line,
                message: format!("`{key}` expects {expected}, got `{}`", e.value),
            }),
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

fn parse_pieces(s: &str) -> Option<Vec<AffinePiece>> {
    s.split(',')
        .map(|p| {
            let (c, d) = p.split_once(':')?;
            Some(AffinePiece::new(c.trim().parse().ok()?, d.trim().parse().ok()?))
        })
        .collect()
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Syntax { line, message: format!("unknown key `{key}`") });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax { line, message: format!("`{key}` has no value") });
        }
        if let Some(prev) = map.insert(key.clone(), Entry { line, value }) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("`{key}` already set on line {}", prev.line),
            });
        }
    }
    Ok(Entries(map))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let e = tokenize(text)?;
    let mut issues = Vec::new();

    let regime = e.get_with(
        "regime",
        |s| match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "strongly_convex" => Some(Regime::StronglyConvex),
            "compact" => Some(Regime::Compact),
            _ => None,
        },
        "strongly_convex or compact",
    )?;
    let label = e.get_with(
        "instance",
        |s| {
            if s.eq_ignore_ascii_case("custom") {
                Some(None)
            } else {
                s.parse::<InstanceLabel>().ok().map(Some)
            }
        },
        "test1, test2, test3, test4 or custom",
    )?;
    let n: Option<usize> = e.get("n")?;
    let u: Option<f64> = e.get("u")?;
    let r: Option<f64> = e.get("r")?;
    let coeff_seed: Option<u64> = e.get("coeff_seed")?;
    let pieces = e.get_with("pieces", parse_pieces, "a comma-separated list of intercept:slope pairs")?;
    let lambda: Option<f64> = e.get("lambda")?;
    let schedule = e.get_with(
        "schedule",
        |s| match s.to_ascii_lowercase().as_str() {
            "step-1" | "step1" => Some(StepRule::Step1),
            "step-2" | "step2" => Some(StepRule::Step2),
            _ => None,
        },
        "step-1 or step-2",
    )?;
    let a = e.get_with(
        "a",
        |s| {
            if s.eq_ignore_ascii_case("optimal") {
                Some(None)
            } else {
                s.parse::<f64>().ok().map(Some)
            }
        },
        "a positive number or `optimal`",
    )?;
    let a_sweep = e.get_with("a_sweep", parse_list, "a comma-separated list of numbers")?;
    let iterations: Option<usize> = e.get("iterations")?;
    let runs: Option<usize> = e.get("runs")?;
    let base_seed: Option<u64> = e.get("seed")?;
    let x0 = e.get_with(
        "x0",
        |s| match s.to_ascii_lowercase().as_str() {
            "table" => Some(StartPoint::Table),
            "zero" => Some(StartPoint::Zero),
            other => other.strip_prefix("random:").and_then(|v| v.trim().parse().ok()).map(StartPoint::Random),
        },
        "table, zero or random:<seed>",
    )?;
    let analytic = e.get_with("analytic", parse_bool, "true or false")?;
    let eval_samples: Option<usize> = e.get("eval_samples")?;
    let eval_seed: Option<u64> = e.get("eval_seed")?;
    let averaging = e.get_with(
        "averaging",
        |s| match s.to_ascii_lowercase().as_str() {
            "weighted" => Some(Averaging::Weighted),
            "uniform" => Some(Averaging::Uniform),
            _ => None,
        },
        "weighted or uniform",
    )?;
    let workers: Option<usize> = e.get("workers")?;
    let out = e.raw("out").map(|v| v.value.clone());
    let reference = e.get_with("reference", parse_bool, "true or false")?;
    let reference_tol: Option<f64> = e.get("reference_tol")?;
    let constants_samples: Option<usize> = e.get("constants_samples")?;
    let constants_seed: Option<u64> = e.get("constants_seed")?;
    let noise_norm = e.get_with(
        "noise_norm",
        |s| match s.to_ascii_lowercase().as_str() {
            "euclidean" => Some(NoiseNorm::Euclidean),
            "general" => Some(NoiseNorm::General),
            _ => None,
        },
        "euclidean or general",
    )?;

    if regime.is_none() {
        issues.push("`regime` is required (strongly_convex or compact)".to_string());
    }
    if label.is_none() {
        issues.push("`instance` is required (test1..test4 or custom)".to_string());
    }
    let regime = regime.unwrap_or(Regime::Compact);
    let strongly_convex = regime == Regime::StronglyConvex;

    let instance = match label.flatten() {
        Some(l) => {
            for key in ["n", "u", "r"] {
                if e.raw(key).is_some() {
                    issues.push(format!("`{key}` only applies to `instance = custom`"));
                }
            }
            InstanceSpec::Standard(l)
        }
        None => {
            let custom = label.is_some();
            if custom && (n.is_none() || u.is_none() || r.is_none()) {
                issues.push("`instance = custom` needs `n`, `u` and `r`".to_string());
            }
            if n == Some(0) {
                issues.push("`n` must be at least 1".to_string());
            }
            if u.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                issues.push("`u` must be positive and finite".to_string());
            }
            if r.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                issues.push("`r` must be positive and finite".to_string());
            }
            InstanceSpec::Custom { n: n.unwrap_or(1), u: u.unwrap_or(1.0), r: r.unwrap_or(1.0) }
        }
    };
    if pieces.as_ref().is_some_and(|p| p.iter().any(|q| !(q.c.is_finite() && q.d.is_finite()))) {
        issues.push("`pieces` must be finite".to_string());
    }

    let lambda = lambda.unwrap_or(if strongly_convex { DEFAULT_STRONGLY_CONVEX_LAMBDA } else { 0.0 });
    if !(lambda >= 0.0 && lambda.is_finite()) {
        issues.push("`lambda` must be non-negative and finite".to_string());
    }
    if strongly_convex && !(lambda > 0.0) {
        issues.push("strongly_convex regime requires lambda > 0".to_string());
    }

    if strongly_convex {
        if a.is_some() || a_sweep.is_some() {
            issues.push("`a` and `a_sweep` only apply to the compact regime".to_string());
        }
        if averaging == Some(Averaging::Uniform) {
            issues.push("uniform averaging is only available in the compact regime".to_string());
        }
    } else if schedule.is_some() {
        issues.push("`schedule` only applies to the strongly_convex regime".to_string());
    }
    let step_scale = match (a, a_sweep) {
        (Some(_), Some(_)) => {
            issues.push("set either `a` or `a_sweep`, not both".to_string());
            StepScale::Optimal
        }
        (Some(Some(v)), None) => {
            if !(v > 0.0 && v.is_finite()) {
                issues.push("`a` must be positive".to_string());
            }
            StepScale::Fixed(v)
        }
        (None, Some(list)) => {
            if list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                issues.push("every `a_sweep` entry must be positive".to_string());
            }
            StepScale::Sweep(list)
        }
        _ => StepScale::Optimal,
    };

    let iterations = iterations.unwrap_or(if strongly_convex {
        DEFAULT_STRONGLY_CONVEX_ITERATIONS
    } else {
        DEFAULT_COMPACT_ITERATIONS
    });
    if iterations < 1 {
        issues.push("iterations must satisfy K >= 1".to_string());
    }
    let runs = runs.unwrap_or(DEFAULT_RUNS);
    if runs < 1 {
        issues.push("runs must satisfy runs >= 1".to_string());
    }
    let eval_samples = eval_samples.unwrap_or(DEFAULT_EVAL_SAMPLES);
    if eval_samples < 1 {
        issues.push("`eval_samples` must be at least 1".to_string());
    }
    if workers == Some(0) {
        issues.push("`workers` must be at least 1".to_string());
    }
    let reference_tol = reference_tol.unwrap_or(DEFAULT_REFERENCE_TOL);
    if !(reference_tol > 0.0) {
        issues.push("`reference_tol` must be positive".to_string());
    }
    let constants_samples = constants_samples.unwrap_or(DEFAULT_CONSTANTS_SAMPLES);
    if constants_samples < 1000 {
        issues.push("`constants_samples` must be at least 1000".to_string());
    }

    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    Ok(ExperimentConfig {
        regime,
        instance,
        coeff_seed: coeff_seed.unwrap_or(DEFAULT_COEFF_SEED),
        pieces,
        lambda,
        schedule: schedule.unwrap_or(StepRule::Step1),
        a: step_scale,
        iterations,
        runs,
        base_seed: base_seed.unwrap_or(0),
        x0: x0.unwrap_or(StartPoint::Table),
        analytic: analytic.unwrap_or(true),
        eval_samples,
        eval_seed: eval_seed.unwrap_or(DEFAULT_EVAL_SEED),
        averaging: averaging.unwrap_or(Averaging::Weighted),
        workers,
        out,
        reference: reference.unwrap_or(true),
        reference_tol,
        constants_samples,
        constants_seed: constants_seed.unwrap_or(DEFAULT_CONSTANTS_SEED),
        noise_norm: noise_norm.unwrap_or_default(),
    })
}

impl ExperimentConfig {
    /// Canonical `key = value` text of every setting that can change results.
    /// `workers` and `out` are left out. Parsing the text gives back the same
    /// configuration apart from those two.
    pub fn canonical_text(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| lines.push((k.to_string(), v));
        push(
            "regime",
            match self.regime {
                Regime::StronglyConvex => "strongly_convex".into(),
                Regime::Compact => "compact".into(),
            },
        );
        match &self.instance {
            InstanceSpec::Standard(l) => push("instance", l.name().into()),
            InstanceSpec::Custom { n, u, r } => {
                push("instance", "custom".into());
                push("n", n.to_string());
                push("u", format!("{u:?}"));
                push("r", format!("{r:?}"));
            }
        }
        push("coeff_seed", self.coeff_seed.to_string());
        if let Some(p) = &self.pieces {
            let list: Vec<String> = p.iter().map(|q| format!("{:?}:{:?}", q.c, q.d)).collect();
            push("pieces", list.join(", "));
        }
        push("lambda", format!("{:?}", self.lambda));
        match self.regime {
            Regime::StronglyConvex => push(
                "schedule",
                match self.schedule {
                    StepRule::Step1 => "step-1".into(),
                    StepRule::Step2 => "step-2".into(),
                },
            ),
            Regime::Compact => match &self.a {
                StepScale::Optimal => push("a", "optimal".into()),
                StepScale::Fixed(v) => push("a", format!("{v:?}")),
                StepScale::Sweep(list) => {
                    push("a_sweep", list.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", "))
                }
            },
        }
        push("iterations", self.iterations.to_string());
        push("runs", self.runs.to_string());
        push("seed", self.base_seed.to_string());
        push(
            "x0",
            match self.x0 {
                StartPoint::Table => "table".into(),
                StartPoint::Zero => "zero".into(),
                StartPoint::Random(s) => format!("random:{s}"),
            },
        );
        push("analytic", self.analytic.to_string());
        push("eval_samples", self.eval_samples.to_string());
        push("eval_seed", self.eval_seed.to_string());
        push(
            "averaging",
            match self.averaging {
                Averaging::Weighted => "weighted".into(),
                Averaging::Uniform => "uniform".into(),
            },
        );
        push("reference", self.reference.to_string());
        push("reference_tol", format!("{:?}", self.reference_tol));
        push("constants_samples", self.constants_samples.to_string());
        push("constants_seed", self.constants_seed.to_string());
        push(
            "noise_norm",
            match self.noise_norm {
                NoiseNorm::Euclidean => "euclidean".into(),
                NoiseNorm::General => "general".into(),
            },
        );
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Git-style object hash of [`Self::canonical_text`]: SHA-256 over
    /// `"blob <len>\0" + text`, hex encoded.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = self.canonical_text();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", text.len()).as_bytes());
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strongly_convex_example_defaults_to_100_iterations() {
        let c = parse_config("regime = strongly_convex\ninstance = test1\nlambda = 100\nseed = 42").unwrap();
        assert_eq!(c.iterations, 100);
        assert_eq!(c.runs, 100);
        assert_eq!(c.base_seed, 42);
        assert_eq!(c.instance, InstanceSpec::Standard(InstanceLabel::Test1));
        assert_eq!(c.schedule, StepRule::Step1);
    }

    #[test]
    fn compact_example_defaults_to_1000_iterations() {
        let c = parse_config("regime = compact\ninstance = test2\na = 10\nseed = 7").unwrap();
        assert_eq!(c.iterations, 1000);
        assert_eq!(c.a, StepScale::Fixed(10.0));
        assert_eq!(c.lambda, 0.0);
    }

    #[test]
    fn zero_runs_names_the_invariant() {
        let err = parse_config("regime = compact\ninstance = test1\nruns = 0").unwrap_err();
        assert!(err.to_string().contains("runs >= 1"), "{err}");
    }

    #[test]
    fn violations_are_listed_together() {
        let err = parse_config("regime = strongly_convex\ninstance = test1\nlambda = 0\nruns = 0\niterations = 0").unwrap_err();
        let ConfigError::Invalid(issues) = err else { panic!("expected validation failure") };
        assert_eq!(issues.len(), 3, "{issues:?}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("# header\nregime = compact\n\ncolour = blue\n").unwrap_err();
        assert_eq!(err, ConfigError::Syntax { line: 4, message: "unknown key `colour`".into() });
        let err = parse_config("regime = compact\ninstance test1").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = parse_config("runs = many").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
        let err = parse_config("runs = 1\nruns = 2").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "regime = compact  # trailing comment\ninstance = custom\nn = 5\nu = 1\nr = 2.5\n\
                    pieces = 0:-1, 0.5:2\na_sweep = 1, 2.5\nx0 = random:9\nanalytic = false\nworkers = 3\nout = somewhere";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.canonical_text()).unwrap();
        assert_eq!(again, ExperimentConfig { workers: None, out: None, ..c.clone() });
        assert_eq!(again.content_hash(), c.content_hash());
        assert_eq!(c.content_hash().len(), 64);
    }
}
