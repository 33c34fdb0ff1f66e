//! Stepsize rules and numerical checks of the conditions they are meant to
//! satisfy.
//!
//! The strongly convex method needs `alpha_0 = 1`, `alpha_k in (0, 1]` and
//! `(1 - alpha_{k+1}) / alpha_{k+1}^2 <= 1 / alpha_k^2`. Both
//! [`ScheduleKind::TsengExplicit`] and [`ScheduleKind::NesterovRecursive`]
//! meet it (the latter with equality). [`ScheduleKind::InverseSqrt`] is the
//! compact-set rule `a / sqrt(k + 1)` and makes no such claim.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::CompensatedSum;

/// Slack for the inequality checks. Relative wherever the compared
/// quantities grow with `k`.
pub const CHECK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `alpha_0 = 1`, `alpha_k = 2 / (k + 1)` for `k >= 1`.
    TsengExplicit,
    /// `alpha_0 = 1`, `alpha_{k+1} = (sqrt(alpha_k^4 + 4 alpha_k^2) - alpha_k^2) / 2`.
    NesterovRecursive,
    /// `alpha_k = a / sqrt(k + 1)`.
    InverseSqrt { a: f64 },
}

impl ScheduleKind {
    /// Whether the schedule is claimed to meet the strongly convex stepsize
    /// condition.
    pub fn meets_step_condition(self) -> bool {
        !matches!(self, ScheduleKind::InverseSqrt { .. })
    }
}

/// A stepsize schedule. The recursive rule memoises its values, so
/// [`StepsizeSchedule::alpha`] takes `&mut self`; clone one per run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeSchedule {
    kind: ScheduleKind,
    memo: Vec<f64>,
}

fn nesterov_next(a: f64) -> f64 {
    let a2 = a * a;
    0.5 * (libm::sqrt(a2 * a2 + 4.0 * a2) - a2)
}

impl StepsizeSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        if let ScheduleKind::InverseSqrt { a } = kind {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::param("a", "must be positive and finite"));
            }
        }
        Ok(StepsizeSchedule { kind, memo: Vec::new() })
    }

    pub fn tseng() -> Self {
        StepsizeSchedule { kind: ScheduleKind::TsengExplicit, memo: Vec::new() }
    }

    pub fn nesterov() -> Self {
        StepsizeSchedule { kind: ScheduleKind::NesterovRecursive, memo: Vec::new() }
    }

    pub fn inverse_sqrt(a: f64) -> Result<Self> {
        Self::new(ScheduleKind::InverseSqrt { a })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn alpha(&mut self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::TsengExplicit => {
                if k == 0 {
                    1.0
                } else {
                    2.0 / (k as f64 + 1.0)
                }
            }
            ScheduleKind::InverseSqrt { a } => a / libm::sqrt(k as f64 + 1.0),
            ScheduleKind::NesterovRecursive => {
                if self.memo.is_empty() {
                    self.memo.push(1.0);
                }
                while self.memo.len() <= k {
                    let last = *self.memo.last().unwrap();
                    self.memo.push(nesterov_next(last));
                }
                self.memo[k]
            }
        }
    }
}

/// Outcome of a sweep over `k = 0..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub first_violation: Option<usize>,
}

impl Verdict {
    const PASS: Verdict = Verdict { first_violation: None };

    fn fail(k: usize) -> Self {
        Verdict { first_violation: Some(k) }
    }

    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `alpha_0 = 1`, `alpha_k in (0, 1]` and
/// `(1 - alpha_{k+1}) / alpha_{k+1}^2 <= (1 + slack) / alpha_k^2` for all
/// `k <= k_max`. The reported index is the first `k` whose value (or whose
/// pair `(k - 1, k)`) breaks a condition.
pub fn check_step_condition(mut alpha: impl FnMut(usize) -> f64, k_max: usize) -> Verdict {
    let mut prev = alpha(0);
    if prev != 1.0 {
        return Verdict::fail(0);
    }
    for k in 1..=k_max {
        let a = alpha(k);
        if !(a > 0.0 && a <= 1.0) {
            return Verdict::fail(k);
        }
        let lhs = (1.0 - a) / (a * a);
        let rhs = 1.0 / (prev * prev);
        if lhs > rhs * (1.0 + CHECK_SLACK) {
            return Verdict::fail(k);
        }
        prev = a;
    }
    Verdict::PASS
}

pub fn verify_step_condition(schedule: &StepsizeSchedule, k_max: usize) -> Result<Verdict> {
    if !schedule.kind().meets_step_condition() {
        return Err(Error::Unsupported(
            "the inverse-square-root rule is not claimed to satisfy the step condition",
        ));
    }
    let mut s = schedule.clone();
    Ok(check_step_condition(|k| s.alpha(k), k_max))
}

/// Checks `alpha_k^2 * sum_{t<=k} 1/alpha_t >= 1 - slack` for all `k <= k_max`.
pub fn check_weight_sum_bound(mut alpha: impl FnMut(usize) -> f64, k_max: usize) -> Verdict {
    let mut inv_sum = CompensatedSum::new();
    for k in 0..=k_max {
        let a = alpha(k);
        inv_sum.add(1.0 / a);
        if !(a * a * inv_sum.value() >= 1.0 - CHECK_SLACK) {
            return Verdict::fail(k);
        }
    }
    Verdict::PASS
}

pub fn verify_weight_sum_bound(schedule: &StepsizeSchedule, k_max: usize) -> Verdict {
    let mut s = schedule.clone();
    check_weight_sum_bound(|k| s.alpha(k), k_max)
}

/// Checks `sum_{t<=k} 1/alpha_t >= (2 / (3a)) (k + 1)^{3/2}` for
/// `alpha_t = a / sqrt(t + 1)`, with relative slack.
pub fn verify_inverse_sqrt_growth(a: f64, k_max: usize) -> Result<Verdict> {
    let mut s = StepsizeSchedule::inverse_sqrt(a)?;
    let mut inv_sum = CompensatedSum::new();
    for k in 0..=k_max {
        inv_sum.add(1.0 / s.alpha(k));
        let kp1 = k as f64 + 1.0;
        let bound = 2.0 / (3.0 * a) * kp1 * libm::sqrt(kp1);
        if !(inv_sum.value() >= bound * (1.0 - CHECK_SLACK)) {
            return Ok(Verdict::fail(k));
        }
    }
    Ok(Verdict::PASS)
}

/// `0 < alpha_k <= 2 / (k + 1) + 1e-15`.
pub fn stepcond_upper_bound(schedule: &mut StepsizeSchedule, k: usize) -> bool {
    let a = schedule.alpha(k);
    a > 0.0 && a <= 2.0 / (k as f64 + 1.0) + 1e-15
}

pub fn check_stepcond_upper_bound(schedule: &StepsizeSchedule, k_max: usize) -> Verdict {
    let mut s = schedule.clone();
    match (0..=k_max).find(|&k| !stepcond_upper_bound(&mut s, k)) {
        Some(k) => Verdict::fail(k),
        None => Verdict::PASS,
    }
}

pub fn check_non_increasing(mut alpha: impl FnMut(usize) -> f64, k_max: usize) -> Verdict {
    let mut prev = alpha(0);
    for k in 1..=k_max {
        let a = alpha(k);
        if a > prev {
            return Verdict::fail(k);
        }
        prev = a;
    }
    Verdict::PASS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        let mut t = StepsizeSchedule::tseng();
        assert_eq!(t.alpha(0), 1.0);
        assert_eq!(t.alpha(3), 0.5);
        let mut n = StepsizeSchedule::nesterov();
        assert!((n.alpha(1) - 0.618_033_988_749_894_8).abs() < 1e-15);
        assert_eq!(n.alpha(0), 1.0);
        let mut s = StepsizeSchedule::inverse_sqrt(2.0).unwrap();
        assert_eq!(s.alpha(3), 1.0);
        assert!(StepsizeSchedule::inverse_sqrt(0.0).is_err());
    }

    #[test]
    fn memo_matches_fresh_recursion() {
        let mut memo = StepsizeSchedule::nesterov();
        for k in (0..2_000).step_by(7) {
            let fresh = StepsizeSchedule::nesterov().alpha(k);
            assert_eq!(memo.alpha(k).to_bits(), fresh.to_bits());
        }
        // Going backwards hits the memo.
        assert_eq!(memo.alpha(5).to_bits(), StepsizeSchedule::nesterov().alpha(5).to_bits());
    }

    #[test]
    fn step_condition_sweeps() {
        assert!(verify_step_condition(&StepsizeSchedule::tseng(), 100_000).unwrap().passed());
        assert!(verify_step_condition(&StepsizeSchedule::nesterov(), 100_000).unwrap().passed());
        assert!(check_step_condition(|_| 1.0, 1_000).passed());
        assert!(verify_step_condition(&StepsizeSchedule::inverse_sqrt(1.0).unwrap(), 10).is_err());
        assert_eq!(check_step_condition(|_| 0.5, 10).first_violation, Some(0));
        // alpha = 2/(k+1) at k = 0 would be 2, outside (0, 1].
        assert_eq!(check_step_condition(|k| 2.0 / (k as f64 + 1.0), 10).first_violation, Some(0));
    }

    #[test]
    fn weight_sum_sweeps() {
        assert!(verify_weight_sum_bound(&StepsizeSchedule::tseng(), 100_000).passed());
        assert!(verify_weight_sum_bound(&StepsizeSchedule::nesterov(), 100_000).passed());
        assert!(check_weight_sum_bound(|_| 1.0, 0).passed());
        assert!(!check_weight_sum_bound(|k| if k == 0 { 1.0 } else { 0.01 }, 3).passed());
        assert!(verify_inverse_sqrt_growth(1.0, 100_000).unwrap().passed());
        assert!(verify_inverse_sqrt_growth(1.0, 0).unwrap().passed());
        assert!(verify_inverse_sqrt_growth(7.5, 1_000).unwrap().passed());
        assert!(verify_inverse_sqrt_growth(-1.0, 10).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let mut n = StepsizeSchedule::nesterov();
        assert!(stepcond_upper_bound(&mut n, 1));
        assert!(stepcond_upper_bound(&mut StepsizeSchedule::tseng(), 0));
        assert!(check_stepcond_upper_bound(&StepsizeSchedule::nesterov(), 10_000).passed());
        assert!(check_stepcond_upper_bound(&StepsizeSchedule::tseng(), 10_000).passed());
        assert!(!check_stepcond_upper_bound(&StepsizeSchedule::inverse_sqrt(1.0).unwrap(), 10).passed());
    }

    #[test]
    fn schedules_are_non_increasing() {
        for mut s in [
            StepsizeSchedule::tseng(),
            StepsizeSchedule::nesterov(),
            StepsizeSchedule::inverse_sqrt(3.0).unwrap(),
        ] {
            assert!(check_non_increasing(|k| s.alpha(k), 100_000).passed());
        }
    }

    #[test]
    fn nesterov_two_sided_bounds() {
        // t_k = 1/alpha_k obeys (k + 2)/2 <= t_k <= 1 + k/2 + ln(k + 1)/4.
        let mut n = StepsizeSchedule::nesterov();
        for k in 0..=10_000 {
            let a = n.alpha(k);
            let kf = k as f64;
            assert!(a <= 2.0 / (kf + 2.0) * (1.0 + 1e-14), "k = {k}");
            assert!(a >= 4.0 / (4.0 + 2.0 * kf + libm::log(kf + 1.0)), "k = {k}");
        }
        // The tighter guess alpha_k >= 2/(k + 3) does not survive past k = 11.
        assert!(n.alpha(12) < 2.0 / 15.0);
    }
}
