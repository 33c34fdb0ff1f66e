//! Numerical checks of the stepsize schedules.

use std::fmt;

use ssmd_core::stepsize::{
    check_non_increasing, check_stepcond_upper_bound, verify_weight_sum_bound, verify_inverse_sqrt_growth, verify_step_condition, Verdict,
};
use ssmd_core::StepsizeSchedule;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub first_violation: Option<usize>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub k_max: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match c.first_violation {
                None => writeln!(f, "PASS  {}  (k <= {})", c.name, self.k_max)?,
                Some(k) => writeln!(f, "FAIL  {}  (first violation at k = {k})", c.name)?,
            }
        }
        Ok(())
    }
}

fn result(name: impl Into<String>, v: Verdict) -> CheckResult {
    CheckResult { name: name.into(), first_violation: v.first_violation }
}

/// Every schedule check for `k = 0..=k_max`.
pub fn verify_suite(k_max: usize) -> VerifyReport {
    let named = [("step-1", StepsizeSchedule::tseng()), ("step-2", StepsizeSchedule::nesterov())];
    let mut checks = Vec::new();
    for (label, schedule) in &named {
        let step = verify_step_condition(schedule, k_max).expect("both rules claim the step condition");
        checks.push(result(format!("{label}: alpha_0 = 1, alpha in (0,1], (1-a_(k+1))/a_(k+1)^2 <= 1/a_k^2"), step));
        checks.push(result(format!("{label}: a_k^2 * sum 1/a_t >= 1"), verify_weight_sum_bound(schedule, k_max)));
        checks.push(result(format!("{label}: 0 < a_k <= 2/(k+1)"), check_stepcond_upper_bound(schedule, k_max)));
        let mut s = schedule.clone();
        checks.push(result(format!("{label}: non-increasing"), check_non_increasing(|k| s.alpha(k), k_max)));
    }
    for a in [0.1, 1.0, 10.0] {
        let v = verify_inverse_sqrt_growth(a, k_max).expect("positive a");
        checks.push(result(format!("a/sqrt(k+1), a = {a}: sum 1/a_t >= (2/(3a))(k+1)^(3/2)"), v));
        let mut s = StepsizeSchedule::inverse_sqrt(a).expect("positive a");
        checks.push(result(format!("a/sqrt(k+1), a = {a}: non-increasing"), check_non_increasing(|k| s.alpha(k), k_max)));
    }
    VerifyReport { k_max, checks }
}
