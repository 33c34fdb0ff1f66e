//! Properties of stepsize schedules and iterate averages.

use proptest::prelude::*;
use ssmd_core::averaging::weights;
use ssmd_core::stepsize::check_non_increasing;
use ssmd_core::{AverageState, FeasibleSet, StepsizeSchedule, UniformAverage};

fn weighted_direct(points: &[Vec<f64>], alphas: &[f64]) -> Vec<f64> {
    let total: f64 = alphas.iter().map(|a| 1.0 / a).sum();
    (0..points[0].len())
        .map(|i| points.iter().zip(alphas).map(|(p, a)| p[i] / a).sum::<f64>() / total)
        .collect()
}

fn sequence(max_len: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=4, 1usize..=max_len).prop_flat_map(|(n, len)| {
        (
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, n), len),
            prop::collection::vec(1e-3f64..1.0, len),
        )
    })
}

proptest! {
    #[test]
    fn recursion_matches_direct_sum((points, alphas) in sequence(500)) {
        let mut state = AverageState::new();
        for (p, &a) in points.iter().zip(&alphas) {
            state.absorb(p, a).unwrap();
        }
        let direct = weighted_direct(&points, &alphas);
        let scale = points.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (r, d) in state.x_hat().unwrap().iter().zip(&direct) {
            prop_assert!((r - d).abs() <= 1e-10 * scale);
        }
        let total: f64 = alphas.iter().map(|a| 1.0 / a).sum();
        prop_assert!((state.total_weight() - total).abs() <= 1e-12 * total);
        prop_assert_eq!(state.count(), points.len());
    }

    #[test]
    fn weights_are_positive_and_normalised(alphas in prop::collection::vec(1e-6f64..1.0, 1..200)) {
        let w = weights(&alphas).unwrap();
        prop_assert!(w.iter().all(|&b| b > 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn average_of_feasible_points_is_feasible(
        (n, raw, alphas) in (2usize..6).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(prop::collection::vec(-5.0f64..15.0, n), 1..100),
            prop::collection::vec(1e-3f64..1.0, 100),
        ))
    ) {
        let set = FeasibleSet::capped_box(n, 3.0, 5.0).unwrap();
        let mut state = AverageState::new();
        let mut uniform = UniformAverage::new();
        for (x, &a) in raw.iter().zip(&alphas) {
            let p = set.project(x).unwrap();
            state.absorb(&p, a).unwrap();
            uniform.absorb(&p).unwrap();
            prop_assert!(set.contains(state.x_hat().unwrap(), 1e-8));
            prop_assert!(set.contains(&uniform.mean().unwrap(), 1e-8));
        }
    }

    #[test]
    fn uniform_average_is_exact_on_integers(points in prop::collection::vec(prop::collection::vec(-1000i32..1000, 3), 1..300)) {
        let mut uniform = UniformAverage::new();
        for p in &points {
            uniform.absorb(&p.iter().map(|&v| v as f64).collect::<Vec<_>>()).unwrap();
        }
        let mean = uniform.mean().unwrap();
        for i in 0..3 {
            let sum: i64 = points.iter().map(|p| p[i] as i64).sum();
            prop_assert_eq!(mean[i], sum as f64 / points.len() as f64);
        }
    }
}

#[test]
fn schedules_are_non_increasing() {
    for schedule in [StepsizeSchedule::tseng(), StepsizeSchedule::nesterov(), StepsizeSchedule::inverse_sqrt(0.7).unwrap()] {
        let mut s = schedule.clone();
        assert!(check_non_increasing(|k| s.alpha(k), 100_000).passed(), "{:?}", schedule.kind());
    }
}
