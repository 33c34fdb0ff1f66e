//! Properties of projections, Bregman distances and the prox step.

use proptest::prelude::*;
use ssmd_core::mirror::{bregman, check_quadratic_upper_bound, prox_step};
use ssmd_core::vector::{dist_sq, dot};
use ssmd_core::{FeasibleSet, MirrorMap, Vector};

/// `max <c, v>` over the capped box, by filling the best coordinates first.
fn linear_max(c: &[f64], u: f64, r: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].total_cmp(&c[i]));
    let mut v = vec![0.0; c.len()];
    let mut budget = r;
    for i in order {
        if c[i] <= 0.0 || budget <= 0.0 {
            break;
        }
        v[i] = u.min(budget);
        budget -= v[i];
    }
    v
}

/// Largest violation of the projection's variational inequality
/// `<x - p, v - p> <= 0` over the set.
fn vi_residual(x: &[f64], p: &[f64], u: f64, r: f64) -> f64 {
    let c: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
    let v = linear_max(&c, u, r);
    let d: Vec<f64> = v.iter().zip(p).map(|(a, b)| a - b).collect();
    dot(&c, &d).max(0.0)
}

fn capped_box() -> impl Strategy<Value = (usize, f64, f64)> {
    (1usize..=6, 0.1f64..10.0, 0.1f64..30.0)
}

fn point(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..2.0 * scale, n)
}

fn simplex_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn projection_is_feasible_idempotent_and_optimal(
        (n, u, r, x) in capped_box().prop_flat_map(|(n, u, r)| (Just(n), Just(u), Just(r), point(n, 15.0)))
    ) {
        let set = FeasibleSet::capped_box(n, u, r).unwrap();
        let p = set.project(&x).unwrap();
        prop_assert!(set.contains(&p, 1e-9));
        prop_assert_eq!(set.project(&p).unwrap(), p.clone());
        prop_assert!(vi_residual(&x, &p, u, r) <= 1e-8 * (1.0 + dot(&x, &x)));
    }

    #[test]
    fn projection_is_non_expansive(
        (n, u, r, x, y) in capped_box().prop_flat_map(|(n, u, r)| (Just(n), Just(u), Just(r), point(n, 15.0), point(n, 15.0)))
    ) {
        let set = FeasibleSet::capped_box(n, u, r).unwrap();
        let d = dist_sq(&set.project(&x).unwrap(), &set.project(&y).unwrap()).sqrt();
        prop_assert!(d <= dist_sq(&x, &y).sqrt() + 1e-12);
    }

    #[test]
    fn bregman_bounds_and_three_point_identity(
        (x, y, z) in (2usize..6).prop_flat_map(|n| (simplex_point(n), simplex_point(n), simplex_point(n)))
    ) {
        for map in [MirrorMap::Euclidean, MirrorMap::NegativeEntropy] {
            let dxz = bregman(map, &x, &z).unwrap();
            prop_assert!(dxz >= 0.5 * map.mu_w() * dist_sq(&x, &z) - 1e-12);
            let gx = map.grad_w(&x).unwrap();
            let gy = map.grad_w(&y).unwrap();
            let lhs = dxz - bregman(map, &y, &z).unwrap();
            let grad_gap: Vec<f64> = gy.iter().zip(gx.iter()).map(|(a, b)| a - b).collect();
            let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let rhs = bregman(map, &x, &y).unwrap() + dot(&grad_gap, &zy);
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }

    #[test]
    fn euclidean_prox_is_projected_step(
        (n, u, r, x0, g, alpha) in capped_box().prop_flat_map(|(n, u, r)| {
            (Just(n), Just(u), Just(r), point(n, 10.0), point(n, 5.0), 1e-6f64..10.0)
        })
    ) {
        let set = FeasibleSet::capped_box(n, u, r).unwrap();
        let x = set.project(&x0).unwrap();
        let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let expected = set.project(&moved).unwrap();
        let got = prox_step(MirrorMap::Euclidean, &set, &x, &g, alpha).unwrap();
        prop_assert!(dist_sq(&got, &expected).sqrt() <= 1e-10);
    }

    #[test]
    fn prox_minimises_its_model(
        (x, g, alpha, zs) in (2usize..6).prop_flat_map(|n| {
            (simplex_point(n), prop::collection::vec(-3.0f64..3.0, n), 0.01f64..3.0, prop::collection::vec(simplex_point(n), 100))
        })
    ) {
        let set = FeasibleSet::simplex(x.len()).unwrap();
        for map in [MirrorMap::Euclidean, MirrorMap::NegativeEntropy] {
            let xp = prox_step(map, &set, &x, &g, alpha).unwrap();
            prop_assert!(set.contains(&xp, 1e-9));
            let model = |z: &[f64]| {
                let d: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
                alpha * dot(&g, &d) + bregman(map, &x, z).unwrap()
            };
            let best = model(&xp);
            for z in &zs {
                prop_assert!(best <= model(z) + 1e-9);
            }
        }
    }
}

#[test]
fn grid_argmin_matches_projection() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(2..=3);
        let u = rng.random_range(0.5..3.0);
        let r = rng.random_range(0.5..6.0);
        let set = FeasibleSet::capped_box(n, u, r).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..5.0)).collect();
        let steps = if n == 2 { 1000 } else { 100 };
        let h = u / steps as f64;
        let mut best = (f64::INFINITY, vec![0.0; n]);
        let mut idx = vec![0usize; n];
        loop {
            let v: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
            if v.iter().sum::<f64>() <= r + 1e-12 {
                let d = dist_sq(&v, &x);
                if d < best.0 {
                    best = (d, v);
                }
            }
            let mut j = 0;
            while j < n && idx[j] == steps {
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
            idx[j] += 1;
        }
        let p = set.project(&x).unwrap();
        assert!(dist_sq(&p, &best.1).sqrt() <= h * (n as f64).sqrt(), "x = {x:?}");
    }
}

#[test]
fn small_step_prox_stays_put() {
    let set = FeasibleSet::capped_box(3, 2.0, 4.0).unwrap();
    let x = [0.5, 2.0, 1.5];
    let p = prox_step(MirrorMap::Euclidean, &set, &x, &[3.0, -1.0, 2.0], 1e-12).unwrap();
    assert!(dist_sq(&p, &x).sqrt() <= 1e-9);
}

#[test]
fn quadratic_upper_bound_check() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let pairs: Vec<(Vector, Vector)> = (0..1000)
        .map(|_| {
            let mut draw = || Vector::new((0..5).map(|_| rng.random_range(0.0..10.0)).collect()).unwrap();
            (draw(), draw())
        })
        .collect();
    assert!(check_quadratic_upper_bound(MirrorMap::Euclidean, &pairs));
    assert!(check_quadratic_upper_bound(MirrorMap::Euclidean, &[]));
    let skewed = [(Vector::new(vec![0.01, 0.99]).unwrap(), Vector::new(vec![0.99, 0.01]).unwrap())];
    assert!(!check_quadratic_upper_bound(MirrorMap::NegativeEntropy, &skewed));
}
