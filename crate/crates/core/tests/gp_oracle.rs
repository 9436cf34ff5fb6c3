//! GP posterior against an independent dense solve.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saegt::gp::{GridPosterior, Hyperparams, TraversabilityGp};
use saegt::grid::Point;

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (pa, pb) = (a[col].clone(), b[col].clone());
            for (v, p) in a[r][col..].iter_mut().zip(&pa[col..]) {
                *v -= f * p;
            }
            for (v, p) in b[r].iter_mut().zip(&pb) {
                *v -= f * p;
            }
        }
    }
    let m = b.first().map_or(0, Vec::len);
    let mut x = vec![vec![0.0; m]; n];
    for r in (0..n).rev() {
        for c in 0..m {
            let mut s = b[r][c];
            for k in r + 1..n {
                s -= a[r][k] * x[k][c];
            }
            x[r][c] = s / a[r][r];
        }
    }
    x
}

fn rbf(a: Point, b: Point, hp: &Hyperparams) -> f64 {
    let d2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
    hp.signal_variance * (-d2 / (2.0 * hp.length_scale.powi(2))).exp()
}

/// Posterior mean and variance from `(K + s I)^{-1}` applied densely.
fn oracle(hp: &Hyperparams, diag_extra: f64, xs: &[Point], ys: &[f64], qs: &[Point]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| rbf(xs[i], xs[j], hp) + if i == j { hp.noise_variance + diag_extra } else { 0.0 })
                .collect()
        })
        .collect();
    // Columns: centered targets, then one per query.
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![ys[i] - hp.prior_mean];
            row.extend(qs.iter().map(|&q| rbf(xs[i], q, hp)));
            row
        })
        .collect();
    let x = dense_solve(a, b);
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        let k: Vec<f64> = xs.iter().map(|&p| rbf(p, q, hp)).collect();
        means.push(hp.prior_mean + (0..n).map(|i| k[i] * x[i][0]).sum::<f64>());
        vars.push((hp.signal_variance - (0..n).map(|i| k[i] * x[i][qi + 1]).sum::<f64>()).max(0.0));
    }
    (means, vars)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Hyperparams, Vec<Point>, Vec<f64>, Vec<Point>) {
    let mut hp = Hyperparams::new(
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.01..0.5),
    )
    .unwrap();
    hp.prior_mean = rng.random_range(-1.0..1.0);
    let n = rng.random_range(1..=200);
    let q = rng.random_range(1..=500);
    let side = rng.random_range(5.0..20.0);
    let pt = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
    let xs: Vec<Point> = (0..n).map(|_| pt(rng)).collect();
    let ys: Vec<f64> = xs.iter().map(|p| (p.x * 0.3).sin() + (p.y * 0.2).cos() + rng.random_range(-0.1..0.1)).collect();
    let qs: Vec<Point> = (0..q).map(|_| pt(rng)).collect();
    (hp, xs, ys, qs)
}

#[test]
fn batched_posterior_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (hp, xs, ys, qs) = random_instance(&mut rng);
        let gp = TraversabilityGp::from_measurements(hp, &xs, &ys).unwrap();
        let post = gp.posterior(&qs).unwrap();
        let (m, v) = oracle(&hp, gp.jitter(), &xs, &ys, &qs);
        for i in 0..qs.len() {
            worst = worst.max((post.means[i] - m[i]).abs()).max((post.variances[i] - v[i]).abs());
        }
    }
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn incremental_matches_full_refit() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let (hp, xs, ys, qs) = random_instance(&mut rng);
        let mut inc = TraversabilityGp::new(hp).unwrap();
        let mut cache = GridPosterior::new(qs.clone()).unwrap();
        for (&x, &y) in xs.iter().zip(&ys) {
            inc.add_observation(x, y).unwrap();
        }
        let cached = cache.refresh(&inc).clone();
        let full = TraversabilityGp::from_measurements(hp, &xs, &ys).unwrap().posterior(&qs).unwrap();
        for i in 0..qs.len() {
            assert!((cached.means[i] - full.means[i]).abs() < 1e-9);
            assert!((cached.variances[i] - full.variances[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn cache_tracks_one_observation_at_a_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (hp, xs, ys, qs) = random_instance(&mut rng);
    let mut gp = TraversabilityGp::new(hp).unwrap();
    let mut cache = GridPosterior::new(qs.clone()).unwrap();
    for (k, (&x, &y)) in xs.iter().zip(&ys).enumerate().take(30) {
        gp.add_observation(x, y).unwrap();
        let cached = cache.refresh(&gp).clone();
        let (m, v) = oracle(&hp, gp.jitter(), &xs[..=k], &ys[..=k], &qs);
        for i in 0..qs.len() {
            assert!((cached.means[i] - m[i]).abs() < 1e-9);
            assert!((cached.variances[i] - v[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn prior_is_returned_without_data() {
    let mut hp = Hyperparams::new(4.0, 1.0, 0.1).unwrap();
    hp.prior_mean = 3.0;
    let gp = TraversabilityGp::new(hp).unwrap();
    let post = gp.posterior(&[Point::new(1.0, 2.0), Point::new(-5.0, 0.0)]).unwrap();
    assert_eq!(post.means, vec![3.0, 3.0]);
    assert_eq!(post.variances, vec![4.0, 4.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_never_grows_with_data(
        pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, -2.0f64..2.0), 1..25),
        q in (0.0f64..10.0, 0.0f64..10.0),
    ) {
        let hp = Hyperparams::new(1.0, 1.5, 0.05).unwrap();
        let q = [Point::new(q.0, q.1)];
        let mut gp = TraversabilityGp::new(hp).unwrap();
        let mut last = gp.posterior(&q).unwrap().variances[0];
        for (x, y, v) in pts {
            gp.add_observation(Point::new(x, y), v).unwrap();
            let var = gp.posterior(&q).unwrap().variances[0];
            prop_assert!(var >= 0.0);
            prop_assert!(var <= last + 1e-12);
            last = var;
        }
    }

    #[test]
    fn posterior_is_order_independent(
        pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, -2.0f64..2.0), 2..20),
        q in (0.0f64..10.0, 0.0f64..10.0),
    ) {
        let hp = Hyperparams::new(1.0, 2.0, 0.1).unwrap();
        let xs: Vec<Point> = pts.iter().map(|p| Point::new(p.0, p.1)).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let mut rx = xs.clone();
        let mut ry = ys.clone();
        rx.reverse();
        ry.reverse();
        let q = [Point::new(q.0, q.1)];
        let a = TraversabilityGp::from_measurements(hp, &xs, &ys).unwrap().posterior(&q).unwrap();
        let b = TraversabilityGp::from_measurements(hp, &rx, &ry).unwrap().posterior(&q).unwrap();
        prop_assert!((a.means[0] - b.means[0]).abs() < 1e-9);
        prop_assert!((a.variances[0] - b.variances[0]).abs() < 1e-9);
    }
}
