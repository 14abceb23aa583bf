//! The regression and brute-force solvers against independent oracles.

#![allow(clippy::needless_range_loop)]

use fairfict::linalg::Matrix;
use fairfict::regression::{
    csc_brute_force, csc_solve, fit_least_squares, CscInstance, LinearThreshold, RIDGE_JITTER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Matrix::from_rows(&rows, d)
}

/// Normal equations of `Σ (w·x + b - t)² + ε(|w|² + b²)`, solved by
/// Gauss-Jordan with partial pivoting.
fn normal_equations_oracle(x: &Matrix<f64>, t: &[f64]) -> Vec<f64> {
    let d = x.cols() + 1;
    let mut a = vec![vec![0.0; d + 1]; d];
    for (i, row) in x.iter_rows().enumerate() {
        let z: Vec<f64> = row.iter().copied().chain([1.0]).collect();
        for r in 0..d {
            for c in 0..d {
                a[r][c] += z[r] * z[c];
            }
            a[r][d] += z[r] * t[i];
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += RIDGE_JITTER;
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..d).map(|r| a[r][d] / a[r][r]).collect()
}

/// The penalized objective the solver minimizes.
fn penalized_loss(x: &Matrix<f64>, t: &[f64], w: &[f64], b: f64) -> f64 {
    let penalty = RIDGE_JITTER * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let residuals: f64 = x
        .iter_rows()
        .zip(t)
        .map(|(row, &ti)| {
            let r: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b - ti;
            r * r
        })
        .sum();
    residuals + penalty
}

#[test]
fn least_squares_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..50 {
        let n = rng.gen_range(8..60);
        let d = rng.gen_range(1..6);
        let x = random_matrix(&mut rng, n, d);
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (w, b) = fit_least_squares(&x, &t);
        let oracle = normal_equations_oracle(&x, &t);
        for (k, (&got, &want)) in w.iter().chain([&b]).zip(&oracle).enumerate() {
            assert!(
                (got - want).abs() <= 1e-8,
                "trial {trial} coordinate {k}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn least_squares_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_matrix(&mut rng, 40, 3);
    let t: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (w, b) = fit_least_squares(&x, &t);
    let h = 1e-4;
    for k in 0..=3 {
        let shifted = |delta: f64| {
            let mut w = w.clone();
            let mut b = b;
            if k < 3 {
                w[k] += delta;
            } else {
                b += delta;
            }
            penalized_loss(&x, &t, &w, b)
        };
        let grad = (shifted(h) - shifted(-h)) / (2.0 * h);
        assert!(grad.abs() < 1e-6, "coordinate {k}: gradient {grad}");
    }
}

#[test]
fn least_squares_recovers_an_exact_affine_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 20, 2);
    let t: Vec<f64> = x
        .iter_rows()
        .map(|r| 0.5 * r[0] - 2.0 * r[1] + 0.25)
        .collect();
    let (w, b) = fit_least_squares(&x, &t);
    assert!((w[0] - 0.5).abs() < 1e-8 && (w[1] + 2.0).abs() < 1e-8 && (b - 0.25).abs() < 1e-8);
}

/// Best threshold on points ordered along one direction: every prefix/suffix
/// cut in both orientations, plus the constants.
fn one_dimensional_oracle(order: &[usize], c0: &[f64], c1: &[f64]) -> f64 {
    let n = order.len();
    let mut best = f64::INFINITY;
    for cut in 0..=n {
        for positive_above in [true, false] {
            let cost: f64 = order
                .iter()
                .enumerate()
                .map(|(rank, &i)| {
                    if (rank >= cut) == positive_above {
                        c1[i]
                    } else {
                        c0[i]
                    }
                })
                .sum();
            best = best.min(cost);
        }
    }
    best
}

#[test]
fn brute_force_on_collinear_points_matches_cut_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        // Six distinct points on the line (s, 1 - 2s) in the plane.
        let s: Vec<f64> = (0..6).map(|k| k as f64 / 5.0 - 0.5).collect();
        let rows: Vec<Vec<f64>> = s.iter().map(|&v| vec![v, 1.0 - 2.0 * v]).collect();
        let c0: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c1: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let inst = CscInstance::new(Matrix::from_rows(&rows, 2), c0.clone(), c1.clone()).unwrap();
        let h = csc_brute_force(&inst).unwrap();
        let order: Vec<usize> = (0..6).collect();
        let want = one_dimensional_oracle(&order, &c0, &c1);
        assert!(
            (inst.cost(&h) - want).abs() < 1e-12,
            "{} vs {want}",
            inst.cost(&h)
        );
    }
}

#[test]
fn brute_force_in_one_dimension_matches_cut_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let n = rng.gen_range(1..=16);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let inst = CscInstance::new(Matrix::from_rows(&rows, 1), c0.clone(), c1.clone()).unwrap();
        let got = inst.cost(&csc_brute_force(&inst).unwrap());
        assert!((got - one_dimensional_oracle(&order, &c0, &c1)).abs() < 1e-12);
    }
}

#[test]
fn regression_never_beats_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let d = rng.gen_range(1..=3);
        let x = random_matrix(&mut rng, n, d);
        let c0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let inst = CscInstance::new(x, c0, c1).unwrap();
        assert!(
            inst.cost(&csc_solve(&inst)) >= inst.cost(&csc_brute_force(&inst).unwrap()) - 1e-12
        );
    }
}

#[test]
fn regression_is_optimal_for_affine_cost_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let d = rng.gen_range(1..=2);
        let x = random_matrix(&mut rng, n, d);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-0.5..0.5);
        let c0: Vec<f64> = x
            .iter_rows()
            .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect();
        let c1 = vec![0.0; n];
        let inst = CscInstance::new(x, c0.clone(), c1).unwrap();
        let pointwise: f64 = c0.iter().map(|&c| c.min(0.0)).sum();
        let got = inst.cost(&csc_solve(&inst));
        assert!((got - pointwise).abs() < 1e-8, "{got} vs {pointwise}");
        assert!((inst.cost(&csc_brute_force(&inst).unwrap()) - pointwise).abs() < 1e-12);
    }
}

#[test]
fn constant_candidates_win_when_costs_are_uniform() {
    let x = Matrix::from_rows(&[vec![0.0], vec![1.0]], 1);
    let inst = CscInstance::new(x, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
    let h = csc_brute_force(&inst).unwrap();
    assert_eq!(h.predict(&inst.features), vec![true, true]);
    assert_eq!(
        LinearThreshold::constant(1, true).predict(&inst.features),
        vec![true, true]
    );
}
