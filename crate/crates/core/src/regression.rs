//! Cost-sensitive classification over linear thresholds.
//!
//! The heuristic oracle fits one least-squares regression to each cost
//! vector and predicts the label whose regressed cost is lower. Because the
//! difference of two affine functions is affine, the result is itself a
//! linear threshold. [`csc_brute_force`] is an exact (exponential) oracle
//! for tiny instances, used to measure the heuristic's gap.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::linalg::{null_vector, solve_square, LdlFactor, Matrix};
use crate::scalar::{dot, sum, Scalar};

/// Ridge jitter added to the diagonal of the normal equations.
pub const RIDGE_JITTER: f64 = 1e-8;

/// Largest instance [`csc_brute_force`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 16;
pub const BRUTE_FORCE_MAX_D: usize = 3;

/// `x -> 1` iff `weights · x + intercept > 0`. A decision value of exactly
/// zero predicts 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearThreshold<T> {
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LinearThreshold<T> {
    pub fn new(weights: Vec<T>, intercept: T) -> Self {
        Self { weights, intercept }
    }

    /// Predicts `label` everywhere on inputs of dimension `dim`.
    pub fn constant(dim: usize, label: bool) -> Self {
        let b = if label { T::one() } else { -T::one() };
        Self {
            weights: vec![T::zero(); dim],
            intercept: b,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[T]) -> T {
        dot(&self.weights, x) + self.intercept
    }

    pub fn classify(&self, x: &[T]) -> bool {
        self.decision(x) > T::zero()
    }

    /// Labels for every row of `features`.
    pub fn predict(&self, features: &Matrix<T>) -> Vec<bool> {
        features.iter_rows().map(|r| self.classify(r)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite_value() && self.weights.iter().all(|w| w.is_finite_value())
    }
}

/// Points with a cost for predicting 0 (`c0`) and for predicting 1 (`c1`).
#[derive(Debug, Clone, PartialEq)]
pub struct CscInstance<T> {
    pub features: Matrix<T>,
    pub c0: Vec<T>,
    pub c1: Vec<T>,
}

impl<T: Scalar> CscInstance<T> {
    pub fn new(features: Matrix<T>, c0: Vec<T>, c1: Vec<T>) -> Result<Self> {
        if c0.len() != features.rows() || c1.len() != features.rows() {
            return Err(Error::Dimension(format!(
                "{} points but {} / {} costs",
                features.rows(),
                c0.len(),
                c1.len()
            )));
        }
        if c0.iter().chain(&c1).any(|c| !c.is_finite_value()) {
            return Err(Error::NonFinite("costs"));
        }
        Ok(Self { features, c0, c1 })
    }

    pub fn len(&self) -> usize {
        self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c0.is_empty()
    }

    /// Total cost of a labelling, summed in index order.
    pub fn cost_of_labels(&self, labels: &[bool]) -> T {
        sum(labels
            .iter()
            .enumerate()
            .map(|(i, &l)| if l { self.c1[i] } else { self.c0[i] }))
    }

    pub fn cost(&self, h: &LinearThreshold<T>) -> T {
        self.cost_of_labels(&h.predict(&self.features))
    }
}

/// Least-squares fitter for a fixed design matrix. The jittered normal
/// equations are factored once; each [`fit`](Self::fit) is then a pair of
/// triangular solves.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    features: Matrix<T>,
    factor: LdlFactor<T>,
}

impl<T: Scalar> LeastSquares<T> {
    pub fn new(features: Matrix<T>) -> Self {
        let d = features.cols();
        let mut gram = Matrix::zeros(d + 1, d + 1);
        for row in features.iter_rows() {
            for a in 0..=d {
                let za = if a < d { row[a] } else { T::one() };
                for b in 0..=a {
                    let zb = if b < d { row[b] } else { T::one() };
                    gram.set(a, b, gram.get(a, b) + za * zb);
                }
            }
        }
        let jitter = T::of(RIDGE_JITTER);
        for a in 0..=d {
            gram.set(a, a, gram.get(a, a) + jitter);
            for b in 0..a {
                gram.set(b, a, gram.get(a, b));
            }
        }
        let factor = LdlFactor::new(&gram).expect("jittered Gram matrix is positive definite");
        Self { features, factor }
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    /// Minimizes `Σ (w·x_i + b - t_i)² + ε(|w|² + b²)` over `(w, b)`.
    pub fn fit(&self, targets: &[T]) -> (Vec<T>, T) {
        assert_eq!(targets.len(), self.features.rows());
        let d = self.features.cols();
        let mut rhs = vec![T::zero(); d + 1];
        for (row, &t) in self.features.iter_rows().zip(targets) {
            if t.is_zero() {
                continue;
            }
            for a in 0..d {
                rhs[a] = rhs[a] + row[a] * t;
            }
            rhs[d] = rhs[d] + t;
        }
        let mut beta = self.factor.solve(&rhs);
        let intercept = beta.pop().expect("intercept coordinate");
        (beta, intercept)
    }

    /// The heuristic CSC oracle on this design: predict 1 iff the regressed
    /// cost of 1 is below the regressed cost of 0.
    pub fn csc(&self, c0: &[T], c1: &[T]) -> LinearThreshold<T> {
        let (w0, b0) = self.fit(c0);
        let (w1, b1) = self.fit(c1);
        let weights = w0.iter().zip(&w1).map(|(&a, &b)| a - b).collect();
        LinearThreshold::new(weights, b0 - b1)
    }
}

/// Affine least-squares fit with ridge jitter; returns `(weights, intercept)`.
pub fn fit_least_squares<T: Scalar>(features: &Matrix<T>, targets: &[T]) -> (Vec<T>, T) {
    LeastSquares::new(features.clone()).fit(targets)
}

/// Regression-based CSC heuristic.
pub fn csc_solve<T: Scalar>(inst: &CscInstance<T>) -> LinearThreshold<T> {
    LeastSquares::new(inst.features.clone()).csc(&inst.c0, &inst.c1)
}

/// Exact CSC over linear thresholds for tiny instances.
///
/// Candidates are the two constant hypotheses plus, for every affinely
/// independent set `S` of `d` points, the hyperplane through `S` in both
/// orientations, nudged so each point of `S` lands on a chosen side. For
/// points in general position this realizes every linearly separable
/// labelling. When `n <= d` every labelling is interpolated directly.
///
/// Ties go to fewer positive predictions, then to the earlier candidate.
pub fn csc_brute_force<T: Scalar>(inst: &CscInstance<T>) -> Result<LinearThreshold<T>> {
    let n = inst.len();
    let d = inst.features.cols();
    if n > BRUTE_FORCE_MAX_N || d > BRUTE_FORCE_MAX_D {
        return Err(Error::SizeGuard {
            n,
            d,
            max_n: BRUTE_FORCE_MAX_N,
            max_d: BRUTE_FORCE_MAX_D,
        });
    }
    let mut best: Option<(T, usize, LinearThreshold<T>)> = None;
    for h in threshold_candidates(&inst.features) {
        let labels = h.predict(&inst.features);
        let cost = inst.cost_of_labels(&labels);
        let positives = labels.iter().filter(|&&l| l).count();
        let better = match &best {
            None => true,
            Some((bc, bp, _)) => cost < *bc || (cost == *bc && positives < *bp),
        };
        if better {
            best = Some((cost, positives, h));
        }
    }
    Ok(best.expect("constant candidates always exist").2)
}

/// Enumerates the brute-force candidate hypotheses in a fixed order.
pub fn threshold_candidates<T: Scalar>(features: &Matrix<T>) -> Vec<LinearThreshold<T>> {
    let n = features.rows();
    let d = features.cols();
    let mut out = vec![
        LinearThreshold::constant(d, false),
        LinearThreshold::constant(d, true),
    ];
    if d == 0 || n == 0 {
        return out;
    }
    let aug = |i: usize| -> Vec<T> {
        let mut v = features.row(i).to_vec();
        v.push(T::one());
        v
    };
    let all: Vec<usize> = (0..n).collect();

    if n <= d {
        let zero = vec![T::zero(); d + 1];
        push_nudged(&mut out, features, &all, &zero, &aug);
    }
    for subset in combinations(n, d) {
        let rows: Vec<Vec<T>> = subset.iter().map(|&i| aug(i)).collect();
        let Some(normal) = null_vector(&Matrix::from_rows(&rows, d + 1)) else {
            continue;
        };
        if !normal.iter().all(|v| v.is_finite_value()) {
            continue;
        }
        let scale = normal.iter().fold(T::zero(), |m, v| m.max_of(v.abs()));
        if scale.is_zero() {
            continue;
        }
        let unit: Vec<T> = normal.iter().map(|&v| v / scale).collect();
        let flipped: Vec<T> = unit.iter().map(|&v| -v).collect();
        push_nudged(&mut out, features, &subset, &unit, &aug);
        push_nudged(&mut out, features, &subset, &flipped, &aug);
    }
    out
}

/// Adds `base + η·δ_σ` for every sign pattern σ over `on_plane`, where
/// `δ_σ` is the minimum-norm direction taking value σ_j at each point of
/// `on_plane` and η is small enough not to move any other point across `base`.
fn push_nudged<T: Scalar>(
    out: &mut Vec<LinearThreshold<T>>,
    features: &Matrix<T>,
    on_plane: &[usize],
    base: &[T],
    aug: &dyn Fn(usize) -> Vec<T>,
) {
    let n = features.rows();
    let d = features.cols();
    let k = on_plane.len();
    let m_rows: Vec<Vec<T>> = on_plane.iter().map(|&i| aug(i)).collect();
    let mut gram = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            gram.set(a, b, dot(&m_rows[a], &m_rows[b]));
        }
    }
    let xmax = features
        .iter_rows()
        .flatten()
        .fold(T::one(), |m, v| m.max_of(v.abs()));
    let tol = T::of(1e-12) * (T::one() + xmax);
    let margins: Vec<T> = (0..n).map(|i| dot(base, &aug(i))).collect();
    let min_margin = (0..n)
        .filter(|i| !on_plane.contains(i))
        .map(|i| margins[i].abs())
        .filter(|&m| m > tol)
        .fold(None, |acc: Option<T>, m| {
            Some(acc.map_or(m, |a| a.min_of(m)))
        });

    for pattern in 0..(1usize << k) {
        let sigma: Vec<T> = (0..k)
            .map(|j| {
                if pattern >> j & 1 == 1 {
                    T::one()
                } else {
                    -T::one()
                }
            })
            .collect();
        let Some(coef) = solve_square(&gram, &sigma) else {
            return;
        };
        let mut delta = vec![T::zero(); d + 1];
        for (row, &c) in m_rows.iter().zip(&coef) {
            for (dl, &v) in delta.iter_mut().zip(row) {
                *dl = *dl + c * v;
            }
        }
        let reach = (0..n).fold(T::zero(), |m, i| m.max_of(dot(&delta, &aug(i)).abs()));
        let two = T::one() + T::one();
        let eta = match min_margin {
            Some(mm) if !reach.is_zero() => (mm / (two * reach)).min_of(T::one()),
            _ => T::one(),
        };
        let w: Vec<T> = base
            .iter()
            .zip(&delta)
            .map(|(&b, &dl)| b + eta * dl)
            .collect();
        let h = LinearThreshold::new(w[..d].to_vec(), w[d]);
        if h.is_finite() {
            out.push(h);
        }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Matrix<f64> {
        Matrix::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(), 1)
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
        assert_eq!(combinations(3, 1).len(), 3);
    }

    #[test]
    fn constant_targets_fit_intercept_only() {
        let x: Matrix<f64> = Matrix::from_rows(
            &[
                vec![0.3, -1.0],
                vec![2.0, 0.5],
                vec![-0.7, 0.1],
                vec![1.0, 1.0],
            ],
            2,
        );
        let (w, b) = fit_least_squares(&x, &[4.0; 4]);
        assert!(w.iter().all(|v| v.abs() < 1e-7), "{w:?}");
        assert!((b - 4.0).abs() < 1e-7);
    }

    #[test]
    fn affine_targets_recovered() {
        let x = line(&[-1.0, -0.5, 0.0, 0.25, 1.0, 3.0]);
        let t: Vec<f64> = x.iter_rows().map(|r| 2.0 * r[0] + 3.0).collect();
        let (w, b) = fit_least_squares(&x, &t);
        assert!((w[0] - 2.0).abs() < 1e-6);
        assert!((b - 3.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_design_is_solvable() {
        // Duplicated column and a single row: singular without jitter.
        let x: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 1.0]], 2);
        let (w, b) = fit_least_squares(&x, &[1.0]);
        assert!(w.iter().chain([&b]).all(|v| v.is_finite()));
        assert!((w[0] + w[1] + b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csc_all_ones_when_one_is_cheaper() {
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![-0.4, 0.9], vec![0.5, -0.5]], 2);
        let inst = CscInstance::new(x.clone(), vec![0.0; 3], vec![-1.0; 3]).unwrap();
        let h = csc_solve(&inst);
        assert!(h.predict(&x).iter().all(|&l| l));
    }

    #[test]
    fn csc_zero_costs_predict_zero() {
        let x = line(&[-1.0, 0.0, 1.0]);
        let inst = CscInstance::new(x.clone(), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let h = csc_solve(&inst);
        assert_eq!(h.decision(&[0.5]), 0.0);
        assert!(h.predict(&x).iter().all(|&l| !l));
    }

    #[test]
    fn brute_force_trivial_cases() {
        let x = Matrix::from_rows(
            &[
                vec![0.1, 0.2],
                vec![-0.4, 0.9],
                vec![0.5, -0.5],
                vec![0.0, 0.3],
            ],
            2,
        );
        let inst = CscInstance::new(x.clone(), vec![1.0; 4], vec![0.0; 4]).unwrap();
        let h = csc_brute_force(&inst).unwrap();
        assert_eq!(inst.cost(&h), 0.0);
        assert!(h.predict(&x).iter().all(|&l| l));

        let c = vec![0.3, -0.2, 0.7, 0.1];
        let inst = CscInstance::new(x.clone(), c.clone(), c.clone()).unwrap();
        let h = csc_brute_force(&inst).unwrap();
        assert_eq!(h, LinearThreshold::constant(2, false));
        assert_eq!(inst.cost(&h), sum(c));
    }

    #[test]
    fn brute_force_size_guard() {
        let x = Matrix::<f64>::zeros(17, 1);
        let inst = CscInstance::new(x, vec![0.0; 17], vec![0.0; 17]).unwrap();
        assert!(matches!(
            csc_brute_force(&inst),
            Err(Error::SizeGuard { .. })
        ));
        let x = Matrix::<f64>::zeros(3, 4);
        let inst = CscInstance::new(x, vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert!(matches!(
            csc_brute_force(&inst),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn brute_force_isolates_a_corner() {
        // Only (1, 1) is cheap to label positive.
        let x = Matrix::from_rows(
            &[
                vec![1.0, 1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
            ],
            2,
        );
        let inst = CscInstance::new(x.clone(), vec![0.0; 4], vec![-1.0, 1.0, 1.0, 1.0]).unwrap();
        let h = csc_brute_force(&inst).unwrap();
        assert_eq!(h.predict(&x), vec![true, false, false, false]);
    }

    #[test]
    fn interpolation_when_points_do_not_exceed_dimension() {
        let x = Matrix::from_rows(&[vec![0.5, -0.2]], 2);
        let inst = CscInstance::new(x.clone(), vec![0.0], vec![-2.0]).unwrap();
        assert_eq!(inst.cost(&csc_brute_force(&inst).unwrap()), -2.0);
    }

    #[test]
    fn mismatched_costs_rejected() {
        let x = line(&[0.0, 1.0]);
        assert!(CscInstance::new(x.clone(), vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(CscInstance::new(x, vec![0.0, f64::NAN], vec![0.0, 0.0]).is_err());
    }
}
