//! Auditing: find the subgroup whose false-positive disparity, weighted by
//! its negative mass, is largest.
//!
//! For predictions `p` and base rate `FP(D)`, a group's weighted signed
//! disparity is linear in its indicator:
//!
//! ```text
//! α·(FP(D,g) − FP(D)) = (1/n) Σ_{i: y_i = 0} g(x_i)·(p_i − FP(D))
//! ```
//!
//! so maximizing it in either direction is a cost-sensitive classification
//! problem over the protected attributes with `c¹_i = ∓(p_i − FP(D))/n` on
//! negatives and zero cost elsewhere. [`HeuristicAuditor`] solves both
//! directions with the regression oracle; [`audit_exhaustive`] solves them
//! exactly on tiny instances.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::marginal::MarginalFamily;
use crate::metrics::{
    expected_predictions, fp_rate, group_report, FairnessReport, MixtureClassifier,
};
use crate::regression::{csc_brute_force, CscInstance, LeastSquares, LinearThreshold};
use crate::scalar::Scalar;
use crate::subgroup::Subgroup;

/// A witnessing group and its fairness report.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditResult<T> {
    pub group: Subgroup<T>,
    pub report: FairnessReport<T>,
}

impl<T: Scalar> AuditResult<T> {
    /// The group's γ-unfairness `α·β`.
    pub fn value(&self) -> T {
        self.report.unfairness
    }

    /// +1 when the group's false-positive rate is above the base rate, else −1.
    pub fn direction(&self) -> i8 {
        if self.report.above_base() {
            1
        } else {
            -1
        }
    }
}

/// A best-response oracle for the auditing player.
pub trait Auditor<T: Scalar>: Send + Sync {
    /// Audits the expected predictions `p` of some classifier on `data`.
    fn audit(&self, p: &[T], data: &Dataset<T>) -> Result<AuditResult<T>>;
}

fn direction_costs<T: Scalar>(p: &[T], data: &Dataset<T>, above: bool) -> Vec<T> {
    let base = fp_rate(p, data.labels(), None);
    let n = T::of_count(data.len());
    p.iter()
        .zip(data.labels())
        .map(|(&pi, &y)| {
            if y {
                T::zero()
            } else if above {
                -(pi - base) / n
            } else {
                (pi - base) / n
            }
        })
        .collect()
}

fn evaluate<T: Scalar>(p: &[T], data: &Dataset<T>, group: Subgroup<T>) -> AuditResult<T> {
    let report = group_report(p, data.labels(), &group.mask(data));
    AuditResult { group, report }
}

/// Picks the larger of the two directional candidates; ties keep the first.
fn larger<T: Scalar>(a: AuditResult<T>, b: AuditResult<T>) -> AuditResult<T> {
    if b.value() > a.value() {
        b
    } else {
        a
    }
}

/// Regression-heuristic auditor over linear thresholds on the protected
/// attributes. The least-squares factorization is built once per dataset.
#[derive(Debug, Clone)]
pub struct HeuristicAuditor<T> {
    solver: LeastSquares<T>,
}

impl<T: Scalar> HeuristicAuditor<T> {
    pub fn new(data: &Dataset<T>) -> Self {
        Self {
            solver: LeastSquares::new(data.protected().clone()),
        }
    }
}

impl<T: Scalar> Auditor<T> for HeuristicAuditor<T> {
    fn audit(&self, p: &[T], data: &Dataset<T>) -> Result<AuditResult<T>> {
        if data.negatives() == 0 {
            return Err(Error::NoNegatives);
        }
        let zeros = vec![T::zero(); data.len()];
        let candidates = [true, false].map(|above| {
            let g = self.solver.csc(&zeros, &direction_costs(p, data, above));
            evaluate(p, data, Subgroup::Threshold(g))
        });
        let [a, b] = candidates;
        Ok(larger(a, b))
    }
}

/// Heuristic audit of a mixture over linear-threshold subgroups.
pub fn audit_heuristic<T: Scalar>(
    mixture: &MixtureClassifier<T>,
    data: &Dataset<T>,
) -> Result<AuditResult<T>> {
    HeuristicAuditor::new(data).audit(&expected_predictions(mixture, data), data)
}

/// Exact audit over the marginal family (one group per binary value, or per
/// side of the mean for other columns).
pub fn audit_marginal<T: Scalar>(
    mixture: &MixtureClassifier<T>,
    data: &Dataset<T>,
) -> Result<AuditResult<T>> {
    MarginalFamily::build(data)?.audit(&expected_predictions(mixture, data), data)
}

/// Exact audit over all linear-threshold subgroups, for datasets with at
/// most 16 distinct protected rows and at most 3 protected attributes.
/// Rows sharing protected attributes are merged by summing their costs.
pub fn audit_exhaustive<T: Scalar>(p: &[T], data: &Dataset<T>) -> Result<AuditResult<T>> {
    let x = data.protected();
    let mut distinct: Vec<&[T]> = Vec::new();
    let mut owner = Vec::with_capacity(data.len());
    for row in x.iter_rows() {
        let k = match distinct.iter().position(|r| *r == row) {
            Some(k) => k,
            None => {
                distinct.push(row);
                distinct.len() - 1
            }
        };
        owner.push(k);
    }
    let points = Matrix::from_rows(
        &distinct.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        x.cols(),
    );
    let mut best: Option<AuditResult<T>> = None;
    for above in [true, false] {
        let per_row = direction_costs(p, data, above);
        let mut c1 = vec![T::zero(); distinct.len()];
        for (i, c) in per_row.into_iter().enumerate() {
            c1[owner[i]] = c1[owner[i]] + c;
        }
        let inst = CscInstance::new(points.clone(), vec![T::zero(); distinct.len()], c1)?;
        let g = csc_brute_force(&inst)?;
        let found = evaluate(p, data, Subgroup::Threshold(g));
        best = Some(match best {
            None => found,
            Some(b) => larger(b, found),
        });
    }
    Ok(best.expect("two directions audited"))
}

/// Grid axis values `{-1.0, -0.9, …, 0.9}`.
pub fn grid_axis<T: Scalar>() -> Vec<T> {
    let ten = T::of_count(10);
    (-10i32..10)
        .map(|i| T::from_i32(i).expect("small integer") / ten)
        .collect()
}

/// One subgroup `g_θ(x) = 1{θ₁x₁ + θ₂x₂ ≥ 0}` of the discrimination surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell<T> {
    pub theta1: T,
    pub theta2: T,
    /// `α·(FP(D, g_θ) − FP(D))`.
    pub signed_disparity: T,
    pub unfairness: T,
}

/// γ-unfairness of the 400 subgroups `g_θ` over two protected columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid<T> {
    pub attrs: (usize, usize),
    /// Row-major in `(θ₁, θ₂)`.
    pub cells: Vec<SurfaceCell<T>>,
}

impl<T: Scalar> SurfaceGrid<T> {
    pub fn max_cell(&self) -> &SurfaceCell<T> {
        self.cells
            .iter()
            .reduce(|best, c| {
                if c.unfairness > best.unfairness {
                    c
                } else {
                    best
                }
            })
            .expect("grid is non-empty")
    }

    /// Share of cells whose γ-unfairness strictly exceeds `threshold`.
    pub fn fraction_above(&self, threshold: T) -> f64 {
        let count = self
            .cells
            .iter()
            .filter(|c| c.unfairness > threshold)
            .count();
        count as f64 / self.cells.len() as f64
    }
}

/// Evaluates the discrimination surface over protected columns `attrs`.
pub fn audit_grid<T: Scalar>(
    p: &[T],
    data: &Dataset<T>,
    attrs: (usize, usize),
) -> Result<SurfaceGrid<T>> {
    let x = data.protected();
    for j in [attrs.0, attrs.1] {
        if j >= x.cols() {
            return Err(Error::Dimension(format!(
                "protected column {j} out of range ({} columns)",
                x.cols()
            )));
        }
        if let Some(v) = x.iter_rows().map(|r| r[j]).find(|v| v.abs() > T::one()) {
            return Err(Error::UnscaledColumn {
                column: data.protected_names()[j].clone(),
                value: v.to_f64_lossy(),
            });
        }
    }
    let axis = grid_axis::<T>();
    let mut cells = Vec::with_capacity(axis.len() * axis.len());
    for &t1 in &axis {
        for &t2 in &axis {
            let mask: Vec<bool> = x
                .iter_rows()
                .map(|r| t1 * r[attrs.0] + t2 * r[attrs.1] >= T::zero())
                .collect();
            let rep = group_report(p, data.labels(), &mask);
            cells.push(SurfaceCell {
                theta1: t1,
                theta2: t2,
                signed_disparity: rep.alpha * rep.signed_disparity,
                unfairness: rep.unfairness,
            });
        }
    }
    Ok(SurfaceGrid { attrs, cells })
}

/// The subgroup `g_θ` as a threshold over the two columns. Because the
/// surface boundary is closed, this is only used for reporting.
pub fn grid_group<T: Scalar>(
    dim: usize,
    attrs: (usize, usize),
    theta: (T, T),
) -> LinearThreshold<T> {
    let mut w = vec![T::zero(); dim];
    w[attrs.0] = theta.0;
    w[attrs.1] = theta.1;
    LinearThreshold::new(w, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gerrymandering_classifier, make_gerrymander_fixture};
    use crate::metrics::as_predictions;

    fn figure_one_predictions(data: &Dataset<f64>) -> Vec<f64> {
        as_predictions(&gerrymandering_classifier().predict(data.features()))
    }

    #[test]
    fn regression_auditor_is_blind_to_symmetric_intersections() {
        // Against the blue-man/green-woman classifier the directional costs
        // are ±(race·gender)/16 on the negatives, which is orthogonal to every
        // affine function of (race, gender): both regressions come out zero and
        // the tie rule selects nobody.
        let data = make_gerrymander_fixture::<f64>();
        let mix = MixtureClassifier::single(gerrymandering_classifier());
        let r = audit_heuristic(&mix, &data).unwrap();
        assert_eq!(
            r.group,
            Subgroup::Threshold(LinearThreshold::new(vec![0.0, 0.0], 0.0))
        );
        assert_eq!(r.value(), 0.0);
    }

    #[test]
    fn heuristic_finds_a_single_unfair_intersection() {
        // Positive only on blue men: FP(D) = 1/4, FP(blue man) = 1, α = 1/8.
        let data = make_gerrymander_fixture::<f64>();
        let h = LinearThreshold::new(vec![1.0, 1.0, 0.0], -1.0);
        let mix = MixtureClassifier::single(h.clone());
        let r = audit_heuristic(&mix, &data).unwrap();
        assert_eq!(r.value(), 0.09375);
        assert_eq!(r.direction(), 1);
        let p = as_predictions(&h.predict(data.features()));
        assert_eq!(
            group_report(&p, data.labels(), &r.group.mask(&data)),
            r.report
        );
        assert_eq!(audit_exhaustive(&p, &data).unwrap().value(), 0.09375);
    }

    #[test]
    fn fair_and_constant_classifiers_audit_to_zero() {
        let data = make_gerrymander_fixture::<f64>();
        let auditor = HeuristicAuditor::new(&data);
        for p in [vec![0.0; 8], vec![0.3; 8], vec![1.0; 8]] {
            assert_eq!(auditor.audit(&p, &data).unwrap().value(), 0.0);
        }
    }

    #[test]
    fn exhaustive_on_fixture() {
        let data = make_gerrymander_fixture::<f64>();
        let r = audit_exhaustive(&figure_one_predictions(&data), &data).unwrap();
        assert!((r.value() - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn marginal_on_fixture_is_zero() {
        let data = make_gerrymander_fixture::<f64>();
        let mix = MixtureClassifier::single(gerrymandering_classifier());
        assert_eq!(audit_marginal(&mix, &data).unwrap().value(), 0.0);
    }

    #[test]
    fn grid_shape_and_origin() {
        let data = make_gerrymander_fixture::<f64>();
        let p = figure_one_predictions(&data);
        let grid = audit_grid(&p, &data, (0, 1)).unwrap();
        assert_eq!(grid.cells.len(), 400);
        let origin = grid
            .cells
            .iter()
            .find(|c| c.theta1 == 0.0 && c.theta2 == 0.0)
            .unwrap();
        assert_eq!(origin.unfairness, 0.0);
        assert_eq!(grid_axis::<f64>()[0], -1.0);
        assert!((grid_axis::<f64>()[19] - 0.9).abs() < 1e-15);

        let zero = audit_grid(&[0.0; 8], &data, (0, 1)).unwrap();
        assert!(zero
            .cells
            .iter()
            .all(|c| c.unfairness == 0.0 && c.signed_disparity == 0.0));
        assert_eq!(zero.fraction_above(0.0), 0.0);
    }

    #[test]
    fn grid_rejects_bad_columns() {
        let data = make_gerrymander_fixture::<f64>();
        assert!(audit_grid(&[0.0; 8], &data, (0, 5)).is_err());
        let x = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]], 2);
        let wide = Dataset::new(
            x,
            Matrix::zeros(2, 0),
            vec![false, true],
            vec!["a".into(), "b".into()],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            audit_grid(&[0.0; 2], &wide, (0, 1)),
            Err(Error::UnscaledColumn { .. })
        ));
    }
}
