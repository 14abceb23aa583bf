//! The marginal-fairness baseline: the fictitious-play engine with the
//! auditor restricted to groups defined by one protected column at a time.

use crate::auditor::{AuditResult, Auditor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fictplay::{run_with_auditor, FictPlayConfig, RunOutput};
use crate::metrics::group_report;
use crate::scalar::{sum, Scalar};
use crate::subgroup::{MarginalGroup, MarginalSide, Subgroup};

/// Every marginal group of a dataset with its membership mask.
///
/// A column with exactly two observed values contributes `x_j == hi` and
/// `x_j == lo`; any other column contributes `x_j >= mean` and `x_j < mean`.
#[derive(Debug, Clone)]
pub struct MarginalFamily<T> {
    groups: Vec<(MarginalGroup<T>, Vec<bool>)>,
    means: Vec<T>,
}

impl<T: Scalar> MarginalFamily<T> {
    pub fn build(data: &Dataset<T>) -> Result<Self> {
        let x = data.protected();
        if x.cols() == 0 {
            return Err(Error::NoProtected);
        }
        let mut groups = Vec::with_capacity(2 * x.cols());
        let mut means = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let column = x.column(j);
            let mean = sum(column.iter().copied()) / T::of_count(column.len());
            means.push(mean);
            let mut distinct: Vec<T> = Vec::new();
            for &v in &column {
                if !distinct.contains(&v) {
                    distinct.push(v);
                    if distinct.len() > 2 {
                        break;
                    }
                }
            }
            let sides = if distinct.len() == 2 {
                let (lo, hi) = (
                    distinct[0].min_of(distinct[1]),
                    distinct[0].max_of(distinct[1]),
                );
                [MarginalSide::Equals(hi), MarginalSide::Equals(lo)]
            } else {
                [MarginalSide::AtLeast(mean), MarginalSide::Below(mean)]
            };
            for side in sides {
                let g = MarginalGroup { column: j, side };
                let mask = x.iter_rows().map(|r| g.contains(r)).collect();
                groups.push((g, mask));
            }
        }
        Ok(Self { groups, means })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&MarginalGroup<T>, &[bool])> {
        self.groups.iter().map(|(g, m)| (g, m.as_slice()))
    }

    /// Post-scaling column means used as thresholds.
    pub fn means(&self) -> &[T] {
        &self.means
    }
}

impl<T: Scalar> Auditor<T> for MarginalFamily<T> {
    /// Exact argmax over the family; ties keep the earliest group.
    fn audit(&self, p: &[T], data: &Dataset<T>) -> Result<AuditResult<T>> {
        let mut best: Option<AuditResult<T>> = None;
        for (g, mask) in &self.groups {
            let report = group_report(p, data.labels(), mask);
            if best.as_ref().is_none_or(|b| report.unfairness > b.value()) {
                best = Some(AuditResult {
                    group: Subgroup::Marginal(*g),
                    report,
                });
            }
        }
        best.ok_or(Error::NoProtected)
    }
}

/// Fictitious play against the marginal auditor. Traced rounds also carry
/// the rich-subgroup violation found by the heuristic auditor.
pub fn run_marginal<T: Scalar>(
    data: &Dataset<T>,
    config: &FictPlayConfig<T>,
) -> Result<RunOutput<T>> {
    let family = MarginalFamily::build(data)?;
    run_with_auditor(data, config, &family, true)
}
