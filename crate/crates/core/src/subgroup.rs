//! Group indicators over protected attributes and the run-local registry
//! that gives each discovered group a stable integer id.

use std::fmt;

use crate::dataset::Dataset;
use crate::regression::LinearThreshold;
use crate::scalar::Scalar;

/// Which rows of one protected column a marginal group selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalSide<T> {
    /// `x_j == value`, for columns with exactly two observed values.
    Equals(T),
    /// `x_j >= value`.
    AtLeast(T),
    /// `x_j < value`.
    Below(T),
}

/// A group defined by a single protected column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalGroup<T> {
    pub column: usize,
    pub side: MarginalSide<T>,
}

impl<T: Scalar> MarginalGroup<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        let v = x[self.column];
        match self.side {
            MarginalSide::Equals(a) => v == a,
            MarginalSide::AtLeast(a) => v >= a,
            MarginalSide::Below(a) => v < a,
        }
    }
}

/// A subgroup indicator `g(x)` over protected attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum Subgroup<T> {
    /// `g(x) = 1` iff the threshold classifies `x` as 1.
    Threshold(LinearThreshold<T>),
    Marginal(MarginalGroup<T>),
}

impl<T: Scalar> Subgroup<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        match self {
            Subgroup::Threshold(h) => h.classify(x),
            Subgroup::Marginal(m) => m.contains(x),
        }
    }

    /// Membership of every row of the dataset's protected attributes.
    pub fn mask(&self, data: &Dataset<T>) -> Vec<bool> {
        data.protected()
            .iter_rows()
            .map(|x| self.contains(x))
            .collect()
    }
}

impl<T: Scalar> fmt::Display for Subgroup<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subgroup::Threshold(h) => {
                write!(f, "threshold(b={}", h.intercept)?;
                for w in &h.weights {
                    write!(f, " {w}")?;
                }
                write!(f, ")")
            }
            Subgroup::Marginal(m) => match m.side {
                MarginalSide::Equals(a) => write!(f, "x{} == {a}", m.column),
                MarginalSide::AtLeast(a) => write!(f, "x{} >= {a}", m.column),
                MarginalSide::Below(a) => write!(f, "x{} < {a}", m.column),
            },
        }
    }
}

/// A registered group with its membership mask and `Pr[g(x) = 1 | y = 0]`
/// precomputed on the dataset.
#[derive(Debug, Clone)]
pub struct RegisteredGroup<T> {
    pub group: Subgroup<T>,
    pub mask: Vec<bool>,
    pub negative_share: T,
}

/// Groups discovered during a run, indexed by insertion order. Duplicates
/// are detected by exact equality of the descriptor only.
#[derive(Debug, Clone, Default)]
pub struct GroupRegistry<T> {
    groups: Vec<RegisteredGroup<T>>,
}

impl<T: Scalar> GroupRegistry<T> {
    pub fn new() -> Self {
        Self { groups: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&RegisteredGroup<T>> {
        self.groups.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &RegisteredGroup<T>)> {
        self.groups.iter().enumerate()
    }

    pub fn find(&self, group: &Subgroup<T>) -> Option<usize> {
        self.groups.iter().position(|g| &g.group == group)
    }

    /// Returns the id of `group`, registering it first if needed.
    pub fn register(&mut self, group: &Subgroup<T>, data: &Dataset<T>) -> usize {
        if let Some(id) = self.find(group) {
            return id;
        }
        let mask = group.mask(data);
        let in_group = mask
            .iter()
            .zip(data.labels())
            .filter(|&(&g, &y)| g && !y)
            .count();
        let negative_share = T::of_count(in_group) / T::of_count(data.negatives());
        self.groups.push(RegisteredGroup {
            group: group.clone(),
            mask,
            negative_share,
        });
        self.groups.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_gerrymander_fixture;

    #[test]
    fn registry_deduplicates_exact_matches() {
        let data = make_gerrymander_fixture::<f64>();
        let mut reg = GroupRegistry::new();
        let blue = Subgroup::Marginal(MarginalGroup {
            column: 0,
            side: MarginalSide::Equals(1.0),
        });
        let man = Subgroup::Threshold(LinearThreshold::new(vec![0.0, 1.0], 0.0));
        let nearly_man = Subgroup::Threshold(LinearThreshold::new(vec![0.0, 1.0], 1e-15));
        assert_eq!(reg.register(&blue, &data), 0);
        assert_eq!(reg.register(&man, &data), 1);
        assert_eq!(reg.register(&blue, &data), 0);
        assert_eq!(reg.register(&nearly_man, &data), 2);
        let g = reg.get(0).unwrap();
        assert_eq!(g.mask.iter().filter(|&&m| m).count(), 4);
        assert_eq!(g.negative_share, 0.5);
    }

    #[test]
    fn marginal_sides() {
        let ge = MarginalGroup {
            column: 0,
            side: MarginalSide::AtLeast(0.0),
        };
        let lt = MarginalGroup {
            column: 0,
            side: MarginalSide::Below(0.0),
        };
        assert!(ge.contains(&[0.0]) && !lt.contains(&[0.0]));
        assert!(lt.contains(&[-0.5]));
    }
}
