//! False-positive subgroup fairness quantities, the constraint pair
//! `Φ±`, the game payoff, and the Learner's cost vector.
//!
//! All probabilities are empirical frequencies over the dataset. Mixtures
//! are evaluated exactly through expected predictions
//! `p_i = (1/|D|) Σ_h h(X_i)`, so every quantity here is linear in `p`.

use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::regression::{CscInstance, LinearThreshold};
use crate::scalar::{sum, Scalar};
use crate::subgroup::{GroupRegistry, Subgroup};

/// A uniform mixture over linear threshold classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureClassifier<T> {
    hypotheses: Vec<LinearThreshold<T>>,
}

impl<T: Scalar> MixtureClassifier<T> {
    pub fn new(hypotheses: Vec<LinearThreshold<T>>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::Dimension(
                "a mixture needs at least one hypothesis".into(),
            ));
        }
        Ok(Self { hypotheses })
    }

    pub fn single(h: LinearThreshold<T>) -> Self {
        Self {
            hypotheses: vec![h],
        }
    }

    pub fn hypotheses(&self) -> &[LinearThreshold<T>] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// The mixture over the first `k` hypotheses (`1 <= k <= len`).
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::Dimension(format!(
                "prefix {k} of a {}-hypothesis mixture",
                self.len()
            )));
        }
        Ok(Self {
            hypotheses: self.hypotheses[..k].to_vec(),
        })
    }

    /// Number of hypotheses predicting 1 on each row.
    pub fn positive_counts(&self, data: &Dataset<T>) -> Vec<usize> {
        let mut counts = vec![0usize; data.len()];
        for h in &self.hypotheses {
            for (c, x) in counts.iter_mut().zip(data.features().iter_rows()) {
                *c += usize::from(h.classify(x));
            }
        }
        counts
    }
}

/// `p_i = E_{h∼D}[h(X_i)]`, exact.
pub fn expected_predictions<T: Scalar>(
    mixture: &MixtureClassifier<T>,
    data: &Dataset<T>,
) -> Vec<T> {
    let k = T::of_count(mixture.len());
    mixture
        .positive_counts(data)
        .into_iter()
        .map(|c| T::of_count(c) / k)
        .collect()
}

/// Converts 0/1 labels into expected predictions.
pub fn as_predictions<T: Scalar>(labels: &[bool]) -> Vec<T> {
    labels
        .iter()
        .map(|&l| if l { T::one() } else { T::zero() })
        .collect()
}

/// Expected misclassification rate of predictions `p` against labels `y`.
pub fn error_rate<T: Scalar>(p: &[T], y: &[bool]) -> T {
    assert_eq!(p.len(), y.len());
    if p.is_empty() {
        return T::zero();
    }
    let total = sum(p
        .iter()
        .zip(y)
        .map(|(&pi, &yi)| if yi { T::one() - pi } else { pi }));
    total / T::of_count(p.len())
}

/// Mean of `p` over negatives (restricted to `mask` when given). A mask
/// selecting no negatives falls back to the unmasked rate; with no negatives
/// at all the rate is 0.
pub fn fp_rate<T: Scalar>(p: &[T], y: &[bool], mask: Option<&[bool]>) -> T {
    assert_eq!(p.len(), y.len());
    let select = |i: usize| !y[i] && mask.is_none_or(|m| m[i]);
    let count = (0..p.len()).filter(|&i| select(i)).count();
    if count == 0 {
        return match mask {
            Some(_) => fp_rate(p, y, None),
            None => T::zero(),
        };
    }
    sum((0..p.len()).filter(|&i| select(i)).map(|i| p[i])) / T::of_count(count)
}

/// Fairness of one group: `α = Pr[g = 1, y = 0]`, `β = |FP(D) - FP(D, g)|`,
/// and the γ-unfairness `α·β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessReport<T> {
    pub alpha: T,
    pub fp_base: T,
    pub fp_group: T,
    pub beta: T,
    pub unfairness: T,
    /// `FP(D, g) - FP(D)`.
    pub signed_disparity: T,
}

impl<T: Scalar> FairnessReport<T> {
    /// True when the group's false-positive rate exceeds the base rate.
    pub fn above_base(&self) -> bool {
        self.signed_disparity > T::zero()
    }

    /// `(Φ⁺, Φ⁻)` for slack `gamma`.
    pub fn phi(&self, gamma: T) -> (T, T) {
        let plus = self.alpha * (self.fp_base - self.fp_group) - gamma;
        let minus = self.alpha * (self.fp_group - self.fp_base) - gamma;
        (plus, minus)
    }
}

/// Fairness report for the group given by `mask` under predictions `p`.
pub fn group_report<T: Scalar>(p: &[T], y: &[bool], mask: &[bool]) -> FairnessReport<T> {
    assert_eq!(mask.len(), y.len());
    let fp_base = fp_rate(p, y, None);
    let fp_group = fp_rate(p, y, Some(mask));
    let selected = mask.iter().zip(y).filter(|&(&g, &yi)| g && !yi).count();
    let alpha = if y.is_empty() {
        T::zero()
    } else {
        T::of_count(selected) / T::of_count(y.len())
    };
    let signed_disparity = fp_group - fp_base;
    let beta = signed_disparity.abs();
    FairnessReport {
        alpha,
        fp_base,
        fp_group,
        beta,
        unfairness: alpha * beta,
        signed_disparity,
    }
}

pub fn gamma_unfairness<T: Scalar>(
    mixture: &MixtureClassifier<T>,
    group: &Subgroup<T>,
    data: &Dataset<T>,
) -> FairnessReport<T> {
    let p = expected_predictions(mixture, data);
    group_report(&p, data.labels(), &group.mask(data))
}

/// `(Φ⁺(D, g), Φ⁻(D, g))`.
pub fn phi_constraints<T: Scalar>(
    mixture: &MixtureClassifier<T>,
    group: &Subgroup<T>,
    gamma: T,
    data: &Dataset<T>,
) -> (T, T) {
    gamma_unfairness(mixture, group, data).phi(gamma)
}

/// The pair `(λ⁺, λ⁻)` for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEntry<T> {
    pub plus: T,
    pub minus: T,
}

/// Sparse dual variables keyed by registry id, each coordinate in `[0, C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector<T> {
    entries: BTreeMap<usize, DualEntry<T>>,
    bound: T,
}

impl<T: Scalar> DualVector<T> {
    pub fn zero(bound: T) -> Self {
        Self {
            entries: BTreeMap::new(),
            bound,
        }
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn set(&mut self, id: usize, plus: T, minus: T) -> Result<()> {
        let ok = |v: T| v >= T::zero() && v <= self.bound;
        if !ok(plus) || !ok(minus) {
            return Err(Error::Config(format!(
                "dual entry ({plus}, {minus}) outside [0, {}]",
                self.bound
            )));
        }
        if plus.is_zero() && minus.is_zero() {
            self.entries.remove(&id);
        } else {
            self.entries.insert(id, DualEntry { plus, minus });
        }
        Ok(())
    }

    pub fn get(&self, id: usize) -> DualEntry<T> {
        self.entries.get(&id).copied().unwrap_or(DualEntry {
            plus: T::zero(),
            minus: T::zero(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, DualEntry<T>)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn inf_norm(&self) -> T {
        self.entries
            .values()
            .fold(T::zero(), |m, e| m.max_of(e.plus).max_of(e.minus))
    }
}

/// The Learner's cost for labelling each point 1 under dual `lambda`
/// (labelling 0 always costs 0).
pub fn learner_cost_vector<T: Scalar>(
    lambda: &DualVector<T>,
    registry: &GroupRegistry<T>,
    data: &Dataset<T>,
) -> Result<Vec<T>> {
    let n = T::of_count(data.len());
    let inv_n = T::one() / n;
    let mut groups = Vec::new();
    for (id, e) in lambda.iter() {
        let g = registry.get(id).ok_or(Error::UnresolvedGroup(id))?;
        groups.push((e.plus - e.minus, g));
    }
    let costs = data
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y {
                return -inv_n;
            }
            let penalty = sum(groups.iter().map(|(w, g)| {
                let member = if g.mask[i] { T::one() } else { T::zero() };
                *w * (g.negative_share - member)
            }));
            inv_n + inv_n * penalty
        })
        .collect();
    Ok(costs)
}

/// The Learner's CSC instance `LC(λ)` over the full features.
pub fn learner_costs<T: Scalar>(
    lambda: &DualVector<T>,
    registry: &GroupRegistry<T>,
    data: &Dataset<T>,
) -> Result<CscInstance<T>> {
    let c1 = learner_cost_vector(lambda, registry, data)?;
    CscInstance::new(data.features().clone(), vec![T::zero(); data.len()], c1)
}

/// `U(h, λ) = err(h) + Σ_g λ⁺ Φ⁺(h, g) + λ⁻ Φ⁻(h, g)`.
pub fn payoff<T: Scalar>(
    h: &LinearThreshold<T>,
    lambda: &DualVector<T>,
    gamma: T,
    registry: &GroupRegistry<T>,
    data: &Dataset<T>,
) -> Result<T> {
    let p = as_predictions(&h.predict(data.features()));
    let mut u = error_rate(&p, data.labels());
    for (id, e) in lambda.iter() {
        let g = registry.get(id).ok_or(Error::UnresolvedGroup(id))?;
        let (plus, minus) = group_report(&p, data.labels(), &g.mask).phi(gamma);
        u = u + e.plus * plus + e.minus * minus;
    }
    Ok(u)
}
