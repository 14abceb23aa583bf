//! Fair fictitious play.
//!
//! Round `t` (for `t = 1..=T`) sees the uniform mixture `D̄` over
//! `h⁰..h^{t-1}` and the empirical dual `λ̄ = Σ_{t'<t} λ^{t'} / t`, where
//! `λ⁰ = 0`. The Learner best responds to `λ̄` with the CSC oracle on
//! `LC(λ̄)`; the Auditor best responds to `D̄` by putting mass `C` on the
//! violated side of the most unfair group it finds, or playing zero when
//! that group is within the slack `γ`.
//!
//! Trace record `t` describes the mixture over `h⁰..h^t`, so record 0 is the
//! unconstrained classifier and record `T` is the returned mixture.

use std::collections::BTreeMap;

use crate::auditor::{AuditResult, Auditor, HeuristicAuditor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{
    as_predictions, error_rate, learner_cost_vector, DualVector, MixtureClassifier,
};
use crate::regression::{LeastSquares, LinearThreshold};
use crate::scalar::Scalar;
use crate::subgroup::GroupRegistry;

/// Default dual bound.
pub const DEFAULT_C: f64 = 10.0;

/// Every round is traced up to this many iterations; every tenth beyond.
pub const DENSE_TRACE_LIMIT: usize = 10_000;

pub fn default_trace_every(iterations: usize) -> usize {
    if iterations <= DENSE_TRACE_LIMIT {
        1
    } else {
        10
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FictPlayConfig<T> {
    /// Fairness slack.
    pub gamma: T,
    /// Dual bound.
    pub c: T,
    pub iterations: usize,
    pub trace_every: usize,
}

impl<T: Scalar> FictPlayConfig<T> {
    pub fn new(gamma: T, iterations: usize) -> Self {
        Self {
            gamma,
            c: T::of(DEFAULT_C),
            iterations,
            trace_every: default_trace_every(iterations),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.c <= T::zero() {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.gamma < T::zero() || self.gamma > T::one() {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::Config("trace cadence must be at least 1".into()));
        }
        Ok(())
    }
}

/// One traced round.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub t: usize,
    /// Error of the mixture over `h⁰..h^t`.
    pub eps_mix: T,
    /// Violation the auditor found on that mixture.
    pub gamma_mix: T,
    /// Registry id of the group it found.
    pub group_id: usize,
    /// Whether the found violation was within γ, so the auditor played zero.
    pub auditor_zero: bool,
    /// Error of `h^t` alone.
    pub eps_last: T,
    /// Heuristic rich-subgroup violation of the same mixture, when requested.
    pub rich_gamma: Option<T>,
    /// `‖λ̄‖∞` of the dual the Learner responded to in this round.
    pub dual_norm: T,
}

/// What the auditor played in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditorPlay {
    pub group_id: usize,
    /// `None` for the zero vector; `Some(true)` for `λ⁻ = C` (group above
    /// the base rate), `Some(false)` for `λ⁺ = C`.
    pub minus_side: Option<bool>,
}

impl AuditorPlay {
    pub fn is_zero(&self) -> bool {
        self.minus_side.is_none()
    }
}

/// Histories of both players.
#[derive(Debug, Clone)]
pub struct FictPlayState<T> {
    history: Vec<LinearThreshold<T>>,
    errors: Vec<T>,
    /// `Σ_h h(X_i)` over the history.
    positives: Vec<usize>,
    registry: GroupRegistry<T>,
    /// Per group, the number of rounds the auditor played `λ⁺ = C` and `λ⁻ = C`.
    plays: BTreeMap<usize, (usize, usize)>,
}

impl<T: Scalar> FictPlayState<T> {
    /// Starts from the unconstrained error minimizer and the zero dual.
    pub fn start(data: &Dataset<T>, learner: &LeastSquares<T>) -> Self {
        let mut state = Self {
            history: Vec::new(),
            errors: Vec::new(),
            positives: vec![0; data.len()],
            registry: GroupRegistry::new(),
            plays: BTreeMap::new(),
        };
        let c1 = learner_cost_vector(&DualVector::zero(T::one()), &state.registry, data)
            .expect("the zero dual references no groups");
        state.push(learner.csc(&vec![T::zero(); data.len()], &c1), data);
        state
    }

    fn push(&mut self, h: LinearThreshold<T>, data: &Dataset<T>) {
        let labels = h.predict(data.features());
        for (c, &l) in self.positives.iter_mut().zip(&labels) {
            *c += usize::from(l);
        }
        self.errors
            .push(error_rate(&as_predictions(&labels), data.labels()));
        self.history.push(h);
    }

    /// Number of hypotheses in the current mixture.
    pub fn t(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[LinearThreshold<T>] {
        &self.history
    }

    pub fn registry(&self) -> &GroupRegistry<T> {
        &self.registry
    }

    pub fn mixture(&self) -> MixtureClassifier<T> {
        MixtureClassifier::new(self.history.clone()).expect("history is never empty")
    }

    /// Expected predictions of the current mixture, from the running counts.
    pub fn expected_predictions(&self) -> Vec<T> {
        let t = T::of_count(self.t());
        self.positives.iter().map(|&c| T::of_count(c) / t).collect()
    }

    /// The positive counts recomputed from the history.
    pub fn recount(&self, data: &Dataset<T>) -> Vec<usize> {
        self.mixture().positive_counts(data)
    }

    pub fn positive_counts(&self) -> &[usize] {
        &self.positives
    }

    /// `λ̄ = Σ_{t'<t} λ^{t'} / t` with `t` the current mixture size.
    pub fn empirical_dual(&self, c: T) -> DualVector<T> {
        let t = T::of_count(self.t());
        let mut dual = DualVector::zero(c);
        for (&id, &(plus, minus)) in &self.plays {
            dual.set(id, c * T::of_count(plus) / t, c * T::of_count(minus) / t)
                .expect("at most t - 1 plays per group");
        }
        dual
    }

    /// Learner best response to the current `λ̄`, appended to the history.
    pub fn learner_step(
        &mut self,
        data: &Dataset<T>,
        c: T,
        learner: &LeastSquares<T>,
    ) -> &LinearThreshold<T> {
        let dual = self.empirical_dual(c);
        let c1 = learner_cost_vector(&dual, &self.registry, data)
            .expect("dual only references registered groups");
        let h = learner.csc(&vec![T::zero(); data.len()], &c1);
        self.push(h, data);
        self.history.last().expect("just pushed")
    }

    /// Registers the audited group and, if its violation exceeds `gamma`,
    /// records the pure strategy putting `C` on its violated side.
    pub fn apply_audit(
        &mut self,
        audit: &AuditResult<T>,
        gamma: T,
        data: &Dataset<T>,
    ) -> AuditorPlay {
        let group_id = self.registry.register(&audit.group, data);
        if audit.value() <= gamma {
            return AuditorPlay {
                group_id,
                minus_side: None,
            };
        }
        let minus = audit.report.above_base();
        let entry = self.plays.entry(group_id).or_insert((0, 0));
        if minus {
            entry.1 += 1;
        } else {
            entry.0 += 1;
        }
        AuditorPlay {
            group_id,
            minus_side: Some(minus),
        }
    }
}

/// Initial state for `config` on `data`.
pub fn init<T: Scalar>(data: &Dataset<T>, config: &FictPlayConfig<T>) -> Result<FictPlayState<T>> {
    config.validate()?;
    Ok(FictPlayState::start(
        data,
        &LeastSquares::new(data.features().clone()),
    ))
}

/// Learner step with a freshly factored solver.
pub fn learner_step<T: Scalar>(
    state: &mut FictPlayState<T>,
    data: &Dataset<T>,
    c: T,
) -> LinearThreshold<T> {
    state
        .learner_step(data, c, &LeastSquares::new(data.features().clone()))
        .clone()
}

/// Audits the current mixture and applies the auditor's best response.
pub fn auditor_step<T: Scalar, A: Auditor<T> + ?Sized>(
    state: &mut FictPlayState<T>,
    data: &Dataset<T>,
    config: &FictPlayConfig<T>,
    auditor: &A,
) -> Result<(AuditResult<T>, AuditorPlay)> {
    let audit = auditor.audit(&state.expected_predictions(), data)?;
    let play = state.apply_audit(&audit, config.gamma, data);
    Ok((audit, play))
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub gamma: T,
    pub mixture: MixtureClassifier<T>,
    pub trace: Vec<TraceRecord<T>>,
    pub registry: GroupRegistry<T>,
    /// The empirical dual after the last round.
    pub dual: DualVector<T>,
}

impl<T: Scalar> RunOutput<T> {
    pub fn last(&self) -> &TraceRecord<T> {
        self.trace.last().expect("the final round is always traced")
    }
}

/// Fictitious play against the heuristic linear-threshold auditor.
pub fn run<T: Scalar>(data: &Dataset<T>, config: &FictPlayConfig<T>) -> Result<RunOutput<T>> {
    run_with_auditor(data, config, &HeuristicAuditor::new(data), false)
}

/// Fictitious play against any auditor. With `rich_gamma`, traced rounds
/// also record the heuristic subgroup audit of the mixture.
pub fn run_with_auditor<T: Scalar, A: Auditor<T> + ?Sized>(
    data: &Dataset<T>,
    config: &FictPlayConfig<T>,
    auditor: &A,
    rich_gamma: bool,
) -> Result<RunOutput<T>> {
    let mut out = run_shared(data, config, &[config.gamma], auditor, rich_gamma)?;
    Ok(out.pop().expect("one gamma in, one run out"))
}

/// Runs one trajectory per value of `gammas` (other settings from `config`).
///
/// Runs with different slack follow the same dynamics until the auditor's
/// zero/non-zero decision differs between them, so they share a single state
/// until then and fork at the first disagreement. Forked branches advance in
/// parallel on the current rayon pool. The result is identical to
/// independent runs and is returned in the order of `gammas`.
pub fn run_shared<T: Scalar, A: Auditor<T> + ?Sized>(
    data: &Dataset<T>,
    config: &FictPlayConfig<T>,
    gammas: &[T],
    auditor: &A,
    rich_gamma: bool,
) -> Result<Vec<RunOutput<T>>> {
    for &gamma in gammas {
        FictPlayConfig { gamma, ..*config }.validate()?;
    }
    if gammas.is_empty() {
        return Ok(Vec::new());
    }
    let learner = LeastSquares::new(data.features().clone());
    let engine = Engine {
        data,
        config,
        learner: &learner,
        auditor,
        rich: rich_gamma.then(|| HeuristicAuditor::new(data)),
    };
    let branch = Branch {
        gammas: gammas.iter().copied().enumerate().collect(),
        state: FictPlayState::start(data, &learner),
        trace: Vec::new(),
    };
    let mut outputs = engine.advance(branch, None)?;
    outputs.sort_by_key(|(i, _)| *i);
    Ok(outputs.into_iter().map(|(_, o)| o).collect())
}

struct Engine<'a, T: Scalar, A: ?Sized> {
    data: &'a Dataset<T>,
    config: &'a FictPlayConfig<T>,
    learner: &'a LeastSquares<T>,
    auditor: &'a A,
    rich: Option<HeuristicAuditor<T>>,
}

#[derive(Clone)]
struct Branch<T> {
    gammas: Vec<(usize, T)>,
    state: FictPlayState<T>,
    trace: Vec<TraceRecord<T>>,
}

impl<T: Scalar, A: Auditor<T> + ?Sized> Engine<'_, T, A> {
    fn traced(&self, t: usize) -> bool {
        t.is_multiple_of(self.config.trace_every) || t == self.config.iterations
    }

    fn record(
        &self,
        state: &FictPlayState<T>,
        p: &[T],
        audit: &AuditResult<T>,
        group_id: usize,
        auditor_zero: bool,
    ) -> Result<TraceRecord<T>> {
        let t = state.t() - 1;
        let rich_gamma = match &self.rich {
            Some(a) => Some(a.audit(p, self.data)?.value()),
            None => None,
        };
        Ok(TraceRecord {
            t,
            eps_mix: error_rate(p, self.data.labels()),
            gamma_mix: audit.value(),
            group_id,
            auditor_zero,
            eps_last: state.errors[t],
            rich_gamma,
            dual_norm: state.empirical_dual(self.config.c).inf_norm(),
        })
    }

    fn advance(
        &self,
        mut br: Branch<T>,
        mut pending: Option<AuditResult<T>>,
    ) -> Result<Vec<(usize, RunOutput<T>)>> {
        let data = self.data;
        loop {
            let p = br.state.expected_predictions();
            let audit = match pending.take() {
                Some(a) => a,
                None => self.auditor.audit(&p, data)?,
            };
            let v = audit.value();

            if br.state.t() > self.config.iterations {
                let group_id = br.state.registry.register(&audit.group, data);
                let mixture = br.state.mixture();
                let dual = br.state.empirical_dual(self.config.c);
                let mut outs = Vec::with_capacity(br.gammas.len());
                for &(i, gamma) in &br.gammas {
                    let mut trace = br.trace.clone();
                    trace.push(self.record(&br.state, &p, &audit, group_id, v <= gamma)?);
                    outs.push((
                        i,
                        RunOutput {
                            gamma,
                            mixture: mixture.clone(),
                            trace,
                            registry: br.state.registry.clone(),
                            dual: dual.clone(),
                        },
                    ));
                }
                return Ok(outs);
            }

            let (zero, play): (Vec<_>, Vec<_>) = br.gammas.iter().partition(|&&(_, g)| v <= g);
            if !zero.is_empty() && !play.is_empty() {
                let other = Branch {
                    gammas: play,
                    state: br.state.clone(),
                    trace: br.trace.clone(),
                };
                br.gammas = zero;
                let second = audit.clone();
                let (a, b) = rayon::join(
                    || self.advance(br, Some(audit)),
                    || self.advance(other, Some(second)),
                );
                let mut outs = a?;
                outs.extend(b?);
                return Ok(outs);
            }

            let t = br.state.t() - 1;
            let gamma = br.gammas[0].1;
            let group_id = br.state.registry.register(&audit.group, data);
            if self.traced(t) {
                let rec = self.record(&br.state, &p, &audit, group_id, v <= gamma)?;
                br.trace.push(rec);
            }
            br.state.learner_step(data, self.config.c, self.learner);
            br.state.apply_audit(&audit, gamma, data);
        }
    }
}
