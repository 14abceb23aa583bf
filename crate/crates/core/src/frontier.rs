//! γ sweeps and error/unfairness Pareto frontiers.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::auditor::HeuristicAuditor;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fictplay::{run_shared, FictPlayConfig, RunOutput, DEFAULT_C};
use crate::io::{fmt9, save_model, save_trace, Model};
use crate::marginal::MarginalFamily;
use crate::scalar::Scalar;

/// Which auditor drives the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    /// Heuristic rich-subgroup auditor over linear thresholds.
    Subgroup,
    /// Exact auditor over the marginal group family.
    Marginal,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Subgroup => "subgroup",
            Algo::Marginal => "marginal",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subgroup" => Ok(Algo::Subgroup),
            "marginal" => Ok(Algo::Marginal),
            _ => Err(Error::Config(format!(
                "unknown algorithm `{s}` (expected subgroup or marginal)"
            ))),
        }
    }
}

/// An achieved (error, unfairness) pair and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint<T> {
    pub eps: T,
    pub gamma: T,
    pub input_gamma: T,
    pub t: usize,
    pub algo: Algo,
}

/// The points not dominated by any other, sorted by ascending error.
///
/// `p` dominates `q` when `p.eps <= q.eps` and `p.gamma <= q.gamma` with at
/// least one strict. Exact duplicates collapse to their earliest occurrence.
pub fn pareto_frontier<T: Scalar>(points: &[ParetoPoint<T>]) -> Result<Vec<ParetoPoint<T>>> {
    if points.is_empty() {
        return Err(Error::EmptyFrontier);
    }
    for p in points {
        if !p.eps.is_finite_value() || !p.gamma.is_finite_value() {
            return Err(Error::NonFinite("frontier point"));
        }
        if p.eps < T::zero() || p.gamma < T::zero() {
            return Err(Error::Config(format!(
                "frontier point ({}, {}) has a negative coordinate",
                p.eps, p.gamma
            )));
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        p.eps
            .partial_cmp(&q.eps)
            .unwrap()
            .then(p.gamma.partial_cmp(&q.gamma).unwrap())
            .then(a.cmp(&b))
    });
    let mut front: Vec<ParetoPoint<T>> = Vec::new();
    for i in order {
        let p = points[i];
        if front.last().is_none_or(|best| p.gamma < best.gamma) {
            front.push(p);
        }
    }
    Ok(front)
}

/// A γ sweep: one run per input γ with otherwise shared settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    /// Non-empty, ascending.
    pub gammas: Vec<T>,
    pub c: T,
    pub iterations: usize,
    pub trace_every: usize,
    pub algo: Algo,
    /// Where to write artifacts; nothing is written when `None`.
    pub out: Option<PathBuf>,
    /// Worker threads for forked trajectories; 0 uses rayon's default.
    pub workers: usize,
}

impl<T: Scalar> SweepSpec<T> {
    pub fn new(gammas: Vec<T>, iterations: usize, algo: Algo) -> Self {
        Self {
            gammas,
            c: T::of(DEFAULT_C),
            iterations,
            trace_every: crate::fictplay::default_trace_every(iterations),
            algo,
            out: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::Config("sweep needs at least one gamma".into()));
        }
        if self.gammas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config(
                "sweep gammas must be sorted ascending".into(),
            ));
        }
        for &gamma in &self.gammas {
            self.config(gamma).validate()?;
        }
        Ok(())
    }

    pub fn config(&self, gamma: T) -> FictPlayConfig<T> {
        FictPlayConfig {
            gamma,
            c: self.c,
            iterations: self.iterations,
            trace_every: self.trace_every,
        }
    }
}

/// Runs and pooled frontier of a sweep.
#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub algo: Algo,
    /// In the order of the spec's gammas.
    pub runs: Vec<RunOutput<T>>,
    pub frontier: Vec<ParetoPoint<T>>,
}

/// Every traced (ε, γ) pair of a run. Marginal runs are scored by their
/// rich-subgroup violation, which is what the frontier compares.
pub fn run_points<T: Scalar>(run: &RunOutput<T>, algo: Algo) -> Vec<ParetoPoint<T>> {
    run.trace
        .iter()
        .map(|r| ParetoPoint {
            eps: r.eps_mix,
            gamma: r.rich_gamma.unwrap_or(r.gamma_mix),
            input_gamma: run.gamma,
            t: r.t,
            algo,
        })
        .collect()
}

/// Runs the sweep, sharing trajectories across γ values until they diverge,
/// pools all traced points into one frontier, and writes the artifacts when
/// `spec.out` is set.
pub fn sweep<T: Scalar>(data: &Dataset<T>, spec: &SweepSpec<T>) -> Result<SweepResult<T>> {
    spec.validate()?;
    let config = spec.config(spec.gammas[0]);
    let compute = || match spec.algo {
        Algo::Subgroup => run_shared(
            data,
            &config,
            &spec.gammas,
            &HeuristicAuditor::new(data),
            false,
        ),
        Algo::Marginal => run_shared(
            data,
            &config,
            &spec.gammas,
            &MarginalFamily::build(data)?,
            true,
        ),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let runs = pool.install(compute)?;
    let points: Vec<_> = runs.iter().flat_map(|r| run_points(r, spec.algo)).collect();
    let frontier = pareto_frontier(&points)?;
    let result = SweepResult {
        algo: spec.algo,
        runs,
        frontier,
    };
    if let Some(dir) = &spec.out {
        write_sweep(dir, &result)?;
    }
    Ok(result)
}

/// File name of the trace for one run of a sweep.
pub fn trace_file_name<T: Scalar>(algo: Algo, gamma: T) -> String {
    format!("trace_{algo}_gamma{}.csv", fmt9(gamma.to_f64_lossy()))
}

/// Recovers the input γ and algorithm from a name made by [`trace_file_name`].
pub fn parse_trace_file_name(path: &Path) -> Option<(f64, Algo)> {
    let stem = path.file_stem()?.to_str()?;
    let rest = stem.strip_prefix("trace_")?;
    let (algo, gamma) = rest.split_once("_gamma")?;
    Some((gamma.parse().ok()?, algo.parse().ok()?))
}

pub fn write_frontier<T: Scalar, W: Write>(
    mut w: W,
    frontier: &[ParetoPoint<T>],
) -> std::io::Result<()> {
    writeln!(w, "eps,gamma,input_gamma,t,algo")?;
    for p in frontier {
        let f = |v: T| fmt9(v.to_f64_lossy());
        writeln!(
            w,
            "{},{},{},{},{}",
            f(p.eps),
            f(p.gamma),
            f(p.input_gamma),
            p.t,
            p.algo
        )?;
    }
    w.flush()
}

/// Writes, under `dir`: one trace and one model per run, the pooled
/// `frontier_<algo>.csv`, and `trajectory_<algo>.csv` with every traced
/// point of every run.
pub fn write_sweep<T: Scalar>(dir: &Path, result: &SweepResult<T>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let algo = result.algo;
    for run in &result.runs {
        save_trace(dir.join(trace_file_name(algo, run.gamma)), &run.trace)?;
        let model = Model::new(run.mixture.clone(), &run.registry);
        save_model(
            dir.join(format!(
                "model_{algo}_gamma{}.txt",
                fmt9(run.gamma.to_f64_lossy())
            )),
            &model,
        )?;
    }
    let write = |name: String, points: &[ParetoPoint<T>]| -> Result<()> {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_frontier(std::io::BufWriter::new(file), points).map_err(|e| Error::io(&path, e))
    };
    write(format!("frontier_{algo}.csv"), &result.frontier)?;
    let all: Vec<_> = result
        .runs
        .iter()
        .flat_map(|r| run_points(r, algo))
        .collect();
    write(format!("trajectory_{algo}.csv"), &all)
}
