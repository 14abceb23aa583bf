use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairfict::auditor::{
    audit_exhaustive, audit_grid, AuditResult, Auditor, HeuristicAuditor, SurfaceGrid,
};
use fairfict::dataset::{gerrymandering_classifier, make_gerrymander_fixture, ScalingMode};
use fairfict::fictplay::{default_trace_every, run_with_auditor, FictPlayConfig, DEFAULT_C};
use fairfict::frontier::{
    pareto_frontier, parse_trace_file_name, sweep, write_frontier, Algo, ParetoPoint, SweepSpec,
};
use fairfict::io::{
    fmt9, load_model, read_trace, save_model, save_trace, write_reports, write_surface,
};
use fairfict::marginal::MarginalFamily;
use fairfict::metrics::{expected_predictions, group_report, MixtureClassifier};
use fairfict::subgroup::GroupRegistry;
use fairfict::{load_csv, Dataset, Model, PreprocessConfig};

#[derive(Parser)]
#[command(
    name = "fairfict",
    version,
    about = "Train and audit classifiers for rich subgroup false-positive fairness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run fictitious play for one γ; writes trace.csv and model.txt.
    Train(TrainArgs),
    /// Audit a saved model on a dataset.
    Audit(AuditArgs),
    /// Run one trajectory per γ and pool them into a Pareto frontier.
    Sweep(SweepArgs),
    /// Pool trace files into a Pareto frontier CSV.
    Frontier(FrontierArgs),
    /// Discrimination surface of a saved model at traced checkpoints.
    Surface(SurfaceArgs),
    /// Write the 8-row gerrymandering dataset, its config and the classifier
    /// that is marginally fair but unfair on every intersection.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML preprocessing config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated protected column names.
    #[arg(long, value_delimiter = ',')]
    protected: Vec<String>,
    /// Comma-separated columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Label column (default: the last column).
    #[arg(long)]
    label: Option<String>,
    /// Downsample the majority label to balance classes.
    #[arg(long)]
    balance: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Use numeric columns as given instead of min-max scaling them.
    #[arg(long)]
    no_scaling: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let mut config = match &self.config {
            Some(path) => PreprocessConfig::from_toml_path(path)?,
            None => PreprocessConfig::default(),
        };
        if !self.protected.is_empty() {
            config.protected = self.protected.clone();
        }
        if !self.categorical.is_empty() {
            config.categorical = self.categorical.clone();
        }
        if self.label.is_some() {
            config.label = self.label.clone();
        }
        config.balance |= self.balance;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.no_scaling {
            config.scaling = ScalingMode::None;
        }
        if config.protected.is_empty() {
            bail!("no protected columns: pass --protected or set `protected` in --config");
        }
        let data = load_csv(&self.data, &config)
            .with_context(|| format!("loading {}", self.data.display()))?;
        log::info!(
            "{} rows, {} protected and {} other features, {} negatives",
            data.len(),
            data.protected().cols(),
            data.unprotected().cols(),
            data.negatives()
        );
        Ok(data)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dual bound.
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    c: f64,
    /// Rounds of fictitious play.
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Trace every k-th round (default: 1 up to 10000 rounds, else 10).
    #[arg(long)]
    trace_every: Option<usize>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Subgroup)]
    algo: AlgoArg,
}

impl RunArgs {
    fn trace_every(&self) -> usize {
        self.trace_every
            .unwrap_or_else(|| default_trace_every(self.iters))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Subgroup,
    Marginal,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Subgroup => Algo::Subgroup,
            AlgoArg::Marginal => Algo::Marginal,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Fairness slack.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AuditMode {
    Heuristic,
    Marginal,
    Grid,
    Exhaustive,
    All,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = AuditMode::All)]
    mode: AuditMode,
    /// Two protected column names for the grid audit (default: the first two).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    attrs: Vec<String>,
    /// Also report every group stored in the model file here.
    #[arg(long)]
    groups_out: Option<PathBuf>,
    /// Write the grid surface here.
    #[arg(long)]
    surface_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Input γ; repeat for a sweep.
    #[arg(long = "gamma", required = true)]
    gammas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct FrontierArgs {
    /// Trace CSVs. Input γ and algorithm come from names like
    /// `trace_subgroup_gamma0.01.csv` unless given with --gamma/--algo.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Input γ of each trace, in order.
    #[arg(long = "gamma")]
    gammas: Vec<f64>,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SurfaceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    attrs: Vec<String>,
    /// Checkpoint spacing in rounds; the first and last are always included.
    #[arg(long, default_value_t = 100)]
    every: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FixtureArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Audit(a) => audit(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Frontier(a) => frontier(a),
        Command::Surface(a) => surface(a),
        Command::Fixture(a) => fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn train(a: TrainArgs) -> Result<()> {
    let data = a.data.load()?;
    let config = FictPlayConfig {
        gamma: a.gamma,
        c: a.run.c,
        iterations: a.run.iters,
        trace_every: a.run.trace_every(),
    };
    let out = match a.run.algo {
        AlgoArg::Subgroup => {
            run_with_auditor(&data, &config, &HeuristicAuditor::new(&data), false)?
        }
        AlgoArg::Marginal => {
            run_with_auditor(&data, &config, &MarginalFamily::build(&data)?, true)?
        }
    };
    create_dir(&a.out)?;
    save_trace(a.out.join("trace.csv"), &out.trace)?;
    save_model(
        a.out.join("model.txt"),
        &Model::new(out.mixture.clone(), &out.registry),
    )?;
    let last = out.last();
    println!(
        "t={} eps={} gamma={}",
        last.t,
        fmt9(last.eps_mix),
        fmt9(last.gamma_mix)
    );
    Ok(())
}

/// Resolves `--attrs` to protected column indices, defaulting to the first two.
fn attrs(data: &Dataset, names: &[String]) -> Result<(usize, usize)> {
    match names {
        [] if data.protected().cols() >= 2 => Ok((0, 1)),
        [] => bail!("the grid audit needs two protected columns"),
        [a, b] => {
            let find = |n: &String| {
                data.protected_index(n).with_context(|| {
                    format!(
                        "`{n}` is not a protected column (have: {})",
                        data.protected_names().join(", ")
                    )
                })
            };
            Ok((find(a)?, find(b)?))
        }
        _ => bail!("--attrs takes exactly two column names"),
    }
}

fn check_model(model: &Model, data: &Dataset) -> Result<()> {
    let d = data.features().cols();
    let dim = model.mixture.hypotheses()[0].dim();
    if dim != d {
        bail!("model hypotheses have {dim} weights but the dataset has {d} features");
    }
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    let data = a.data.load()?;
    let model: Model = load_model(&a.model)?;
    check_model(&model, &data)?;
    let p = expected_predictions(&model.mixture, &data);
    let wants = |m: AuditMode| a.mode == m || a.mode == AuditMode::All;

    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "mode,alpha,fp_base,fp_group,beta,gamma_unfairness,group"
    )?;
    let mut line = |mode: &str, r: &AuditResult<f64>| -> io::Result<()> {
        let rep = &r.report;
        writeln!(
            stdout,
            "{mode},{},{},{},{},{},{}",
            fmt9(rep.alpha),
            fmt9(rep.fp_base),
            fmt9(rep.fp_group),
            fmt9(rep.beta),
            fmt9(rep.unfairness),
            r.group
        )
    };
    if wants(AuditMode::Heuristic) {
        line("heuristic", &HeuristicAuditor::new(&data).audit(&p, &data)?)?;
    }
    if wants(AuditMode::Marginal) {
        line("marginal", &MarginalFamily::build(&data)?.audit(&p, &data)?)?;
    }
    if wants(AuditMode::Exhaustive) {
        match audit_exhaustive(&p, &data) {
            Ok(r) => line("exhaustive", &r)?,
            Err(e) if a.mode == AuditMode::All => log::warn!("skipping exhaustive audit: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    if wants(AuditMode::Grid) {
        let grid = audit_grid(&p, &data, attrs(&data, &a.attrs)?)?;
        let best = grid.max_cell();
        writeln!(
            stdout,
            "grid,,,,,{},theta=({} {})",
            fmt9(best.unfairness),
            fmt9(best.theta1),
            fmt9(best.theta2)
        )?;
        if let Some(path) = &a.surface_out {
            write_surface(create(path)?, &[(None, &grid)])?;
        }
    }
    if let Some(path) = &a.groups_out {
        let reports: Vec<_> = model
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (i, group_report(&p, data.labels(), &g.mask(&data))))
            .collect();
        write_reports(create(path)?, &reports)?;
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let data = a.data.load()?;
    let mut gammas = a.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let spec = SweepSpec {
        gammas,
        c: a.run.c,
        iterations: a.run.iters,
        trace_every: a.run.trace_every(),
        algo: a.run.algo.into(),
        out: Some(a.out.clone()),
        workers: a.workers,
    };
    let result = sweep(&data, &spec)?;
    for run in &result.runs {
        let last = run.last();
        println!(
            "gamma={} t={} eps={} gamma_t={}",
            fmt9(run.gamma),
            last.t,
            fmt9(last.eps_mix),
            fmt9(last.gamma_mix)
        );
    }
    println!(
        "frontier: {} points -> {}",
        result.frontier.len(),
        a.out.display()
    );
    Ok(())
}

fn frontier(a: FrontierArgs) -> Result<()> {
    if !a.gammas.is_empty() && a.gammas.len() != a.traces.len() {
        bail!(
            "got {} --gamma values for {} trace files",
            a.gammas.len(),
            a.traces.len()
        );
    }
    let mut points = Vec::new();
    for (i, path) in a.traces.iter().enumerate() {
        let parsed = parse_trace_file_name(path);
        let input_gamma = match (a.gammas.get(i), parsed) {
            (Some(&g), _) => g,
            (None, Some((g, _))) => g,
            (None, None) => bail!(
                "cannot tell the input gamma of {}; pass --gamma",
                path.display()
            ),
        };
        let algo = a
            .algo
            .map(Algo::from)
            .or(parsed.map(|(_, algo)| algo))
            .unwrap_or(Algo::Subgroup);
        for r in read_trace(path)? {
            let gamma = r.rich_gamma.unwrap_or(r.gamma_mix);
            points.push(ParetoPoint {
                eps: r.eps_mix,
                gamma,
                input_gamma,
                t: r.t,
                algo,
            });
        }
    }
    let front = pareto_frontier(&points)?;
    match &a.out {
        Some(path) => write_frontier(create(path)?, &front)?,
        None => write_frontier(io::stdout().lock(), &front)?,
    }
    Ok(())
}

/// Mixture sizes `1, 1 + every, …` and always the full mixture.
fn checkpoints(len: usize, every: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..=len).step_by(every.max(1)).collect();
    if ks.last() != Some(&len) {
        ks.push(len);
    }
    ks
}

fn surface(a: SurfaceArgs) -> Result<()> {
    let data = a.data.load()?;
    let model: Model = load_model(&a.model)?;
    check_model(&model, &data)?;
    let attrs = attrs(&data, &a.attrs)?;
    let mut grids: Vec<(usize, SurfaceGrid<f64>)> = Vec::new();
    for k in checkpoints(model.mixture.len(), a.every) {
        let prefix = model.mixture.prefix(k)?;
        let grid = audit_grid(&expected_predictions(&prefix, &data), &data, attrs)?;
        println!("t={} max_gamma={}", k - 1, fmt9(grid.max_cell().unfairness));
        grids.push((k - 1, grid));
    }
    let refs: Vec<_> = grids.iter().map(|(t, g)| (Some(*t), g)).collect();
    write_surface(create(&a.out)?, &refs)?;
    Ok(())
}

fn fixture(a: FixtureArgs) -> Result<()> {
    create_dir(&a.out)?;
    let data: Dataset = make_gerrymander_fixture();
    data.write_csv(create(&a.out.join("fixture.csv"))?)?;
    fs::write(
        a.out.join("fixture.toml"),
        "protected = [\"race\", \"gender\"]\nlabel = \"y\"\n",
    )
    .context("writing fixture.toml")?;
    let model: Model = Model::new(
        MixtureClassifier::single(gerrymandering_classifier()),
        &GroupRegistry::new(),
    );
    save_model(a.out.join("gerrymander_model.txt"), &model)?;
    println!(
        "wrote fixture.csv, fixture.toml and gerrymander_model.txt to {}",
        a.out.display()
    );
    Ok(())
}
