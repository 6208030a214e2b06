//! `rpf`: fit, inspect and simulate random planted forests from the shell.
//!
//! Exit codes: 0 success, 2 bad input (arguments, CSV, model file),
//! 3 degenerate data, 4 numerical failure.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use planted_forest::dataset::read_predictor_csv;
use planted_forest::purify::purify_model;
use planted_forest::sim::{run_simulation, GridPreset, SimConfig, SimModelSpec, Variant};
use planted_forest::theory::{convergence_experiment, ConvergenceConfig, RateModel};
use planted_forest::{fit_forest, Dataset, Error, FitParams, ForestModel, MaxInteraction, Result, SplitTry};

use config::{pick, ConfigFile};

#[derive(Parser)]
#[command(name = "rpf", version, about = "Random planted forests")]
struct Cli {
    /// TOML file with defaults for any command; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a forest to a CSV with a `y` column and write the model as JSON.
    Fit(FitArgs),
    /// Predict every row of a CSV with a saved model.
    Predict(PredictArgs),
    /// Export the purified ANOVA components of a saved model as CSV.
    Components(ComponentsArgs),
    /// Run a simulation study on one of the twelve benchmark models.
    Simulate(SimulateArgs),
    /// Measure the convergence rate of the randomized-partition estimator.
    Convergence(ConvergenceArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Training CSV; the column `y` is the response, all others are predictors.
    #[arg(long)]
    data: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Number of tree families [default: 50].
    #[arg(long)]
    ntrees: Option<usize>,
    /// Iterations per family [default: 30].
    #[arg(long)]
    nsplits: Option<usize>,
    /// Fraction of viable (tree, coordinate) pairs tried per iteration [default: 0.75].
    #[arg(long)]
    t_try: Option<f64>,
    /// Split points drawn per leaf, or `all` [default: 10].
    #[arg(long)]
    split_try: Option<SplitTry>,
    /// Highest interaction order, or `inf` [default: 1].
    #[arg(long)]
    max_interaction: Option<MaxInteraction>,
    /// Grow every family on the full data instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// CSV of predictors with a header; a `y` column is ignored.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComponentsArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Highest component order to export, 1 or 2 [default: 2].
    #[arg(long)]
    order: Option<usize>,
    /// Evaluate each component at this many equispaced points per axis
    /// instead of listing its grid cells.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Output CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model number 1-12 or name, e.g. `additive-sparse-smooth` [default: 1].
    #[arg(long)]
    model: Option<String>,
    /// Number of predictors [default: 4].
    #[arg(long)]
    d: Option<usize>,
    /// Sample size [default: 500].
    #[arg(long)]
    n: Option<usize>,
    /// Evaluation replications [default: 20].
    #[arg(long)]
    reps: Option<usize>,
    /// `additive`, `interaction-2` or `interaction-unbounded` [default: additive].
    #[arg(long)]
    variant: Option<String>,
    /// Parameter grid: `small`, `full` or `default` [default: small].
    #[arg(long)]
    grid: Option<String>,
    /// Simulated datasets per grid cell when tuning [default: 10].
    #[arg(long)]
    tune_reps: Option<usize>,
    /// Tune every replication by cross-validation instead.
    #[arg(long)]
    cv: bool,
    /// Cross-validation folds [default: 10].
    #[arg(long)]
    folds: Option<usize>,
    /// Families per forest [default: 50].
    #[arg(long)]
    ntrees: Option<usize>,
    /// Latent predictor correlation [default: 0.3].
    #[arg(long)]
    rho: Option<f64>,
    /// Noise standard deviation [default: 1].
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Report CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Comma separated sample sizes [default: 500,2000,8000].
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Replications per sample size [default: 10].
    #[arg(long)]
    reps: Option<usize>,
    /// Number of predictors [default: 2].
    #[arg(long)]
    d: Option<usize>,
    /// Noise standard deviation [default: 1].
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Intervals per coordinate are `ceil(f * n^(1/5))` [default: 2].
    #[arg(long)]
    interval_factor: Option<f64>,
    /// Trees are `ceil(f * n^(2/5))` [default: 1].
    #[arg(long)]
    tree_factor: Option<f64>,
    /// Update steps per tree in units of `d * M` [default: 20].
    #[arg(long)]
    sweeps: Option<usize>,
    /// Use the zero regression function.
    #[arg(long)]
    zero_signal: bool,
    /// Grow each tree on a bootstrap sample.
    #[arg(long)]
    bootstrap: bool,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Per-replication CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::DegenerateData => 3,
        Error::NonConvergence(_) | Error::GridTooLarge { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("rpf: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit(args) => fit(args, &cfg),
        Command::Predict(args) => predict(args),
        Command::Components(args) => components(args, &cfg),
        Command::Simulate(args) => simulate(args, &cfg),
        Command::Convergence(args) => convergence(args, &cfg),
    }
}

/// File at `path`, or stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Summary lines go to stdout unless stdout carries the data.
fn note(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn fit(args: FitArgs, cfg: &ConfigFile) -> Result<()> {
    let c = &cfg.fit;
    let defaults = FitParams::default();
    let params = FitParams {
        ntrees: pick(args.ntrees, c.ntrees, defaults.ntrees),
        nsplits: pick(args.nsplits, c.nsplits, defaults.nsplits),
        t_try: pick(args.t_try, c.t_try, defaults.t_try),
        split_try: pick(args.split_try, c.split_try, defaults.split_try),
        max_interaction: pick(args.max_interaction, c.max_interaction, defaults.max_interaction),
        bootstrap: if args.no_bootstrap { false } else { c.bootstrap.unwrap_or(true) },
        seed: pick(args.seed, c.seed.or(cfg.seed), 0),
    };
    let data = Dataset::from_csv_path(&args.data)?;
    let model = fit_forest(&data, &params)?;
    model.save(&args.out)?;

    println!("fitted {} families on n={} d={}: {}", params.ntrees, data.n(), data.d(), params.label());
    let trajectory = mean_training_mse(&model);
    let last = trajectory.len() - 1;
    let marks: Vec<String> = [0, last / 4, last / 2, 3 * last / 4, last]
        .iter()
        .map(|&t| format!("{t}:{:.5}", trajectory[t]))
        .collect();
    println!("training mse by iteration {}", marks.join(" "));
    Ok(())
}

/// Mean over families of SSR / sample size after each iteration.
fn mean_training_mse(model: &ForestModel) -> Vec<f64> {
    let len = model.params().nsplits + 1;
    let mut out = vec![0.0; len];
    for family in model.families() {
        let ssr = &family.log().ssr;
        let n = family.sample().len().max(1) as f64;
        for (t, o) in out.iter_mut().enumerate() {
            // a zero family has a single entry
            *o += ssr.get(t).or(ssr.last()).copied().unwrap_or(0.0) / n;
        }
    }
    out.iter().map(|v| v / model.families().len() as f64).collect()
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = ForestModel::load(&args.model)?;
    let (names, x) = read_predictor_csv(File::open(&args.data)?)?;
    if names.len() != model.d() {
        return Err(Error::InvalidData(format!(
            "data has {} predictor columns, model expects {}",
            names.len(),
            model.d()
        )));
    }
    if let Some(expected) = model.feature_names() {
        if expected != names.as_slice() {
            return Err(Error::InvalidData(format!(
                "predictor columns {names:?} differ from the model's {expected:?}"
            )));
        }
    }
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "prediction")?;
    for row in x.chunks(model.d()) {
        writeln!(out, "{:?}", model.predict(row))?;
    }
    out.flush()?;
    Ok(())
}

fn components(args: ComponentsArgs, cfg: &ConfigFile) -> Result<()> {
    let order = pick(args.order, cfg.components.order, 2);
    if !(1..=2).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let model = ForestModel::load(&args.model)?;
    let purified = purify_model(&model)?;
    let out = output(args.out.as_deref())?;
    match args.grid_size.or(cfg.components.grid_size) {
        Some(points) => purified.write_grid_csv(out, order, points, model.feature_names())?,
        None => purified.write_csv(out, order, model.feature_names())?,
    }
    Ok(())
}

fn simulate(args: SimulateArgs, cfg: &ConfigFile) -> Result<()> {
    let c = &cfg.simulate;
    let model: SimModelSpec = pick(args.model, c.model.clone(), "1".into()).parse()?;
    let spec = SimModelSpec {
        d: pick(args.d, c.d, 4),
        rho: pick(args.rho, c.rho, 0.3),
        noise_sd: pick(args.noise_sd, c.noise_sd, 1.0),
        ..model
    };
    let variant: Variant = pick(args.variant, c.variant.clone(), "additive".into()).parse()?;
    let preset: GridPreset = pick(args.grid, c.grid.clone(), "small".into()).parse()?;
    let cv = args.cv || c.cv.unwrap_or(false);
    let sim = SimConfig {
        spec,
        n: pick(args.n, c.n, 500),
        reps: pick(args.reps, c.reps, 20),
        variant,
        preset,
        tune_reps: pick(args.tune_reps, c.tune_reps, 10),
        cv_folds: cv.then(|| pick(args.folds, c.folds, 10)),
        ntrees: pick(args.ntrees, c.ntrees, 50),
        seed: pick(args.seed, c.seed.or(cfg.seed), 0),
    };
    let report = run_simulation(&sim)?;
    report.write_csv(output(args.out.as_deref())?)?;
    let to_stdout = args.out.is_some();
    if let Some(tuned) = &report.tuned {
        note(to_stdout, &format!("tuned: {}", tuned.best.label()));
    }
    note(to_stdout, &report.table_row());
    Ok(())
}

fn convergence(args: ConvergenceArgs, cfg: &ConfigFile) -> Result<()> {
    let c = &cfg.convergence;
    let d = ConvergenceConfig::default();
    let zero = args.zero_signal || c.zero_signal.unwrap_or(false);
    let experiment = ConvergenceConfig {
        n_list: pick(args.n_list, c.n_list.clone(), d.n_list),
        reps: pick(args.reps, c.reps, d.reps),
        d: pick(args.d, c.d, d.d),
        model: if zero { RateModel::Zero } else { RateModel::Smooth },
        noise_sd: pick(args.noise_sd, c.noise_sd, d.noise_sd),
        interval_factor: pick(args.interval_factor, c.interval_factor, d.interval_factor),
        tree_factor: pick(args.tree_factor, c.tree_factor, d.tree_factor),
        sweeps: pick(args.sweeps, c.sweeps, d.sweeps),
        bootstrap: args.bootstrap || c.bootstrap.unwrap_or(false),
        seed: pick(args.seed, c.seed.or(cfg.seed), d.seed),
        ..d
    };
    let report = convergence_experiment(&experiment)?;
    report.write_csv(output(args.out.as_deref())?)?;
    note(args.out.is_some(), &report.summary());
    Ok(())
}
