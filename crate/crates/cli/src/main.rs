use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use mvtpm::data::{generate_synthetic, load_source, read_tables, write_dataset, DatasetManifest, SyntheticKind};
use mvtpm::eval::{compute_metrics, run_benchmark, BenchmarkOptions, ConfusionCounts, GridSpec};
use mvtpm::model::{train, Hyperparams, MvTpmModel};
use mvtpm::persist::{load_model, save_model};
use mvtpm::preprocess::Preprocessor;
use mvtpm::stats::{AccuracyMatrix, AccuracyUnit, StatsReport};
use mvtpm::{KernelKind, KernelSpec, MvtpmError, SolverKind, SolverOptions};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "mvtpm", version, about = "Multiview twin parametric-margin SVM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-view dataset.
    Synth(SynthArgs),
    /// Train a model from a dataset manifest.
    Train(TrainArgs),
    /// Classify a dataset with a saved model.
    Predict(PredictArgs),
    /// Split, tune, refit and test every dataset in a list of manifests.
    Benchmark(BenchmarkArgs),
    /// Friedman, Nemenyi and win-tie-loss statistics.
    Stats(StatsArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_synthetic)]
    name: SyntheticKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_synthetic(s: &str) -> Result<SyntheticKind, String> {
    s.parse().map_err(|e: MvtpmError| e.to_string())
}

#[derive(Args, Default)]
struct HyperFlags {
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Defaults to C1.
    #[arg(long)]
    c3: Option<f64>,
    /// Defaults to C2.
    #[arg(long)]
    c4: Option<f64>,
    /// Defaults to C2.
    #[arg(long)]
    d1: Option<f64>,
    /// Defaults to C2.
    #[arg(long)]
    d2: Option<f64>,
    /// Sets both eps1 and eps2.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    sigma: Option<f64>,
    /// View-B kernel; defaults to the view-A kernel.
    #[arg(long, value_enum)]
    kernel_b: Option<KernelArg>,
    #[arg(long)]
    sigma_b: Option<f64>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

/// Same keys as the flags; any subset may be given.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TrainConfig {
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
    c4: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    epsilon: Option<f64>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    kernel: Option<KernelKind>,
    sigma: Option<f64>,
    kernel_b: Option<KernelKind>,
    sigma_b: Option<f64>,
    solver: Option<SolverKind>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    GaussianPaper,
    GaussianSquared,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::GaussianPaper => KernelKind::GaussianPaper,
            KernelArg::GaussianSquared => KernelKind::GaussianSquared,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Cd,
    Pg,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Cd => SolverKind::CoordinateDescent,
            SolverArg::Pg => SolverKind::ProjectedGradient,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// JSON file of hyperparameters; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperFlags,
    /// Exit with status 4 when either dual fails to converge.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    /// 11 values per axis, 2^-5 to 2^5.
    Full,
    /// 5 values per axis, 2^-4 to 2^4 in steps of 2^2.
    Coarse,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long = "manifest")]
    manifests: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    grid: GridArg,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stratified: bool,
    /// Solver tolerance for the fold fits.
    #[arg(long, default_value_t = 1e-8)]
    cv_tol: f64,
    #[arg(long, default_value_t = 50_000)]
    cv_max_iter: usize,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the report path with a `.csv` extension.
    #[arg(long)]
    accuracy_csv: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Accuracy matrix CSV: header of model names, first column of dataset names.
    #[arg(long, conflicts_with = "ranks", required_unless_present = "ranks")]
    accuracy: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fraction")]
    unit: UnitArg,
    /// Average ranks given directly, comma-separated; requires --datasets.
    #[arg(long, value_delimiter = ',', requires = "datasets")]
    ranks: Option<Vec<f64>>,
    #[arg(long)]
    datasets: Option<usize>,
    #[arg(long, default_value_t = 2.850)]
    q_alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Fraction,
    Percent,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<MvtpmError> for Failure {
    fn from(e: MvtpmError) -> Self {
        let code = match e {
            MvtpmError::MissingColumn(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let ds = generate_synthetic(args.name, args.n, args.seed).map_err(|e| usage(e.to_string()))?;
    write_dataset(&args.out, &ds)?;
    println!(
        "wrote {} ({} rows, {} positive) to {}",
        args.name.name(),
        ds.len(),
        ds.m1(),
        args.out.display()
    );
    Ok(())
}

fn load_config(path: &Path) -> Result<TrainConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

/// Flags, then config file, then defaults.
fn resolve_hyperparams(flags: &HyperFlags, cfg: &TrainConfig) -> Result<(Hyperparams, SolverOptions), Failure> {
    let d = Hyperparams::default();
    let c1 = flags.c1.or(cfg.c1).unwrap_or(d.c1);
    let c2 = flags.c2.or(cfg.c2).unwrap_or(d.c2);
    let eps = flags.epsilon.or(cfg.epsilon).unwrap_or(d.eps1);
    let kind_a = flags.kernel.map(KernelKind::from).or(cfg.kernel).unwrap_or(d.kernel_a.kind);
    let sigma_a = flags.sigma.or(cfg.sigma).unwrap_or(d.kernel_a.sigma);
    let kind_b = flags.kernel_b.map(KernelKind::from).or(cfg.kernel_b).unwrap_or(kind_a);
    let sigma_b = flags.sigma_b.or(cfg.sigma_b).unwrap_or(sigma_a);
    let hp = Hyperparams {
        c1,
        c2,
        c3: flags.c3.or(cfg.c3).unwrap_or(c1),
        c4: flags.c4.or(cfg.c4).unwrap_or(c2),
        d1: flags.d1.or(cfg.d1).unwrap_or(c2),
        d2: flags.d2.or(cfg.d2).unwrap_or(c2),
        eps1: flags.eps1.or(cfg.eps1).unwrap_or(eps),
        eps2: flags.eps2.or(cfg.eps2).unwrap_or(eps),
        kernel_a: KernelSpec {
            kind: kind_a,
            sigma: sigma_a,
        },
        kernel_b: KernelSpec {
            kind: kind_b,
            sigma: sigma_b,
        },
    };
    hp.validate().map_err(|e| usage(e.to_string()))?;
    let ds = SolverOptions::default();
    let opts = SolverOptions {
        solver: flags.solver.map(SolverKind::from).or(cfg.solver).unwrap_or(ds.solver),
        tol: flags.tol.or(cfg.tol).unwrap_or(ds.tol),
        max_iter: flags.max_iter.or(cfg.max_iter).unwrap_or(ds.max_iter),
    };
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(usage("tol must be positive and max-iter at least 1"));
    }
    Ok((hp, opts))
}

fn print_diagnostics(model: &MvTpmModel) {
    for (name, d) in [("positive", &model.diagnostics.positive), ("negative", &model.diagnostics.negative)] {
        println!(
            "{name} dual: iterations={} converged={} residual={:.3e} objective={:.6e} duality_gap={:.3e} (relative {:.3e})",
            d.iterations,
            d.converged,
            d.stationarity_residual,
            d.objective,
            d.duality_gap,
            d.relative_gap()
        );
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => TrainConfig::default(),
    };
    let (hp, opts) = resolve_hyperparams(&args.hyper, &cfg)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    if manifest.labels.is_none() {
        return Err(usage(format!("manifest {} names no label column", args.manifest.display())));
    }
    let src = load_source(&manifest)?;
    let pre = Preprocessor::fit(&src.view_a, src.view_b.as_ref(), &manifest.preprocess_config())?;
    let ds = src.transform(&pre)?;
    let model = train(&ds, &hp, &opts)?.with_preprocessor(pre);
    print_diagnostics(&model);
    let predicted = model.predict(&ds.view_a, &ds.view_b)?;
    let correct = predicted.iter().zip(&ds.labels).filter(|((_, l), y)| l == *y).count();
    println!("training accuracy: {:.6} ({correct}/{})", correct as f64 / ds.len() as f64, ds.len());
    save_model(&args.out, &model)?;
    println!("model written to {}", args.out.display());
    if args.strict && !model.diagnostics.converged() {
        return Err(Failure {
            code: EXIT_NOT_CONVERGED,
            message: "solver did not converge".into(),
        });
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let tables = read_tables(&manifest)?;
    let predictions = model.predict_raw(&tables.view_a, tables.view_b.as_ref())?;
    let mut out = String::from("index,f,label\n");
    for (i, (f, l)) in predictions.iter().enumerate() {
        out.push_str(&format!("{i},{f:?},{}\n", model.label_map.name_of(*l)));
    }
    write_file(&args.out, &out)?;
    println!("{} predictions written to {}", predictions.len(), args.out.display());
    if let Some(raw) = &tables.labels {
        let truth: Option<Vec<i8>> = raw.iter().map(|r| model.label_map.encode(r)).collect();
        if let Some(truth) = truth {
            let pred: Vec<i8> = predictions.iter().map(|(_, l)| *l).collect();
            if !truth.is_empty() {
                let m = compute_metrics(&ConfusionCounts::from_labels(&truth, &pred)?)?;
                println!("accuracy: {:.6}", m.accuracy);
            }
        }
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), Failure> {
    let mut manifests = Vec::with_capacity(args.manifests.len());
    for p in &args.manifests {
        manifests.push(DatasetManifest::load(p)?);
    }
    let mut grid = match args.grid {
        GridArg::Full => GridSpec::default(),
        GridArg::Coarse => GridSpec::coarse(),
    };
    grid.stratified = args.stratified;
    grid.solver.tol = args.cv_tol;
    grid.solver.max_iter = args.cv_max_iter;
    if args.folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let opts = BenchmarkOptions {
        grid,
        folds: args.folds,
        seed: args.seed,
        ..BenchmarkOptions::default()
    };
    let report = run_benchmark(&manifests, &opts);
    for row in &report.rows {
        match (&row.outcome, &row.error) {
            (Some(o), _) => println!(
                "{}: accuracy={:.4} error_rate={:.4} C1={} C2={} sigma={}",
                row.dataset, o.metrics.accuracy, o.metrics.error_rate, o.params.c1, o.params.c2, o.params.kernel_a.sigma
            ),
            (None, Some(e)) => eprintln!("{}: failed: {e}", row.dataset),
            (None, None) => {}
        }
    }
    let text = serde_json::to_string_pretty(&report).map_err(MvtpmError::from)?;
    write_file(&args.out, &(text + "\n"))?;
    let csv_path = args.accuracy_csv.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    write_file(&csv_path, &report.accuracy_csv())?;
    if !report.rows.is_empty() && report.failures() == report.rows.len() {
        return Err(Failure {
            code: EXIT_DATA,
            message: "every dataset failed".into(),
        });
    }
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Failure> {
    let report = match (&args.accuracy, &args.ranks) {
        (Some(path), _) => {
            let unit = match args.unit {
                UnitArg::Fraction => AccuracyUnit::Fraction,
                UnitArg::Percent => AccuracyUnit::Percent,
            };
            StatsReport::from_matrix(&AccuracyMatrix::load_csv(path, unit)?, args.q_alpha)?
        }
        (None, Some(ranks)) => {
            let n = args.datasets.ok_or_else(|| usage("--ranks requires --datasets"))?;
            let names = (1..=ranks.len()).map(|i| format!("model{i}")).collect();
            StatsReport::from_ranks(names, ranks.clone(), n, args.q_alpha).map_err(|e| usage(e.to_string()))?
        }
        (None, None) => return Err(usage("give --accuracy or --ranks")),
    };
    let ranks: Vec<String> = report.average_ranks.iter().map(|r| format!("{r:.4}")).collect();
    println!("average ranks: {}", ranks.join(", "));
    println!("chi_squared: {:.4}", report.chi_squared);
    match report.f_statistic {
        Some(f) => println!("f_statistic: {f:.4}"),
        None => println!("f_statistic: undefined"),
    }
    println!("critical_difference: {:.4}", report.critical_difference);
    if let Some(w) = &report.win_tie_loss {
        println!("win_tie_loss_threshold: {:.4}", w.threshold);
    }
    let text = serde_json::to_string_pretty(&report).map_err(MvtpmError::from)? + "\n";
    match &args.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
