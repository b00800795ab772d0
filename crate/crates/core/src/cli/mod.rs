//! Command-line entry point: `train`, `eval`, `inspect`, `approx-bench` and
//! `make-monks`.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric
//! failure.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use config::{DataConfig, ModelConfig, RunConfig, DEFAULT_FEATURES};

use crate::dataio::{monks, write_csv, Dataset, Registry};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::kernel_analysis::{
    approx_error_curve, kpca_project, layer_kernels, omega_histogram, DensityKind, SpectralDensity,
};
use crate::network::{default_layer_count, load_network, ArchSpec, LossKind, Network};
use crate::numerics::Rng;
use crate::optimizer::{accuracy, evaluate, fit, TrainingLog};

#[derive(Debug, Parser)]
#[command(
    name = "rffnet",
    version,
    about = "Deep kernel learning with trainable random Fourier feature layers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one or more trials and report test accuracy.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset split.
    Eval(EvalArgs),
    /// Export per-layer kernel matrices, kPCA coordinates and ω histograms.
    Inspect(InspectArgs),
    /// Measure RFF kernel approximation error against the exact kernel.
    ApproxBench(BenchArgs),
    /// Write the MONK's problems as CSV files plus a task registry.
    MakeMonks(MakeMonksArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.lr=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Task registry file.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Task name in the registry.
    #[arg(long)]
    pub task: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitPart {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Model snapshot (`model.json`).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitPart,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitPart,
    /// Use at most this many leading samples of the split.
    #[arg(long, default_value_t = 500)]
    pub max_samples: usize,
    /// kPCA output dimension (2 or 3).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub kpca_dims: u8,
    /// Only inspect this layer (0-based).
    #[arg(long)]
    pub layer: Option<usize>,
    /// Input dimensions to histogram, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub hist_dims: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "rbf")]
    pub density: String,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    /// Feature counts D, comma separated.
    #[arg(
        long = "d-list",
        value_delimiter = ',',
        default_value = "64,256,1024,4096"
    )]
    pub d_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Input dimension of the random points.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Independent frequency draws averaged per D.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the CSV to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MakeMonksArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for drawing the training subsets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Inspect(a) => cmd_inspect(&a),
        Command::ApproxBench(a) => cmd_approx_bench(&a),
        Command::MakeMonks(a) => cmd_make_monks(&a),
    }
}

/// Defaults, then the config file, then `--set` overrides, then flags.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for kv in &common.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(r) = &common.registry {
        cfg.data.registry = Some(r.clone());
    }
    if let Some(t) = &common.task {
        cfg.data.task = Some(t.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads, splits and preprocesses the configured data for one seed.
pub fn prepare_data(data: &DataConfig, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = data.source()?.load(seed)?;
    data.preprocess.apply(&train, &test)
}

/// Outcome of one training trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub layers: usize,
    pub features: Vec<usize>,
    pub epochs: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub final_loss: f64,
    pub network: Network,
    pub log: TrainingLog,
}

impl TrialResult {
    pub const METRICS_HEADER: &'static str =
        "trial,seed,layers,features,epochs,train_acc,test_acc,final_loss";

    pub fn metrics_csv(&self) -> String {
        format!(
            "{}\n{},{},{},{},{},{},{},{}\n",
            Self::METRICS_HEADER,
            self.trial,
            self.seed,
            self.layers,
            features_label(&self.features),
            self.epochs,
            self.train_acc,
            self.test_acc,
            self.final_loss
        )
    }
}

fn features_label(features: &[usize]) -> String {
    let mut f = features.to_vec();
    f.dedup();
    if f.len() == 1 {
        f[0].to_string()
    } else {
        features
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Mean and sample standard deviation of the trial test accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub layers: usize,
    pub features: String,
    pub trials: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

impl Summary {
    pub const HEADER: &'static str = "dataset,layers,D,trials,mean_acc,std_acc";

    pub fn from_trials(dataset: &str, results: &[TrialResult]) -> Self {
        let n = results.len() as f64;
        let mean = results.iter().map(|r| r.test_acc).sum::<f64>() / n;
        let var = if results.len() > 1 {
            results
                .iter()
                .map(|r| (r.test_acc - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        Self {
            dataset: dataset.to_string(),
            layers: results.first().map_or(0, |r| r.layers),
            features: results
                .first()
                .map_or_else(String::new, |r| features_label(&r.features)),
            trials: results.len(),
            mean_acc: mean,
            std_acc: var.sqrt(),
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.dataset, self.layers, self.features, self.trials, self.mean_acc, self.std_acc
        )
    }
}

/// Runs trial `trial` with seed `cfg.seed + trial`.
pub fn run_trial(cfg: &RunConfig, trial: usize) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let (train, test) = prepare_data(&cfg.data, seed)?;
    let classes = train.class_count().max(test.class_count());
    let layers = cfg
        .model
        .layers
        .unwrap_or_else(|| default_layer_count(train.len()));
    let features = cfg.model.features_for(layers)?;
    let loss = cfg
        .model
        .loss
        .unwrap_or_else(|| LossKind::default_for(classes));
    let mut spec = ArchSpec::new(train.dim(), classes, features.clone(), loss)
        .with_batchnorm(cfg.model.batchnorm);
    spec.init_stddev = cfg.model.init_stddev;
    let mut net = Network::build(&spec, &mut Rng::derived(seed, 0x1417))?;
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    let log = fit(&mut net, &train, None, &tc)?;
    let eval = evaluate(&net, &train, tc.lambda)?;
    let test_acc = accuracy(&net, &test)?;
    Ok(TrialResult {
        trial,
        seed,
        layers,
        features,
        epochs: tc.epochs,
        train_acc: eval.accuracy,
        test_acc,
        final_loss: eval.data_loss + eval.reg_loss,
        network: net,
        log,
    })
}

/// Runs every trial (in parallel) and summarizes; writes nothing.
pub fn run_trials(cfg: &RunConfig) -> Result<(Vec<TrialResult>, Summary)> {
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::from_trials(&cfg.data.name(), &results);
    Ok((results, summary))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    let (results, summary) = run_trials(&cfg)?;

    // Serialize everything first so a failure leaves no partial run behind.
    let mut files: Vec<(PathBuf, Vec<u8>)> =
        vec![(cfg.out.join("config.txt"), cfg.to_text().into_bytes())];
    for r in &results {
        if !r.network.is_finite() {
            return Err(Error::Numeric(format!(
                "trial {} produced non-finite parameters",
                r.trial
            )));
        }
        let dir = cfg.out.join(format!("trial_{:02}", r.trial));
        files.push((
            dir.join("model.json"),
            r.network.to_snapshot()?.into_bytes(),
        ));
        files.push((dir.join("log.csv"), r.log.to_csv().into_bytes()));
        files.push((dir.join("metrics.csv"), r.metrics_csv().into_bytes()));
        eprintln!(
            "trial {} seed {}: train_acc {:.4} test_acc {:.4}",
            r.trial, r.seed, r.train_acc, r.test_acc
        );
    }
    let summary_text = format!("{}\n{}\n", Summary::HEADER, summary.to_line());
    files.push((
        cfg.out.join("summary.csv"),
        summary_text.clone().into_bytes(),
    ));
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    print!("{summary_text}");
    Ok(())
}

fn check_compatible(net: &Network, data: &Dataset) -> Result<()> {
    if data.dim() != net.d_in() {
        return Err(Error::Data(format!(
            "dimension mismatch: model expects {} features, dataset has {}",
            net.d_in(),
            data.dim()
        )));
    }
    if data.class_count() > net.classes() {
        return Err(Error::Data(format!(
            "class mismatch: model has {} outputs, dataset has {} classes",
            net.classes(),
            data.class_count()
        )));
    }
    Ok(())
}

fn pick(split: SplitPart, train: Dataset, test: Dataset) -> Dataset {
    match split {
        SplitPart::Train => train,
        SplitPart::Test => test,
    }
}

/// Confusion matrix `counts[actual][predicted]`.
pub fn confusion_matrix(net: &Network, data: &Dataset) -> Result<Vec<Vec<usize>>> {
    let pred = net.predict(data.x())?;
    let k = net.classes();
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &y) in pred.iter().zip(data.y()) {
        m[y][p] += 1;
    }
    Ok(m)
}

fn confusion_csv(m: &[Vec<usize>], names: &[String]) -> String {
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("class{i}"));
    let mut out = String::from("actual");
    for j in 0..m.len() {
        let _ = write!(out, ",pred_{}", name(j));
    }
    out.push('\n');
    for (i, row) in m.iter().enumerate() {
        out.push_str(&name(i));
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let cfg = resolve_config(&args.common)?;
    let net = load_network(&args.model)?;
    let (train, test) = prepare_data(&cfg.data, cfg.seed)?;
    let data = pick(args.split, train, test);
    check_compatible(&net, &data)?;
    let acc = accuracy(&net, &data)?;
    let cm = confusion_csv(&confusion_matrix(&net, &data)?, data.labels().names());
    if let Some(out) = &args.common.out {
        write_atomic(&out.join("confusion.csv"), cm.as_bytes())?;
    }
    println!("accuracy,{acc}");
    print!("{cm}");
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let cfg = resolve_config(&args.common)?;
    let net = load_network(&args.model)?;
    if let Some(l) = args.layer {
        if l >= net.layers().len() {
            return Err(Error::Parameter(format!(
                "layer {l} does not exist; the model has {} layers",
                net.layers().len()
            )));
        }
    }
    let (train, test) = prepare_data(&cfg.data, cfg.seed)?;
    let data = pick(args.split, train, test);
    check_compatible(&net, &data)?;
    let n = data.len().min(args.max_samples.max(1));
    let idx: Vec<usize> = (0..n).collect();
    let data = data.subset(&idx)?;

    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut checks =
        String::from("layer,n,max_asymmetry,min_eigenvalue,max_diagonal_error,passes\n");
    for kernel in layer_kernels(&net, data.x())? {
        let l = kernel.layer_index;
        if args.layer.is_some_and(|only| only != l) {
            continue;
        }
        let c = kernel.check()?;
        let _ = writeln!(
            checks,
            "{l},{n},{},{},{},{}",
            c.max_asymmetry,
            c.min_eigenvalue,
            c.max_diagonal_error,
            c.passes()
        );
        let proj = kpca_project(&kernel, usize::from(args.kpca_dims).min(n))?;
        files.push((
            cfg.out.join(format!("layer{l}_kernel.csv")),
            kernel.to_csv(),
        ));
        files.push((
            cfg.out.join(format!("layer{l}_kpca.csv")),
            proj.to_csv(data.y()),
        ));
        let layer = &net.layers()[l];
        for &dim in &args.hist_dims {
            let h = omega_histogram(layer, dim, args.bins)?;
            files.push((
                cfg.out.join(format!("layer{l}_omega_dim{dim}_hist.csv")),
                h.to_csv(),
            ));
        }
    }
    files.push((cfg.out.join("kernel_checks.csv"), checks.clone()));
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
    }
    print!("{checks}");
    Ok(())
}

/// `D,mean_error,max_error` rows.
pub fn approx_bench_csv(args: &BenchArgs) -> Result<String> {
    let kind: DensityKind = args.density.parse()?;
    let density = SpectralDensity::new(kind, args.bandwidth)?;
    let curve = approx_error_curve(
        &density,
        &args.d_list,
        args.pairs,
        args.dim,
        args.repeats,
        args.seed,
    )?;
    let mut out = String::from("D,mean_error,max_error\n");
    for (d, e) in curve {
        let _ = writeln!(out, "{d},{},{}", e.mean, e.max);
    }
    Ok(out)
}

fn cmd_approx_bench(args: &BenchArgs) -> Result<()> {
    let csv = approx_bench_csv(args)?;
    if let Some(path) = &args.out {
        write_atomic(path, csv.as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}

/// Writes `monks-{1,2,3}.{train,test}.csv` and `registry.txt` into `dir`.
pub fn write_monks(dir: &Path, seed: u64) -> Result<PathBuf> {
    let mut registry = String::from("# MONK's problems regenerated from their rules\n");
    for p in 1..=3u8 {
        let (train, test) = monks::generate(p, seed)?;
        let tr = format!("monks-{p}.train.csv");
        let te = format!("monks-{p}.test.csv");
        write_csv(&train, &dir.join(&tr), true)?;
        write_csv(&test, &dir.join(&te), true)?;
        let _ = writeln!(
            registry,
            "monks{p} format=csv train={tr} test={te} label=last header=true split=provided"
        );
    }
    let path = dir.join("registry.txt");
    write_atomic(&path, registry.as_bytes())?;
    // Fail early if the registry we just wrote does not parse.
    Registry::load(&path)?;
    Ok(path)
}

fn cmd_make_monks(args: &MakeMonksArgs) -> Result<()> {
    let path = write_monks(&args.out, args.seed)?;
    println!("{}", path.display());
    Ok(())
}
