//! `taumax` — tune decision thresholds on the probability simplex, map
//! score landscapes, train small softmax classifiers against plain or
//! score-oriented losses, plan Monte-Carlo sample sizes, and generate
//! synthetic datasets.
//!
//! Exit codes are stable across subcommands: 0 success, 2 input/config
//! error, 3 candidate-budget guard, 4 numeric failure during training.

mod errors;
mod io;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use taumax_core::metrics::{per_class_confusions, ScoreKind, ScoreSpec};
use taumax_core::regions::TiePolicy;
use taumax_core::simplex::{DirichletParams, SimplexPoint};
use taumax_core::sol::{hoeffding_samples, SolConfig};
use taumax_core::tuning::{heatmap_table, tune_grid, tune_mc, TuneObjective, TuneResult};
use taumax_trainer::{
    evaluate, load_csv, load_idx, save_csv, split_off_validation, synth_blobs, train,
    ClassWeightPolicy, LossKind, MetricsBundle, MlpArchitecture, SplitTag, SplitTriple,
    TrainConfig,
};

use errors::CliError;
use report::{RunReport, SplitReport, ThresholdMetrics};

#[derive(Parser)]
#[command(
    name = "taumax",
    version,
    about = "Threshold-tuned multiclass decisions on the probability simplex"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune a decision threshold on a prediction file and report
    /// argmax-vs-tuned scores
    Tune(TuneArgs),
    /// Score an entire threshold grid for a 3-class prediction file as CSV
    Heatmap(HeatmapArgs),
    /// Train a softmax classifier with weighted cross-entropy or the
    /// score-oriented loss
    SolTrain(SolTrainArgs),
    /// Print the Monte-Carlo sample size for an (epsilon, delta) target
    SampleSize(SampleSizeArgs),
    /// Generate a synthetic Gaussian-blob dataset as three CSV splits
    GenData(GenDataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreArg {
    /// Overall accuracy (fraction of correctly assigned samples)
    Accuracy,
    /// Macro-averaged F1 over one-vs-rest confusion matrices
    F1,
    /// Macro-averaged true skill statistic
    Tss,
}

impl ScoreArg {
    fn objective(self) -> TuneObjective {
        match self {
            ScoreArg::Accuracy => TuneObjective::OverallAccuracy,
            ScoreArg::F1 => TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::F1)),
            ScoreArg::Tss => TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::Tss)),
        }
    }

    /// The score family name used in reports.
    fn family(self) -> &'static str {
        match self {
            ScoreArg::Accuracy => "overall-accuracy",
            ScoreArg::F1 => "macro-f1",
            ScoreArg::Tss => "macro-tss",
        }
    }

    /// The binary score applied per class inside the score-oriented loss.
    fn kind(self) -> ScoreKind {
        match self {
            ScoreArg::Accuracy => ScoreKind::Accuracy,
            ScoreArg::F1 => ScoreKind::F1,
            ScoreArg::Tss => ScoreKind::Tss,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Exhaustive integer-composition grid of resolution k
    Grid,
    /// Dirichlet-sampled Monte-Carlo candidates
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    /// Boundary ties resolve to the lowest tied class index
    Lowest,
    /// Boundary ties abort with an error
    Error,
}

impl TieArg {
    fn policy(self) -> TiePolicy {
        match self {
            TieArg::Lowest => TiePolicy::LowestIndex,
            TieArg::Error => TiePolicy::Error,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    /// Weighted categorical cross-entropy (inverse-frequency weights)
    Wce,
    /// Monte-Carlo score-oriented loss
    Multisol,
}

#[derive(Args)]
struct TuneArgs {
    /// Prediction CSV (header y,p1,...,pm) the threshold is tuned on
    predictions: PathBuf,
    /// Optional second prediction file evaluated at the tuned threshold
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScoreArg::F1)]
    score: ScoreArg,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Grid resolution (required with --mode grid)
    #[arg(long)]
    k: Option<usize>,
    /// Number of Monte-Carlo candidates (required with --mode mc)
    #[arg(long)]
    samples: Option<usize>,
    /// Dirichlet concentration for Monte-Carlo candidates
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TieArg::Lowest)]
    tie: TieArg,
    /// Write the structured report here (default: print to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Prediction CSV (header y,p1,p2,p3; exactly 3 classes)
    predictions: PathBuf,
    #[arg(long, value_enum, default_value_t = ScoreArg::F1)]
    score: ScoreArg,
    /// Grid resolution
    #[arg(long)]
    k: usize,
    /// Heatmap CSV output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolTrainArgs {
    /// Synthetic mode: comma-separated per-class sample counts
    #[arg(long, value_delimiter = ',')]
    synth_counts: Option<Vec<usize>>,
    /// Synthetic mode: feature dimension
    #[arg(long, default_value_t = 2)]
    synth_dim: usize,
    /// Synthetic mode: cluster separation (std = 1/separation)
    #[arg(long, default_value_t = 1.5)]
    synth_separation: f64,

    /// IDX mode: training images path
    #[arg(long)]
    train_images: Option<PathBuf>,
    /// IDX mode: training labels path
    #[arg(long)]
    train_labels: Option<PathBuf>,
    /// IDX mode: test images path
    #[arg(long)]
    test_images: Option<PathBuf>,
    /// IDX mode: test labels path
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// IDX mode: samples held out from the tail of the training set for
    /// validation
    #[arg(long, default_value_t = 10000)]
    val_size: usize,

    /// CSV mode: training split (header x1,...,xd,y)
    #[arg(long)]
    train_csv: Option<PathBuf>,
    /// CSV mode: validation split
    #[arg(long)]
    val_csv: Option<PathBuf>,
    /// CSV mode: test split
    #[arg(long)]
    test_csv: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = LossArg::Wce)]
    loss: LossArg,
    /// Dirichlet concentration of the loss's threshold prior
    #[arg(long, default_value_t = 20.0)]
    alpha: f64,
    /// Sigmoid steepness of the loss's soft memberships
    #[arg(long, default_value_t = 20.0)]
    lambda: f64,
    /// Number of Monte-Carlo thresholds inside the loss
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Binary score the loss optimizes per class
    #[arg(long, value_enum, default_value_t = ScoreArg::F1)]
    score: ScoreArg,

    /// Hidden layer widths, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "128,64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the structured report here (default: print to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the trained model's outputs as prediction CSVs
    /// (<prefix>_validation.csv and <prefix>_test.csv, ready for `tune`)
    #[arg(long)]
    dump_predictions: Option<String>,
}

#[derive(Args)]
struct SampleSizeArgs {
    /// Approximation accuracy target (0 < epsilon)
    #[arg(long)]
    epsilon: f64,
    /// Failure probability target (0 < delta < 1)
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct GenDataArgs {
    /// Comma-separated per-class sample counts (their number fixes m)
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<usize>,
    /// Feature dimension (must be at least 2)
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Cluster separation (std = 1/separation)
    #[arg(long, default_value_t = 1.5)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path prefix: writes <prefix>_train.csv, <prefix>_validation.csv,
    /// <prefix>_test.csv
    #[arg(long)]
    out_prefix: String,
}

fn main() {
    let cli = Cli::parse();
    let invocation = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let result = match cli.command {
        Command::Tune(args) => cmd_tune(args, &invocation),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::SolTrain(args) => cmd_sol_train(args, &invocation),
        Command::SampleSize(args) => cmd_sample_size(args),
        Command::GenData(args) => cmd_gen_data(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Threshold metrics of a prediction set at one threshold, under the given
/// report score family.
fn metrics_at(
    preds: &[SimplexPoint<f64>],
    labels: &[usize],
    tau: &SimplexPoint<f64>,
    score_name: &str,
    tie: TiePolicy,
) -> Result<ThresholdMetrics, CliError> {
    let confusions = per_class_confusions(preds, labels, tau, tie)?;
    let score = report::recompute_score(score_name, &confusions)?;
    Ok(ThresholdMetrics { score, confusions })
}

fn write_or_print_report(report: &RunReport, out: Option<&PathBuf>) -> Result<(), CliError> {
    report.verify()?;
    print!("{}", report.table_block());
    match out {
        Some(path) => {
            std::fs::write(path, report.to_text()).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            println!("report written to {}", path.display());
        }
        None => print!("{}", report.to_text()),
    }
    Ok(())
}

fn cmd_tune(args: TuneArgs, invocation: &str) -> Result<(), CliError> {
    let started = Instant::now();
    let (preds, labels, m) = io::read_predictions(&args.predictions)?;
    let objective = args.score.objective();
    let tie = args.tie.policy();

    let mut fields: Vec<(String, String)> = vec![("score".into(), args.score.family().into())];
    let result: TuneResult<f64> = match args.mode {
        ModeArg::Grid => {
            let k = args.k.ok_or_else(|| {
                CliError::Input("--mode grid requires --k <resolution>".into())
            })?;
            fields.push(("mode".into(), "grid".into()));
            fields.push(("k".into(), k.to_string()));
            tune_grid(&preds, &labels, objective, k, tie)
                .map_err(|e| errors::at_file_row(&args.predictions, e.into()))?
        }
        ModeArg::Mc => {
            let n = args.samples.ok_or_else(|| {
                CliError::Input("--mode mc requires --samples <count>".into())
            })?;
            fields.push(("mode".into(), "mc".into()));
            fields.push(("samples".into(), n.to_string()));
            fields.push(("alpha".into(), format!("{}", args.alpha)));
            let params = DirichletParams::symmetric(m, args.alpha)?;
            tune_mc(&preds, &labels, objective, &params, n, args.seed, tie)
                .map_err(|e| errors::at_file_row(&args.predictions, e.into()))?
        }
    };
    fields.push(("candidates".into(), result.candidates.len().to_string()));
    fields.push(("best_index".into(), result.best_index.to_string()));
    let tau_star = result
        .best_tau
        .coords()
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",");
    fields.push(("tau_star".into(), tau_star));

    let barycenter = SimplexPoint::barycenter(m)?;
    let family = args.score.family();
    let mut splits = vec![SplitReport {
        name: "tuning".into(),
        score_name: family.into(),
        argmax: metrics_at(&preds, &labels, &barycenter, family, tie)
            .map_err(|e| errors::at_file_row(&args.predictions, e))?,
        tuned: Some(
            metrics_at(&preds, &labels, &result.best_tau, family, tie)
                .map_err(|e| errors::at_file_row(&args.predictions, e))?,
        ),
    }];

    if let Some(test_path) = &args.test {
        let (test_preds, test_labels, test_m) = io::read_predictions(test_path)?;
        if test_m != m {
            return Err(CliError::Input(format!(
                "{}: has {test_m} classes but the tuning file has {m}",
                test_path.display()
            )));
        }
        splits.push(SplitReport {
            name: "test".into(),
            score_name: family.into(),
            argmax: metrics_at(&test_preds, &test_labels, &barycenter, family, tie)
                .map_err(|e| errors::at_file_row(test_path, e))?,
            tuned: Some(
                metrics_at(&test_preds, &test_labels, &result.best_tau, family, tie)
                    .map_err(|e| errors::at_file_row(test_path, e))?,
            ),
        });
    }

    let report = RunReport {
        invocation: format!("taumax {invocation}"),
        seed: args.seed,
        timing_ms: started.elapsed().as_millis(),
        fields,
        splits,
    };
    write_or_print_report(&report, args.out.as_ref())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<(), CliError> {
    let (preds, labels, _m) = io::read_predictions(&args.predictions)?;
    let rows = heatmap_table(
        &preds,
        &labels,
        args.score.objective(),
        args.k,
        TiePolicy::LowestIndex,
    )?;
    io::write_heatmap(&args.out, &rows)?;
    println!(
        "wrote {} heatmap rows ({} score) to {}",
        rows.len(),
        args.score.family(),
        args.out.display()
    );
    Ok(())
}

/// Resolves the dataset flags into a train/validation/test triple.
fn resolve_dataset(args: &SolTrainArgs) -> Result<(SplitTriple, String), CliError> {
    let synth = args.synth_counts.is_some();
    let idx = args.train_images.is_some()
        || args.train_labels.is_some()
        || args.test_images.is_some()
        || args.test_labels.is_some();
    let csv = args.train_csv.is_some() || args.val_csv.is_some() || args.test_csv.is_some();
    match (synth, idx, csv) {
        (true, false, false) => {
            let counts = args.synth_counts.as_ref().unwrap();
            let triple = synth_blobs(
                counts.len(),
                counts,
                args.synth_dim,
                args.synth_separation,
                args.seed,
            )?;
            let desc = format!(
                "synth counts={counts:?} dim={} separation={}",
                args.synth_dim, args.synth_separation
            );
            Ok((triple, desc))
        }
        (false, true, false) => {
            let need = |o: &Option<PathBuf>, flag: &str| {
                o.clone()
                    .ok_or_else(|| CliError::Input(format!("IDX mode requires {flag}")))
            };
            let train_images = need(&args.train_images, "--train-images")?;
            let train_labels = need(&args.train_labels, "--train-labels")?;
            let test_images = need(&args.test_images, "--test-images")?;
            let test_labels = need(&args.test_labels, "--test-labels")?;
            let full_train = load_idx(&train_images, &train_labels, SplitTag::Train)?;
            let test = load_idx(&test_images, &test_labels, SplitTag::Test)?;
            let (train, validation) = split_off_validation(&full_train, args.val_size)?;
            let desc = format!(
                "idx train={} test={} val_size={}",
                train_images.display(),
                test_images.display(),
                args.val_size
            );
            Ok((SplitTriple::new(train, validation, test)?, desc))
        }
        (false, false, true) => {
            let need = |o: &Option<PathBuf>, flag: &str| {
                o.clone()
                    .ok_or_else(|| CliError::Input(format!("CSV mode requires {flag}")))
            };
            let train_path = need(&args.train_csv, "--train-csv")?;
            let val_path = need(&args.val_csv, "--val-csv")?;
            let test_path = need(&args.test_csv, "--test-csv")?;
            let train = load_csv(&train_path, SplitTag::Train)?;
            let validation = load_csv(&val_path, SplitTag::Validation)?;
            let test = load_csv(&test_path, SplitTag::Test)?;
            let desc = format!("csv train={}", train_path.display());
            Ok((SplitTriple::new(train, validation, test)?, desc))
        }
        _ => Err(CliError::Input(
            "select exactly one dataset mode: --synth-counts, --train-images/--train-labels/\
             --test-images/--test-labels, or --train-csv/--val-csv/--test-csv"
                .into(),
        )),
    }
}

fn cmd_sol_train(args: SolTrainArgs, invocation: &str) -> Result<(), CliError> {
    let started = Instant::now();
    let (data, dataset_desc) = resolve_dataset(&args)?;
    let m = data.train.num_classes;

    let loss = match args.loss {
        LossArg::Wce => LossKind::WeightedCe(ClassWeightPolicy::InverseFrequency),
        LossArg::Multisol => LossKind::MultiSol(SolConfig::new(
            DirichletParams::symmetric(m, args.alpha)?,
            args.lambda,
            args.samples,
            args.seed,
            ScoreSpec::new(args.score.kind()),
        )?),
    };
    let mut config = TrainConfig::new(loss, args.seed);
    config.learning_rate = args.lr;
    config.batch_size = args.batch;
    config.max_epochs = args.epochs;
    config.patience = args.patience;

    let arch = MlpArchitecture::new(data.train.dim(), args.hidden.clone(), m)?;
    let outcome = train(&data, arch, &config)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for record in &outcome.history {
        println!(
            "epoch {:>3}  train_loss {:+.6}  val_macro_f1 {:.4}  val_accuracy {:.4}",
            record.epoch, record.train_loss, record.val_macro_f1, record.val_accuracy
        );
    }

    let barycenter = SimplexPoint::barycenter(m)?;
    let tie = TiePolicy::LowestIndex;
    let bundle_to_metrics = |bundle: &MetricsBundle, family: &str| ThresholdMetrics {
        score: match family {
            "macro-f1" => bundle.macro_f1,
            _ => bundle.overall_accuracy,
        },
        confusions: bundle.confusions.clone(),
    };
    let val = evaluate(&outcome.params, &data.validation, &barycenter, tie)?;
    let test = evaluate(&outcome.params, &data.test, &barycenter, tie)?;

    if let Some(prefix) = &args.dump_predictions {
        for (split, suffix) in [(&data.validation, "validation"), (&data.test, "test")] {
            let preds = taumax_trainer::model_predictions(&outcome.params, split)?;
            let path = PathBuf::from(format!("{prefix}_{suffix}.csv"));
            io::write_predictions(&path, &preds, &split.labels)?;
            println!("wrote {} predictions to {}", preds.len(), path.display());
        }
    }
    let splits = vec![
        SplitReport {
            name: "validation".into(),
            score_name: "macro-f1".into(),
            argmax: bundle_to_metrics(&val, "macro-f1"),
            tuned: None,
        },
        SplitReport {
            name: "test".into(),
            score_name: "macro-f1".into(),
            argmax: bundle_to_metrics(&test, "macro-f1"),
            tuned: None,
        },
        SplitReport {
            name: "test".into(),
            score_name: "overall-accuracy".into(),
            argmax: bundle_to_metrics(&test, "overall-accuracy"),
            tuned: None,
        },
    ];

    let loss_desc = match args.loss {
        LossArg::Wce => "wce".to_string(),
        LossArg::Multisol => format!(
            "multisol alpha={} lambda={} samples={} score={}",
            args.alpha,
            args.lambda,
            args.samples,
            args.score.family()
        ),
    };
    let fields = vec![
        ("dataset".into(), dataset_desc),
        ("loss".into(), loss_desc),
        ("hidden".into(), format!("{:?}", args.hidden)),
        ("epochs_run".into(), outcome.history.len().to_string()),
        ("best_epoch".into(), outcome.best_epoch.to_string()),
    ];
    let report = RunReport {
        invocation: format!("taumax {invocation}"),
        seed: args.seed,
        timing_ms: started.elapsed().as_millis(),
        fields,
        splits,
    };
    write_or_print_report(&report, args.out.as_ref())
}

fn cmd_sample_size(args: SampleSizeArgs) -> Result<(), CliError> {
    let n = hoeffding_samples(args.epsilon, args.delta)?;
    println!("{n}");
    Ok(())
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let triple = synth_blobs(
        args.counts.len(),
        &args.counts,
        args.dim,
        args.separation,
        args.seed,
    )?;
    for (split, suffix) in [
        (&triple.train, "train"),
        (&triple.validation, "validation"),
        (&triple.test, "test"),
    ] {
        let path = PathBuf::from(format!("{}_{suffix}.csv", args.out_prefix));
        save_csv(split, &path)?;
        println!(
            "wrote {} samples ({} classes, dim {}) to {}",
            split.len(),
            split.num_classes,
            split.dim(),
            path.display()
        );
    }
    Ok(())
}
