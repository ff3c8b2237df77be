use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use thiserror::Error;

use splice_maca::bench::{bench, BenchError};
use splice_maca::classifier::ClassifierError;
use splice_maca::clonal::{train_tree, TrainError, TrainerConfig};
use splice_maca::metrics::{accuracy, comparison_report, derive, percent, tally, MetricsError};
use splice_maca::model::{
    load_model, save_model, LoadedModel, ModelError, StageDiagnostics, TrainingMetadata,
};
use splice_maca::scan::{scan, ScanError, Strands};
use splice_maca::seqio::{
    parse_fasta, parse_sequence, parse_splice_records, stratified_split, SeqIoError,
};
use splice_maca::{FitnessMode, FuzzyEncoder, LabeledInstance, Schedule};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: SeqIoError },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error(transparent)]
    Seq(#[from] SeqIoError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("give exactly one of --seq or --input")]
    PredictSource,
    #[error("{0} has no records")]
    Empty(PathBuf),
    #[error("writing output: {0}")]
    Output(io::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "splice-maca",
    version,
    about = "Splice-junction prediction with fuzzy cellular automata"
)]
struct Cli {
    /// Run on a single thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a two-stage model on a splice dataset
    Train(TrainArgs),
    /// Score a model on a dataset split
    Eval(EvalArgs),
    /// Classify one sequence or every record of a FASTA file
    Predict(PredictArgs),
    /// Slide a window over genomic sequences and report predicted sites
    Scan(ScanArgs),
    /// Time per-window predictions
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
struct SplitArgs {
    /// Fraction of each class held out for testing
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 42)]
    split_seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitnessArg {
    Loo,
    Resub,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    population: usize,
    #[arg(long, default_value_t = 50)]
    gmax: usize,
    #[arg(long, value_enum, default_value_t = FitnessArg::Loo)]
    fitness: FitnessArg,
    #[command(flatten)]
    split: SplitArgs,
    /// Record the creation time in the model file
    #[arg(long)]
    timestamp: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subset {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    /// Which side of the split to score
    #[arg(long, value_enum, default_value_t = Subset::Test)]
    on: Subset,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single sequence of window length
    #[arg(long)]
    seq: Option<String>,
    /// FASTA file, one window per record
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrandArg {
    Direct,
    Reverse,
    Both,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    fasta: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = StrandArg::Both)]
    strand: StrandArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    reps: usize,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
}

fn read_dataset(path: &Path) -> Result<Vec<LabeledInstance>, CliError> {
    let data = parse_splice_records(open(path)?).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })?;
    if data.is_empty() {
        return Err(CliError::Empty(path.to_owned()));
    }
    Ok(data)
}

fn read_model(path: &Path) -> Result<LoadedModel, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    load_model(&bytes).map_err(|source| CliError::Model {
        path: path.to_owned(),
        source,
    })
}

fn split(
    data: &[LabeledInstance],
    args: &SplitArgs,
) -> Result<(Vec<LabeledInstance>, Vec<LabeledInstance>), CliError> {
    Ok(stratified_split(
        data,
        |i| i.label,
        args.test_fraction,
        args.split_seed,
    )?)
}

fn run_train(args: &TrainArgs, schedule: Schedule, out: &mut impl Write) -> Result<(), CliError> {
    let data = read_dataset(&args.data)?;
    let (train, _) = split(&data, &args.split)?;
    let fitness = match args.fitness {
        FitnessArg::Loo => FitnessMode::LeaveOneOut,
        FitnessArg::Resub => FitnessMode::Resubstitution,
    };
    let config = TrainerConfig {
        max_generations: args.gmax,
        seed: args.seed,
        fitness,
        schedule,
        ..TrainerConfig::default().with_population(args.population)
    };
    info!("training on {} of {} instances", train.len(), data.len());
    let (tree, state) = train_tree(&train, &FuzzyEncoder::default(), &config)?;
    let diagnostics = StageDiagnostics::measure(&tree, &train)?;
    let created_unix = args.timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let metadata = TrainingMetadata {
        seed: args.seed,
        fitness_mode: fitness,
        population_size: config.population_size,
        max_generations: config.max_generations,
        donor_generations: state.donor.generations,
        acceptor_generations: state.acceptor.generations,
        training_instances: train.len(),
        created_unix,
        extra: Default::default(),
    };
    let bytes = save_model(&tree, &metadata, &diagnostics);
    std::fs::write(&args.out, bytes).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    writeln!(
        out,
        "donor\tgenerations {}\tfitness {:.4}\nacceptor\tgenerations {}\tfitness {:.4}",
        state.donor.generations,
        state.donor.best.fitness().unwrap_or(0.0),
        state.acceptor.generations,
        state.acceptor.best.fitness().unwrap_or(0.0),
    )
    .map_err(CliError::Output)
}

fn run_eval(args: &EvalArgs, schedule: Schedule, out: &mut impl Write) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let data = read_dataset(&args.data)?;
    let subset = match args.on {
        Subset::All => data,
        side => {
            let (train, test) = split(&data, &args.split)?;
            if matches!(side, Subset::Train) {
                train
            } else {
                test
            }
        }
    };
    let seqs: Vec<&[_]> = subset.iter().map(|i| i.sequence.as_slice()).collect();
    let preds = model.tree.classify_batch(&seqs, schedule)?;
    let pairs: Vec<_> = preds
        .iter()
        .zip(&subset)
        .map(|(p, i)| (p.label, i.label))
        .collect();
    let (donor, acceptor) = tally(pairs.iter().copied())?;
    let (d, a) = (derive(&donor)?, derive(&acceptor)?);
    let w = |r: io::Result<()>| r.map_err(CliError::Output);
    w(writeln!(out, "instances\t{}", subset.len()))?;
    for (name, c, m) in [("donor", &donor, &d), ("acceptor", &acceptor, &a)] {
        w(writeln!(
            out,
            "{name}\tTP {}\tFP {}\tTN {}\tFN {}\tSN {}\tSP {}",
            c.tp, c.fp, c.tn, c.fn_, m.sensitivity, m.specificity
        ))?;
    }
    w(writeln!(out, "accuracy\t{}", percent(accuracy(&pairs))))?;
    w(writeln!(out))?;
    w(write!(out, "{}", comparison_report(&d, &a)))
}

fn run_predict(
    args: &PredictArgs,
    schedule: Schedule,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let w = |r: io::Result<()>| r.map_err(CliError::Output);
    match (&args.seq, &args.input) {
        (Some(text), None) => {
            let p = model.tree.classify(&parse_sequence(text)?)?;
            w(writeln!(out, "{}\t{:.4}", p.label, p.score))
        }
        (None, Some(path)) => {
            let records = parse_fasta(open(path)?).map_err(|source| CliError::Input {
                path: path.clone(),
                source,
            })?;
            let seqs: Vec<&[_]> = records.iter().map(|r| r.bases.as_slice()).collect();
            let preds = model.tree.classify_batch(&seqs, schedule)?;
            for (r, p) in records.iter().zip(preds) {
                w(writeln!(out, "{}\t{}\t{:.4}", r.name, p.label, p.score))?;
            }
            Ok(())
        }
        _ => Err(CliError::PredictSource),
    }
}

fn run_scan(args: &ScanArgs, schedule: Schedule, out: &mut impl Write) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let genomes = parse_fasta(open(&args.fasta)?).map_err(|source| CliError::Input {
        path: args.fasta.clone(),
        source,
    })?;
    let strands = match args.strand {
        StrandArg::Direct => Strands::Direct,
        StrandArg::Reverse => Strands::Reverse,
        StrandArg::Both => Strands::Both,
    };
    for g in &genomes {
        let report = scan(g, &model.tree, args.threshold, strands, schedule)?;
        write!(out, "{report}").map_err(CliError::Output)?;
    }
    Ok(())
}

fn run_bench(args: &BenchArgs, out: &mut impl Write) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let data = read_dataset(&args.data)?;
    let seqs: Vec<&[_]> = data.iter().map(|i| i.sequence.as_slice()).collect();
    let stats = bench(&model.tree, &seqs, args.reps)?;
    write!(out, "{stats}").map_err(CliError::Output)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let schedule = if cli.sequential {
        Schedule::Sequential
    } else {
        Schedule::default()
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Train(a) => run_train(a, schedule, &mut out),
        Command::Eval(a) => run_eval(a, schedule, &mut out),
        Command::Predict(a) => run_predict(a, schedule, &mut out),
        Command::Scan(a) => run_scan(a, schedule, &mut out),
        Command::Bench(a) => run_bench(a, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
