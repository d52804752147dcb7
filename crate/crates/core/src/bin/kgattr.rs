//! Command-line entry point: stage commands over a shared TOML
//! configuration, with file artifacts in the configured work directory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use kgattr::pipeline::{
    cmd_eval, cmd_match, cmd_pipeline, cmd_preprocess, cmd_rank, cmd_train, load_config,
    EvalSummary, MatchSummary, Method, PipelineConfig, PreprocessSummary, RankSummary,
    TrainSummary,
};

#[derive(Parser)]
#[command(
    name = "kgattr",
    version,
    about = "Rank product-category attributes by importance from customer enquiry text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; relative paths inside it resolve
    /// against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for preprocess and match (overrides config).
    #[arg(long)]
    workers: Option<usize>,
    /// Training seed (overrides config).
    #[arg(long)]
    seed: Option<u64>,
    /// Match threshold k (overrides config).
    #[arg(long)]
    threshold: Option<f64>,
    /// Attributes selected per category (overrides config).
    #[arg(long = "top-k")]
    top_k: Option<usize>,
}

#[derive(Args)]
struct MethodArg {
    /// Ranking method: subword, wordvec, or textrank.
    #[arg(long, default_value = "subword")]
    method: Method,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and normalize enquiries and the category schema.
    Preprocess(CommonArgs),
    /// Train subword vectors on the clean sentences.
    Train(CommonArgs),
    /// Score sentences against category attributes.
    Match {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArg,
    },
    /// Aggregate matches (or extract keywords) into attribute rankings.
    Rank {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArg,
    },
    /// Score selected attributes against labelled ground truth.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArg,
    },
    /// Run every stage the chosen method needs, in order.
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArg,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Preprocess(common) | Command::Train(common) => common,
            Command::Match { common, .. }
            | Command::Rank { common, .. }
            | Command::Eval { common, .. }
            | Command::Pipeline { common, .. } => common,
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn configure(common: &CommonArgs) -> kgattr::Result<PipelineConfig> {
    let mut cfg = load_config(&common.config)?;
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if let Some(seed) = common.seed {
        cfg.embedding.seed = seed;
    }
    if let Some(threshold) = common.threshold {
        cfg.matcher.threshold = threshold;
    }
    if let Some(top_k) = common.top_k {
        cfg.ranker.top_k = top_k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: &Command) -> kgattr::Result<()> {
    let cfg = configure(command.common())?;
    match command {
        Command::Preprocess(_) => print_preprocess(&cmd_preprocess(&cfg)?),
        Command::Train(_) => print_train(&cmd_train(&cfg)?),
        Command::Match { method, .. } => print_match(&cmd_match(&cfg, method.method)?),
        Command::Rank { method, .. } => print_rank(&cmd_rank(&cfg, method.method)?),
        Command::Eval { method, .. } => print_eval(&cmd_eval(&cfg, method.method)?),
        Command::Pipeline { method, .. } => {
            let summary = cmd_pipeline(&cfg, method.method)?;
            print_preprocess(&summary.preprocess);
            if let Some(train) = &summary.train {
                print_train(train);
            }
            if let Some(matched) = &summary.matched {
                print_match(matched);
            }
            print_rank(&summary.rank);
            match &summary.eval {
                Some(eval) => print_eval(eval),
                None => println!("eval: skipped (paths.labels not configured)"),
            }
        }
    }
    Ok(())
}

fn print_preprocess(summary: &PreprocessSummary) {
    let c = &summary.counts;
    println!("enquiries in: {}", c.enquiries_in);
    println!("discarded empty: {}", c.discarded_empty);
    println!("discarded non-english: {}", c.discarded_non_english);
    println!("discarded spam: {}", c.discarded_spam);
    println!("dangling category references: {}", summary.dangling);
    println!("sentences out: {}", c.sentences_out);
    println!(
        "categories: {} (vocabulary {} tokens)",
        summary.categories, summary.vocabulary_size
    );
}

fn print_train(summary: &TrainSummary) {
    for (epoch, loss) in summary.stats.epoch_mean_loss.iter().enumerate() {
        println!("epoch {}: mean loss {loss:.6}", epoch + 1);
    }
    println!(
        "trained {} words; wrote {} and {}",
        summary.vocabulary_size,
        summary.model_path.display(),
        summary.word_vectors_path.display()
    );
}

fn print_match(summary: &MatchSummary) {
    println!(
        "matched {} sentences with {} records; wrote {}",
        summary.sentences,
        summary.records,
        summary.path.display()
    );
}

fn print_rank(summary: &RankSummary) {
    println!(
        "ranked {} categories; wrote {}",
        summary.categories,
        summary.path.display()
    );
}

fn print_eval(summary: &EvalSummary) {
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", summary.rendered);
    println!(
        "wrote {} and {}",
        summary.report_tsv.display(),
        summary.report_jsonl.display()
    );
}
