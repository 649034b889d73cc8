use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newsflow::MediaCategory;
use newsflow_cli::{run_pipeline, run_report, run_shifts, run_stage, run_synth, CliError, Overrides, PipelineConfig, Stage};

/// News-media retweet network analysis pipeline.
#[derive(Parser, Debug)]
#[command(name = "newsflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse record files into the period's canonical corpus.
    Ingest,
    /// Classify shared links and assign users their modal category and leaning.
    Classify,
    /// Build the per-category retweet networks.
    Graph,
    /// Rank users by collective influence and select the influencers.
    Rank,
    /// Compare collective-influence rankings with PageRank.
    CompareRanks,
    /// Influencer similarity network, communities and separation metrics.
    Similarity,
    /// Latent ideology positions of users and influencers.
    Ideology,
    /// Dip test of the user positions and quote/retweet ratios.
    Stats,
    /// Rank shifts, type shares and category flows between two periods.
    Shifts,
    /// Generate a synthetic corpus with ground truth into the output directory.
    Synth,
    /// Tabulate the processed periods and the changes between them.
    Report,
    /// Run every stage of every period, then shifts and the report.
    Run,
}

#[derive(Args, Debug)]
struct Flags {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Period to operate on (default: the first configured).
    #[arg(long, global = true)]
    period: Option<String>,
    /// Record file(s) of the period; repeatable.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    #[arg(long, global = true)]
    from: Option<f64>,
    #[arg(long, global = true)]
    to: Option<f64>,
    /// Comma-separated list of official client names.
    #[arg(long, global = true, value_delimiter = ',')]
    official_clients: Option<Vec<String>>,
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    prune: Option<bool>,
    /// Influencer type labels (user_id,type).
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Category to process; repeatable.
    #[arg(long = "category", global = true, value_parser = parse_category)]
    categories: Vec<MediaCategory>,
    /// Interaction kinds forming graph edges, e.g. `retweet,quote`.
    #[arg(long, global = true)]
    kinds: Option<String>,
    #[arg(long, global = true)]
    radius: Option<usize>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    damping: Option<f64>,
    #[arg(long, global = true)]
    rbo_p: Option<f64>,
    /// Similarity interaction kind: retweet or quote.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    fraction: Option<f64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    min_distinct: Option<usize>,
    /// baseline, drop_ones, log_weights or subsample:<fraction>[:<seed>].
    #[arg(long, global = true)]
    variant: Option<String>,
    #[arg(long, global = true)]
    orientation_check: Option<bool>,
    #[arg(long, global = true)]
    b_null: Option<usize>,
    #[arg(long, global = true)]
    b_boot: Option<usize>,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    users: Option<usize>,
    #[arg(long, global = true)]
    influencers: Option<usize>,
}

fn parse_category(s: &str) -> Result<MediaCategory, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            output: self.output.clone(),
            seed: self.seed,
            period: self.period.clone(),
            input: self.input.clone(),
            from: self.from,
            to: self.to,
            official_clients: self.official_clients.clone(),
            catalog: self.catalog.clone(),
            prune: self.prune,
            labels: self.labels.clone(),
            categories: (!self.categories.is_empty()).then(|| self.categories.clone()),
            kinds: self.kinds.clone(),
            radius: self.radius,
            top_k: self.top_k,
            damping: self.damping,
            rbo_p: self.rbo_p,
            kind: self.kind.clone(),
            fraction: self.fraction,
            reps: self.reps,
            min_distinct: self.min_distinct,
            variant: self.variant.clone(),
            orientation_check: self.orientation_check,
            b_null: self.b_null,
            b_boot: self.b_boot,
            top_n: self.top_n,
            epsilon: self.epsilon,
            users: self.users,
            influencers: self.influencers,
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.flags.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&cli.flags.overrides());
    let period = cli.flags.period.as_deref();
    let stage = |s: Stage| run_stage(s, &cfg, period);
    match cli.command {
        Command::Ingest => stage(Stage::Ingest),
        Command::Classify => stage(Stage::Classify),
        Command::Graph => stage(Stage::Graph),
        Command::Rank => stage(Stage::Rank),
        Command::CompareRanks => stage(Stage::CompareRanks),
        Command::Similarity => stage(Stage::Similarity),
        Command::Ideology => stage(Stage::Ideology),
        Command::Stats => stage(Stage::Stats),
        Command::Shifts => run_shifts(&cfg),
        Command::Synth => run_synth(&cfg.synth, &cfg.paths.output),
        Command::Report => {
            let report = run_report(&cfg)?;
            print!("{}", newsflow_cli::report::render(&report));
            Ok(())
        }
        Command::Run => {
            if let Some(report) = run_pipeline(&cfg, period)? {
                print!("{}", newsflow_cli::report::render(&report));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("newsflow: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("newsflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
