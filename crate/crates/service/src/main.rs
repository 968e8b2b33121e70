use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vidsem_core::eval::SessionConfig;
use vidsem_core::Language;
use vidsem_service::commands::{self, EvalArgs, SearchArgs};
use vidsem_service::ServiceConfig;

/// Concept-based video retrieval with relevance feedback.
///
/// Settings come from the --config TOML file, then VIDSEM_* environment
/// variables (VIDSEM_CONCEPTS, VIDSEM_CONTEXTS, VIDSEM_LEXICON,
/// VIDSEM_SHOT_COUNTS, VIDSEM_STOPWORDS_DIR, VIDSEM_KEYFRAMES_DIR,
/// VIDSEM_SNAPSHOT, VIDSEM_ALPHA, VIDSEM_JUDGE_DEPTH, VIDSEM_RESULT_LIMIT,
/// VIDSEM_LISTEN, VIDSEM_SESSION_TTL_SECS), then command-line flags.
#[derive(Parser)]
#[command(name = "vidsem", version)]
struct Cli {
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CorpusArgs {
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long)]
    contexts: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    shot_counts: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus files and write an index snapshot.
    Index {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the weight matrix as TSV.
        #[arg(long)]
        matrix_tsv: Option<PathBuf>,
    },
    /// Expand a text query, confirm its top candidates and print the ranking.
    Search {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, short)]
        query: String,
        #[arg(long)]
        lang: Option<Language>,
        #[arg(long, default_value_t = 3)]
        auto_confirm: usize,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run simulated feedback sessions against relevance judgments.
    Eval {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        qrels: PathBuf,
        /// `query_id<TAB>text` file; without it the query id is the query text.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long)]
        judge_depth: Option<usize>,
        #[arg(long, default_value_t = 3)]
        auto_confirm: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
    },
}

fn snapshot_path(config: &ServiceConfig, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    flag.or_else(|| config.snapshot.clone())
        .ok_or_else(|| anyhow::anyhow!("no snapshot given (use --snapshot or VIDSEM_SNAPSHOT)"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    let stdout = &mut std::io::stdout().lock();
    match cli.command {
        Command::Index {
            corpus,
            out,
            matrix_tsv,
        } => {
            config.concepts = corpus.concepts.or(config.concepts);
            config.contexts = corpus.contexts.or(config.contexts);
            config.lexicon = corpus.lexicon.or(config.lexicon);
            config.shot_counts = corpus.shot_counts.or(config.shot_counts);
            config.validate()?;
            commands::index(&config, &out, matrix_tsv.as_deref(), stdout)
        }
        Command::Search {
            snapshot,
            query,
            lang,
            auto_confirm,
            limit,
        } => {
            config.validate()?;
            let engine = commands::load_engine(&config, &snapshot_path(&config, snapshot)?)?;
            let args = SearchArgs {
                query: &query,
                lang,
                auto_confirm,
                limit: limit.unwrap_or(config.result_limit),
            };
            commands::search(&engine, &args, stdout)
        }
        Command::Eval {
            snapshot,
            qrels,
            queries,
            iterations,
            judge_depth,
            auto_confirm,
            out,
        } => {
            config.validate()?;
            let engine = commands::load_engine(&config, &snapshot_path(&config, snapshot)?)?;
            let args = EvalArgs {
                qrels: &qrels,
                queries: queries.as_deref(),
                out: &out,
                auto_confirm,
                session: SessionConfig {
                    iterations,
                    judge_depth: judge_depth.unwrap_or(config.judge_depth),
                    alpha: config.alpha,
                },
            };
            commands::eval(&engine, &args, stdout)
        }
        Command::Serve { snapshot, listen } => {
            if let Some(addr) = listen {
                config.listen = addr;
            }
            config.validate()?;
            tokio::runtime::Runtime::new()?.block_on(commands::serve(&config, snapshot))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
