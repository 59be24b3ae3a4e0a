use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod results;

/// Review-text analytics pipeline.
///
/// Exit codes: 0 success, 1 usage or argument error, 2 input-format or store
/// error, 3 internal invariant violation. Set KM_NOW (ISO-8601) to pin the
/// clock used for metadata and record timestamps.
#[derive(Debug, Parser)]
#[command(name = "textkm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read .html/.txt files into a deduplicated corpus file.
    Ingest(IngestArgs),
    /// Preprocess a corpus and write the results files.
    Analyze(AnalyzeArgs),
    /// Draw the SVG charts from a results directory.
    Report(ReportArgs),
    /// Append results as knowledge records and emit outbox messages.
    Export(ExportArgs),
    /// Rank corpus documents against a free-text query.
    Search(SearchArgs),
    /// Train naive Bayes on labeled documents and classify one target.
    Classify(ClassifyArgs),
    /// Re-hash every record in a knowledge store.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of .html and/or .txt sources, read in file-name order.
    #[arg(long)]
    pub input_dir: PathBuf,
    /// Class attribute marking review containers in HTML sources.
    #[arg(long = "class", default_value = "portfolioContainer")]
    pub class_name: String,
    /// Corpus file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Document ids are <prefix>_1, <prefix>_2, ...
    #[arg(long, default_value = "student")]
    pub id_prefix: String,
    /// Treat each HTML file as one document instead of one per review block.
    #[arg(long)]
    pub join_blocks: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides output_dir from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides lda.seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides lda.k from the config.
    #[arg(long)]
    pub topics: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding the analyze outputs.
    #[arg(long)]
    pub results: PathBuf,
    /// Where to write the SVGs [default: the results directory].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Directory holding the analyze (and optionally report) outputs.
    #[arg(long)]
    pub results: PathBuf,
    /// Line-delimited JSON record store; created if absent.
    #[arg(long)]
    pub store: PathBuf,
    /// Outbox directory; created if absent.
    #[arg(long)]
    pub outbox: PathBuf,
    /// Extra tag attached to every record (repeatable).
    #[arg(long = "tag")]
    pub tags: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Run configuration whose pipeline and selection settings are used
    /// [default: built-in pipeline].
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["doc", "text"])))]
pub struct ClassifyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// CSV of doc_id,label rows (header optional).
    #[arg(long)]
    pub labels: PathBuf,
    /// Classify this corpus document.
    #[arg(long)]
    pub doc: Option<String>,
    /// Classify this free text.
    #[arg(long)]
    pub text: Option<String>,
    /// Laplace smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Run configuration whose pipeline and selection settings are used
    /// [default: built-in pipeline].
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub store: PathBuf,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(1);
        }
    };
    std::panic::set_hook(Box::new(|_| {}));
    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Report(a) => commands::report(&a),
        Command::Export(a) => commands::export(&a),
        Command::Search(a) => commands::search(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Verify(a) => commands::verify(&a),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.message()));
            ExitCode::from(e.code())
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_default();
            eprintln!("error: internal: {}", one_line(&msg));
            ExitCode::from(3)
        }
    }
}
