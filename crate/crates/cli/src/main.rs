use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use psv_cli::config::{parse_csv_list, Overrides, PipelineConfig, Predictor, Stage};
use psv_cli::pipeline::Pipeline;
use psv_core::aggregate::Family;
use psv_core::import::{import_flat, ImportMapping};
use psv_core::llm::UreqTransport;
use psv_core::signature::SignatureFilter;

/// Perspectivized stance vectors for debate arguments.
#[derive(Parser)]
#[command(name = "psv", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "psv.toml")]
    config: PathBuf,
    /// Output directory; overrides `paths.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated aggregation families, e.g. `S0,P0`.
    #[arg(long, global = true)]
    families: Option<String>,
    /// Concepts per side of the signature.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// baseline, llm_zero or llm_few.
    #[arg(long, global = true)]
    predictor: Option<Predictor>,
    /// Comma-separated signature filters (hypernym, relevance) or `none`.
    #[arg(long, global = true)]
    filters: Option<String>,
    /// HTTP timeout for model and embedding requests, in seconds.
    #[arg(long, global = true, default_value_t = 120)]
    timeout: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align arguments to graph concepts.
    Align,
    /// Induce one signature per topic.
    Signature,
    /// Predict a stance per argument and signature concept.
    Psv,
    /// Aggregate every same-topic argument pair.
    Scores,
    /// Score signatures, stances and aggregations against annotations.
    Eval,
    /// Assign stakeholder groups to arguments.
    Stakeholders,
    /// Stakeholder matrices, top perspectives and plot tables.
    Report,
    /// Run every stage in order.
    Run,
    /// Delete cached model replies.
    CachePurge,
    /// Convert a flat dataset export into a corpus file.
    Import {
        /// Line-delimited JSON, one argument per line.
        #[arg(long)]
        input: PathBuf,
        /// TOML field mapping; defaults read `topic_id`, `question`, `id`, `text`, `stance`.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Corpus file to write.
        #[arg(long)]
        output: PathBuf,
    },
}

fn list<T: FromStr<Err = String>>(flag: &str, value: Option<String>) -> Result<Option<Vec<T>>> {
    value
        .map(|v| parse_csv_list(&v).map_err(|e| anyhow!("--{flag}: {e}")))
        .transpose()
}

fn import(input: &Path, mapping: Option<&Path>, output: &Path) -> Result<()> {
    let mapping: ImportMapping = match mapping {
        Some(p) => toml::from_str(&std::fs::read_to_string(p).with_context(|| p.display().to_string())?)
            .with_context(|| format!("mapping {}", p.display()))?,
        None => ImportMapping::default(),
    };
    let corpus = import_flat(input, &mapping)?;
    std::fs::write(output, corpus.to_jsonl()).with_context(|| output.display().to_string())?;
    println!(
        "{}: {} topics, {} arguments",
        output.display(),
        corpus.topics().len(),
        corpus.arguments().len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Import {
        input,
        mapping,
        output,
    } = &cli.command
    {
        return import(input, mapping.as_deref(), output);
    }
    let overrides = Overrides {
        out_dir: cli.out,
        families: list::<Family>("families", cli.families)?,
        k: cli.k,
        predictor: cli.predictor,
        filters: list::<SignatureFilter>("filters", cli.filters)?,
    };
    let config = PipelineConfig::load(&cli.config, &overrides)?;
    let transport = Arc::new(UreqTransport::new(Duration::from_secs(cli.timeout)));
    let pipeline = Pipeline::new(config, transport)?;
    let written = match cli.command {
        Command::Align => pipeline.run_stage(Stage::Align)?,
        Command::Signature => pipeline.run_stage(Stage::Signature)?,
        Command::Psv => pipeline.run_stage(Stage::Psv)?,
        Command::Scores => pipeline.run_stage(Stage::Scores)?,
        Command::Eval => pipeline.run_stage(Stage::Eval)?,
        Command::Stakeholders => pipeline.run_stage(Stage::Stakeholders)?,
        Command::Report => pipeline.run_stage(Stage::Report)?,
        Command::Run => pipeline.run_all()?,
        Command::CachePurge => {
            let n = pipeline.purge_cache()?;
            println!("removed {n} cached replies");
            return Ok(());
        }
        Command::Import { .. } => unreachable!("handled before loading the config"),
    };
    for path in written {
        println!("{}", path.display());
    }
    log::info!("{} model requests", pipeline.network_calls());
    Ok(())
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
