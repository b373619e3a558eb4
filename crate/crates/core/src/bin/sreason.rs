use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spatial_reasoner::io::{dump_facts, export_mermaid, export_scene, load_document, summary};
use spatial_reasoner::pipeline::{parse_pipeline, EvaluationContext, LogKind};
use spatial_reasoner::{AdjustmentSettings, Error, Taxonomy};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Mermaid,
    Scene,
}

/// Runs an inference pipeline over a fact document.
#[derive(Debug, Parser)]
#[command(name = "sreason", version)]
struct Args {
    /// Fact document (JSON).
    #[arg(long)]
    facts: PathBuf,
    /// Class hierarchy (line format or RDF/XML).
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Pipeline text.
    #[arg(long, conflicts_with = "pipeline_file")]
    pipeline: Option<String>,
    /// File holding the pipeline text.
    #[arg(long)]
    pipeline_file: Option<PathBuf>,
    /// Directory for log artifacts and final outputs.
    #[arg(long, env = "SR_LOG_DIR")]
    out: Option<PathBuf>,
    /// Final output written after the run.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Observer id for visibility relations.
    #[arg(long)]
    observer: Option<String>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Runtime { .. } => Failure::Runtime(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(args: Args) -> Result<(), Failure> {
    let (fb, settings) = load_document(&read(&args.facts)?)?;
    let source = match (&args.pipeline, &args.pipeline_file) {
        (Some(text), _) => text.clone(),
        (None, Some(path)) => read(path)?,
        (None, None) => String::new(),
    };
    let program = parse_pipeline(&source).map_err(|e| Failure::Usage(format!("pipeline: {e}")))?;
    let mut ctx = EvaluationContext::new(fb, settings.unwrap_or_else(AdjustmentSettings::default));
    if let Some(path) = &args.taxonomy {
        ctx = ctx.with_taxonomy(Taxonomy::load(&read(path)?)?);
    }
    if let Some(obs) = &args.observer {
        ctx = ctx.with_observer(obs);
    }
    ctx.run(&program)?;

    for log in &ctx.logs {
        match (&args.out, log.kind) {
            (Some(dir), _) => {
                let name = format!("step{:02}_{}.{}", log.step, log.kind.name(), log.kind.extension());
                write(dir, &name, &log.content)?;
                if log.kind == LogKind::Summary {
                    print!("{}", log.content);
                }
            }
            (None, _) => print!("{}", log.content),
        }
    }

    if let Some(format) = args.format {
        let (name, content) = match format {
            Format::Json => ("facts.json", dump_facts(&ctx.fact_base, Some(&ctx.settings))?),
            Format::Mermaid => ("graph.md", export_mermaid(&ctx.fact_base, ctx.fact_base.relations(), &[])),
            Format::Scene => ("scene.obj", export_scene(ctx.fact_base.objects())),
        };
        match &args.out {
            Some(dir) => write(dir, name, &content)?,
            None => print!("{content}"),
        }
    } else if program.operations.is_empty() {
        print!("{}", summary(&ctx.fact_base, ctx.current()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("sreason: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("sreason: {m}");
            ExitCode::from(2)
        }
    }
}
