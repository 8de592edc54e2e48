use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use ontoboot::config::CONFIG_ENV;
use ontoboot::error::{ConfigError, RankingError};
use ontoboot::persist::{self, ArtifactPaths};
use ontoboot::ranking::{rank_query, Query};
use ontoboot::{Config, Error, Registry, RelationKind};

/// Bootstrap an ontology from WSDL descriptors and rank services against it.
#[derive(Debug, Parser)]
#[command(name = "ontoboot", version)]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Directory holding ontology.json, registry.json and report.json.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Extra stop-word file (one word per line, `#` comments).
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,

    /// Use the stop-word file instead of the built-in list.
    #[arg(long, global = true)]
    stopwords_replace: bool,

    /// Strip plural `s` from tokens.
    #[arg(long, global = true)]
    stemming: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the three JSON artifacts.
    Bootstrap(BootstrapArgs),
    /// Rank registered services for the given terms.
    Query {
        #[arg(required = true)]
        terms: Vec<String>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Record one visit of a service.
    Visit { service_id: String },
    /// Re-emit the ontology in its canonical form.
    Export {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the corpus and the ontology.
    Stats,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    wsdl_dir: Option<PathBuf>,
    #[arg(long)]
    context_dir: Option<PathBuf>,
    /// Descriptors kept per service.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_weight: Option<f64>,
    /// Search results per query.
    #[arg(long)]
    n: Option<usize>,
    /// Descriptors per search result.
    #[arg(long)]
    j: Option<usize>,
    /// Context descriptors per service.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Process services in this order (comma-separated ids) instead of
    /// ascending id. Debugging aid.
    #[arg(long, value_delimiter = ',', hide = true)]
    debug_order: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Ranking(RankingError::EmptyQuery) => Failure::Usage(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(dir) = &cli.output_dir {
        cfg.paths.output_dir = dir.clone();
    }
    if let Some(path) = &cli.stopwords {
        cfg.paths.stopwords_file = Some(path.clone());
    }
    cfg.flags.stopwords_replace |= cli.stopwords_replace;
    cfg.flags.stemming |= cli.stemming;
    Ok(cfg)
}

fn apply_bootstrap_overrides(cfg: &mut Config, a: &BootstrapArgs) -> Result<(), ConfigError> {
    if let Some(d) = &a.wsdl_dir {
        cfg.paths.wsdl_dir = Some(d.clone());
    }
    if let Some(d) = &a.context_dir {
        cfg.paths.context_dir = Some(d.clone());
    }
    macro_rules! set {
        ($($flag:ident => $field:expr),* $(,)?) => {
            $(if let Some(v) = a.$flag { $field = v; })*
        };
    }
    set! {
        k => cfg.tfidf.k,
        min_weight => cfg.tfidf.min_weight,
        n => cfg.context.n,
        j => cfg.context.j,
        m => cfg.context.m,
        theta => cfg.context.theta,
        alpha => cfg.ranking.alpha,
        beta => cfg.ranking.beta,
        gamma => cfg.ranking.gamma,
    }
    cfg.validate()
}

fn load_registry(dir: &Path) -> Result<Registry, Failure> {
    persist::load_artifacts(dir).map_err(|e| Failure::Data(e.to_string()))
}

fn bootstrap(cfg: &mut Config, args: &BootstrapArgs) -> Result<(), Failure> {
    apply_bootstrap_overrides(cfg, args)?;
    let output = ontoboot::pipeline::bootstrap_from_config::<f64>(cfg, args.debug_order.as_deref())?;
    let paths = persist::write_artifacts(&output, &cfg.paths.output_dir).map_err(|e| Failure::Data(e.to_string()))?;
    let t = &output.report.timings;
    info!("analysis {:?}, evolution {:?}", t.analysis, t.evolution);
    let skipped = output.report.services.iter().filter(|s| s.skip_reason.is_some()).count();
    println!(
        "{} services ({} skipped), {} concepts, {} relations, {} quarantined",
        output.report.services.len(),
        skipped,
        output.ontology.concept_count(),
        output.ontology.relation_count(),
        output.ontology.quarantine().len()
    );
    for p in [&paths.ontology, &paths.registry, &paths.report] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn query(cfg: &Config, terms: &[String], top_k: Option<usize>) -> Result<(), Failure> {
    let top_k = top_k.unwrap_or(cfg.ranking.top_k);
    if top_k == 0 {
        return Err(Failure::Usage("--top-k must be at least 1".to_owned()));
    }
    let tokenizer = cfg.tokenizer()?;
    let query = Query::parse(terms, &tokenizer).map_err(Error::from)?;
    let registry = load_registry(&cfg.paths.output_dir)?;
    let ranked = rank_query(&query, &registry, &registry.weights, top_k).map_err(Error::from)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:>4}  {:<24} {:>8} {:>8} {:>8} {:>8}", "rank", "service", "score", "concept", "text", "priority");
    for (i, e) in ranked.iter().enumerate() {
        let c = &e.components;
        let _ = writeln!(
            out,
            "{:>4}  {:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            i + 1,
            e.service_id,
            e.score,
            c.concept_score,
            c.text_score,
            c.priority_score
        );
    }
    Ok(())
}

fn visit(cfg: &Config, service_id: &str) -> Result<(), Failure> {
    let visits = persist::record_visit_in_dir(&cfg.paths.output_dir, service_id)?;
    println!("{service_id}: {visits} visit(s)");
    Ok(())
}

fn export(cfg: &Config, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let path = ArtifactPaths::in_dir(&cfg.paths.output_dir).ontology;
    let ontology = persist::load_ontology(&path).map_err(|e| Failure::Data(e.to_string()))?;
    match format {
        Format::Json => match out {
            Some(p) => persist::save_ontology(&ontology, p).map_err(|e| Failure::Data(e.to_string()))?,
            None => print!("{}", persist::ontology_json(&ontology)),
        },
    }
    Ok(())
}

fn stats(cfg: &Config) -> Result<(), Failure> {
    let registry = load_registry(&cfg.paths.output_dir)?;
    let ontology = registry.ontology();
    let tokens: u64 = registry.records().map(|r| r.bag.total()).sum();
    let visits: u64 = registry.records().map(|r| r.visits).sum();
    println!("services:      {}", registry.len());
    println!("tokens:        {tokens}");
    println!("vocabulary:    {}", registry.stats().vocabulary_len());
    println!("visits:        {visits}");
    println!("version:       {}", ontology.version());
    println!("concepts:      {}", ontology.concept_count());
    let mut by_kind: BTreeMap<RelationKind, usize> = BTreeMap::new();
    for r in ontology.relations() {
        *by_kind.entry(r.kind).or_default() += 1;
    }
    for (kind, n) in by_kind {
        println!("  {kind:?}: {n}");
    }
    println!("events:        {}", ontology.events().len());
    println!("quarantined:   {}", ontology.quarantine().len());
    let mut concepts: Vec<_> = ontology.concepts().collect();
    concepts.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.name.cmp(&b.name)));
    for c in concepts.iter().take(10) {
        println!("  {:<20} support {}  contexts {}", c.name, c.support, c.contexts.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Bootstrap(args) => bootstrap(&mut cfg, args),
        Command::Query { terms, top_k } => query(&cfg, terms, *top_k),
        Command::Visit { service_id } => visit(&cfg, service_id),
        Command::Export { format, out } => export(&cfg, *format, out.as_deref()),
        Command::Stats => stats(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
