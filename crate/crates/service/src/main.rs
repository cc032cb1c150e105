use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hragent_core::backends::remote::{RemoteBackend, RemoteConfig};
use hragent_core::datagen::{
    generate_many, read_jsonl, write_jsonl, CountSpec, FilterConfig, GenSpec, ScenarioRecord, SplitRatios,
    ValidationPolicy, ValidationTemplate, HR_DOMAINS,
};
use hragent_core::engine::{ActionKind, Engine, HandlerRegistry};
use hragent_core::metrics::AgaMode;
use hragent_core::normalize::ReferenceContext;
use hragent_core::schema::parse_schema;
use hragent_service::app::{build_backends, serve_with, AppState};
use hragent_service::bench::{read_latency_csv, run_bench, DEFAULT_BUDGET_MS};
use hragent_service::config::{load_schemas, ServiceConfig, BACKEND_URL_ENV};
use hragent_service::eval::{self, Format};
use hragent_service::{dataset, stub};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "hragent", version, about = "Schema-guided HR task assistant")]
struct Cli {
    /// TOML config file (defaults to $HRAGENT_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP session API.
    Serve {
        #[arg(long)]
        bind: Option<std::net::SocketAddr>,
    },
    /// Talk to the agent on the terminal.
    Chat {
        /// Schema id from the schema directory, or a path to a schema file.
        #[arg(long, default_value = "time_off")]
        schema: String,
    },
    /// Score predictions.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Replay scripted dialogues and report turn latency.
    Bench {
        #[arg(long, default_value_t = 1000)]
        turns: usize,
        /// CSV of recorded model latencies (ms) added to each turn.
        #[arg(long)]
        mock_latency_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET_MS)]
        budget_ms: f64,
    },
    /// Generate synthetic selection/extraction scenarios.
    Gen(GenArgs),
    /// Filter generated scenarios and split them into train and test files.
    Filter {
        /// Raw model output text or a scenario JSONL file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        test_ratio: f64,
        #[arg(long, default_value_t = 0.8)]
        duplicate_threshold: f64,
    },
    /// Check scenario answers with one or more validator models.
    Validate {
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Validator base URLs (repeatable). Defaults to $HRAGENT_BACKEND_URL.
        #[arg(long = "validator")]
        validators: Vec<String>,
        #[arg(long)]
        any: bool,
        #[arg(long)]
        corrected_template: bool,
        /// Print the prompts instead of sending them.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run the conformance stub of the remote model host.
    Stub {
        #[arg(long, default_value = "127.0.0.1:8090")]
        bind: std::net::SocketAddr,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Joint and average goal accuracy.
    Dst {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "micro")]
        aga: AgaArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Entity selection precision, recall and F1.
    Select {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Entity extraction Rouge.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AgaArg {
    Micro,
    Macro,
}

#[derive(Args)]
struct GenArgs {
    /// Print the prompt instead of calling the backend.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of generation calls (seeds `seed..seed+calls`).
    #[arg(long, default_value_t = 1)]
    calls: u64,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Restrict to one use case (repeatable).
    #[arg(long)]
    domain: Vec<String>,
    /// Questions per scenario.
    #[arg(long)]
    number1: Option<usize>,
    /// Correct choices per scenario.
    #[arg(long)]
    number2: Option<usize>,
    #[arg(long, default_value_t = 20)]
    scenarios_per_call: usize,
    /// Output JSONL; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let cfg = ServiceConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { bind } => serve(cfg, bind),
        Command::Chat { schema } => chat(&cfg, &schema),
        Command::Eval(cmd) => run_eval(cmd),
        Command::Bench {
            turns,
            mock_latency_file,
            budget_ms,
        } => {
            let mock = match mock_latency_file {
                Some(p) => read_latency_csv(&p)?,
                None => Vec::new(),
            };
            print!("{}", run_bench(turns, &mock, budget_ms)?.render());
            Ok(())
        }
        Command::Gen(args) => gen(&cfg, args),
        Command::Filter {
            input,
            out_dir,
            seed,
            test_ratio,
            duplicate_threshold,
        } => {
            let (scenarios, diagnostics) = dataset::load_scenarios(&input)?;
            for d in &diagnostics {
                eprintln!("block {}: {:?}: {}", d.block, d.kind, d.message);
            }
            let ratios = SplitRatios {
                train: 1.0 - test_ratio,
                test: test_ratio,
            };
            let split = dataset::filter_and_split(&scenarios, &FilterConfig { duplicate_threshold }, ratios, seed)?;
            for w in &split.warnings {
                eprintln!("warning: {w}");
            }
            dataset::write_split(&out_dir, &split)?;
            println!(
                "parsed,{}\nrejected_blocks,{}\nkept,{}\nclean,{}\ntest,{}",
                split.raw.len(),
                diagnostics.len(),
                split.clean.len() + split.test.len(),
                split.clean.len(),
                split.test.len()
            );
            Ok(())
        }
        Command::Validate {
            input,
            output,
            validators,
            any,
            corrected_template,
            dry_run,
        } => {
            let file = std::fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let records = read_jsonl(std::io::BufReader::new(file))?;
            let template = if corrected_template { ValidationTemplate::Corrected } else { ValidationTemplate::Verbatim };
            if dry_run {
                for p in dataset::validation_prompts(&records, template)? {
                    println!("{p}");
                }
                return Ok(());
            }
            let urls = if validators.is_empty() { cfg.backend_url.iter().cloned().collect() } else { validators };
            if urls.is_empty() {
                bail!("no validator configured; pass --validator or set {BACKEND_URL_ENV}");
            }
            let backends: Vec<RemoteBackend> = urls
                .into_iter()
                .map(|u| {
                    let mut rc = RemoteConfig::new(u);
                    rc.timeout_ms = cfg.backend_timeout_ms;
                    RemoteBackend::new(rc)
                })
                .collect();
            let policy = if any { ValidationPolicy::RequireAny } else { ValidationPolicy::RequireAll };
            let out = dataset::validate_records(records, &backends, template, policy)?;
            write_records(output.as_deref(), &out)
        }
        Command::Stub { bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(bind).await?;
                tracing::info!(addr = %bind, "stub listening");
                axum::serve(listener, stub::router(Default::default()))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                Ok(())
            })
        }
    }
}

fn write_records(path: Option<&Path>, records: &[ScenarioRecord]) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_jsonl(std::io::BufWriter::new(file), records)?;
        }
        None => write_jsonl(std::io::stdout().lock(), records)?,
    }
    Ok(())
}

fn serve(mut cfg: ServiceConfig, bind: Option<std::net::SocketAddr>) -> Result<()> {
    if let Some(b) = bind {
        cfg.bind = b;
    }
    let schemas = load_schemas(&cfg.schema_dir)?;
    let state = AppState::new(&cfg, schemas)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(cfg.bind).await?;
        tracing::info!(addr = %cfg.bind, remote = cfg.backend_url.is_some(), "listening");
        serve_with(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })
}

fn chat(cfg: &ServiceConfig, schema: &str) -> Result<()> {
    let schema = if Path::new(schema).is_file() {
        parse_schema(&std::fs::read_to_string(schema)?)?
    } else {
        let mut all = load_schemas(&cfg.schema_dir)?;
        let known: Vec<_> = all.keys().cloned().collect();
        all.remove(schema)
            .with_context(|| format!("unknown schema `{schema}`; known: {}", known.join(", ")))?
    };
    let engine = Engine::new(build_backends(cfg), HandlerRegistry::with_stubs(cfg.audit_dir.clone()));
    let (id, mut action) = engine.start_session(schema, cfg.engine.clone(), ReferenceContext::host_now())?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    loop {
        writeln!(out, "agent> {}", action.text)?;
        if matches!(action.kind, ActionKind::Dispatched | ActionKind::Terminated) {
            return Ok(());
        }
        write!(out, "you> ")?;
        out.flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            return Ok(());
        }
        if line.trim().is_empty() {
            continue;
        }
        action = engine.handle_user_turn(&id, line.trim())?;
    }
}

fn run_eval(cmd: EvalCommand) -> Result<()> {
    let text = match cmd {
        EvalCommand::Dst { pred, gold, aga, format } => {
            let mode = match aga {
                AgaArg::Micro => AgaMode::Micro,
                AgaArg::Macro => AgaMode::Macro,
            };
            eval::render_dst(&eval::eval_dst(&pred, &gold, mode)?, format)
        }
        EvalCommand::Select { input, format } => eval::render_select(&eval::eval_select(&input)?, format),
        EvalCommand::Extract { input, format } => eval::render_extract(&eval::eval_extract(&input)?, format),
    };
    print!("{text}");
    Ok(())
}

fn gen(cfg: &ServiceConfig, args: GenArgs) -> Result<()> {
    let mut spec = GenSpec {
        scenarios_per_call: args.scenarios_per_call,
        ..GenSpec::default()
    };
    if !args.domain.is_empty() {
        spec.domains = args.domain;
    }
    if let Some(n) = args.number1 {
        spec.number1 = CountSpec::Fixed(n);
    }
    if let Some(n) = args.number2 {
        spec.number2 = CountSpec::Fixed(n);
    }
    spec.validate()?;
    let seeds: Vec<u64> = (args.seed..args.seed + args.calls.max(1)).collect();
    if args.dry_run {
        for s in seeds {
            let d = hragent_core::datagen::draw_prompt(&spec, s)?;
            eprintln!("seed {s}: domain `{}`, number1 {}, number2 {}", d.domain, d.number1, d.number2);
            println!("{}", d.text);
        }
        return Ok(());
    }
    let Some(url) = &cfg.backend_url else {
        bail!(
            "generation needs a model host; set {BACKEND_URL_ENV} or backend_url (use --dry-run to print prompts). Known use cases: {}",
            HR_DOMAINS.len()
        );
    };
    let mut rc = RemoteConfig::new(url.clone());
    rc.timeout_ms = cfg.backend_timeout_ms.max(60_000);
    let backend = RemoteBackend::new(rc);
    let mut records = Vec::new();
    for (seed, result) in seeds.iter().zip(generate_many(&backend, &spec, &seeds, args.parallelism)) {
        match result {
            Ok(out) => {
                for d in &out.diagnostics {
                    eprintln!("seed {seed} block {}: {:?}: {}", d.block, d.kind, d.message);
                }
                records.extend(out.scenarios.into_iter().map(|scenario| ScenarioRecord { scenario, verdict: None }));
            }
            Err(e) => eprintln!("seed {seed}: {e}"),
        }
    }
    eprintln!("generated {} scenarios", records.len());
    write_records(args.output.as_deref(), &records)
}
