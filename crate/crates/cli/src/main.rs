//! `reqimpact`: validation, scripted propagation sessions, impact reports,
//! AADL import, rule inspection and the HTTP server.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use reqimpact_core::model::{validate_architecture_model, validate_requirements_model, validate_trace_model};
use reqimpact_core::{
    default_rules, has_errors, impact_report, load_rules, to_canonical_json, validate_rules, ArchitectureModel,
    AtomicEdit, ChoiceRecord, ProposedChange, ReportFormat, RequirementsModel, RuleSet, Session, TraceModel, Violation,
};

#[derive(Debug, Parser)]
#[command(name = "reqimpact", version, about = "Requirements change impact analysis")]
struct Cli {
    /// Rule document layered over the built-in tables.
    #[arg(long, global = true, env = "IMPACT_RULES", value_name = "FILE")]
    rules: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check requirements, trace and architecture models.
    Validate {
        /// JSON models (kind detected from content) or `.aadl` files.
        #[arg(required = true)]
        models: Vec<PathBuf>,
        /// Print findings as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Inspect the rule tables.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Create and steer propagation sessions.
    Session {
        #[command(subcommand)]
        action: SessionAction,
    },
    /// Architecture impact of a completed session.
    Impact {
        session: PathBuf,
        /// Impacted requirement to start the traversal from.
        #[arg(long)]
        select: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Human-readable report instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Convert an AADL file to an architecture model.
    ImportAadl {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum RulesAction {
    /// Print the effective rule tables.
    Show {
        /// One `table | cell | value` line per cell.
        #[arg(long)]
        text: bool,
    },
    /// Validate the effective rule tables.
    Check,
}

#[derive(Debug, Subcommand)]
enum SessionAction {
    /// Start a session from a proposed change.
    Start {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        change: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List pending decisions.
    Choices {
        session: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Resolve one pending decision.
    Choose {
        session: PathBuf,
        #[arg(long)]
        decision: String,
        /// Edit to apply, e.g. `NoImpact` or `PropagateChange:AddConstraintToProperty`.
        #[arg(long)]
        pick: AtomicEdit,
        #[arg(long)]
        justification: Option<String>,
        /// Where to write the new state; defaults to updating SESSION in place.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-run a session from its initial change.
    Replay {
        session: PathBuf,
        /// Choice script to apply instead of the stored log.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    traces: PathBuf,
    /// Architecture model as JSON or `.aadl`.
    #[arg(long)]
    architecture: PathBuf,
    /// Directory for session journals.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Allow cross-origin requests from any origin.
    #[arg(long)]
    cors: bool,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            if !rendered.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Returns `Ok(false)` when the command ran but found errors.
fn run(cli: Cli) -> Result<bool> {
    let rules = || rule_set(cli.rules.as_deref());
    match cli.command {
        Command::Validate { models, json } => validate(&models, json),
        Command::Rules { action: RulesAction::Show { text } } => {
            let rules = rules()?;
            if text {
                print!("{}", rules_text(&rules));
            } else {
                print!("{}", rules.to_json());
            }
            Ok(true)
        }
        Command::Rules { action: RulesAction::Check } => {
            let findings = validate_rules(&rules()?);
            report_findings(&findings, false);
            Ok(!has_errors(&findings))
        }
        Command::Session { action } => session(action, rules),
        Command::Impact { session, select, output, text } => {
            let session = load_session(&session)?;
            let analysis = session.impact(&select)?;
            let format = if text { ReportFormat::Text } else { ReportFormat::Json };
            emit(output.as_deref(), &impact_report(&analysis, &session, &select, format))?;
            Ok(true)
        }
        Command::ImportAadl { file, output } => {
            let (model, diags) = reqimpact_aadl::import_architecture(&read(&file)?);
            for d in &diags {
                eprintln!("{}:{d}", file.display());
            }
            if reqimpact_aadl::has_errors(&diags) {
                return Ok(false);
            }
            emit(output.as_deref(), &model.to_json())?;
            Ok(true)
        }
        Command::Serve(args) => serve(args, rules()?),
    }
}

fn session(action: SessionAction, rules: impl FnOnce() -> Result<RuleSet>) -> Result<bool> {
    match action {
        SessionAction::Start { model, traces, change, output } => {
            let (model, notices) = RequirementsModel::from_json(&read(&model)?).context("requirements model")?;
            report_findings(&notices, true);
            let traces = TraceModel::from_json(&read(&traces)?).context("trace model")?;
            let change = ProposedChange::from_json(&read(&change)?).context("proposed change")?;
            let session = Session::start(Arc::new(model), Arc::new(traces), change, Arc::new(rules()?))?;
            emit(output.as_deref(), &session.to_json())?;
            Ok(true)
        }
        SessionAction::Choices { session, json } => {
            let session = load_session(&session)?;
            if json {
                print!("{}", to_canonical_json(session.pending_decisions()));
            } else if session.is_complete() {
                println!("path complete");
            } else {
                for d in session.pending_decisions() {
                    let picks: Vec<String> = d.alternatives.edits().iter().map(ToString::to_string).collect();
                    let note = if d.unspecified_cell { " (justification required)" } else { "" };
                    println!("{}  {} -> {}  [{}]{note}", d.id, d.from, d.to, picks.join(", "));
                }
            }
            Ok(true)
        }
        SessionAction::Choose { session: path, decision, pick, justification, output } => {
            let session = load_session(&path)?;
            let next = session.choose(&decision, pick, justification.as_deref())?;
            emit(Some(output.as_deref().unwrap_or(&path)), &next.to_json())?;
            Ok(true)
        }
        SessionAction::Replay { session: path, script, output } => {
            let stored_text = read(&path)?;
            let stored = Session::from_json(&stored_text).with_context(|| format!("session {}", path.display()))?;
            match script {
                Some(script) => {
                    let script: Vec<ChoiceRecord> =
                        serde_json::from_str(&read(&script)?).context("choice script")?;
                    let replayed = stored.replay_script(&script)?;
                    emit(output.as_deref(), &replayed.to_json())?;
                    Ok(true)
                }
                None => {
                    let replayed = stored.replay()?.to_json();
                    if let Some(out) = output.as_deref() {
                        emit(Some(out), &replayed)?;
                    }
                    if replayed == stored_text {
                        println!("replay reproduces {}", path.display());
                        Ok(true)
                    } else {
                        println!("replay diverges from {}", path.display());
                        Ok(false)
                    }
                }
            }
        }
    }
}

fn validate(paths: &[PathBuf], json: bool) -> Result<bool> {
    let mut findings: Vec<Violation> = Vec::new();
    let mut import_errors = false;
    let (mut reqs, mut traces, mut arch) = (None, None, None);
    for path in paths {
        let text = read(path)?;
        if path.extension().is_some_and(|x| x == "aadl") {
            let (model, diags) = reqimpact_aadl::import_architecture(&text);
            for d in &diags {
                eprintln!("{}:{d}", path.display());
            }
            import_errors |= reqimpact_aadl::has_errors(&diags);
            findings.extend(validate_architecture_model(&model));
            arch = Some(model);
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
        let parse = || format!("{}", path.display());
        if value.get("requirements").is_some() {
            let (model, notices) = RequirementsModel::from_json(&text).with_context(parse)?;
            findings.extend(notices);
            findings.extend(validate_requirements_model(&model));
            reqs = Some(model);
        } else if value.get("traces").is_some() {
            traces = Some(TraceModel::from_json(&text).with_context(parse)?);
        } else if value.get("elements").is_some() {
            let model = ArchitectureModel::from_json(&text).with_context(parse)?;
            findings.extend(validate_architecture_model(&model));
            arch = Some(model);
        } else {
            bail!("{}: not a requirements, trace or architecture model", path.display());
        }
    }
    match (&traces, &reqs, &arch) {
        (Some(t), Some(r), Some(a)) => findings.extend(validate_trace_model(t, r, a)),
        (Some(_), _, _) => bail!("trace models are checked against both a requirements and an architecture model"),
        _ => {}
    }
    findings.sort();
    findings.dedup();
    if json {
        print!("{}", to_canonical_json(&findings));
    } else {
        report_findings(&findings, false);
        let errors = findings.iter().filter(|v| v.is_error()).count();
        println!("{errors} error(s), {} notice(s)", findings.len() - errors);
    }
    Ok(!import_errors && !has_errors(&findings))
}

fn serve(args: ServeArgs, rules: RuleSet) -> Result<bool> {
    let (model, notices) = RequirementsModel::from_json(&read(&args.model)?).context("requirements model")?;
    report_findings(&notices, true);
    let traces = TraceModel::from_json(&read(&args.traces)?).context("trace model")?;
    let arch_text = read(&args.architecture)?;
    let architecture = if args.architecture.extension().is_some_and(|x| x == "aadl") {
        let (model, diags) = reqimpact_aadl::import_architecture(&arch_text);
        if reqimpact_aadl::has_errors(&diags) {
            let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
            bail!("{} does not import cleanly:\n{}", args.architecture.display(), lines.join("\n"));
        }
        model
    } else {
        ArchitectureModel::from_json(&arch_text).context("architecture model")?
    };
    let workspace =
        reqimpact_service::Workspace { model: Arc::new(model), traces: Arc::new(traces), rules: Arc::new(rules) };
    let store = match &args.journal {
        Some(dir) => reqimpact_service::SessionStore::open(workspace, dir)?,
        None => reqimpact_service::SessionStore::in_memory(workspace),
    };
    let options = reqimpact_service::ServeOptions { permissive_cors: args.cors };
    let app = reqimpact_service::app(store, architecture, &options);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(reqimpact_service::serve(args.addr, app))?;
    Ok(true)
}

fn rule_set(path: Option<&Path>) -> Result<RuleSet> {
    match path {
        Some(path) => load_rules(&read(path)?).with_context(|| format!("rules {}", path.display())),
        None => Ok(default_rules()),
    }
}

fn rules_text(rules: &RuleSet) -> String {
    let mut out = String::new();
    for (key, set) in rules.propagation_cells() {
        let picks: Vec<String> = set.edits().iter().map(ToString::to_string).collect();
        out.push_str(&format!("propagation | {} | {}\n", key.address(), picks.join(", ")));
    }
    for (key, rule) in rules.add_requirement_cells() {
        out.push_str(&format!("add_requirement | {} | {rule:?}\n", key.address()));
    }
    for (key, rule) in rules.traversal_cells() {
        out.push_str(&format!("traversal | {} | {rule:?}\n", key.address()));
    }
    out
}

fn load_session(path: &Path) -> Result<Session> {
    Session::from_json(&read(path)?).with_context(|| format!("session {}", path.display()))
}

fn report_findings(findings: &[Violation], to_stderr: bool) {
    for v in findings {
        if to_stderr {
            eprintln!("{v}");
        } else {
            println!("{v}");
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
