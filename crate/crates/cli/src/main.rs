//! Command-line front end: compile vocabularies to SQL, validate and
//! analyze service trees, export ontological views, and run scenarios
//! against the live engine.
//!
//! Exit codes: 0 success, 1 domain diagnostics or unreadable input,
//! 2 usage errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trigate::diag::Diagnostic;
use trigate::harness::{check_expectations, run_scenario, Scenario, ScenarioFile};
use trigate::ontology::{render_triples, to_dot, to_triples};
use trigate::schema::{derive_schema, emit_ddl};
use trigate::tree::{
    load_tree, optimal_sla, validate_tree, AvailabilityForecast, CiKind, ServiceTree, SlaTerms,
};
use trigate::trigger::{compile_all, compile_rule, emit_trigger};
use trigate::vocab::{parse_vocabulary, Vocabulary};

#[derive(Parser)]
#[command(name = "trigate", version, about = "Business-rule compiler and service-tree toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a structured-English vocabulary (.sbvr) to SQL.
    Compile {
        /// Vocabulary source file.
        input: PathBuf,
        /// What to emit.
        #[arg(long, value_enum, default_value_t = Emit::All)]
        emit: Emit,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Service-tree inspection and analysis.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Compile a vocabulary, install it on a fresh in-memory engine, and
    /// run a scenario file against it.
    Run {
        /// Vocabulary source file.
        vocab: PathBuf,
        /// Scenario file (seed rows, actions, expectations).
        scenario: PathBuf,
    },
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Check structural invariants and SLA priority uniqueness.
    Validate { tree: PathBuf },
    /// Print every occurrence of an item with its effective SLA.
    Resolve {
        tree: PathBuf,
        /// Target item id (must be a SVC or HOS).
        #[arg(long)]
        item: String,
    },
    /// Report redundant MTCs and priority ties; with a forecast, also
    /// the cost-optimal SLA per service or host.
    Analyze {
        tree: PathBuf,
        /// Availability forecast file enabling optimal-SLA selection.
        #[arg(long)]
        forecast: Option<PathBuf>,
    },
    /// Export the instance expansion.
    Export {
        tree: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Ddl,
    Triggers,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Triples,
}

enum Failure {
    Diagnostics(Vec<Diagnostic>),
    Message(String),
}

impl From<Vec<Diagnostic>> for Failure {
    fn from(diags: Vec<Diagnostic>) -> Self {
        Failure::Diagnostics(diags)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(stdout_payload) => {
            print!("{stdout_payload}");
            ExitCode::SUCCESS
        }
        Err(Failure::Diagnostics(diags)) => {
            for diag in diags {
                println!("{diag}");
            }
            ExitCode::FAILURE
        }
        Err(Failure::Message(message)) => {
            println!("error {message}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: &Command) -> Result<String, Failure> {
    match command {
        Command::Compile {
            input,
            emit,
            output,
        } => {
            let vocabulary = load_vocabulary(input)?;
            let payload = match emit {
                Emit::Ddl => emit_ddl(&derive_schema(&vocabulary)),
                Emit::Triggers => {
                    let schema = derive_schema(&vocabulary);
                    let mut out = String::new();
                    for rule in &vocabulary.rules {
                        let trigger = compile_rule(rule, &schema)
                            .map_err(|e| Failure::Message(e.to_string()))?;
                        out.push_str(&emit_trigger(&trigger));
                        out.push('\n');
                    }
                    out
                }
                Emit::All => compile_all(&vocabulary)?,
            };
            match output {
                Some(path) => {
                    fs::write(path, payload).map_err(|e| {
                        Failure::Message(format!("cannot write {}: {e}", path.display()))
                    })?;
                    Ok(String::new())
                }
                None => Ok(payload),
            }
        }
        Command::Tree(tree_command) => dispatch_tree(tree_command),
        Command::Run { vocab, scenario } => {
            let vocabulary = read_file(vocab)?;
            let file: ScenarioFile = serde_json_from(&read_file(scenario)?, scenario)?;
            let scenario = Scenario::from_parts(vocabulary, file);
            let outcomes = run_scenario(&scenario).map_err(|e| Failure::Message(e.to_string()))?;
            let mut out = String::new();
            for (i, outcome) in outcomes.iter().enumerate() {
                out.push_str(&format!("{} {outcome}\n", i + 1));
            }
            let mismatches = check_expectations(&scenario, &outcomes);
            if !mismatches.is_empty() {
                print!("{out}");
                return Err(mismatches.into());
            }
            Ok(out)
        }
    }
}

fn dispatch_tree(command: &TreeCommand) -> Result<String, Failure> {
    match command {
        TreeCommand::Validate { tree } => {
            let tree = load_tree_file(tree)?;
            let diags = validate_tree(&tree);
            if !diags.is_empty() {
                return Err(diags.into());
            }
            Ok(format!(
                "valid: {} items, {} edges, {} roots\n",
                tree.items().len(),
                tree.edges().count(),
                tree.roots().count()
            ))
        }
        TreeCommand::Resolve { tree, item } => {
            let tree = load_tree_file(tree)?;
            let target = tree
                .item(item)
                .ok_or_else(|| Failure::Message(format!("unknown item '{item}'")))?;
            if !matches!(target.kind, CiKind::Svc | CiKind::Hos) {
                return Err(Failure::Message(format!(
                    "resolve target must be SVC or HOS, got {} '{item}'",
                    target.kind
                )));
            }
            let mut out = String::new();
            for occurrence in tree
                .occurrences(item)
                .map_err(|e| Failure::Message(e.to_string()))?
            {
                let resolution = match tree.effective_sla(&occurrence) {
                    Ok(Some(id)) => id,
                    Ok(None) => "none".to_string(),
                    Err(trigate::tree::TreeError::PriorityTie { .. }) => {
                        "PRIORITY-TIE".to_string()
                    }
                    Err(other) => return Err(Failure::Message(other.to_string())),
                };
                out.push_str(&format!("{occurrence}: {resolution}\n"));
            }
            Ok(out)
        }
        TreeCommand::Analyze { tree, forecast } => {
            let tree = load_tree_file(tree)?;
            let mut out = String::new();
            for (mtc, reason) in tree.find_redundant_mtcs() {
                out.push_str(&format!("REDUNDANT-MTC {mtc}: {reason}\n"));
            }
            for tie in tree.scan_priority_ties() {
                out.push_str(&format!(
                    "PRIORITY-TIE {} via {}: {} share priority {}\n",
                    tie.occurrence.target(),
                    tie.occurrence,
                    tie.candidates.join(", "),
                    tie.priority
                ));
            }
            if let Some(path) = forecast {
                let forecast: AvailabilityForecast = serde_json_from(&read_file(path)?, path)?;
                out.push_str(&optimal_sla_report(&tree, &forecast)?);
            }
            Ok(out)
        }
        TreeCommand::Export { tree, format } => {
            let tree = load_tree_file(tree)?;
            Ok(match format {
                Format::Dot => to_dot(&tree),
                Format::Triples => render_triples(&to_triples(&tree)),
            })
        }
    }
}

/// For each service or host, gather every SLA in scope on any of its
/// occurrences and pick the cheapest under the forecast (one-year
/// horizon).
fn optimal_sla_report(
    tree: &ServiceTree,
    forecast: &AvailabilityForecast,
) -> Result<String, Failure> {
    let mut out = String::new();
    for item in tree.items() {
        if !matches!(item.kind, CiKind::Svc | CiKind::Hos) {
            continue;
        }
        let mut in_scope: BTreeSet<String> = BTreeSet::new();
        for occurrence in tree
            .occurrences(&item.id)
            .map_err(|e| Failure::Message(e.to_string()))?
        {
            for node in &occurrence.path {
                for child in tree
                    .children_of(node)
                    .map_err(|e| Failure::Message(e.to_string()))?
                {
                    if child.kind == CiKind::Sla {
                        in_scope.insert(child.id.clone());
                    }
                }
            }
        }
        if in_scope.is_empty() {
            continue;
        }
        let candidates: Vec<(String, SlaTerms)> = in_scope
            .into_iter()
            .map(|id| {
                let terms = tree.item(&id).expect("candidate exists").sla.clone();
                (id, terms.expect("SLA item"))
            })
            .collect();
        let best = optimal_sla(&candidates, forecast, 1.0)
            .map_err(|e| Failure::Message(e.to_string()))?;
        out.push_str(&format!("OPTIMAL-SLA {}: {best}\n", item.id));
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Message(format!("cannot read {}: {e}", path.display())))
}

fn load_vocabulary(path: &Path) -> Result<Vocabulary, Failure> {
    Ok(parse_vocabulary(&read_file(path)?)?)
}

fn load_tree_file(path: &Path) -> Result<ServiceTree, Failure> {
    Ok(load_tree(&read_file(path)?)?)
}

fn serde_json_from<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, Failure> {
    serde_json::from_str(text)
        .map_err(|e| Failure::Message(format!("invalid document {}: {e}", path.display())))
}
