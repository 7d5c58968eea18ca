use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lck::corpus::{prove_corpus, summarize, SCHEMATA};
use lck::par::Execution;
use lck::semantics::{find_countermodel, sequent_countermodel, validate_model, ModelDump, DEFAULT_MODEL_BUDGET};
use lck::{parse_input, prove, ObservationStructure, ProverOptions, Sequent};
use serde_json::json;

/// Prover and model checker for the logic of correlated knowledge.
#[derive(Parser, Debug)]
#[command(name = "lck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Observation structure (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Search node limit; exceeding it is reported as inconclusive.
    #[arg(long, global = true)]
    max_nodes: Option<usize>,

    /// Wall-clock limit for a search, in milliseconds.
    #[arg(long, global = true)]
    max_millis: Option<u64>,

    /// Print a countermodel when a formula is not valid.
    #[arg(long, global = true)]
    witness: bool,

    /// Read the input from a file instead of the command line.
    #[arg(long, global = true)]
    file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a proof of a formula or sequent.
    Prove {
        input: Option<String>,
        /// Use only the listed rules, without the completion split.
        #[arg(long)]
        strict: bool,
    },
    /// Decide validity by enumerating finite models.
    Validity { input: Option<String> },
    /// Prove every instance of the Hilbert axiom schemata.
    Corpus,
    /// Check a model file against the correlation model conditions.
    CheckModel { input: Option<PathBuf> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Exit statuses.
const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Deep proof trees recurse; give the search room.
    let worker = std::thread::Builder::new().stack_size(512 << 20).spawn(move || run(&cli));
    let outcome = match worker {
        Ok(handle) => handle.join().unwrap_or_else(|_| Err(anyhow!("worker thread panicked"))),
        Err(e) => Err(anyhow!("cannot start worker thread: {e}")),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR)
        }
    }
}

fn load_structure(cli: &Cli) -> Result<ObservationStructure> {
    let path = cli.config.as_ref().ok_or_else(|| anyhow!("--config <path> is required"))?;
    ObservationStructure::load(path).with_context(|| format!("loading {}", path.display()))
}

fn input_text(cli: &Cli, positional: Option<&str>) -> Result<String> {
    match (&cli.file, positional) {
        (Some(_), Some(_)) => bail!("give the input either as an argument or with --file, not both"),
        (Some(path), None) => {
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
        }
        (None, Some(text)) => Ok(text.to_string()),
        (None, None) => bail!("no input given"),
    }
}

/// Writes the rendering for the chosen format. A closed stdout is not an
/// error worth reporting.
fn emit(cli: &Cli, text: impl FnOnce() -> String, value: impl FnOnce() -> serde_json::Value) {
    let out = match cli.format {
        Format::Text => text(),
        Format::Json => serde_json::to_string_pretty(&value()).expect("json values serialize") + "\n",
    };
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
}

fn run(cli: &Cli) -> Result<u8> {
    let structure = load_structure(cli)?;
    match &cli.command {
        Command::Prove { input, strict } => {
            let seq = parse_input(input_text(cli, input.as_deref())?.trim(), &structure)?;
            run_prove(cli, &structure, &seq, *strict)
        }
        Command::Validity { input } => {
            let seq = parse_input(input_text(cli, input.as_deref())?.trim(), &structure)?;
            run_validity(cli, &structure, &seq)
        }
        Command::Corpus => run_corpus(cli, &structure),
        Command::CheckModel { input } => {
            let path = match (&cli.file, input) {
                (Some(p), None) | (None, Some(p)) => p,
                _ => bail!("give exactly one model file"),
            };
            run_check_model(cli, &structure, path)
        }
    }
}

fn options(cli: &Cli, strict: bool) -> ProverOptions {
    let base = if strict { ProverOptions::strict() } else { ProverOptions::default() };
    ProverOptions {
        max_nodes: cli.max_nodes.unwrap_or(base.max_nodes),
        max_millis: cli.max_millis,
        ..base
    }
}

fn run_prove(cli: &Cli, structure: &ObservationStructure, seq: &Sequent, strict: bool) -> Result<u8> {
    let result = match prove(seq, structure, &options(cli, strict)) {
        Ok(r) => r,
        Err(lck::ProveError::Inconclusive(why)) => {
            emit(
                cli,
                || format!("inconclusive: {why}\n"),
                || json!({ "provable": null, "inconclusive": why }),
            );
            return Ok(ERROR);
        }
        Err(e) => return Err(e.into()),
    };
    emit(
        cli,
        || {
            let s = &result.stats;
            format!(
                "{}\n{}nodes {}, depth {}, table_lk_size {}, table_rk_chains {}, {} ms\n",
                if result.provable { "provable" } else { "not provable" },
                result.tree.render(),
                s.nodes,
                s.depth,
                s.table_lk_size,
                s.table_rk_chains,
                s.elapsed_ms
            )
        },
        || result.to_json(),
    );
    Ok(if result.provable { OK } else { NEGATIVE })
}

fn run_validity(cli: &Cli, structure: &ObservationStructure, seq: &Sequent) -> Result<u8> {
    // A bare formula is checked state by state; anything else as a sequent.
    let single = seq.relations.is_empty() && seq.antecedent.is_empty() && seq.succedent.len() == 1;
    let (valid, witness) = if single {
        let f = &seq.succedent.iter().next().expect("one formula").formula;
        match find_countermodel(f, structure, &f.atoms(), DEFAULT_MODEL_BUDGET)? {
            None => (true, None),
            Some(w) => {
                let at = w.state_name().to_string();
                (false, Some((ModelDump::from_model(&w.model), json!({ "state": at }), format!("state {at}"))))
            }
        }
    } else {
        match sequent_countermodel(seq, structure, DEFAULT_MODEL_BUDGET)? {
            None => (true, None),
            Some(w) => {
                let assignment: serde_json::Map<String, serde_json::Value> = w
                    .assignment
                    .iter()
                    .map(|(l, &i)| (l.to_string(), json!(w.model.names()[i])))
                    .collect();
                let text = w
                    .assignment
                    .iter()
                    .map(|(l, &i)| format!("{l} = {}", w.model.names()[i]))
                    .collect::<Vec<_>>()
                    .join(", ");
                (false, Some((ModelDump::from_model(&w.model), json!({ "assignment": assignment }), text)))
            }
        }
    };
    let show = cli.witness;
    emit(
        cli,
        || {
            let mut out = String::from(if valid { "valid\n" } else { "not valid\n" });
            if let (true, Some((dump, _, at))) = (show, &witness) {
                out.push_str(&format!("countermodel, falsified at {at}:\n"));
                out.push_str(&serde_json::to_string_pretty(dump).expect("dumps serialize"));
                out.push('\n');
            }
            out
        },
        || {
            let mut v = json!({ "valid": valid });
            if let (true, Some((dump, at, _))) = (show, &witness) {
                v["countermodel"] = serde_json::to_value(dump).expect("dumps serialize");
                v["falsified"] = at.clone();
            }
            v
        },
    );
    Ok(if valid { OK } else { NEGATIVE })
}

fn run_corpus(cli: &Cli, structure: &ObservationStructure) -> Result<u8> {
    let results = prove_corpus(structure, &options(cli, false), Execution::Parallel);
    if let Some((entry, Err(e))) = results.iter().find(|(_, r)| matches!(r, Err(lck::ProveError::Inconclusive(_)))) {
        eprintln!("{}: {e}", entry.schema);
    }
    let summary = summarize(&results);
    let passed = summary.iter().filter(|s| s.passed()).count();
    emit(
        cli,
        || {
            let mut out = String::new();
            for s in &summary {
                out.push_str(&format!(
                    "{:<4} {:>3}/{:<3} {}\n",
                    s.schema,
                    s.proved,
                    s.instances,
                    if s.passed() { "pass" } else { "FAIL" }
                ));
                for f in &s.failures {
                    out.push_str(&format!("     {f}\n"));
                }
            }
            out.push_str(&format!("{passed}/{} schemata pass\n", SCHEMATA.len()));
            out
        },
        || json!({ "passed": passed, "schemata": SCHEMATA.len(), "results": summary }),
    );
    Ok(if passed == SCHEMATA.len() { OK } else { NEGATIVE })
}

fn run_check_model(cli: &Cli, structure: &ObservationStructure, path: &PathBuf) -> Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let dump: ModelDump = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let model = dump.into_model(structure)?;
    let verdict = validate_model(&model);
    emit(
        cli,
        || match &verdict {
            Ok(()) => format!("model with {} states satisfies all conditions\n", model.states().len()),
            Err(e) => format!("model violates a condition: {e}\n"),
        },
        || match &verdict {
            Ok(()) => json!({ "valid": true, "states": model.states().len() }),
            Err(e) => json!({ "valid": false, "violation": e.to_string() }),
        },
    );
    Ok(if verdict.is_ok() { OK } else { NEGATIVE })
}
