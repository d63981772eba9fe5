//! `mgg` — command-line front end for the matrix graph grammar engine.
//!
//! Exit codes: 0 success, 1 usage, 2 parse/validation, 3 analysis-negative
//! (no match, incoherent sequence, dangling edge, stuck circuit), 4 budget
//! exceeded. All randomness flows through `--seed`; omitting it means seed
//! 0, never entropy, so runs are reproducible by default.

mod files;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mgg_core::machines::bc::{eval_bc, parse_assignment, Circuit};
use mgg_core::machines::tm::{run_tm, TapeConfig, TmSpec};
use mgg_core::machines::MachineError;
use mgg_core::matching::{
    derive, enumerate_matches, run, Allocation, DeriveError, Election, Strategy,
};
use mgg_core::production::{count_elements, CountKind, Production};
use mgg_core::sequence::{render_report, AnalysisError};
use mgg_core::graph::SimpleDigraph;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "mgg", version, about = "Matrix graph grammar engine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a production to a host graph and print the derived graph
    Apply {
        /// Production file (first production unless --rule is given)
        production: PathBuf,
        /// Host graph file
        graph: PathBuf,
        /// Production name to apply
        #[arg(long)]
        rule: Option<String>,
        /// Which match to apply, in canonical order (default 0)
        #[arg(long = "match", value_name = "K")]
        match_index: Option<usize>,
        /// List the matches instead of applying one
        #[arg(long)]
        list: bool,
        /// Write the derived graph here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grammar from its initial graph until halt or step budget
    Run {
        grammar: PathBuf,
        #[arg(long, default_value = "first")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Override the grammar file's mode (nodeless | node-adding)
        #[arg(long)]
        mode: Option<String>,
        /// Write the final graph here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a rule sequence: coherence, initial digraphs, determinism
    Analyze {
        sequence: PathBuf,
        /// Host graph for the vertical (initial-digraph containment) check
        #[arg(long)]
        host: Option<PathBuf>,
        /// Relabeling-tuple enumeration budget
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile and run a Turing machine state table on a tape
    Tm {
        machine: PathBuf,
        /// Tape contents: one symbol per character, or comma-separated
        tape: String,
        /// Head position (0-based)
        #[arg(long, default_value_t = 0)]
        head: usize,
        /// Starting state (default: the machine's start state)
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compile and evaluate a Boolean circuit on an input assignment
    Bc {
        circuit: PathBuf,
        /// Input assignments, e.g. x=1 y=0
        assignments: Vec<String>,
        #[arg(long, default_value = "first")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Exact number of swaps or productions on n nodes
    Count {
        /// What to count: swaps | productions
        kind: String,
        n: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mgg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_strategy(name: &str, seed: u64) -> Result<Strategy, Failure> {
    let strategy = match name {
        "first" => Strategy::first(),
        "all" => Strategy::all(),
        "random" => Strategy::random(seed),
        other => {
            if let Some(list) = other.strip_prefix("priority:") {
                Strategy {
                    election: Election::Priority(list.split(',').map(str::to_string).collect()),
                    allocation: Allocation::First,
                    seed,
                }
            } else {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("unknown strategy `{other}` (first, all, random, priority:<names>)"),
                ));
            }
        }
    };
    Ok(Strategy { seed, ..strategy })
}

fn parse_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_PARSE, format!("{}:{e}", path.display()))
}

fn machine_failure(path: &Path, e: MachineError) -> Failure {
    let code = match &e {
        MachineError::Stuck(_) => EXIT_NEGATIVE,
        MachineError::BudgetExceeded(_) => EXIT_BUDGET,
        MachineError::Derive(DeriveError::DanglingEdge { .. }) => EXIT_NEGATIVE,
        MachineError::Derive(DeriveError::BudgetExceeded(_)) => EXIT_BUDGET,
        _ => EXIT_PARSE,
    };
    Failure::new(code, format!("{}: {e}", path.display()))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Apply {
            production,
            graph,
            rule,
            match_index,
            list,
            out,
        } => cmd_apply(&production, &graph, rule.as_deref(), match_index, list, &out),
        Cmd::Run {
            grammar,
            strategy,
            seed,
            max_steps,
            mode,
            out,
        } => cmd_run(&grammar, &strategy, seed, max_steps, mode.as_deref(), &out),
        Cmd::Analyze {
            sequence,
            host,
            budget,
            out,
        } => cmd_analyze(&sequence, &host, budget, &out),
        Cmd::Tm {
            machine,
            tape,
            head,
            state,
            max_steps,
            seed,
        } => cmd_tm(&machine, &tape, head, state.as_deref(), max_steps, seed),
        Cmd::Bc {
            circuit,
            assignments,
            strategy,
            seed,
            max_steps,
        } => cmd_bc(&circuit, &assignments, &strategy, seed, max_steps),
        Cmd::Count { kind, n } => cmd_count(&kind, n),
    }
}

fn cmd_apply(
    production: &Path,
    graph: &Path,
    rule: Option<&str>,
    match_index: Option<usize>,
    list: bool,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    let productions = Production::parse_all(&read(production)?)
        .map_err(|e| parse_failure(production, e))?;
    if productions.is_empty() {
        return Err(parse_failure(production, "no productions in file"));
    }
    let p = match rule {
        Some(name) => productions
            .iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                Failure::new(EXIT_USAGE, format!("no production named `{name}`"))
            })?,
        None => &productions[0],
    };
    let host = SimpleDigraph::parse(&read(graph)?).map_err(|e| parse_failure(graph, e))?;
    let matches = enumerate_matches(p, &host);
    if matches.is_empty() {
        return Err(Failure::new(
            EXIT_NEGATIVE,
            format!("`{}` has no match in the host graph", p.name()),
        ));
    }
    if list {
        let mut text = String::new();
        for (k, m) in matches.iter().enumerate() {
            let pairs: Vec<String> = m
                .bindings(p, &host)
                .into_iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect();
            text.push_str(&format!("{k} {}\n", pairs.join(" ")));
        }
        return emit(out, &text);
    }
    let k = match_index.unwrap_or(0);
    let m = matches.get(k).ok_or_else(|| {
        Failure::new(
            EXIT_USAGE,
            format!("match index {k} out of range ({} matches)", matches.len()),
        )
    })?;
    let derived = derive(p, m, &host).map_err(|e| Failure::new(EXIT_NEGATIVE, e.to_string()))?;
    emit(out, &derived.dump())
}

fn cmd_run(
    grammar: &Path,
    strategy: &str,
    seed: u64,
    max_steps: usize,
    mode: Option<&str>,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    let text = read(grammar)?;
    let mut file = files::parse_grammar(&text).map_err(|e| parse_failure(grammar, e))?;
    if let Some(mode) = mode {
        use mgg_core::matching::{Grammar, GrammarMode};
        let mode = match mode {
            "nodeless" => GrammarMode::Nodeless,
            "node-adding" => GrammarMode::NodeAdding,
            other => {
                return Err(Failure::new(EXIT_USAGE, format!("unknown mode `{other}`")))
            }
        };
        file.grammar = Grammar::new(
            file.grammar.productions().to_vec(),
            mode,
            file.grammar.initial().clone(),
        )
        .map_err(|e| parse_failure(grammar, e))?;
    }
    let strategy = parse_strategy(strategy, seed)?;
    let outcome = run(&file.grammar, &strategy, max_steps)
        .map_err(|e| Failure::new(EXIT_NEGATIVE, e.to_string()))?;
    for (i, step) in outcome.trace.iter().enumerate() {
        println!("{}", step.render(i + 1));
    }
    if out.is_none() {
        println!("final:");
    }
    emit(out, &outcome.final_graph.dump())?;
    if !outcome.halted {
        return Err(Failure::new(
            EXIT_BUDGET,
            format!("step budget of {max_steps} exhausted before halting"),
        ));
    }
    Ok(())
}

fn cmd_analyze(
    sequence: &Path,
    host: &Option<PathBuf>,
    budget: u64,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    let file = files::parse_sequence(&read(sequence)?).map_err(|e| parse_failure(sequence, e))?;
    let host_graph = match host {
        Some(path) => {
            Some(SimpleDigraph::parse(&read(path)?).map_err(|e| parse_failure(path, e))?)
        }
        None => None,
    };
    let report = render_report(&file.sequence, host_graph.as_ref(), budget).map_err(|e| {
        match e {
            AnalysisError::BudgetExceeded { .. } => Failure::new(EXIT_BUDGET, e.to_string()),
            _ => Failure::new(EXIT_PARSE, e.to_string()),
        }
    })?;
    emit(out, &report.text)?;
    if !report.coherent {
        return Err(Failure::new(EXIT_NEGATIVE, "sequence is incoherent"));
    }
    Ok(())
}

fn cmd_tm(
    machine: &Path,
    tape: &str,
    head: usize,
    state: Option<&str>,
    max_steps: usize,
    seed: u64,
) -> Result<(), Failure> {
    let spec = TmSpec::parse(&read(machine)?).map_err(|e| parse_failure(machine, e))?;
    let t0 = TapeConfig {
        cells: TapeConfig::parse_tape(tape),
        head,
        state: state.unwrap_or(&spec.start).to_string(),
    };
    let strategy = Strategy::random(seed);
    let (t, trace) =
        run_tm(&spec, &t0, &strategy, max_steps).map_err(|e| machine_failure(machine, e))?;
    println!("{}", t.tape_string());
    for (i, step) in trace.iter().enumerate() {
        println!("{}", step.render(i + 1));
    }
    Ok(())
}

fn cmd_bc(
    circuit: &Path,
    assignments: &[String],
    strategy: &str,
    seed: u64,
    max_steps: Option<usize>,
) -> Result<(), Failure> {
    let c = Circuit::parse(&read(circuit)?).map_err(|e| parse_failure(circuit, e))?;
    let assignment: BTreeMap<String, bool> =
        parse_assignment(assignments).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let strategy = parse_strategy(strategy, seed)?;
    let bit = eval_bc(&c, &assignment, &strategy, max_steps)
        .map_err(|e| machine_failure(circuit, e))?;
    println!("{}", bit as u8);
    Ok(())
}

fn cmd_count(kind: &str, n: usize) -> Result<(), Failure> {
    let kind = match kind {
        "swaps" => CountKind::Swaps,
        "productions" => CountKind::Productions,
        other => {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("unknown kind `{other}` (swaps or productions)"),
            ))
        }
    };
    println!("{}", count_elements(kind, n));
    Ok(())
}
