//! `diners` — run, check and compare dining-philosophers control
//! simulations.
//!
//! Subcommands:
//!
//! * `run` — execute one configuration and write an NDJSON trace.
//! * `check` — verify every invariant on a trace file, or re-run a
//!   configuration and check it.
//! * `compare` — run the centralised and distributed architectures on the
//!   same choices and demand per-step equality.
//! * `behaviours` — enumerate bounded behaviours of the free and
//!   choice-driven philosophers.
//!
//! Exit status: 0 clean, 1 property violation or comparison mismatch,
//! 2 usage/configuration/i/o error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use diners::distributed::NeighbourOrder;
use diners::executor::{run as run_executor, Architecture, Dynamics, Trace};
use diners::graph::{parse_graph, ConflictGraph};
use diners::invariants::{check_equivalence, check_run, check_trace, CheckOptions, InvariantReport};
use diners::philosopher::{choice_philosopher, free_philosopher, Code};
use diners::stream::StreamSpec;
use diners::system::DEFAULT_BEHAVIOUR_CAP;
use diners::trace::{parse_ndjson, trace_to_ndjson, write_csv, TraceFile};

#[derive(Parser)]
#[command(name = "diners", version, about = "Dining philosophers as feedback control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and emit its NDJSON trace.
    Run(RunArgs),
    /// Check invariants on a trace file or on a fresh run.
    Check(CheckArgs),
    /// Run both architectures on the same choices and compare step by step.
    Compare(RunArgs),
    /// Enumerate bounded behaviours of the philosopher models.
    Behaviours(BehaviourArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Centralized,
    Distributed,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DynamicsArg {
    Polled,
    Clocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StreamArg {
    BoundedEating,
    Seeded,
    Scripted,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Conflict graph file ("n <count>" header, then one "j k" edge per line).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// JSON config file; explicit flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Controller architecture.
    #[arg(long)]
    mode: Option<ModeArg>,
    /// Execution dynamics (polled steps or raw clock cycles).
    #[arg(long)]
    dynamics: Option<DynamicsArg>,
    /// Choice stream kind; inferred as `scripted` when --script is given.
    #[arg(long)]
    stream: Option<StreamArg>,
    /// Stream seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Consecutive steps a philosopher eats before it must stop.
    #[arg(long)]
    max_eat: Option<u32>,
    /// Probability that a thinking or hungry philosopher asks to move on.
    #[arg(long)]
    p_switch: Option<f64>,
    /// Script file: one line per step, one 0/1/. per vertex.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Number of records (polled steps, or clock cycles when clocked).
    #[arg(long)]
    horizon: Option<u64>,
    /// Trace output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a flattened per-vertex CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Neighbour order: "ascending" (default) or "shuffle:<seed>".
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// Check an existing NDJSON trace instead of running.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Eating bound used when the trace was produced; enables the metric
    /// and starvation checks.
    #[arg(long)]
    max_eat: Option<u32>,
    /// Run centralised and distributed side by side and compare.
    #[arg(long, default_value_t = false)]
    compare: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BehaviourArgs {
    /// Which model to enumerate: the free (non-deterministic) one, the
    /// choice-driven one, or both plus an equality verdict.
    #[arg(long, default_value = "both")]
    system: String,
    #[arg(long, default_value_t = 6)]
    horizon: usize,
}

/// File form of the run configuration; same knobs as the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    graph: Option<PathBuf>,
    mode: Option<String>,
    dynamics: Option<String>,
    stream: Option<String>,
    seed: Option<u64>,
    max_eat: Option<u32>,
    p_switch: Option<f64>,
    script: Option<PathBuf>,
    horizon: Option<u64>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    order: Option<String>,
}

/// Fully resolved run configuration.
struct Resolved {
    graph: ConflictGraph,
    mode: ModeArg,
    dynamics: Dynamics,
    stream: StreamSpec,
    horizon: u64,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    order: NeighbourOrder,
    max_eat: Option<u32>,
}

fn parse_enum_text<T: ValueEnum>(field: &str, text: &str) -> Result<T> {
    T::from_str(text, true).map_err(|_| anyhow!("config field {field}: invalid value {text:?}"))
}

fn resolve(args: &RunArgs) -> Result<Resolved> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let graph_path = args
        .graph
        .clone()
        .or(file.graph)
        .ok_or_else(|| anyhow!("no graph given (use --graph or the config file)"))?;
    let graph_text = fs::read_to_string(&graph_path)
        .with_context(|| format!("reading graph {}", graph_path.display()))?;
    let parsed = parse_graph(&graph_text)?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    let graph = parsed.graph;

    let mode = match args.mode {
        Some(m) => m,
        None => match &file.mode {
            Some(text) => parse_enum_text("mode", text)?,
            None => ModeArg::Centralized,
        },
    };
    let dynamics = match args.dynamics {
        Some(DynamicsArg::Polled) => Dynamics::Polled,
        Some(DynamicsArg::Clocked) => Dynamics::Clocked,
        None => match &file.dynamics {
            Some(text) => match parse_enum_text::<DynamicsArg>("dynamics", text)? {
                DynamicsArg::Polled => Dynamics::Polled,
                DynamicsArg::Clocked => Dynamics::Clocked,
            },
            None => Dynamics::Polled,
        },
    };

    let horizon = args
        .horizon
        .or(file.horizon)
        .ok_or_else(|| anyhow!("no horizon given (use --horizon or the config file)"))?;
    if horizon == 0 {
        bail!("horizon must be at least 1");
    }

    let script = args.script.clone().or(file.script);
    let stream_kind = match args.stream {
        Some(kind) => kind,
        None => match &file.stream {
            Some(text) => parse_enum_text("stream", text)?,
            None if script.is_some() => StreamArg::Scripted,
            None => StreamArg::BoundedEating,
        },
    };
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let max_eat = args.max_eat.or(file.max_eat).unwrap_or(3);
    let p_switch = args.p_switch.or(file.p_switch).unwrap_or(0.5);
    let stream = match stream_kind {
        StreamArg::BoundedEating => StreamSpec::BoundedEating {
            seed,
            max_eat,
            p_switch,
        },
        StreamArg::Seeded => StreamSpec::Seeded { seed, p_switch },
        StreamArg::Scripted => {
            let path = script
                .ok_or_else(|| anyhow!("stream kind is scripted but no --script was given"))?;
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading script {}", path.display()))?;
            StreamSpec::Scripted {
                lines: text.lines().map(str::to_string).collect(),
            }
        }
    };
    let choice_steps = match dynamics {
        Dynamics::Polled => horizon,
        Dynamics::Clocked => horizon / 2,
    };
    stream.validate(graph.vertex_count(), choice_steps as usize)?;

    let order_text = args.order.clone().or(file.order);
    let order = match order_text.as_deref() {
        None | Some("ascending") => NeighbourOrder::ascending(&graph),
        Some(text) => match text.strip_prefix("shuffle:") {
            Some(seed_text) => {
                let order_seed: u64 = seed_text
                    .parse()
                    .map_err(|_| anyhow!("invalid order {text:?}: bad shuffle seed"))?;
                NeighbourOrder::shuffled(&graph, order_seed)
            }
            None => bail!("invalid order {text:?} (expected \"ascending\" or \"shuffle:<seed>\")"),
        },
    };

    Ok(Resolved {
        mode,
        dynamics,
        max_eat: stream.max_eat(),
        stream,
        horizon,
        out: args.out.clone().or(file.out),
        csv: args.csv.clone().or(file.csv),
        order,
        graph,
    })
}

fn execute(resolved: &Resolved, architecture: Architecture) -> Result<Trace> {
    Ok(run_executor(
        &resolved.graph,
        &resolved.order,
        architecture,
        resolved.dynamics,
        &resolved.stream,
        resolved.horizon,
    )?)
}

fn write_trace(trace: &Trace, out: Option<&Path>) -> Result<()> {
    let text = trace_to_ndjson(trace)?;
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing trace {}", path.display()))?
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn summarise(trace: &Trace, report: &InvariantReport) {
    eprintln!(
        "steps: {}   vertices: {}",
        trace.len(),
        trace.vertex_count()
    );
    let eats = trace.eat_counts();
    let rendered: Vec<String> = eats.iter().map(|(j, c)| format!("{j}:{c}")).collect();
    eprintln!("eat counts: {}", rendered.join(" "));
    eprintln!("max hungry wait: {} steps", report.max_hungry_wait);
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let resolved = resolve(args)?;
    let architectures = match resolved.mode {
        ModeArg::Centralized => vec![Architecture::Centralized],
        ModeArg::Distributed => vec![Architecture::Distributed],
        ModeArg::Both => vec![Architecture::Centralized, Architecture::Distributed],
    };
    let mut traces = Vec::new();
    for &architecture in &architectures {
        traces.push(execute(&resolved, architecture)?);
    }
    if let [central, dist] = &traces[..] {
        let verdict = check_equivalence(&central.records, &dist.records);
        if !verdict.passed {
            eprintln!("{verdict}");
            return Ok(ExitCode::from(1));
        }
        eprintln!("architectures agree on all {} records", central.len());
    }

    let primary = &traces[0];
    write_trace(primary, resolved.out.as_deref())?;
    if let Some(csv_path) = &resolved.csv {
        let mut buffer = Vec::new();
        write_csv(&mut buffer, &primary.records)?;
        fs::write(csv_path, buffer)
            .with_context(|| format!("writing csv {}", csv_path.display()))?;
    }

    // Inline verification: a run that violates its own invariants exits
    // nonzero even though the trace was written.
    let opts = CheckOptions {
        max_eat: resolved.max_eat,
        ..CheckOptions::default()
    };
    let mut failed = false;
    for trace in &traces {
        let report = check_run(trace, &opts)?;
        if trace.architecture == primary.architecture {
            summarise(trace, &report);
        }
        if let Some(failure) = report.first_failure() {
            eprintln!("{failure}");
            failed = true;
        }
    }
    Ok(ExitCode::from(u8::from(failed)))
}

fn print_report(report: &InvariantReport) {
    print!("{report}");
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    if args.compare {
        return cmd_compare(&args.run);
    }
    let report = match &args.trace {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading trace {}", path.display()))?;
            let TraceFile { records, order } = parse_ndjson(&text)?;
            let opts = CheckOptions {
                max_eat: args.max_eat,
                order,
                ..CheckOptions::default()
            };
            check_trace(&records, &opts)?
        }
        None => {
            let resolved = resolve(&args.run)?;
            let architecture = match resolved.mode {
                ModeArg::Distributed => Architecture::Distributed,
                _ => Architecture::Centralized,
            };
            let trace = execute(&resolved, architecture)?;
            let opts = CheckOptions {
                max_eat: args.max_eat.or(resolved.max_eat),
                ..CheckOptions::default()
            };
            check_run(&trace, &opts)?
        }
    };
    print_report(&report);
    Ok(ExitCode::from(u8::from(!report.all_passed())))
}

fn cmd_compare(args: &RunArgs) -> Result<ExitCode> {
    let resolved = resolve(args)?;
    // The two runs are independent and deterministic, so they may race.
    let (central, dist) = std::thread::scope(|scope| {
        let c = scope.spawn(|| execute(&resolved, Architecture::Centralized));
        let d = scope.spawn(|| execute(&resolved, Architecture::Distributed));
        (c.join().expect("no panic"), d.join().expect("no panic"))
    });
    let (central, dist) = (central?, dist?);

    let verdict = check_equivalence(&central.records, &dist.records);
    println!("{verdict}");
    let opts = CheckOptions {
        max_eat: resolved.max_eat,
        ..CheckOptions::default()
    };
    let mut all_ok = verdict.passed;
    for trace in [&central, &dist] {
        let report = check_run(trace, &opts)?;
        if let Some(failure) = report.first_failure() {
            println!("{} run: {failure}", trace.architecture.as_str());
            all_ok = false;
        } else {
            println!(
                "{} run: all {} invariants pass",
                trace.architecture.as_str(),
                report.checks.len()
            );
        }
    }
    Ok(ExitCode::from(u8::from(!all_ok)))
}

fn cmd_behaviours(args: &BehaviourArgs) -> Result<ExitCode> {
    if args.horizon == 0 {
        bail!("horizon must be at least 1");
    }
    let render = |traces: std::collections::BTreeSet<Vec<diners::Activity>>| -> Vec<String> {
        traces
            .into_iter()
            .map(|t| t.into_iter().map(|a| a.code()).collect())
            .collect()
    };
    match args.system.as_str() {
        "q" | "free" => {
            for line in render(
                free_philosopher()
                    .bounded_behaviours(args.horizon, DEFAULT_BEHAVIOUR_CAP)?,
            ) {
                println!("{line}");
            }
        }
        "p" | "choice" => {
            for line in render(
                choice_philosopher()
                    .bounded_behaviours(args.horizon, DEFAULT_BEHAVIOUR_CAP)?,
            ) {
                println!("{line}");
            }
        }
        "both" => {
            let free = free_philosopher().bounded_behaviours(args.horizon, DEFAULT_BEHAVIOUR_CAP)?;
            let choice =
                choice_philosopher().bounded_behaviours(args.horizon, DEFAULT_BEHAVIOUR_CAP)?;
            let equal = free == choice;
            for line in render(free) {
                println!("{line}");
            }
            println!(
                "behaviour sets at horizon {}: {}",
                args.horizon,
                if equal { "equal" } else { "DIFFERENT" }
            );
            return Ok(ExitCode::from(u8::from(!equal)));
        }
        other => bail!("unknown system {other:?} (expected q, p or both)"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Check(args) => cmd_check(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Behaviours(args) => cmd_behaviours(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
