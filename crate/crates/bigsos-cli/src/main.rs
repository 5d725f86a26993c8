//! Command-line front end: rule-format reports, queue-machine simulation and
//! compilation, bounded unfolding, and extension checking.
//!
//! Exit codes: 0 success / consistent prefix; 1 refutation or halting;
//! 2 ambiguous; 3 unknown (fuel); 64 usage errors; 65 unreadable or invalid
//! input; 70 internal disagreement.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bigsos::engine::{
    check_axioms, check_extension, demo_halting, unfold_lts, unfold_stream, BaseStreamEnv,
    ConsistentData, EngineError, ExtensionOutcome, ExtensionParams, Verdict,
};
use bigsos::qm::{ClassicalQm, QueueMachine, RunOutcome};
use bigsos::reduction::{qm_to_lts_spec, qm_to_stream_spec};
use bigsos::rules::{check_functionality, classify_spec, parse_spec, Behavior, Spec, SpecVerdict};
use bigsos::term::{Sym, Term};

const EXIT_OK: u8 = 0;
const EXIT_NO_EXTENSION: u8 = 1;
const EXIT_AMBIGUOUS: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(
    name = "bigsos",
    version,
    about = "Rule formats, queue machines, and bounded distributive-law extension checking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct EngineFlags {
    /// Propagation budget, counted in entry evaluations
    #[arg(long, default_value_t = 10_000)]
    fuel: u64,
    /// Prefix length (stream) or tree depth (LTS)
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Maximum size of closed seed terms
    #[arg(long = "seed-size", default_value_t = 3)]
    seed_size: usize,
    /// Evaluate independent seed groups in parallel sessions
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl EngineFlags {
    fn params(&self) -> ExtensionParams {
        ExtensionParams {
            seed_size: self.seed_size,
            depth: self.depth,
            fuel: self.fuel,
            jobs: self.jobs.max(1),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a rule specification and report determinism diagnostics
    Fmt {
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Queue-machine operations
    #[command(subcommand)]
    Qm(QmCommand),
    /// Unfold seed terms into behavior prefixes
    Unfold {
        spec: PathBuf,
        /// Seed terms (defaults to all closed terms up to --seed-size)
        #[arg(long = "seed")]
        seeds: Vec<String>,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long)]
        json: bool,
        /// Write LTS trees as a DOT digraph to this path
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Decide (boundedly) whether the specification extends to a unique law
    CheckExtension {
        spec: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long)]
        json: bool,
    },
    /// Run the distributive-law axiom suite over generic base streams
    Axioms {
        spec: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long)]
        json: bool,
    },
    /// End-to-end demonstrations
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Subcommand)]
enum QmCommand {
    /// Simulate a machine from its initial configuration
    Run {
        machine: PathBuf,
        #[arg(long, default_value_t = 100)]
        fuel: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compile a machine into a rule specification
    Compile {
        machine: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::Stream)]
        target: Target,
    },
    /// Compile a classical queue machine into the three-map variant
    FromClassical { machine: PathBuf },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Compare machine halting against the extension checker's verdict
    Halting {
        machine: PathBuf,
        /// Simulation budget for the machine run
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        #[arg(long, value_enum, default_value_t = Target::Stream)]
        target: Target,
        /// Propagation budget for the extension checker
        #[arg(long = "engine-fuel", default_value_t = 10_000)]
        engine_fuel: u64,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long = "seed-size", default_value_t = 3)]
        seed_size: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Stream,
    Lts,
    Both,
}

/// Paths that do not exist as given are retried under `$BIGSOS_CORPUS`.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    if let Ok(corpus) = std::env::var("BIGSOS_CORPUS") {
        let candidate = Path::new(&corpus).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

fn read_input(path: &Path) -> Result<String> {
    let resolved = resolve(path);
    std::fs::read_to_string(&resolved)
        .with_context(|| format!("cannot read `{}`", resolved.display()))
}

fn load_spec(path: &Path) -> Result<Spec> {
    let text = read_input(path)?;
    let mut spec = parse_spec(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    spec.validate()
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(spec)
}

fn load_machine(path: &Path) -> Result<QueueMachine> {
    let text = read_input(path)?;
    let machine =
        QueueMachine::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let issues = machine.validate();
    if !issues.is_empty() {
        return Err(anyhow!("{}: invalid machine:\n  {}", path.display(), issues.join("\n  ")));
    }
    Ok(machine)
}

fn verdict_exit(v: &Verdict) -> u8 {
    match v {
        Verdict::ConsistentPrefix { .. } => EXIT_OK,
        Verdict::NoExtension { .. } => EXIT_NO_EXTENSION,
        Verdict::Ambiguous { .. } => EXIT_AMBIGUOUS,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn print_verdict_text(v: &Verdict) {
    match v {
        Verdict::ConsistentPrefix { depth, data } => {
            println!("ConsistentPrefix at depth {depth}");
            match data {
                ConsistentData::Stream { prefixes, .. } => {
                    for (seed, p) in prefixes {
                        println!("  {seed}: {p}");
                    }
                }
                ConsistentData::Lts { trees, .. } => {
                    for (seed, t) in trees {
                        println!("  {seed}: {t:?} (branching <= {})", t.max_branching());
                    }
                }
            }
        }
        Verdict::NoExtension { witness } => {
            println!("NoExtension");
            match witness {
                bigsos::engine::Witness::OccursCheck { term, position, unknown, equation, rule, .. } => {
                    println!("  occurs check at {term}, stream position {position}");
                    println!("  forced equation: {unknown} = {equation}");
                    println!("  via {rule}");
                }
                bigsos::engine::Witness::EmptyNonemptyClash { term, depth, forcing_rule, .. } => {
                    println!("  empty/nonempty clash at {term}, depth {depth}");
                    println!("  forced nonempty by {forcing_rule}");
                }
            }
        }
        Verdict::Ambiguous { witness } => {
            println!("Ambiguous");
            println!("  {} at position {} is not forced:", witness.term, witness.position);
            for c in &witness.candidates {
                println!("    - {c}");
            }
        }
        Verdict::Unknown { fuel_spent, reason } => {
            println!("Unknown after {fuel_spent} propagation steps: {reason}");
        }
    }
}

fn engine_error_exit(e: &EngineError) -> u8 {
    match e {
        EngineError::InvalidSpec(_)
        | EngineError::WrongBehavior { .. }
        | EngineError::FunctionalityConflict { .. }
        | EngineError::UnboundColor(_) => EXIT_DATA,
        EngineError::Qm(_) => EXIT_DATA,
    }
}

fn cmd_fmt(path: &Path, json: bool) -> Result<u8> {
    let text = read_input(path)?;
    let spec = match parse_spec(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Ok(EXIT_DATA);
        }
    };
    let report = classify_spec(&spec);
    let functionality = if report.verdict == SpecVerdict::IllFormed {
        Default::default()
    } else {
        let mut validated = spec.clone();
        validated.validate().expect("classified specs validate");
        check_functionality(&validated)
    };
    if json {
        let mut v = serde_json::to_value(&report)?;
        v.as_object_mut()
            .expect("object")
            .insert("functionality".into(), serde_json::to_value(&functionality)?);
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("verdict: {}", report.verdict);
        for rf in &report.per_rule {
            let formats: Vec<String> = rf.formats.iter().map(|f| f.to_string()).collect();
            let formats = if formats.is_empty() { "biGSOS only".to_string() } else { formats.join(", ") };
            println!("  {}  [{formats}]", rf.rule);
        }
        if report.verdict == SpecVerdict::MixedGsos {
            for (op, class) in &report.per_op {
                if let Some(c) = class {
                    println!("  op {op}: {c}");
                }
            }
        }
        for d in &report.diagnostics {
            println!("  note: {d}");
        }
        for issue in &functionality.issues {
            println!("  {issue}");
        }
    }
    Ok(if report.verdict == SpecVerdict::IllFormed { EXIT_DATA } else { EXIT_OK })
}

fn cmd_qm_run(path: &Path, fuel: usize, json: bool) -> Result<u8> {
    let machine = load_machine(path)?;
    let run = machine.run_initial(fuel)?;
    if json {
        let trace: Vec<String> = run.trace.iter().map(|c| c.to_string()).collect();
        let outcome = match run.outcome {
            RunOutcome::HaltedAt(k) => serde_json::json!({"halted_at": k}),
            RunOutcome::StillRunning => serde_json::json!("still-running"),
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "trace": trace,
                "outcome": outcome,
            }))?
        );
    } else {
        for c in &run.trace {
            println!("{c}");
        }
        match run.outcome {
            RunOutcome::HaltedAt(k) => println!("halted after {k} steps"),
            RunOutcome::StillRunning => println!("still running after {fuel} steps"),
        }
    }
    Ok(match run.outcome {
        RunOutcome::HaltedAt(_) => EXIT_NO_EXTENSION,
        RunOutcome::StillRunning => EXIT_OK,
    })
}

fn cmd_qm_compile(path: &Path, target: Target) -> Result<u8> {
    let machine = load_machine(path)?;
    match target {
        Target::Stream => print!("{}", qm_to_stream_spec(&machine)?.spec.render()),
        Target::Lts => print!("{}", qm_to_lts_spec(&machine)?.spec.render()),
        Target::Both => {
            print!("{}", qm_to_stream_spec(&machine)?.spec.render());
            println!();
            print!("{}", qm_to_lts_spec(&machine)?.spec.render());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_from_classical(path: &Path) -> Result<u8> {
    let text = read_input(path)?;
    let cm = ClassicalQm::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let issues = cm.validate();
    if !issues.is_empty() {
        return Err(anyhow!("{}: invalid machine:\n  {}", path.display(), issues.join("\n  ")));
    }
    let compiled = bigsos::qm::classical_to_qm(&cm);
    println!("{}", compiled.to_json());
    Ok(EXIT_OK)
}

fn parse_seeds(spec: &Spec, seeds: &[String], seed_size: usize) -> Result<Vec<Term>> {
    if seeds.is_empty() {
        let all = spec.signature.closed_terms(seed_size);
        if all.is_empty() {
            return Err(anyhow!(
                "no closed terms up to size {seed_size}; pass --seed explicitly"
            ));
        }
        return Ok(all);
    }
    seeds
        .iter()
        .map(|s| {
            let t = Term::parse(&spec.signature, s).map_err(|e| anyhow!("seed `{s}`: {e}"))?;
            if !t.is_closed() {
                return Err(anyhow!("seed `{s}` must be a closed term"));
            }
            Ok(t)
        })
        .collect()
}

fn cmd_unfold(
    path: &Path,
    seeds: &[String],
    flags: EngineFlags,
    json: bool,
    dot: Option<&Path>,
) -> Result<u8> {
    let spec = load_spec(path)?;
    let seeds = parse_seeds(&spec, seeds, flags.seed_size)?;
    let verdict = match spec.behavior {
        Behavior::Stream => unfold_stream(&spec, &seeds, flags.depth, flags.fuel),
        Behavior::Lts => unfold_lts(&spec, &seeds, flags.depth, flags.fuel),
    };
    let verdict = match verdict {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return Ok(engine_error_exit(&e));
        }
    };
    if let (Some(dot_path), Verdict::ConsistentPrefix { data: ConsistentData::Lts { trees, .. }, .. }) =
        (dot, &verdict)
    {
        let mut out = String::new();
        for tree in trees.values() {
            out.push_str(&tree.to_dot());
        }
        std::fs::write(dot_path, out)
            .with_context(|| format!("cannot write `{}`", dot_path.display()))?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&verdict.to_json())?);
    } else {
        print_verdict_text(&verdict);
    }
    Ok(verdict_exit(&verdict))
}

fn cmd_check_extension(path: &Path, flags: EngineFlags, json: bool) -> Result<u8> {
    let spec = load_spec(path)?;
    let outcome: ExtensionOutcome = match check_extension(&spec, flags.params()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return Ok(engine_error_exit(&e));
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&outcome.to_json())?);
    } else {
        print_verdict_text(&outcome.verdict);
        if let Some(ax) = &outcome.axioms {
            println!("axioms: {}", if ax.is_clean() { "all pass" } else { "FAILURES" });
        }
        if let Some(d) = &outcome.diagram {
            println!(
                "extension diagram: {} samples, {}",
                d.samples,
                if d.is_clean() { "all match" } else { "MISMATCHES" }
            );
        }
        for note in &outcome.diagnostics {
            println!("note: {note}");
        }
    }
    Ok(verdict_exit(&outcome.verdict))
}

fn cmd_axioms(path: &Path, flags: EngineFlags, json: bool) -> Result<u8> {
    let spec = load_spec(path)?;
    if spec.behavior != Behavior::Stream {
        return Err(anyhow!("the axiom suite applies to stream specifications"));
    }
    // one flat seed per operation over generic base streams
    let mut seeds = Vec::new();
    let mut vars = Vec::new();
    for (op, arity) in spec.signature.operations() {
        if *arity == 0 {
            continue;
        }
        let args: Vec<Term> = (0..*arity)
            .map(|i| Term::Var(Sym::from(format!("v{i}"))))
            .collect();
        for a in &args {
            if let Term::Var(v) = a {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        seeds.push(Term::App(op.clone(), args));
    }
    if seeds.is_empty() {
        return Err(anyhow!("the signature has no operations with arguments"));
    }
    let env = BaseStreamEnv::generic(&spec, &vars);
    let report = match check_axioms(&spec, &env, &seeds, flags.depth.max(2)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Ok(engine_error_exit(&e));
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report.to_json())?);
    } else {
        let line = |name: &str, c: &bigsos::engine::axioms::CheckResult| {
            println!(
                "{name}: {} ({} checks)",
                if c.passed() { "pass" } else { "FAIL" },
                c.checked
            );
            for f in &c.failures {
                println!("  {f}");
            }
        };
        line("identity      (i)", &report.identity);
        line("head          (ii)", &report.head);
        line("composition   (iii)", &report.composition);
        line("decomposition (iv)", &report.decomposition);
        line("naturality", &report.naturality);
    }
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_UNKNOWN })
}

fn cmd_demo_halting(
    path: &Path,
    fuel: usize,
    target: Target,
    params: ExtensionParams,
    json: bool,
) -> Result<u8> {
    let machine = load_machine(path)?;
    let behaviors: Vec<Behavior> = match target {
        Target::Stream => vec![Behavior::Stream],
        Target::Lts => vec![Behavior::Lts],
        Target::Both => vec![Behavior::Stream, Behavior::Lts],
    };
    let mut all_agree = true;
    let mut halted = false;
    let mut summaries = Vec::new();
    for behavior in behaviors {
        let report = match demo_halting(&machine, behavior, fuel, params) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{e}");
                return Ok(engine_error_exit(&e));
            }
        };
        all_agree &= report.agrees;
        halted |= matches!(report.run_outcome, RunOutcome::HaltedAt(_));
        if json {
            summaries.push(serde_json::json!({
                "behavior": behavior.to_string(),
                "machine": match report.run_outcome {
                    RunOutcome::HaltedAt(k) => format!("HaltedAt({k})"),
                    RunOutcome::StillRunning => "StillRunning".to_string(),
                },
                "verdict": report.verdict.to_json(),
                "agrees": report.agrees,
            }));
        } else {
            println!("[{behavior}] {}", report.summary());
        }
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&serde_json::json!(summaries))?);
    }
    Ok(if !all_agree {
        EXIT_SOFTWARE
    } else if halted {
        EXIT_NO_EXTENSION
    } else {
        EXIT_OK
    })
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Fmt { spec, json } => cmd_fmt(&spec, json),
        Command::Qm(QmCommand::Run { machine, fuel, json }) => cmd_qm_run(&machine, fuel, json),
        Command::Qm(QmCommand::Compile { machine, target }) => cmd_qm_compile(&machine, target),
        Command::Qm(QmCommand::FromClassical { machine }) => cmd_from_classical(&machine),
        Command::Unfold { spec, seeds, engine, json, dot } => {
            cmd_unfold(&spec, &seeds, engine, json, dot.as_deref())
        }
        Command::CheckExtension { spec, engine, json } => cmd_check_extension(&spec, engine, json),
        Command::Axioms { spec, engine, json } => cmd_axioms(&spec, engine, json),
        Command::Demo(DemoCommand::Halting {
            machine,
            fuel,
            target,
            engine_fuel,
            depth,
            seed_size,
            jobs,
            json,
        }) => cmd_demo_halting(
            &machine,
            fuel,
            target,
            ExtensionParams { seed_size, depth, fuel: engine_fuel, jobs: jobs.max(1) },
            json,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; map usage problems to 64
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::from(EXIT_OK)
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
