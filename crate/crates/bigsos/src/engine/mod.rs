//! Bounded extension checking.
//!
//! Given a validated specification, the engine unfolds seed terms into
//! behavior prefixes by constraint propagation: every stream entry (the
//! unique next transition of a term) or LTS successor set is an unknown that
//! rules force from the entries of argument terms. Lookahead premises may
//! reach the entry being defined; such self-references are handled by case
//! analysis on the entry's hypothetical value. The outcome is one of
//!
//! - [`Verdict::ConsistentPrefix`]: every demanded entry was forced and all
//!   checks passed up to the requested depth;
//! - [`Verdict::NoExtension`]: some entry admits no value at all, with a
//!   machine-checkable [`Witness`] (an unsatisfiable equation `t = C[t]`, or
//!   a successor set that would have to be empty and nonempty at once);
//! - [`Verdict::Ambiguous`]: propagation saturated with a demanded entry
//!   unforced, so the prefix is not unique;
//! - [`Verdict::Unknown`]: the fuel budget ran out first.

pub mod axioms;
pub mod lts;
pub mod rho;
pub mod stream;
pub mod witness;

pub use axioms::{check_axioms, AxiomReport, BaseStreamEnv, EventuallyPeriodic};
pub use lts::{lts_reforce, unfold_lts};
pub use rho::{check_extension_diagram, one_step_rho, ArgBehavior, DiagramReport, RhoError};
pub use stream::{stream_reforce, unfold_stream};
pub use witness::verify_witness;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::behavior::{Letter, StreamPrefix, TreePrefix};
use crate::qm::{QueueMachine, RunOutcome};
use crate::reduction;
use crate::rules::{Behavior, Rule, Spec};
use crate::term::{Sym, Term};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("specification is invalid: {0}")]
    InvalidSpec(String),
    #[error("expected a {expected} specification")]
    WrongBehavior { expected: Behavior },
    #[error("conflicting forced entries for `{term}`: {details}")]
    FunctionalityConflict { term: Term, details: String },
    #[error("variable `{0}` has no base stream in the environment")]
    UnboundColor(Sym),
    #[error("machine error: {0}")]
    Qm(#[from] crate::qm::QmError),
}

/// One forced entry, as recorded while propagating. Replayable: the rule's
/// premises must match entries recorded earlier (or this one, for
/// self-referential lookahead).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub term: Term,
    pub rule: Rule,
    pub label: Letter,
    pub succ: Term,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}   [{}]", self.term, self.label, self.succ, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A forced equation `unknown = equation` where `equation` contains the
    /// unknown under at least one operation, so no finite term satisfies it.
    OccursCheck {
        term: Term,
        position: usize,
        unknown: Sym,
        equation: Term,
        rule: Rule,
        trace: Vec<TraceStep>,
    },
    /// A successor set that is derivably nonempty when assumed empty, while
    /// every derivation under a nonempty assumption only produces strictly
    /// deeper successors, so no finite set is supported.
    EmptyNonemptyClash {
        term: Term,
        depth: usize,
        forcing_rule: Rule,
        deepening_rules: Vec<Rule>,
        trace: Vec<TraceStep>,
    },
}

impl Witness {
    pub fn term(&self) -> &Term {
        match self {
            Witness::OccursCheck { term, .. } | Witness::EmptyNonemptyClash { term, .. } => term,
        }
    }

    /// Stream position (or tree depth) the contradiction was found at.
    pub fn position(&self) -> usize {
        match self {
            Witness::OccursCheck { position, .. } => *position,
            Witness::EmptyNonemptyClash { depth, .. } => *depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityWitness {
    pub term: Term,
    /// Position of the undetermined node in the seed's prefix.
    pub position: usize,
    /// Human-readable description of the viable alternatives.
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistentData {
    Stream {
        prefixes: BTreeMap<Term, StreamPrefix<Term>>,
        /// Every forced entry of the session, for forcedness re-checks.
        facts: Vec<(Term, Letter, Term)>,
    },
    Lts {
        trees: BTreeMap<Term, TreePrefix<Term>>,
        facts: Vec<(Term, BTreeSet<(Letter, Term)>)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ConsistentPrefix { depth: usize, data: ConsistentData },
    NoExtension { witness: Witness },
    Ambiguous { witness: AmbiguityWitness },
    Unknown { fuel_spent: u64, reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ConsistentPrefix { .. } => "ConsistentPrefix",
            Verdict::NoExtension { .. } => "NoExtension",
            Verdict::Ambiguous { .. } => "Ambiguous",
            Verdict::Unknown { .. } => "Unknown",
        }
    }

    /// Exit-code severity ordering: NoExtension > Ambiguous > Unknown >
    /// ConsistentPrefix.
    fn rank(&self) -> u8 {
        match self {
            Verdict::NoExtension { .. } => 3,
            Verdict::Ambiguous { .. } => 2,
            Verdict::Unknown { .. } => 1,
            Verdict::ConsistentPrefix { .. } => 0,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "verdict": self.name() });
        let obj = v.as_object_mut().expect("object");
        match self {
            Verdict::ConsistentPrefix { depth, data } => {
                obj.insert("depth".into(), json!(depth));
                match data {
                    ConsistentData::Stream { prefixes, .. } => {
                        let map: BTreeMap<String, String> = prefixes
                            .iter()
                            .map(|(t, p)| (t.to_string(), p.to_string()))
                            .collect();
                        obj.insert("prefixes".into(), json!(map));
                    }
                    ConsistentData::Lts { trees, .. } => {
                        let map: BTreeMap<String, serde_json::Value> =
                            trees.iter().map(|(t, p)| (t.to_string(), tree_json(p))).collect();
                        obj.insert("prefixes".into(), json!(map));
                    }
                }
            }
            Verdict::NoExtension { witness } => {
                obj.insert("witness".into(), witness_json(witness));
            }
            Verdict::Ambiguous { witness } => {
                obj.insert(
                    "witness".into(),
                    json!({
                        "kind": "Ambiguous",
                        "term": witness.term.to_string(),
                        "position": witness.position,
                        "candidates": witness.candidates,
                    }),
                );
            }
            Verdict::Unknown { fuel_spent, reason } => {
                obj.insert("fuel_spent".into(), json!(fuel_spent));
                obj.insert("reason".into(), json!(reason));
            }
        }
        v
    }
}

fn tree_json(t: &TreePrefix<Term>) -> serde_json::Value {
    json!({
        "node": t.node.to_string(),
        "budget": t.budget,
        "children": t
            .children
            .iter()
            .map(|(l, sub)| json!({ "label": l.to_string(), "tree": tree_json(sub) }))
            .collect::<Vec<_>>(),
    })
}

fn trace_json(trace: &[TraceStep]) -> serde_json::Value {
    json!(trace
        .iter()
        .map(|s| json!({
            "term": s.term.to_string(),
            "rule": s.rule.to_string(),
            "label": s.label.to_string(),
            "succ": s.succ.to_string(),
        }))
        .collect::<Vec<_>>())
}

fn witness_json(w: &Witness) -> serde_json::Value {
    match w {
        Witness::OccursCheck { term, position, unknown, equation, rule, trace } => json!({
            "kind": "OccursCheck",
            "term": term.to_string(),
            "position": position,
            "equation": format!("{unknown} = {equation}"),
            "rule": rule.to_string(),
            "trace": trace_json(trace),
        }),
        Witness::EmptyNonemptyClash { term, depth, forcing_rule, deepening_rules, trace } => {
            json!({
                "kind": "EmptyNonemptyClash",
                "term": term.to_string(),
                "depth": depth,
                "forcing_rule": forcing_rule.to_string(),
                "deepening_rules": deepening_rules
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>(),
                "trace": trace_json(trace),
            })
        }
    }
}

/// Aggregated result of [`check_extension`].
#[derive(Debug)]
pub struct ExtensionOutcome {
    pub verdict: Verdict,
    pub axioms: Option<AxiomReport>,
    pub diagram: Option<DiagramReport>,
    pub diagnostics: Vec<String>,
}

impl ExtensionOutcome {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.verdict.to_json();
        let obj = v.as_object_mut().expect("object");
        if let Some(ax) = &self.axioms {
            obj.insert("axioms".into(), ax.to_json());
        }
        if let Some(d) = &self.diagram {
            obj.insert("diagram".into(), d.to_json());
        }
        if !self.diagnostics.is_empty() {
            obj.insert("diagnostics".into(), json!(self.diagnostics));
        }
        v
    }
}

/// Knobs for [`check_extension`].
#[derive(Debug, Clone, Copy)]
pub struct ExtensionParams {
    /// Closed seed terms up to this size are unfolded.
    pub seed_size: usize,
    /// Prefix length (stream) or tree depth (LTS) to force.
    pub depth: usize,
    /// Propagation budget, counted in entry evaluations.
    pub fuel: u64,
    /// Independent seed groups evaluated in parallel sessions.
    pub jobs: usize,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        ExtensionParams { seed_size: 3, depth: 8, fuel: 10_000, jobs: 1 }
    }
}

fn worst(verdicts: impl IntoIterator<Item = Verdict>) -> Option<Verdict> {
    verdicts.into_iter().max_by_key(Verdict::rank)
}

/// Orchestrates the whole check for a specification: unfolds every closed
/// seed up to the configured size, runs the distributive-law axiom suite and
/// the one-step diagram comparison on stream specs, and aggregates verdicts
/// (NoExtension dominates, then Ambiguous, then Unknown).
pub fn check_extension(spec: &Spec, params: ExtensionParams) -> Result<ExtensionOutcome, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    let spec = &checked;

    let mut diagnostics = Vec::new();
    let seeds = spec.signature.closed_terms(params.seed_size);
    if seeds.is_empty() {
        diagnostics.push("no closed terms exist at this seed size".to_string());
    }

    let closed_verdict = match spec.behavior {
        Behavior::Stream => run_seed_sessions(spec, &seeds, params, |sp, sd| {
            unfold_stream(sp, sd, params.depth, params.fuel)
        })?,
        Behavior::Lts => run_seed_sessions(spec, &seeds, params, |sp, sd| {
            unfold_lts(sp, sd, params.depth, params.fuel)
        })?,
    };
    if let Some(v) = &closed_verdict {
        if v.rank() == 3 {
            // a refutation anywhere refutes the whole law
            return Ok(ExtensionOutcome {
                verdict: closed_verdict.expect("checked above"),
                axioms: None,
                diagram: None,
                diagnostics,
            });
        }
    }

    let mut verdicts: Vec<Verdict> = closed_verdict.into_iter().collect();
    let mut axioms = None;
    let mut diagram = None;

    if spec.behavior == Behavior::Stream {
        // generic eventually-periodic base streams drive the open-term checks
        let flat_seeds = generic_flat_seeds(spec);
        if !flat_seeds.is_empty() {
            let env = BaseStreamEnv::generic(spec, &seed_vars(&flat_seeds));
            let open_verdict =
                stream::unfold_stream_in_env(spec, &env, &flat_seeds, params.depth, params.fuel)?;
            verdicts.push(open_verdict);
            let ax = check_axioms(spec, &env, &flat_seeds, params.depth.max(2))?;
            if !ax.is_clean() {
                verdicts.push(Verdict::Unknown {
                    fuel_spent: 0,
                    reason: "axiom suite reported mismatches".to_string(),
                });
            }
            axioms = Some(ax);
        }
        let closed_consistent = verdicts
            .first()
            .is_none_or(|v| matches!(v, Verdict::ConsistentPrefix { .. }));
        if !seeds.is_empty() && closed_consistent {
            match check_extension_diagram(spec, &seeds, params.depth, params.fuel) {
                Ok(report) => {
                    if !report.mismatches.is_empty() {
                        verdicts.push(Verdict::Unknown {
                            fuel_spent: 0,
                            reason: "extension diagram mismatches".to_string(),
                        });
                    }
                    diagram = Some(report);
                }
                Err(e) => diagnostics.push(format!("diagram check skipped: {e}")),
            }
        }
    } else if seeds.is_empty() {
        diagnostics
            .push("LTS spec without constants: nothing to unfold, vacuously consistent".into());
    }

    let vacuous = Verdict::ConsistentPrefix {
        depth: params.depth,
        data: match spec.behavior {
            Behavior::Stream => {
                ConsistentData::Stream { prefixes: BTreeMap::new(), facts: Vec::new() }
            }
            Behavior::Lts => ConsistentData::Lts { trees: BTreeMap::new(), facts: Vec::new() },
        },
    };
    let verdict = worst(verdicts).unwrap_or(vacuous);
    Ok(ExtensionOutcome { verdict, axioms, diagram, diagnostics })
}

/// Runs the seeds through one session (jobs = 1) or through independent
/// parallel sessions on seed chunks, and folds the verdicts. Output order is
/// canonical because the fold is by severity and then by seed order.
fn run_seed_sessions<F>(
    spec: &Spec,
    seeds: &[Term],
    params: ExtensionParams,
    run: F,
) -> Result<Option<Verdict>, EngineError>
where
    F: Fn(&Spec, &[Term]) -> Result<Verdict, EngineError> + Sync,
{
    if seeds.is_empty() {
        return Ok(None);
    }
    if params.jobs <= 1 {
        return run(spec, seeds).map(Some);
    }
    let chunk = seeds.len().div_ceil(params.jobs);
    let results: Vec<Result<Verdict, EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|group| scope.spawn(|| run(spec, group)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("session thread panicked"))
            .collect()
    });
    let mut verdicts = Vec::new();
    let mut merged: Option<Verdict> = None;
    for r in results {
        verdicts.push(r?);
    }
    // merge consistent payloads so callers still see every prefix
    let mut stream_prefixes = BTreeMap::new();
    let mut stream_facts = Vec::new();
    let mut trees = BTreeMap::new();
    let mut tree_facts = Vec::new();
    let mut depth = 0;
    let mut all_consistent = true;
    for v in &verdicts {
        match v {
            Verdict::ConsistentPrefix { depth: d, data } => {
                depth = depth.max(*d);
                match data {
                    ConsistentData::Stream { prefixes, facts } => {
                        stream_prefixes.extend(prefixes.clone());
                        stream_facts.extend(facts.clone());
                    }
                    ConsistentData::Lts { trees: t, facts } => {
                        trees.extend(t.clone());
                        tree_facts.extend(facts.clone());
                    }
                }
            }
            _ => all_consistent = false,
        }
    }
    if all_consistent {
        let data = if spec.behavior == Behavior::Stream {
            ConsistentData::Stream { prefixes: stream_prefixes, facts: stream_facts }
        } else {
            ConsistentData::Lts { trees, facts: tree_facts }
        };
        merged = Some(Verdict::ConsistentPrefix { depth, data });
    }
    Ok(match merged {
        Some(m) => Some(m),
        None => worst(verdicts),
    })
}

/// One flat seed per operation with arity >= 1, over distinct fresh
/// variables: `f(v0, v1, …)`.
fn generic_flat_seeds(spec: &Spec) -> Vec<Term> {
    let mut out = Vec::new();
    for (op, arity) in spec.signature.operations() {
        if *arity == 0 {
            continue;
        }
        let args = (0..*arity)
            .map(|i| Term::Var(Sym::from(format!("v{i}"))))
            .collect();
        out.push(Term::App(op.clone(), args));
    }
    out
}

fn seed_vars(seeds: &[Term]) -> Vec<Sym> {
    let mut vars = BTreeSet::new();
    for s in seeds {
        vars.extend(s.vars());
    }
    vars.into_iter().collect()
}

/// Result of the end-to-end halting comparison: simulate the machine, compile
/// it, run the extension checker at a horizon derived from the run, and
/// compare the verdicts.
#[derive(Debug)]
pub struct DemoHaltingReport {
    pub run_outcome: RunOutcome,
    pub verdict: Verdict,
    pub behavior: Behavior,
    pub agrees: bool,
}

impl DemoHaltingReport {
    pub fn summary(&self) -> String {
        let machine = match self.run_outcome {
            RunOutcome::HaltedAt(k) => format!("HaltedAt({k})"),
            RunOutcome::StillRunning => "StillRunning".to_string(),
        };
        format!(
            "machine: {machine}; spec: {} — verdicts {}",
            self.verdict.name(),
            if self.agrees { "agree" } else { "DISAGREE" }
        )
    }
}

/// Compiles the machine (stream or LTS target), checks extension, and
/// compares against the simulator: a halting run must yield NoExtension and
/// a run that is still going at the fuel horizon must yield a consistent
/// prefix at the base depth.
pub fn demo_halting(
    m: &QueueMachine,
    behavior: Behavior,
    machine_fuel: usize,
    params: ExtensionParams,
) -> Result<DemoHaltingReport, EngineError> {
    let run_outcome = m.run_outcome_initial(machine_fuel)?;
    let out = match behavior {
        Behavior::Stream => reduction::qm_to_stream_spec(m)?,
        Behavior::Lts => reduction::qm_to_lts_spec(m)?,
    };
    let depth = match run_outcome {
        // the clash sits right past the halting configuration
        RunOutcome::HaltedAt(k) => (k + 3).max(params.depth.min(8)),
        RunOutcome::StillRunning => params.depth,
    };
    let outcome = check_extension(&out.spec, ExtensionParams { depth, ..params })?;
    let agrees = matches!(
        (&run_outcome, &outcome.verdict),
        (RunOutcome::HaltedAt(_), Verdict::NoExtension { .. })
            | (RunOutcome::StillRunning, Verdict::ConsistentPrefix { .. })
    );
    Ok(DemoHaltingReport { run_outcome, verdict: outcome.verdict, behavior, agrees })
}
