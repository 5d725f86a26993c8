//! Stream unfolding by constraint propagation.
//!
//! Every term `t` owns one entry: the label and successor term of its unique
//! next transition. An entry is forced by rule instances whose premises read
//! the entries of argument terms (lookahead walks successor chains). Three
//! self-referential situations are handled explicitly:
//!
//! - a premise chain that reaches the entry being defined turns the instance
//!   into a hypothesis branch, conditional on the entry's own label;
//! - a conclusion whose target mentions the entry's own successor under at
//!   least one operation is an occurs-check contradiction (`t' = C[t']` has
//!   no finite solution);
//! - a conclusion target that *is* the entry's own successor constrains
//!   nothing, so such branches cannot force the entry.
//!
//! An entry whose hypothesis branches are all contradictory admits no value
//! at all, refuting extension; an entry left with several live branches after
//! propagation saturates is reported as ambiguous.
//!
//! Variables act as base-stream colors when an environment is supplied: the
//! color `v@k` steps to `v@(k+1)` under the k-th label of base `v`.

use std::collections::{BTreeMap, HashMap};

use crate::behavior::{Letter, StreamPrefix};
use crate::rules::{ground_rules, Behavior, LabelExpr, Premise, Rule, Spec};
use crate::term::{Sym, Term};

use super::axioms::BaseStreamEnv;
use super::{
    AmbiguityWitness, ConsistentData, EngineError, TraceStep, Verdict, Witness,
};

/// A possibly-unknown term: fully known, the unknown successor of some
/// entry, or an application over such pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum UTerm {
    Node(Term),
    SuccOf(Term),
    App(Sym, Vec<UTerm>),
}

impl UTerm {
    fn app(op: Sym, args: Vec<UTerm>) -> UTerm {
        if args.iter().all(|a| matches!(a, UTerm::Node(_))) {
            let ground = args
                .into_iter()
                .map(|a| match a {
                    UTerm::Node(t) => t,
                    _ => unreachable!(),
                })
                .collect();
            UTerm::Node(Term::App(op, ground))
        } else {
            UTerm::App(op, args)
        }
    }

    fn as_ground(&self) -> Option<&Term> {
        match self {
            UTerm::Node(t) => Some(t),
            _ => None,
        }
    }

    fn contains_succ_of(&self, t: &Term) -> bool {
        match self {
            UTerm::Node(_) => false,
            UTerm::SuccOf(u) => u == t,
            UTerm::App(_, args) => args.iter().any(|a| a.contains_succ_of(t)),
        }
    }

    /// Renders unknowns as variables: the distinguished entry's successor as
    /// `unknown`, any other as a name derived from its term.
    fn as_equation_term(&self, this: &Term, unknown: &Sym) -> Term {
        match self {
            UTerm::Node(t) => t.clone(),
            UTerm::SuccOf(u) if u == this => Term::Var(unknown.clone()),
            UTerm::SuccOf(u) => Term::Var(Sym::from(format!("succ<{u}>"))),
            UTerm::App(op, args) => Term::App(
                op.clone(),
                args.iter().map(|a| a.as_equation_term(this, unknown)).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone)]
enum Entry {
    InProgress,
    Committed { label: Letter, succ: UTerm },
    Stuck { branches: Vec<String> },
}

#[derive(Debug)]
enum Halt {
    NoExtension(Box<Witness>),
    FuelExhausted(String),
    Error(EngineError),
}

#[derive(Debug, Clone)]
enum DeadReason {
    /// A premise label failed against a committed entry: the rule does not
    /// apply, which is unremarkable.
    NoMatch,
    /// The hypothesis branch is inconsistent: the assumed label contradicts
    /// the rule's own conclusion or another self-read.
    SelfClash,
    /// The conclusion nests the entry's own successor: `t' = C[t']`.
    Occurs { equation: Term },
}

#[derive(Debug, Clone)]
enum CandOutcome {
    Dead(DeadReason, Rule),
    Pending,
    Viable(Viable),
}

#[derive(Debug, Clone)]
struct Viable {
    assumed: Option<Letter>,
    label: Letter,
    /// `None` when the conclusion is exactly the entry's own successor, which
    /// constrains nothing.
    succ: Option<UTerm>,
    rule: Rule,
}

const RECURSION_LIMIT: usize = 4096;
pub(crate) const UNKNOWN_NAME: &str = "τ";

pub(crate) struct StreamSession<'s> {
    spec: &'s Spec,
    env: Option<&'s BaseStreamEnv>,
    ground: HashMap<Sym, Vec<Rule>>,
    entries: HashMap<Term, Entry>,
    positions: HashMap<Term, usize>,
    trace: Vec<TraceStep>,
    fuel_left: u64,
    fuel_limit: u64,
    depth: usize,
}

impl<'s> StreamSession<'s> {
    pub(crate) fn new(spec: &'s Spec, env: Option<&'s BaseStreamEnv>, fuel: u64) -> Self {
        StreamSession {
            spec,
            env,
            ground: HashMap::new(),
            entries: HashMap::new(),
            positions: HashMap::new(),
            trace: Vec::new(),
            fuel_left: fuel,
            fuel_limit: fuel,
            depth: 0,
        }
    }

    pub(crate) fn inject_fact(&mut self, term: Term, label: Letter, succ: Term) {
        self.entries
            .insert(term, Entry::Committed { label, succ: UTerm::Node(succ) });
    }

    fn fuel_spent(&self) -> u64 {
        self.fuel_limit - self.fuel_left
    }

    fn ground_for(&mut self, op: &Sym) -> Vec<Rule> {
        if let Some(rules) = self.ground.get(op) {
            return rules.clone();
        }
        let rules = ground_rules(self.spec, op);
        self.ground.insert(op.clone(), rules.clone());
        rules
    }

    fn resolve(&self, ut: &UTerm) -> UTerm {
        match ut {
            UTerm::Node(t) => UTerm::Node(t.clone()),
            UTerm::SuccOf(u) => match self.entries.get(u) {
                Some(Entry::Committed { succ, .. }) => {
                    // committed successors never point back at their own
                    // entry (occurs-checked), so this terminates
                    self.resolve(&succ.clone())
                }
                _ => UTerm::SuccOf(u.clone()),
            },
            UTerm::App(op, args) => {
                UTerm::app(op.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
        }
    }

    fn committed(&self, t: &Term) -> Option<(Letter, UTerm)> {
        match self.entries.get(t) {
            Some(Entry::Committed { label, succ, .. }) => Some((label.clone(), succ.clone())),
            _ => None,
        }
    }

    /// Makes sure `t` has been attempted at least once.
    fn demand(&mut self, t: &Term, pos_hint: usize) -> Result<(), Halt> {
        if self.entries.contains_key(t) {
            return Ok(());
        }
        self.evaluate(t, pos_hint)
    }

    fn color_step(&self, name: &Sym) -> Result<(Letter, Sym), Halt> {
        let env = self
            .env
            .ok_or_else(|| Halt::Error(EngineError::UnboundColor(name.clone())))?;
        env.color_step(name)
            .ok_or_else(|| Halt::Error(EngineError::UnboundColor(name.clone())))
    }

    /// One forcing attempt for the entry of `t`.
    fn evaluate(&mut self, t: &Term, pos: usize) -> Result<(), Halt> {
        if let Some(Entry::Committed { .. }) = self.entries.get(t) {
            return Ok(());
        }
        if self.fuel_left == 0 {
            return Err(Halt::FuelExhausted("propagation budget exhausted".into()));
        }
        self.fuel_left -= 1;
        if self.depth >= RECURSION_LIMIT {
            return Err(Halt::FuelExhausted("lookahead recursion limit reached".into()));
        }
        self.positions.entry(t.clone()).or_insert(pos);

        let (op, rules) = match t {
            Term::Var(name) => {
                let (label, next) = self.color_step(name)?;
                self.entries.insert(
                    t.clone(),
                    Entry::Committed { label, succ: UTerm::Node(Term::Var(next)) },
                );
                return Ok(());
            }
            Term::App(op, _) => (op.clone(), self.ground_for(op)),
        };
        if rules.is_empty() {
            return Err(Halt::Error(EngineError::InvalidSpec(format!(
                "operation `{op}` has no rules; the stream behavior of {t} is undefined"
            ))));
        }

        self.entries.insert(t.clone(), Entry::InProgress);
        self.depth += 1;
        let mut outcomes = Vec::with_capacity(rules.len());
        let mut halted = None;
        for rule in &rules {
            match self.match_candidate(t, rule, pos) {
                Ok(o) => outcomes.push(o),
                Err(h) => {
                    halted = Some(h);
                    break;
                }
            }
        }
        self.depth -= 1;
        if let Some(h) = halted {
            return Err(h);
        }
        self.settle(t, pos, outcomes)
    }

    fn match_candidate(&mut self, t: &Term, rule: &Rule, pos: usize) -> Result<CandOutcome, Halt> {
        let args = match t {
            Term::App(_, args) => args,
            Term::Var(_) => unreachable!("colors are committed directly"),
        };
        let mut bind: BTreeMap<Sym, UTerm> = rule
            .arg_vars
            .iter()
            .cloned()
            .zip(args.iter().cloned().map(UTerm::Node))
            .collect();
        let mut assumed: Option<Letter> = None;

        for premise in &rule.premises {
            let (source, label, target) = match premise {
                Premise::Pos { source, label, target } => (source, label, target),
                _ => {
                    return Err(Halt::Error(EngineError::InvalidSpec(
                        "negative premise in a stream rule".into(),
                    )))
                }
            };
            let lit = match label {
                LabelExpr::Lit(l) => l.clone(),
                LabelExpr::Var(v) => {
                    return Err(Halt::Error(EngineError::InvalidSpec(format!(
                        "unexpanded label metavariable `{v}`"
                    ))))
                }
            };
            let node = self.resolve(&bind[source]);
            match node {
                UTerm::Node(w) if &w == t => {
                    // lookahead reached the entry being defined: hypothesize
                    if let Some(prev) = &assumed {
                        if *prev != lit {
                            return Ok(CandOutcome::Dead(DeadReason::SelfClash, rule.clone()));
                        }
                    }
                    assumed = Some(lit);
                    bind.insert(target.clone(), UTerm::SuccOf(t.clone()));
                }
                UTerm::Node(w) => {
                    self.demand(&w, pos)?;
                    match self.entries.get(&w) {
                        Some(Entry::Committed { label, succ, .. }) => {
                            if *label != lit {
                                return Ok(CandOutcome::Dead(DeadReason::NoMatch, rule.clone()));
                            }
                            let succ = succ.clone();
                            bind.insert(target.clone(), succ);
                        }
                        // on-stack or saturated elsewhere: try again later
                        _ => return Ok(CandOutcome::Pending),
                    }
                }
                // the chain stepped past an unresolved successor
                _ => return Ok(CandOutcome::Pending),
            }
        }

        let out_label = match &rule.concl_label {
            LabelExpr::Lit(l) => l.clone(),
            LabelExpr::Var(v) => {
                return Err(Halt::Error(EngineError::InvalidSpec(format!(
                    "unexpanded label metavariable `{v}`"
                ))))
            }
        };
        let target_ut = to_uterm(&rule.concl_target, &bind)
            .map_err(|msg| Halt::Error(EngineError::InvalidSpec(msg)))?;
        let resolved = self.resolve(&target_ut);

        if resolved.contains_succ_of(t) && resolved != UTerm::SuccOf(t.clone()) {
            let unknown = Sym::from(UNKNOWN_NAME);
            let equation = resolved.as_equation_term(t, &unknown);
            return Ok(CandOutcome::Dead(DeadReason::Occurs { equation }, rule.clone()));
        }
        if let Some(a) = &assumed {
            if *a != out_label {
                return Ok(CandOutcome::Dead(DeadReason::SelfClash, rule.clone()));
            }
        }
        let succ = if resolved == UTerm::SuccOf(t.clone()) { None } else { Some(resolved) };
        Ok(CandOutcome::Viable(Viable { assumed, label: out_label, succ, rule: rule.clone() }))
    }

    /// Combines the candidate outcomes for `t` into a commitment, a stuck
    /// state, or a refutation.
    fn settle(&mut self, t: &Term, pos: usize, outcomes: Vec<CandOutcome>) -> Result<(), Halt> {
        let mut pending = false;
        let mut unconditional: Vec<Viable> = Vec::new();
        let mut branches: Vec<Viable> = Vec::new();
        let mut deaths: Vec<(DeadReason, Rule)> = Vec::new();
        for o in outcomes {
            match o {
                CandOutcome::Pending => pending = true,
                CandOutcome::Viable(v) => {
                    if v.assumed.is_none() {
                        unconditional.push(v);
                    } else {
                        branches.push(v);
                    }
                }
                CandOutcome::Dead(r, rule) => deaths.push((r, rule)),
            }
        }

        // a rule that applies outright but cannot have a consistent
        // conclusion refutes the whole law
        for (reason, rule) in &deaths {
            if let DeadReason::Occurs { equation } = reason {
                if self.rule_is_unconditional(t, rule) {
                    return Err(self.occurs_failure(t, equation.clone(), rule.clone()));
                }
            }
        }

        if !unconditional.is_empty() {
            let label = unconditional[0].label.clone();
            let succ = match &unconditional[0].succ {
                Some(s) => s.clone(),
                None => {
                    return Err(Halt::Error(EngineError::InvalidSpec(format!(
                        "rule `{}` concludes with an unconstrained successor",
                        unconditional[0].rule
                    ))))
                }
            };
            for other in &unconditional[1..] {
                if other.label != label || other.succ.as_ref() != Some(&succ) {
                    return Err(Halt::Error(EngineError::FunctionalityConflict {
                        term: t.clone(),
                        details: format!(
                            "`{}` forces ({label}, …) but `{}` forces ({}, …)",
                            unconditional[0].rule, other.rule, other.label
                        ),
                    }));
                }
            }
            // hypothesis branches whose assumption comes true must agree
            for b in &branches {
                if b.assumed.as_ref() == Some(&label) {
                    if let Some(bs) = &b.succ {
                        if b.label != label || *bs != succ {
                            return Err(Halt::Error(EngineError::FunctionalityConflict {
                                term: t.clone(),
                                details: format!(
                                    "branch `{}` disagrees with committed entry",
                                    b.rule
                                ),
                            }));
                        }
                    }
                }
            }
            self.commit(t, label, succ, unconditional[0].rule.clone());
            return Ok(());
        }

        if pending {
            self.entries
                .insert(t.clone(), Entry::Stuck { branches: Vec::new() });
            return Ok(());
        }

        match branches.len() {
            0 => {
                // every candidate is contradictory: the entry has no value,
                // yet stream behavior must assign one
                if let Some((DeadReason::Occurs { equation }, rule)) = deaths
                    .iter()
                    .find(|(r, _)| matches!(r, DeadReason::Occurs { .. }))
                    .cloned()
                {
                    return Err(self.occurs_failure(t, equation, rule));
                }
                if let Some((_, rule)) = deaths
                    .iter()
                    .find(|(r, _)| matches!(r, DeadReason::SelfClash))
                {
                    let depth = self.positions.get(t).copied().unwrap_or(pos) + 1;
                    return Err(Halt::NoExtension(Box::new(Witness::EmptyNonemptyClash {
                        term: t.clone(),
                        depth,
                        forcing_rule: rule.clone(),
                        deepening_rules: Vec::new(),
                        trace: self.trace.clone(),
                    })));
                }
                // only plain mismatches: no rule covers this term's labels
                Err(Halt::Error(EngineError::InvalidSpec(format!(
                    "no rule derives a transition for {t}; the specification is not exhaustive"
                ))))
            }
            1 => {
                // forced by elimination: every alternative hypothesis died
                let b = branches.into_iter().next().expect("one branch");
                match b.succ {
                    Some(succ) => {
                        self.commit(t, b.label, succ, b.rule);
                        Ok(())
                    }
                    None => {
                        self.entries.insert(
                            t.clone(),
                            Entry::Stuck {
                                branches: vec![format!(
                                    "{} leaves the successor unconstrained",
                                    b.rule
                                )],
                            },
                        );
                        Ok(())
                    }
                }
            }
            _ => {
                let descriptions = branches
                    .iter()
                    .map(|b| format!("label {} via `{}`", b.label, b.rule))
                    .collect();
                self.entries
                    .insert(t.clone(), Entry::Stuck { branches: descriptions });
                Ok(())
            }
        }
    }

    /// Whether the rule's premises touch only committed entries when matched
    /// against `t`'s arguments (used to tell a genuinely firing rule from a
    /// hypothesis branch when reporting refutations).
    fn rule_is_unconditional(&self, t: &Term, rule: &Rule) -> bool {
        let args = match t {
            Term::App(_, args) => args,
            Term::Var(_) => return false,
        };
        let mut bind: BTreeMap<Sym, UTerm> = rule
            .arg_vars
            .iter()
            .cloned()
            .zip(args.iter().cloned().map(UTerm::Node))
            .collect();
        for premise in &rule.premises {
            if let Premise::Pos { source, target, .. } = premise {
                match self.resolve(&bind[source]) {
                    UTerm::Node(w) if &w != t => match self.committed(&w) {
                        Some((_, succ)) => {
                            bind.insert(target.clone(), succ);
                        }
                        None => return false,
                    },
                    _ => return false,
                }
            }
        }
        true
    }

    fn occurs_failure(&self, t: &Term, equation: Term, rule: Rule) -> Halt {
        let position = self.positions.get(t).copied().unwrap_or(0) + 1;
        Halt::NoExtension(Box::new(Witness::OccursCheck {
            term: t.clone(),
            position,
            unknown: Sym::from(UNKNOWN_NAME),
            equation,
            rule,
            trace: self.trace.clone(),
        }))
    }

    fn commit(&mut self, t: &Term, label: Letter, succ: UTerm, rule: Rule) {
        let resolved = self.resolve(&succ);
        if let Some(ground) = resolved.as_ground() {
            self.trace.push(TraceStep {
                term: t.clone(),
                rule: rule.clone(),
                label: label.clone(),
                succ: ground.clone(),
            });
        }
        self.entries
            .insert(t.clone(), Entry::Committed { label, succ: resolved });
    }

    /// Re-attempts every stuck entry once; reports whether anything moved.
    fn repass(&mut self) -> Result<bool, Halt> {
        let stuck: Vec<(Term, usize)> = self
            .entries
            .iter()
            .filter(|(_, e)| matches!(e, Entry::Stuck { .. }))
            .map(|(t, _)| (t.clone(), self.positions.get(t).copied().unwrap_or(0)))
            .collect();
        let before = self.commit_count();
        for (t, pos) in stuck {
            self.evaluate(&t, pos)?;
        }
        Ok(self.commit_count() > before)
    }

    fn commit_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| matches!(e, Entry::Committed { .. }))
            .count()
    }

    fn ambiguity_for(&self, t: &Term, pos: usize) -> AmbiguityWitness {
        let candidates = match self.entries.get(t) {
            Some(Entry::Stuck { branches, .. }) if !branches.is_empty() => branches.clone(),
            _ => vec!["no forcing derivation after propagation saturated".to_string()],
        };
        AmbiguityWitness { term: t.clone(), position: pos + 1, candidates }
    }

    /// Walks the seed's prefix, forcing entries position by position.
    fn walk_seed(&mut self, seed: &Term, n: usize) -> Result<Option<AmbiguityWitness>, Halt> {
        let mut node = seed.clone();
        for pos in 0..n {
            loop {
                match self.entries.get(&node) {
                    Some(Entry::Committed { succ, .. }) => {
                        match self.resolve(&succ.clone()).as_ground() {
                            Some(next) => {
                                let next = next.clone();
                                node = next;
                                break;
                            }
                            None => {
                                // successor still symbolic: push on the rest
                                if !self.repass()? {
                                    return Ok(Some(self.ambiguity_for(&node, pos)));
                                }
                            }
                        }
                    }
                    Some(Entry::Stuck { .. }) => {
                        self.evaluate(&node, pos)?;
                        if matches!(self.entries.get(&node), Some(Entry::Stuck { .. }))
                            && !self.repass()?
                        {
                            return Ok(Some(self.ambiguity_for(&node, pos)));
                        }
                    }
                    Some(Entry::InProgress) => {
                        unreachable!("driver never observes in-progress entries")
                    }
                    None => self.evaluate(&node, pos)?,
                }
            }
        }
        Ok(None)
    }

    fn prefix_of(&self, seed: &Term, n: usize) -> Option<StreamPrefix<Term>> {
        let mut steps = Vec::with_capacity(n);
        let mut node = seed.clone();
        for _ in 0..n {
            let (label, succ) = self.committed(&node)?;
            let next = self.resolve(&succ).as_ground()?.clone();
            steps.push((node, label));
            node = next;
        }
        Some(StreamPrefix { steps, tail: node })
    }

    pub(crate) fn facts(&self) -> Vec<(Term, Letter, Term)> {
        let mut out: Vec<(Term, Letter, Term)> = self
            .entries
            .iter()
            .filter_map(|(t, e)| match e {
                Entry::Committed { label, succ, .. } => self
                    .resolve(succ)
                    .as_ground()
                    .map(|g| (t.clone(), label.clone(), g.clone())),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }

    pub(crate) fn entry_value(&self, t: &Term) -> Option<(Letter, Term)> {
        let (label, succ) = self.committed(t)?;
        Some((label, self.resolve(&succ).as_ground()?.clone()))
    }
}

fn to_uterm(target: &Term, bind: &BTreeMap<Sym, UTerm>) -> Result<UTerm, String> {
    match target {
        Term::Var(v) => bind
            .get(v)
            .cloned()
            .ok_or_else(|| format!("conclusion variable `{v}` is unbound")),
        Term::App(op, args) => {
            let mut out = Vec::with_capacity(args.len());
            for a in args {
                out.push(to_uterm(a, bind)?);
            }
            Ok(UTerm::app(op.clone(), out))
        }
    }
}

fn finish(n: usize, session: &StreamSession, seeds: &[Term]) -> Verdict {
    let mut prefixes = BTreeMap::new();
    for seed in seeds {
        if let Some(p) = session.prefix_of(seed, n) {
            prefixes.insert(seed.clone(), p);
        }
    }
    Verdict::ConsistentPrefix {
        depth: n,
        data: ConsistentData::Stream { prefixes, facts: session.facts() },
    }
}

fn run(
    spec: &Spec,
    env: Option<&BaseStreamEnv>,
    seeds: &[Term],
    n: usize,
    fuel: u64,
) -> Result<Verdict, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    if checked.behavior != Behavior::Stream {
        return Err(EngineError::WrongBehavior { expected: Behavior::Stream });
    }
    let spec = &checked;
    let mut session = StreamSession::new(spec, env, fuel);
    for seed in seeds {
        match session.walk_seed(seed, n) {
            Ok(None) => {}
            Ok(Some(witness)) => return Ok(Verdict::Ambiguous { witness }),
            Err(Halt::NoExtension(witness)) => {
                return Ok(Verdict::NoExtension { witness: *witness })
            }
            Err(Halt::FuelExhausted(reason)) => {
                return Ok(Verdict::Unknown { fuel_spent: session.fuel_spent(), reason })
            }
            Err(Halt::Error(e)) => return Err(e),
        }
    }
    Ok(finish(n, &session, seeds))
}

/// Unfolds closed seed terms to `n`-step stream prefixes.
pub fn unfold_stream(
    spec: &Spec,
    seeds: &[Term],
    n: usize,
    fuel: u64,
) -> Result<Verdict, EngineError> {
    run(spec, None, seeds, n, fuel)
}

/// Unfolds seeds whose variables are colored by base streams from `env`.
pub fn unfold_stream_in_env(
    spec: &Spec,
    env: &BaseStreamEnv,
    seeds: &[Term],
    n: usize,
    fuel: u64,
) -> Result<Verdict, EngineError> {
    run(spec, Some(env), seeds, n, fuel)
}

/// Re-derives the entry of `target` from the other recorded facts alone.
/// Used to check that consistent prefixes are forced: deleting any single
/// entry and re-propagating must reconstruct it identically.
pub fn stream_reforce(
    spec: &Spec,
    env: Option<&BaseStreamEnv>,
    facts: &[(Term, Letter, Term)],
    target: &Term,
) -> Result<Option<(Letter, Term)>, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    let spec = &checked;
    let mut session = StreamSession::new(spec, env, 100_000);
    for (t, l, s) in facts {
        if t != target {
            session.inject_fact(t.clone(), l.clone(), s.clone());
        }
    }
    match session.evaluate(target, 0) {
        Ok(()) => Ok(session.entry_value(target)),
        Err(Halt::NoExtension(_)) | Err(Halt::FuelExhausted(_)) => Ok(None),
        Err(Halt::Error(e)) => Err(e),
    }
}
