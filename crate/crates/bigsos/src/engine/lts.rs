//! LTS unfolding: successor sets under the supported-model reading.
//!
//! Every term owns a successor set; an assignment is acceptable when each
//! included transition is derivable from the assignment and each derivable
//! transition is included. Derivations whose premises walk back into the set
//! being defined are split three ways:
//!
//! - derivations not touching the set at all are forced unconditionally;
//! - a derivation guarded by `y -|` on the defined term fires exactly when
//!   the set is empty; if any such derivation exists, the empty set is not
//!   supported ("forced nonempty when assumed empty");
//! - a derivation consuming an element `(b, z)` of the defined set is kept
//!   as a template; when every template nests its consumed successor under
//!   at least one operation, a nonempty set would need elements of
//!   unbounded depth, so none of its minimal elements can be derivable.
//!
//! When both the empty and every nonempty assignment are refuted, the entry
//! is a clash and extension is impossible. Self-references outside these
//! patterns (negative label tests on the defined term, chains through a
//! consumed element, several self-touches in one derivation) are reported as
//! Unknown rather than guessed at.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::behavior::{Letter, TreePrefix};
use crate::rules::{ground_rules, Behavior, LabelExpr, Premise, Rule, Spec};
use crate::term::{Sym, Term};

use super::{
    AmbiguityWitness, ConsistentData, EngineError, TraceStep, Verdict, Witness,
};

type SuccSet = BTreeSet<(Letter, Term)>;

#[derive(Debug, Clone)]
enum Entry {
    InProgress,
    Committed(SuccSet),
    Stuck,
}

#[derive(Debug)]
enum Halt {
    NoExtension(Box<Witness>),
    FuelExhausted(String),
    Undecided(String),
    Error(EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum BindVal {
    Ground(Term),
    /// The target of a positive premise read off the entry being defined.
    Hole,
}

#[derive(Debug, Clone, Default)]
struct Flags {
    /// `Some((needed label, hole variable))` after a positive self-read.
    self_pos: Option<(Letter, Sym)>,
    self_negall: bool,
}

/// A derivation consuming a hypothetical element `(needs, z)` of the entry
/// being defined.
#[derive(Debug, Clone)]
struct Template {
    needs: Letter,
    out_label: Letter,
    /// Conclusion target with the consumed element as `Var(hole)`.
    target: Term,
    hole: Sym,
    rule: Rule,
}

impl Template {
    /// The consumed successor ends up strictly deeper in the output.
    fn deepening(&self) -> bool {
        self.target != Term::Var(self.hole.clone()) && self.target.contains_var(&self.hole)
    }

    fn instantiate(&self, z: &Term) -> Term {
        self.target
            .subst(&|v| {
                if *v == self.hole {
                    Some(z.clone())
                } else {
                    Some(Term::Var(v.clone()))
                }
            })
            .expect("total substitution")
    }
}

#[derive(Debug, Default)]
struct Harvest {
    independent: Vec<(Letter, Term, Rule)>,
    neg_self: Vec<(Letter, Term, Rule)>,
    templates: Vec<Template>,
    pending: bool,
    undecided: Option<String>,
}

const RECURSION_LIMIT: usize = 4096;
const CLOSURE_CAP: usize = 256;

pub(crate) struct LtsSession<'s> {
    spec: &'s Spec,
    ground: HashMap<Sym, Vec<Rule>>,
    entries: HashMap<Term, Entry>,
    levels: HashMap<Term, usize>,
    trace: Vec<TraceStep>,
    fuel_left: u64,
    fuel_limit: u64,
    depth: usize,
}

impl<'s> LtsSession<'s> {
    pub(crate) fn new(spec: &'s Spec, fuel: u64) -> Self {
        LtsSession {
            spec,
            ground: HashMap::new(),
            entries: HashMap::new(),
            levels: HashMap::new(),
            trace: Vec::new(),
            fuel_left: fuel,
            fuel_limit: fuel,
            depth: 0,
        }
    }

    pub(crate) fn inject_fact(&mut self, term: Term, succ: SuccSet) {
        self.entries.insert(term, Entry::Committed(succ));
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

    fn committed(&self, t: &Term) -> Option<&SuccSet> {
        match self.entries.get(t) {
            Some(Entry::Committed(s)) => Some(s),
            _ => None,
        }
    }

    fn demand(&mut self, t: &Term, level: usize) -> Result<(), Halt> {
        if self.entries.contains_key(t) {
            return Ok(());
        }
        self.evaluate(t, level)
    }

    fn evaluate(&mut self, t: &Term, level: usize) -> Result<(), Halt> {
        if let Some(Entry::Committed(_)) = self.entries.get(t) {
            return Ok(());
        }
        if self.fuel_left == 0 {
            return Err(Halt::FuelExhausted("propagation budget exhausted".into()));
        }
        self.fuel_left -= 1;
        if self.depth >= RECURSION_LIMIT {
            return Err(Halt::FuelExhausted("lookahead recursion limit reached".into()));
        }
        self.levels.entry(t.clone()).or_insert(level);

        let op = match t {
            Term::Var(v) => {
                return Err(Halt::Error(EngineError::UnboundColor(v.clone())));
            }
            Term::App(op, _) => op.clone(),
        };
        let rules = self.ground_for(&op);
        self.entries.insert(t.clone(), Entry::InProgress);
        self.depth += 1;
        let mut harvested = Harvest::default();
        let mut halted = None;
        for rule in &rules {
            if let Err(h) = self.match_rule(t, rule, level, &mut harvested) {
                halted = Some(h);
                break;
            }
            if harvested.pending {
                break;
            }
        }
        self.depth -= 1;
        if let Some(h) = halted {
            return Err(h);
        }
        self.settle(t, level, harvested)
    }

    fn match_rule(
        &mut self,
        t: &Term,
        rule: &Rule,
        level: usize,
        out: &mut Harvest,
    ) -> Result<(), Halt> {
        let args = match t {
            Term::App(_, args) => args,
            Term::Var(_) => unreachable!("variables rejected before matching"),
        };
        let bind: BTreeMap<Sym, BindVal> = rule
            .arg_vars
            .iter()
            .cloned()
            .zip(args.iter().cloned().map(BindVal::Ground))
            .collect();
        self.match_premises(t, rule, &rule.premises, bind, Flags::default(), level, out)
    }

    #[allow(clippy::too_many_arguments)]
    fn match_premises(
        &mut self,
        t: &Term,
        rule: &Rule,
        premises: &[Premise],
        bind: BTreeMap<Sym, BindVal>,
        flags: Flags,
        level: usize,
        out: &mut Harvest,
    ) -> Result<(), Halt> {
        if out.pending {
            return Ok(());
        }
        let Some((premise, rest)) = premises.split_first() else {
            return self.complete_assignment(rule, bind, flags, out);
        };
        let lit = |label: &LabelExpr| -> Result<Letter, Halt> {
            match label {
                LabelExpr::Lit(l) => Ok(l.clone()),
                LabelExpr::Var(v) => Err(Halt::Error(EngineError::InvalidSpec(format!(
                    "unexpanded label metavariable `{v}`"
                )))),
            }
        };
        match premise {
            Premise::Pos { source, label, target } => {
                let want = lit(label)?;
                match &bind[source] {
                    BindVal::Hole => {
                        out.undecided =
                            Some("premise chain continues past a hypothetical successor".into());
                        Ok(())
                    }
                    BindVal::Ground(w) if w == t => {
                        if flags.self_pos.is_some() || flags.self_negall {
                            out.undecided =
                                Some("derivation touches the defined set twice".into());
                            return Ok(());
                        }
                        let mut next = bind.clone();
                        next.insert(target.clone(), BindVal::Hole);
                        let flags = Flags {
                            self_pos: Some((want, target.clone())),
                            self_negall: false,
                        };
                        self.match_premises(t, rule, rest, next, flags, level, out)
                    }
                    BindVal::Ground(w) => {
                        let w = w.clone();
                        self.demand(&w, level + 1)?;
                        let succs = match self.entries.get(&w) {
                            Some(Entry::Committed(s)) => s.clone(),
                            _ => {
                                out.pending = true;
                                return Ok(());
                            }
                        };
                        for (l, u) in &succs {
                            if *l == want {
                                let mut next = bind.clone();
                                next.insert(target.clone(), BindVal::Ground(u.clone()));
                                self.match_premises(
                                    t,
                                    rule,
                                    rest,
                                    next,
                                    flags.clone(),
                                    level,
                                    out,
                                )?;
                            }
                        }
                        Ok(())
                    }
                }
            }
            Premise::NegAll { source } => match &bind[source] {
                BindVal::Hole => {
                    out.undecided = Some("negative test on a hypothetical successor".into());
                    Ok(())
                }
                BindVal::Ground(w) if w == t => {
                    if flags.self_pos.is_some() || flags.self_negall {
                        out.undecided = Some("derivation touches the defined set twice".into());
                        return Ok(());
                    }
                    let flags = Flags { self_pos: None, self_negall: true };
                    self.match_premises(t, rule, rest, bind, flags, level, out)
                }
                BindVal::Ground(w) => {
                    let w = w.clone();
                    self.demand(&w, level + 1)?;
                    match self.entries.get(&w) {
                        Some(Entry::Committed(s)) => {
                            if s.is_empty() {
                                self.match_premises(t, rule, rest, bind, flags, level, out)
                            } else {
                                Ok(())
                            }
                        }
                        _ => {
                            out.pending = true;
                            Ok(())
                        }
                    }
                }
            },
            Premise::NegLabel { source, label } => {
                let want = lit(label)?;
                match &bind[source] {
                    BindVal::Hole => {
                        out.undecided = Some("negative test on a hypothetical successor".into());
                        Ok(())
                    }
                    BindVal::Ground(w) if w == t => {
                        // outside the handled self-reference patterns
                        out.undecided =
                            Some("label-specific negative test on the defined set".into());
                        Ok(())
                    }
                    BindVal::Ground(w) => {
                        let w = w.clone();
                        self.demand(&w, level + 1)?;
                        match self.entries.get(&w) {
                            Some(Entry::Committed(s)) => {
                                if s.iter().all(|(l, _)| *l != want) {
                                    self.match_premises(t, rule, rest, bind, flags, level, out)
                                } else {
                                    Ok(())
                                }
                            }
                            _ => {
                                out.pending = true;
                                Ok(())
                            }
                        }
                    }
                }
            }
        }
    }

    fn complete_assignment(
        &mut self,
        rule: &Rule,
        bind: BTreeMap<Sym, BindVal>,
        flags: Flags,
        out: &mut Harvest,
    ) -> Result<(), Halt> {
        let out_label = match &rule.concl_label {
            LabelExpr::Lit(l) => l.clone(),
            LabelExpr::Var(v) => {
                return Err(Halt::Error(EngineError::InvalidSpec(format!(
                    "unexpanded label metavariable `{v}`"
                ))))
            }
        };
        let hole_marker = Sym::from("•");
        let target = rule
            .concl_target
            .subst(&|v| match bind.get(v) {
                Some(BindVal::Ground(t)) => Some(t.clone()),
                Some(BindVal::Hole) => Some(Term::Var(hole_marker.clone())),
                None => None,
            })
            .map_err(|e| Halt::Error(EngineError::InvalidSpec(e.to_string())))?;
        match (&flags.self_pos, flags.self_negall) {
            (None, false) => out.independent.push((out_label, target, rule.clone())),
            (None, true) => out.neg_self.push((out_label, target, rule.clone())),
            (Some((needs, _)), false) => out.templates.push(Template {
                needs: needs.clone(),
                out_label,
                target,
                hole: hole_marker,
                rule: rule.clone(),
            }),
            // needs its own set empty and nonempty at once: never satisfiable
            (Some(_), true) => {}
        }
        Ok(())
    }

    fn settle(&mut self, t: &Term, level: usize, got: Harvest) -> Result<(), Halt> {
        if got.pending {
            self.entries.insert(t.clone(), Entry::Stuck);
            return Ok(());
        }
        if let Some(reason) = got.undecided {
            return Err(Halt::Undecided(format!(
                "successor set of {t} is self-referential beyond the supported patterns: {reason}"
            )));
        }

        let mut derived: Vec<(Letter, Term, Rule)> = got.independent.clone();
        if !derived.is_empty() {
            // the set is definitely nonempty; close under the templates
            let mut set: SuccSet = derived.iter().map(|(l, u, _)| (l.clone(), u.clone())).collect();
            loop {
                let mut added = Vec::new();
                for template in &got.templates {
                    for (l, z) in &set {
                        if *l == template.needs {
                            let u = template.instantiate(z);
                            if !set.contains(&(template.out_label.clone(), u.clone())) {
                                added.push((template.out_label.clone(), u, template.rule.clone()));
                            }
                        }
                    }
                }
                if added.is_empty() {
                    break;
                }
                for (l, u, r) in added {
                    set.insert((l.clone(), u.clone()));
                    derived.push((l, u, r));
                }
                if set.len() > CLOSURE_CAP {
                    return Err(Halt::Undecided(format!(
                        "successor closure of {t} exceeded {CLOSURE_CAP} elements"
                    )));
                }
            }
            if got.templates.iter().any(|tp| !tp.deepening()) {
                // a non-deepening self-consumer can support additional
                // fixpoints beyond this least one
                self.ambiguous_commit(t);
                return Ok(());
            }
            self.commit(t, derived);
            return Ok(());
        }

        let all_deepening = got.templates.iter().all(Template::deepening);
        if got.neg_self.is_empty() {
            if got.templates.is_empty() || all_deepening {
                // empty is supported, and deepening templates admit no
                // nonempty fixpoint
                self.commit(t, Vec::new());
                Ok(())
            } else {
                self.ambiguous_commit(t);
                Ok(())
            }
        } else if all_deepening {
            // assumed empty: a guard fires and forces an element; assumed
            // nonempty: a minimal element would need a strictly deeper one
            let depth = self.levels.get(t).copied().unwrap_or(level) + 1;
            let forcing_rule = got.neg_self[0].2.clone();
            let deepening_rules = got.templates.iter().map(|tp| tp.rule.clone()).collect();
            Err(Halt::NoExtension(Box::new(Witness::EmptyNonemptyClash {
                term: t.clone(),
                depth,
                forcing_rule,
                deepening_rules,
                trace: self.trace.clone(),
            })))
        } else {
            Err(Halt::Undecided(format!(
                "empty successor set of {t} is refuted but a non-deepening self-derivation remains"
            )))
        }
    }

    /// Marks the entry stuck so the driver reports ambiguity for it.
    fn ambiguous_commit(&mut self, t: &Term) {
        self.entries.insert(t.clone(), Entry::Stuck);
    }

    fn commit(&mut self, t: &Term, derived: Vec<(Letter, Term, Rule)>) {
        let mut set = SuccSet::new();
        for (l, u, rule) in derived {
            if set.insert((l.clone(), u.clone())) {
                self.trace.push(TraceStep { term: t.clone(), rule, label: l, succ: u });
            }
        }
        self.entries.insert(t.clone(), Entry::Committed(set));
    }

    fn repass(&mut self) -> Result<bool, Halt> {
        let stuck: Vec<(Term, usize)> = self
            .entries
            .iter()
            .filter(|(_, e)| matches!(e, Entry::Stuck))
            .map(|(t, _)| (t.clone(), self.levels.get(t).copied().unwrap_or(0)))
            .collect();
        let before = self.commit_count();
        for (t, level) in stuck {
            self.evaluate(&t, level)?;
        }
        Ok(self.commit_count() > before)
    }

    fn commit_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| matches!(e, Entry::Committed(_)))
            .count()
    }

    fn ensure_committed(&mut self, t: &Term, level: usize) -> Result<Option<AmbiguityWitness>, Halt> {
        loop {
            match self.entries.get(t) {
                Some(Entry::Committed(_)) => return Ok(None),
                Some(Entry::Stuck) => {
                    self.evaluate(t, level)?;
                    if matches!(self.entries.get(t), Some(Entry::Stuck)) && !self.repass()? {
                        return Ok(Some(AmbiguityWitness {
                            term: t.clone(),
                            position: level + 1,
                            candidates: vec![
                                "successor set not forced after propagation saturated".into(),
                            ],
                        }));
                    }
                }
                Some(Entry::InProgress) => unreachable!("driver never sees in-progress entries"),
                None => self.evaluate(t, level)?,
            }
        }
    }

    fn tree_of(&self, t: &Term, budget: usize) -> TreePrefix<Term> {
        if budget == 0 {
            return TreePrefix::cut(t.clone());
        }
        match self.committed(t) {
            None => TreePrefix::cut(t.clone()),
            Some(set) => {
                let children = set
                    .iter()
                    .map(|(l, u)| (l.clone(), self.tree_of(u, budget - 1)))
                    .collect();
                TreePrefix::known(t.clone(), children, budget)
            }
        }
    }

    pub(crate) fn facts(&self) -> Vec<(Term, SuccSet)> {
        let mut out: Vec<(Term, SuccSet)> = self
            .entries
            .iter()
            .filter_map(|(t, e)| match e {
                Entry::Committed(s) => Some((t.clone(), s.clone())),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }
}

/// Unfolds closed seed terms into depth-`depth` canonical tree prefixes.
pub fn unfold_lts(
    spec: &Spec,
    seeds: &[Term],
    depth: usize,
    fuel: u64,
) -> Result<Verdict, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    if checked.behavior != Behavior::Lts {
        return Err(EngineError::WrongBehavior { expected: Behavior::Lts });
    }
    let spec = &checked;
    let mut session = LtsSession::new(spec, fuel);
    for seed in seeds {
        let mut frontier: Vec<Term> = vec![seed.clone()];
        for level in 0..depth {
            let mut next = BTreeSet::new();
            for t in &frontier {
                match session.ensure_committed(t, level) {
                    Ok(None) => {}
                    Ok(Some(witness)) => return Ok(Verdict::Ambiguous { witness }),
                    Err(Halt::NoExtension(witness)) => {
                        return Ok(Verdict::NoExtension { witness: *witness })
                    }
                    Err(Halt::FuelExhausted(reason)) => {
                        return Ok(Verdict::Unknown { fuel_spent: session.fuel_spent(), reason })
                    }
                    Err(Halt::Undecided(reason)) => {
                        return Ok(Verdict::Unknown { fuel_spent: session.fuel_spent(), reason })
                    }
                    Err(Halt::Error(e)) => return Err(e),
                }
                for (_, u) in session.committed(t).expect("committed above").iter() {
                    next.insert(u.clone());
                }
            }
            frontier = next.into_iter().collect();
        }
    }
    let mut trees = BTreeMap::new();
    for seed in seeds {
        trees.insert(seed.clone(), session.tree_of(seed, depth).canon(depth));
    }
    Ok(Verdict::ConsistentPrefix {
        depth,
        data: ConsistentData::Lts { trees, facts: session.facts() },
    })
}

/// Re-derives the successor set of `target` from the other recorded facts.
pub fn lts_reforce(
    spec: &Spec,
    facts: &[(Term, SuccSet)],
    target: &Term,
) -> Result<Option<SuccSet>, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    let spec = &checked;
    let mut session = LtsSession::new(spec, 100_000);
    for (t, s) in facts {
        if t != target {
            session.inject_fact(t.clone(), s.clone());
        }
    }
    match session.evaluate(target, 0) {
        Ok(()) => Ok(session.committed(target).cloned()),
        Err(Halt::NoExtension(_)) | Err(Halt::FuelExhausted(_)) | Err(Halt::Undecided(_)) => {
            Ok(None)
        }
        Err(Halt::Error(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qm::testutil::{immediate_halt_machine, loop_machine};
    use crate::reduction::{qm_to_lts_spec, qm_to_stream_spec};
    use crate::rules::parse_spec;

    fn spec(text: &str) -> Spec {
        let mut s = parse_spec(text).unwrap();
        s.validate().unwrap();
        s
    }

    fn c() -> Term {
        Term::constant("C")
    }

    #[test]
    fn lone_constant_rule_builds_a_two_node_tree() {
        let s = spec(
            "behavior lts\nalphabet $\nop C/0\nop q1/1\nrule C => $ -> q1(C)\n",
        );
        let v = unfold_lts(&s, &[c()], 3, 1000).unwrap();
        match v {
            Verdict::ConsistentPrefix { data: ConsistentData::Lts { trees, facts }, .. } => {
                let tree = &trees[&c()];
                assert_eq!(tree.children.len(), 1);
                assert_eq!(tree.children[0].0, Letter::from("$"));
                // q1(C) has no rules, so its successor set is empty and supported
                let q1c = Term::parse(&s.signature, "q1(C)").unwrap();
                assert!(facts.iter().any(|(t, s)| t == &q1c && s.is_empty()));
                assert!(tree.children[0].1.children.is_empty());
                assert!(tree.children[0].1.budget > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn looping_machine_unfolds_to_a_degenerate_tree() {
        let out = qm_to_lts_spec(&loop_machine()).unwrap();
        let v = unfold_lts(&out.spec, &[c()], 5, 10_000).unwrap();
        match v {
            Verdict::ConsistentPrefix { data: ConsistentData::Lts { trees, .. }, .. } => {
                let tree = &trees[&c()];
                assert!(tree.max_branching() <= 1, "{tree:?}");
                // the degenerate path mirrors the stream prefix
                let stream = qm_to_stream_spec(&loop_machine()).unwrap();
                let sv =
                    super::super::stream::unfold_stream(&stream.spec, &[c()], 5, 10_000).unwrap();
                let prefix = match sv {
                    Verdict::ConsistentPrefix {
                        data: ConsistentData::Stream { prefixes, .. },
                        ..
                    } => prefixes[&c()].clone(),
                    other => panic!("{other:?}"),
                };
                let mut node = tree;
                for i in 0..5 {
                    assert_eq!(&node.node, prefix.node(i).unwrap());
                    if i < 4 {
                        assert_eq!(node.children.len(), 1);
                        assert_eq!(&node.children[0].0, &prefix.steps[i].1);
                        node = &node.children[0].1;
                    }
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn halting_machine_clashes() {
        let out = qm_to_lts_spec(&immediate_halt_machine()).unwrap();
        let v = unfold_lts(&out.spec, &[c()], 4, 10_000).unwrap();
        match v {
            Verdict::NoExtension {
                witness: Witness::EmptyNonemptyClash { term, depth, forcing_rule, deepening_rules, .. },
            } => {
                assert_eq!(term.to_string(), "q1(C)");
                assert_eq!(depth, 2);
                assert!(forcing_rule.to_string().contains("-|"), "{forcing_rule}");
                assert!(!deepening_rules.is_empty());
            }
            other => panic!("expected clash, got {other:?}"),
        }
    }

    #[test]
    fn dead_argument_gives_empty_supported_set() {
        // q(x) needs a transition of x; u has none, so q(u) has none either
        let s = spec(
            "behavior lts\nalphabet a\nop u/0\nop q/1\n\
             rule q(x): x -a-> y => a -> q(y)\n",
        );
        let seed = Term::parse(&s.signature, "q(u)").unwrap();
        let v = unfold_lts(&s, std::slice::from_ref(&seed), 2, 1000).unwrap();
        match v {
            Verdict::ConsistentPrefix { data: ConsistentData::Lts { trees, .. }, .. } => {
                assert!(trees[&seed].children.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn branching_rules_branch() {
        let s = spec(
            "behavior lts\nalphabet a, b\nop C/0\n\
             rule C => a -> C\n\
             rule C => b -> C\n",
        );
        let v = unfold_lts(&s, &[c()], 2, 1000).unwrap();
        match v {
            Verdict::ConsistentPrefix { data: ConsistentData::Lts { trees, .. }, .. } => {
                assert_eq!(trees[&c()].children.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_deepening_self_consumer_is_not_forced() {
        // q(x): x -a-> y, y -b-> z => b -> z  read over trees: with a dead
        // argument the set may be empty, but {(b, u)} would also support
        // itself; the engine must not silently pick one
        let s = spec(
            "behavior lts\nalphabet a, b\nop C/0\nop q/1\n\
             rule C => a -> q(C)\n\
             rule q(x): x -a-> y, y -b-> z => b -> z\n",
        );
        let seed = Term::parse(&s.signature, "q(C)").unwrap();
        let v = unfold_lts(&s, &[seed], 2, 1000).unwrap();
        assert!(
            matches!(v, Verdict::Ambiguous { .. }),
            "{v:?}"
        );
    }

    #[test]
    fn reforce_rebuilds_lts_entries() {
        let out = qm_to_lts_spec(&loop_machine()).unwrap();
        let v = unfold_lts(&out.spec, &[c()], 4, 10_000).unwrap();
        let facts = match &v {
            Verdict::ConsistentPrefix { data: ConsistentData::Lts { facts, .. }, .. } => {
                facts.clone()
            }
            other => panic!("{other:?}"),
        };
        for (t, set) in &facts {
            let got = lts_reforce(&out.spec, &facts, t).unwrap();
            assert_eq!(got.as_ref(), Some(set), "entry for {t}");
        }
    }
}
