//! Rule specifications: AST, validation, the textual DSL, and the
//! GSOS/coGSOS format classifier.
//!
//! A [`Spec`] fixes a behavior kind (deterministic streams or finitely
//! branching LTSs), a finite alphabet, a signature, and a list of inference
//! rules. Rules may use label metavariables that range over the whole
//! alphabet; [`ground_rules`] expands them. Validation enforces the scoping
//! discipline (premise sources are argument variables or earlier premise
//! targets, targets are fresh) and the stream-specific restrictions (no
//! negative premises, at most one positive premise per source).

mod classify;
mod functionality;
mod parse;

pub use classify::{classify_rule, classify_spec, FormatClass, FormatReport, SpecVerdict};
pub use functionality::{check_functionality, FunctionalityIssue, FunctionalityReport, Severity};
pub use parse::{parse_spec, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::Letter;
use crate::term::{Signature, Sym, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Stream,
    Lts,
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::Stream => f.write_str("stream"),
            Behavior::Lts => f.write_str("lts"),
        }
    }
}

/// A literal letter or a metavariable ranging over the alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelExpr {
    Lit(Letter),
    Var(Sym),
}

impl LabelExpr {
    pub fn as_lit(&self) -> Option<&Letter> {
        match self {
            LabelExpr::Lit(l) => Some(l),
            LabelExpr::Var(_) => None,
        }
    }
}

impl fmt::Display for LabelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelExpr::Lit(l) => write!(f, "{l}"),
            LabelExpr::Var(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Premise {
    /// `x -L-> y`: the behavior of `x` makes an `L` step to `y`.
    Pos { source: Sym, label: LabelExpr, target: Sym },
    /// `x -L|`: `x` has no `L`-labeled transition.
    NegLabel { source: Sym, label: LabelExpr },
    /// `x -|`: `x` has no transition at all.
    NegAll { source: Sym },
}

impl Premise {
    pub fn source(&self) -> &Sym {
        match self {
            Premise::Pos { source, .. }
            | Premise::NegLabel { source, .. }
            | Premise::NegAll { source } => source,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Premise::Pos { .. })
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Premise::Pos { source, label, target } => write!(f, "{source} -{label}-> {target}"),
            Premise::NegLabel { source, label } => write!(f, "{source} -{label}|"),
            Premise::NegAll { source } => write!(f, "{source} -|"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub head_op: Sym,
    pub arg_vars: Vec<Sym>,
    pub premises: Vec<Premise>,
    pub concl_label: LabelExpr,
    pub concl_target: Term,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.head_op)?;
        if !self.arg_vars.is_empty() {
            write!(f, "(")?;
            for (i, v) in self.arg_vars.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, ")")?;
        }
        if self.premises.is_empty() {
            write!(f, " => ")?;
        } else {
            write!(f, ": ")?;
            for (i, p) in self.premises.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, " => ")?;
        }
        write!(f, "{} -> {}", self.concl_label, self.concl_target)
    }
}

impl Rule {
    /// Variables in scope: argument variables plus positive-premise targets.
    pub fn scope(&self) -> BTreeSet<Sym> {
        let mut s: BTreeSet<Sym> = self.arg_vars.iter().cloned().collect();
        for p in &self.premises {
            if let Premise::Pos { target, .. } = p {
                s.insert(target.clone());
            }
        }
        s
    }

    /// Label metavariables of the rule, in first-use order.
    pub fn label_vars(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        let mut push = |l: &LabelExpr| {
            if let LabelExpr::Var(v) = l {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        for p in &self.premises {
            match p {
                Premise::Pos { label, .. } | Premise::NegLabel { label, .. } => push(label),
                Premise::NegAll { .. } => {}
            }
        }
        push(&self.concl_label);
        out
    }

    /// Positive-premise chain starting at `root`: the labels along the unique
    /// path of positive premises rooted at that variable. Only meaningful for
    /// chain-shaped rules (at most one positive premise per source).
    pub fn chain_labels(&self, root: &Sym) -> Vec<LabelExpr> {
        let mut labels = Vec::new();
        let mut at = root.clone();
        loop {
            let next = self.premises.iter().find_map(|p| match p {
                Premise::Pos { source, label, target } if *source == at => {
                    Some((label.clone(), target.clone()))
                }
                _ => None,
            });
            match next {
                Some((l, t)) => {
                    labels.push(l);
                    at = t;
                }
                None => break,
            }
        }
        labels
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spec {
    pub behavior: Behavior,
    pub alphabet: Vec<Letter>,
    pub start_letter: Option<Letter>,
    pub signature: Signature,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("rule {rule}: head operation `{op}` is not in the signature")]
    UnknownHeadOp { rule: usize, op: Sym },
    #[error("rule {rule}: head `{op}` has arity {expected}, rule binds {got} argument variables")]
    HeadArity { rule: usize, op: Sym, expected: usize, got: usize },
    #[error("rule {rule}: duplicate argument variable `{var}`")]
    DuplicateArgVar { rule: usize, var: Sym },
    #[error("rule {rule}: premise source `{var}` is not an argument variable or an earlier premise target")]
    UnscopedSource { rule: usize, var: Sym },
    #[error("rule {rule}: premise target `{var}` is not fresh")]
    NonFreshTarget { rule: usize, var: Sym },
    #[error("rule {rule}: negative premise in a stream specification")]
    NegativeInStream { rule: usize },
    #[error("rule {rule}: two positive premises on `{var}` in a stream rule")]
    DuplicateStreamPremise { rule: usize, var: Sym },
    #[error("rule {rule}: letter `{letter}` is not in the alphabet")]
    UnknownLetter { rule: usize, letter: Letter },
    #[error("rule {rule}: conclusion target uses out-of-scope variable `{var}`")]
    UnscopedConclusionVar { rule: usize, var: Sym },
    #[error("rule {rule}: conclusion target is malformed: {source}")]
    BadConclusion {
        rule: usize,
        source: crate::term::TermError,
    },
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("duplicate letter `{0}` in alphabet")]
    DuplicateLetter(Letter),
    #[error("start letter `{0}` is not in the alphabet")]
    UnknownStartLetter(Letter),
}

impl Spec {
    /// Validates the whole specification and normalizes premise order of
    /// every rule to root-to-leaf chain order.
    pub fn validate(&mut self) -> Result<(), SpecError> {
        if self.alphabet.is_empty() {
            return Err(SpecError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for l in &self.alphabet {
            if !seen.insert(l.clone()) {
                return Err(SpecError::DuplicateLetter(l.clone()));
            }
        }
        if let Some(s) = &self.start_letter {
            if !seen.contains(s) {
                return Err(SpecError::UnknownStartLetter(s.clone()));
            }
        }
        let rules = std::mem::take(&mut self.rules);
        let mut normalized = Vec::with_capacity(rules.len());
        for (idx, rule) in rules.into_iter().enumerate() {
            normalized.push(self.validate_rule(idx, rule)?);
        }
        self.rules = normalized;
        Ok(())
    }

    fn check_label(&self, rule: usize, label: &LabelExpr) -> Result<(), SpecError> {
        if let LabelExpr::Lit(l) = label {
            if !self.alphabet.contains(l) {
                return Err(SpecError::UnknownLetter { rule, letter: l.clone() });
            }
        }
        Ok(())
    }

    fn validate_rule(&self, idx: usize, rule: Rule) -> Result<Rule, SpecError> {
        let arity = self
            .signature
            .arity(&rule.head_op)
            .ok_or_else(|| SpecError::UnknownHeadOp { rule: idx, op: rule.head_op.clone() })?;
        if arity != rule.arg_vars.len() {
            return Err(SpecError::HeadArity {
                rule: idx,
                op: rule.head_op.clone(),
                expected: arity,
                got: rule.arg_vars.len(),
            });
        }
        let mut in_scope: BTreeSet<Sym> = BTreeSet::new();
        for v in &rule.arg_vars {
            if !in_scope.insert(v.clone()) {
                return Err(SpecError::DuplicateArgVar { rule: idx, var: v.clone() });
            }
        }
        let mut pos_sources: BTreeSet<Sym> = BTreeSet::new();
        for p in &rule.premises {
            if !in_scope.contains(p.source()) {
                return Err(SpecError::UnscopedSource { rule: idx, var: p.source().clone() });
            }
            match p {
                Premise::Pos { source, label, target } => {
                    self.check_label(idx, label)?;
                    if in_scope.contains(target) {
                        return Err(SpecError::NonFreshTarget { rule: idx, var: target.clone() });
                    }
                    if self.behavior == Behavior::Stream && !pos_sources.insert(source.clone()) {
                        return Err(SpecError::DuplicateStreamPremise {
                            rule: idx,
                            var: source.clone(),
                        });
                    }
                    in_scope.insert(target.clone());
                }
                Premise::NegLabel { label, .. } => {
                    if self.behavior == Behavior::Stream {
                        return Err(SpecError::NegativeInStream { rule: idx });
                    }
                    self.check_label(idx, label)?;
                }
                Premise::NegAll { .. } => {
                    if self.behavior == Behavior::Stream {
                        return Err(SpecError::NegativeInStream { rule: idx });
                    }
                }
            }
        }
        self.check_label(idx, &rule.concl_label)?;
        rule.concl_target
            .well_formed(&self.signature)
            .map_err(|source| SpecError::BadConclusion { rule: idx, source })?;
        for v in rule.concl_target.vars() {
            if !in_scope.contains(&v) {
                return Err(SpecError::UnscopedConclusionVar { rule: idx, var: v });
            }
        }
        Ok(normalize_premises(rule))
    }

    /// All rules whose head is `op`.
    pub fn rules_for<'a>(&'a self, op: &'a Sym) -> impl Iterator<Item = (usize, &'a Rule)> + 'a {
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| &r.head_op == op)
    }

    /// Maximal lookahead depth (longest positive chain from any argument
    /// variable) over the rules of `op`.
    pub fn max_lookahead(&self, op: &Sym) -> usize {
        self.rules_for(op)
            .map(|(_, r)| {
                r.arg_vars
                    .iter()
                    .map(|v| r.chain_labels(v).len())
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Renders the specification in the DSL accepted by [`parse_spec`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("behavior {}\n", self.behavior));
        let letters: Vec<String> = self.alphabet.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!("alphabet {}\n", letters.join(", ")));
        if let Some(s) = &self.start_letter {
            out.push_str(&format!("start-letter {s}\n"));
        }
        for (op, arity) in self.signature.operations() {
            out.push_str(&format!("op {op}/{arity}\n"));
        }
        for r in &self.rules {
            out.push_str(&format!("{r}\n"));
        }
        out
    }
}

/// Reorders premises into per-argument chains, root to leaf, with negative
/// premises attached right after the variable they test becomes available.
fn normalize_premises(rule: Rule) -> Rule {
    fn emit(var: &Sym, remaining: &mut Vec<Option<Premise>>, ordered: &mut Vec<Premise>) {
        // negatives on this variable first, in input order
        for slot in remaining.iter_mut() {
            if let Some(p) = slot {
                if !p.is_positive() && p.source() == var {
                    ordered.push(slot.take().unwrap());
                }
            }
        }
        // then each positive premise out of it, depth first along its chain
        let mut i = 0;
        while i < remaining.len() {
            if let Some(Premise::Pos { source, target, .. }) = remaining[i].as_ref() {
                if source == var {
                    let t = target.clone();
                    ordered.push(remaining[i].take().unwrap());
                    emit(&t, remaining, ordered);
                }
            }
            i += 1;
        }
    }
    let mut remaining: Vec<Option<Premise>> = rule.premises.iter().cloned().map(Some).collect();
    let mut ordered = Vec::with_capacity(remaining.len());
    for var in &rule.arg_vars {
        emit(var, &mut remaining, &mut ordered);
    }
    // scoping validation guarantees everything is reachable
    debug_assert!(remaining.iter().all(Option::is_none));
    Rule { premises: ordered, ..rule }
}

/// Expands every label metavariable of every rule of `op` over the alphabet,
/// consistently within each rule. Rules without metavariables are returned
/// as they are.
pub fn ground_rules(spec: &Spec, op: &Sym) -> Vec<Rule> {
    let mut out = Vec::new();
    for (_, rule) in spec.rules_for(op) {
        out.extend(ground_rule(spec, rule));
    }
    out
}

/// Ground instances of a single rule; see [`ground_rules`].
pub fn ground_rule(spec: &Spec, rule: &Rule) -> Vec<Rule> {
    let vars = rule.label_vars();
    if vars.is_empty() {
        return vec![rule.clone()];
    }
    let mut instances = Vec::new();
    let mut assignment: BTreeMap<Sym, Letter> = BTreeMap::new();
    fill(spec, rule, &vars, 0, &mut assignment, &mut instances);
    instances
}

fn fill(
    spec: &Spec,
    rule: &Rule,
    vars: &[Sym],
    i: usize,
    assignment: &mut BTreeMap<Sym, Letter>,
    out: &mut Vec<Rule>,
) {
    if i == vars.len() {
        out.push(apply_labels(rule, assignment));
        return;
    }
    for letter in &spec.alphabet {
        assignment.insert(vars[i].clone(), letter.clone());
        fill(spec, rule, vars, i + 1, assignment, out);
    }
    assignment.remove(&vars[i]);
}

fn apply_labels(rule: &Rule, assignment: &BTreeMap<Sym, Letter>) -> Rule {
    let subst = |l: &LabelExpr| match l {
        LabelExpr::Lit(x) => LabelExpr::Lit(x.clone()),
        LabelExpr::Var(v) => LabelExpr::Lit(
            assignment
                .get(v)
                .expect("assignment covers all label vars")
                .clone(),
        ),
    };
    Rule {
        head_op: rule.head_op.clone(),
        arg_vars: rule.arg_vars.clone(),
        premises: rule
            .premises
            .iter()
            .map(|p| match p {
                Premise::Pos { source, label, target } => Premise::Pos {
                    source: source.clone(),
                    label: subst(label),
                    target: target.clone(),
                },
                Premise::NegLabel { source, label } => Premise::NegLabel {
                    source: source.clone(),
                    label: subst(label),
                },
                Premise::NegAll { source } => Premise::NegAll { source: source.clone() },
            })
            .collect(),
        concl_label: subst(&rule.concl_label),
        concl_target: rule.concl_target.clone(),
    }
}
