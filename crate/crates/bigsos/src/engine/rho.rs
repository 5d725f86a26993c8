//! Direct one-step rule application on explicit behavior prefixes, and the
//! comparison of the engine's constructed prefixes against it.
//!
//! [`one_step_rho`] is deliberately independent of the constraint engine: it
//! matches ground rules against the supplied prefixes only. The extension
//! checker uses it as the reference point for the first transition of every
//! flat term (the restriction of a candidate behavior assignment to depth-1
//! terms and depth-1 behaviors must be exactly what the rules say).

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use thiserror::Error;

use crate::behavior::{Letter, StreamPrefix, TreePrefix};
use crate::rules::{ground_rules, Behavior, LabelExpr, Premise, Rule, Spec};
use crate::term::{Sym, Term};

use super::stream::unfold_stream;
use super::{ConsistentData, EngineError, Verdict};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RhoError {
    #[error("argument behavior is too short for the rule lookahead")]
    InsufficientDepth,
    #[error("argument count or behavior kind does not match the operation")]
    ArgumentMismatch,
    #[error("no rule derives a transition (stream behavior must be total)")]
    NoDerivation,
    #[error("{0} distinct transitions derived for a stream operation")]
    MultipleDerivations(usize),
    #[error("specification problem: {0}")]
    InvalidSpec(String),
}

/// An argument behavior handed to the law: a stream prefix or a tree prefix.
#[derive(Debug, Clone)]
pub enum ArgBehavior {
    Stream(StreamPrefix<Term>),
    Tree(TreePrefix<Term>),
}

/// Applies the rules of `op` once to the given argument behaviors and
/// returns every derivable (label, target) pair. Stream specifications must
/// derive exactly one pair; zero or several is an error.
pub fn one_step_rho(
    spec: &Spec,
    op: &Sym,
    args: &[ArgBehavior],
) -> Result<BTreeSet<(Letter, Term)>, RhoError> {
    let arity = spec
        .signature
        .arity(op)
        .ok_or_else(|| RhoError::InvalidSpec(format!("unknown operation `{op}`")))?;
    if arity != args.len() {
        return Err(RhoError::ArgumentMismatch);
    }
    let mut out = BTreeSet::new();
    match spec.behavior {
        Behavior::Stream => {
            let prefixes: Vec<&StreamPrefix<Term>> = args
                .iter()
                .map(|a| match a {
                    ArgBehavior::Stream(p) => Ok(p),
                    ArgBehavior::Tree(_) => Err(RhoError::ArgumentMismatch),
                })
                .collect::<Result<_, _>>()?;
            for rule in ground_rules(spec, op) {
                out.extend(stream_rule_step(&rule, &prefixes)?);
            }
            match out.len() {
                0 => Err(RhoError::NoDerivation),
                1 => Ok(out),
                k => Err(RhoError::MultipleDerivations(k)),
            }
        }
        Behavior::Lts => {
            let trees: Vec<&TreePrefix<Term>> = args
                .iter()
                .map(|a| match a {
                    ArgBehavior::Tree(t) => Ok(t),
                    ArgBehavior::Stream(_) => Err(RhoError::ArgumentMismatch),
                })
                .collect::<Result<_, _>>()?;
            for rule in ground_rules(spec, op) {
                lts_rule_step(&rule, &trees, &mut out)?;
            }
            Ok(out)
        }
    }
}

fn lit(label: &LabelExpr) -> Result<&Letter, RhoError> {
    match label {
        LabelExpr::Lit(l) => Ok(l),
        LabelExpr::Var(v) => Err(RhoError::InvalidSpec(format!(
            "unexpanded label metavariable `{v}`"
        ))),
    }
}

/// Positions in a stream prefix double as bindings: a variable is bound to a
/// (prefix, offset) pair and its color is the node there.
fn stream_rule_step(
    rule: &Rule,
    prefixes: &[&StreamPrefix<Term>],
) -> Result<BTreeSet<(Letter, Term)>, RhoError> {
    let mut bind: BTreeMap<Sym, (usize, usize)> = BTreeMap::new();
    for (i, v) in rule.arg_vars.iter().enumerate() {
        bind.insert(v.clone(), (i, 0));
    }
    for premise in &rule.premises {
        let Premise::Pos { source, label, target } = premise else {
            return Err(RhoError::InvalidSpec("negative premise in a stream rule".into()));
        };
        let (arg, pos) = bind[source];
        let p = prefixes[arg];
        if pos >= p.len() {
            return Err(RhoError::InsufficientDepth);
        }
        if &p.steps[pos].1 != lit(label)? {
            return Ok(BTreeSet::new());
        }
        bind.insert(target.clone(), (arg, pos + 1));
    }
    let color = |v: &Sym| -> Option<Term> {
        let (arg, pos) = bind.get(v)?;
        prefixes[*arg].node(*pos).cloned()
    };
    let target = rule
        .concl_target
        .subst(&|v| color(v))
        .map_err(|e| RhoError::InvalidSpec(e.to_string()))?;
    let label = lit(&rule.concl_label)?.clone();
    Ok([(label, target)].into())
}

fn lts_rule_step(
    rule: &Rule,
    trees: &[&TreePrefix<Term>],
    out: &mut BTreeSet<(Letter, Term)>,
) -> Result<(), RhoError> {
    let mut bind: BTreeMap<Sym, &TreePrefix<Term>> = BTreeMap::new();
    for (i, v) in rule.arg_vars.iter().enumerate() {
        bind.insert(v.clone(), trees[i]);
    }
    lts_match(rule, &rule.premises, bind, out)
}

fn lts_match(
    rule: &Rule,
    premises: &[Premise],
    bind: BTreeMap<Sym, &TreePrefix<Term>>,
    out: &mut BTreeSet<(Letter, Term)>,
) -> Result<(), RhoError> {
    let Some((premise, rest)) = premises.split_first() else {
        let target = rule
            .concl_target
            .subst(&|v| bind.get(v).map(|t| t.node.clone()))
            .map_err(|e| RhoError::InvalidSpec(e.to_string()))?;
        let label = lit(&rule.concl_label)?.clone();
        out.insert((label, target));
        return Ok(());
    };
    match premise {
        Premise::Pos { source, label, target } => {
            let node = bind[source];
            let children = node.children().map_err(|_| RhoError::InsufficientDepth)?;
            let want = lit(label)?;
            for (l, sub) in children {
                if l == want {
                    let mut next = bind.clone();
                    next.insert(target.clone(), sub);
                    lts_match(rule, rest, next, out)?;
                }
            }
            Ok(())
        }
        Premise::NegAll { source } => {
            let node = bind[source];
            let children = node.children().map_err(|_| RhoError::InsufficientDepth)?;
            if children.is_empty() {
                lts_match(rule, rest, bind, out)?;
            }
            Ok(())
        }
        Premise::NegLabel { source, label } => {
            let node = bind[source];
            let children = node.children().map_err(|_| RhoError::InsufficientDepth)?;
            let want = lit(label)?;
            if children.iter().all(|(l, _)| l != want) {
                lts_match(rule, rest, bind, out)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramReport {
    pub samples: usize,
    pub mismatches: Vec<String>,
}

impl DiagramReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "samples": self.samples, "passed": self.is_clean(), "mismatches": self.mismatches })
    }
}

/// Compares one constructed entry against the law's direct answer; `None`
/// means they agree.
pub fn diagram_compare(
    spec: &Spec,
    op: &Sym,
    args: &[StreamPrefix<Term>],
    expected: &(Letter, Term),
) -> Result<Option<String>, RhoError> {
    let wrapped: Vec<ArgBehavior> = args.iter().cloned().map(ArgBehavior::Stream).collect();
    let derived = one_step_rho(spec, op, &wrapped)?;
    let got = derived.iter().next().expect("stream derivation is a singleton");
    if got != expected {
        let arg_text: Vec<String> = args.iter().map(|p| p.to_string()).collect();
        return Ok(Some(format!(
            "{op}({}) steps to ({}, {}) but the law says ({}, {})",
            arg_text.join("; "),
            expected.0,
            expected.1,
            got.0,
            got.1
        )));
    }
    Ok(None)
}

// keeps sampling at desk scale even for machines with many states
const MAX_SAMPLES_PER_OP: usize = 64;

/// Unfolds the seeds, then checks for every sampled flat term over unfolded
/// arguments that the constructed first step equals the law's one-step
/// answer (stream specifications).
pub fn check_extension_diagram(
    spec: &Spec,
    seeds: &[Term],
    n: usize,
    fuel: u64,
) -> Result<DiagramReport, EngineError> {
    let mut checked = spec.clone();
    checked
        .validate()
        .map_err(|e| EngineError::InvalidSpec(e.to_string()))?;
    if checked.behavior != Behavior::Stream {
        return Err(EngineError::WrongBehavior { expected: Behavior::Stream });
    }
    let spec = &checked;

    let verdict = unfold_stream(spec, seeds, n, fuel)?;
    let (prefixes, facts) = match verdict {
        Verdict::ConsistentPrefix { data: ConsistentData::Stream { prefixes, facts }, .. } => {
            (prefixes, facts)
        }
        other => {
            return Err(EngineError::InvalidSpec(format!(
                "diagram check needs a consistent prefix, unfolding gave {}",
                other.name()
            )))
        }
    };
    let fact_map: BTreeMap<Term, (Letter, Term)> = facts
        .into_iter()
        .map(|(t, l, s)| (t, (l, s)))
        .collect();

    let mut report = DiagramReport { samples: 0, mismatches: Vec::new() };
    let arg_pool: Vec<(&Term, &StreamPrefix<Term>)> = prefixes.iter().collect();
    for (op, arity) in spec.signature.operations() {
        if *arity == 0 || arg_pool.is_empty() {
            continue;
        }
        let lookahead = spec.max_lookahead(op);
        let mut tuples = vec![Vec::new()];
        for _ in 0..*arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t: Vec<usize>| {
                    (0..arg_pool.len()).map(move |i| {
                        let mut t2 = t.clone();
                        t2.push(i);
                        t2
                    })
                })
                .collect();
        }
        for tuple in tuples.into_iter().take(MAX_SAMPLES_PER_OP) {
            let args: Vec<StreamPrefix<Term>> =
                tuple.iter().map(|&i| arg_pool[i].1.clone()).collect();
            if args.iter().any(|p| p.len() < lookahead) {
                continue;
            }
            let flat = Term::App(
                op.clone(),
                tuple.iter().map(|&i| arg_pool[i].0.clone()).collect(),
            );
            let Some(expected) = fact_map.get(&flat) else {
                // the flat term was not demanded while unfolding; derive it
                // now so the sample still counts
                match unfold_stream(spec, std::slice::from_ref(&flat), 1, fuel)? {
                    Verdict::ConsistentPrefix {
                        data: ConsistentData::Stream { facts, .. },
                        ..
                    } => {
                        if let Some((_, l, s)) = facts.into_iter().find(|(t, _, _)| t == &flat) {
                            report.samples += 1;
                            match diagram_compare(spec, op, &args, &(l, s)) {
                                Ok(None) => {}
                                Ok(Some(m)) => report.mismatches.push(m),
                                Err(RhoError::InsufficientDepth) => {}
                                Err(e) => report.mismatches.push(e.to_string()),
                            }
                        }
                    }
                    _ => continue,
                }
                continue;
            };
            report.samples += 1;
            match diagram_compare(spec, op, &args, expected) {
                Ok(None) => {}
                Ok(Some(m)) => report.mismatches.push(m),
                Err(RhoError::InsufficientDepth) => {}
                Err(e) => report.mismatches.push(e.to_string()),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_spec;

    fn spec(text: &str) -> Spec {
        let mut s = parse_spec(text).unwrap();
        s.validate().unwrap();
        s
    }

    fn letter(s: &str) -> Letter {
        Letter::from(s)
    }

    fn stream_prefix(nodes: &[&str], labels: &[&str], sig: &crate::term::Signature) -> StreamPrefix<Term> {
        let terms: Vec<Term> = nodes.iter().map(|n| Term::parse(sig, n).unwrap()).collect();
        StreamPrefix {
            steps: terms[..terms.len() - 1]
                .iter()
                .cloned()
                .zip(labels.iter().map(|l| letter(l)))
                .collect(),
            tail: terms.last().unwrap().clone(),
        }
    }

    #[test]
    fn zip_first_step_swaps_arguments() {
        let s = spec(
            "behavior stream\nalphabet a, b\nop zip/2\n\
             rule zip(x, y): x -l-> u, y -m-> v => l -> zip(y, u)\n",
        );
        let x = stream_prefix(&["x0", "x1"], &["a"], &s.signature);
        let y = stream_prefix(&["y0", "y1"], &["b"], &s.signature);
        let out = one_step_rho(
            &s,
            &Sym::from("zip"),
            &[ArgBehavior::Stream(x), ArgBehavior::Stream(y)],
        )
        .unwrap();
        let (l, t) = out.iter().next().unwrap();
        assert_eq!(l, &letter("a"));
        assert_eq!(t.to_string(), "zip(y0,x1)");
    }

    #[test]
    fn lookahead_rule_reads_two_steps() {
        let s = spec(
            "behavior stream\nalphabet a, b\nop q/1\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n",
        );
        let x = stream_prefix(&["x0", "x1", "x2"], &["a", "b"], &s.signature);
        let out = one_step_rho(&s, &Sym::from("q"), &[ArgBehavior::Stream(x)]).unwrap();
        let (l, t) = out.iter().next().unwrap();
        assert_eq!(l, &letter("b"));
        assert_eq!(t.to_string(), "q(x2)");

        let short = stream_prefix(&["x0", "x1"], &["a"], &s.signature);
        assert_eq!(
            one_step_rho(&s, &Sym::from("q"), &[ArgBehavior::Stream(short)]),
            Err(RhoError::InsufficientDepth)
        );
    }

    #[test]
    fn lts_rules_with_negatives() {
        // lookahead rule plus the single-step-to-a-leaf rule
        let s = spec(
            "behavior lts\nalphabet a, b\nop q/1\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n\
             rule q(x): x -l1-> y, y -| => l1 -> q(x)\n",
        );
        // tree: x0 -a-> x1 (leaf with known, empty successor set)
        let leaf = TreePrefix::known(Term::Var(Sym::from("x1")), vec![], 1);
        let tree = TreePrefix::known(
            Term::Var(Sym::from("x0")),
            vec![(letter("a"), leaf)],
            2,
        );
        let out = one_step_rho(&s, &Sym::from("q"), &[ArgBehavior::Tree(tree)]).unwrap();
        let rendered: Vec<String> =
            out.iter().map(|(l, t)| format!("{l}:{t}")).collect();
        assert_eq!(rendered, vec!["a:q(x0)"]);

        // a cut-off child means we cannot decide the leaf rule
        let cut = TreePrefix::cut(Term::Var(Sym::from("x1")));
        let tree = TreePrefix::known(Term::Var(Sym::from("x0")), vec![(letter("a"), cut)], 1);
        assert_eq!(
            one_step_rho(&s, &Sym::from("q"), &[ArgBehavior::Tree(tree)]),
            Err(RhoError::InsufficientDepth)
        );
    }

    #[test]
    fn stream_totality_violations_are_errors() {
        let s = spec(
            "behavior stream\nalphabet a, b\nop q/1\n\
             rule q(x): x -a-> y => a -> q(y)\n",
        );
        let x = stream_prefix(&["x0", "x1"], &["b"], &s.signature);
        assert_eq!(
            one_step_rho(&s, &Sym::from("q"), &[ArgBehavior::Stream(x)]),
            Err(RhoError::NoDerivation)
        );
    }

    #[test]
    fn diagram_check_is_self_consistent_and_catches_corruption() {
        let s = spec(
            "behavior stream\nalphabet $\nop C/0\nop q1/1\n\
             rule C => $ -> q1(C)\n\
             rule q1(x): x -l-> y => l -> q1(y)\n",
        );
        let seeds = s.signature.closed_terms(2);
        let report = check_extension_diagram(&s, &seeds, 4, 10_000).unwrap();
        assert!(report.samples > 0);
        assert!(report.is_clean(), "{:?}", report.mismatches);

        // corrupt the expected first step and watch the comparison fail
        let c = Term::constant("C");
        let q1c = Term::parse(&s.signature, "q1(C)").unwrap();
        let args = vec![StreamPrefix {
            steps: vec![(c.clone(), letter("$"))],
            tail: q1c.clone(),
        }];
        let good = (letter("$"), Term::parse(&s.signature, "q1(q1(C))").unwrap());
        assert!(diagram_compare(&s, &Sym::from("q1"), &args, &good)
            .unwrap()
            .is_none());
        let bad = (letter("$"), q1c.clone());
        let mismatch = diagram_compare(&s, &Sym::from("q1"), &args, &bad).unwrap();
        assert!(mismatch.is_some());
    }

    #[test]
    fn rule_c_first_step_is_forced() {
        let s = spec(
            "behavior stream\nalphabet $\nop C/0\nop q1/1\n\
             rule C => $ -> q1(C)\n\
             rule q1(x) => $ -> q1(x)\n",
        );
        let out = one_step_rho(&s, &Sym::from("C"), &[]).unwrap();
        let (l, t) = out.iter().next().unwrap();
        assert_eq!(l, &letter("$"));
        assert_eq!(t.to_string(), "q1(C)");
    }
}
