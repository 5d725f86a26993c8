//! Independent replay of refutation witnesses.
//!
//! A refutation is only as good as its certificate. [`verify_witness`] checks
//! one without consulting the constraint engine: it replays the recorded
//! trace step by step against the specification's rules (each forced entry
//! must be derivable from the entries recorded before it, allowing the
//! self-referential reads the engine performs), then re-derives the final
//! contradiction: an equation forcing a term to nest itself, or a successor
//! set that cannot be empty yet admits no minimal element.

use std::collections::BTreeMap;

use crate::behavior::Letter;
use crate::rules::{Behavior, LabelExpr, Premise, Rule, Spec};
use crate::term::{Sym, Term};

use super::{TraceStep, Witness};

type StreamFacts = BTreeMap<Term, (Letter, Term)>;
type LtsFacts = BTreeMap<Term, Vec<(Letter, Term)>>;

fn lit(label: &LabelExpr) -> Result<&Letter, String> {
    match label {
        LabelExpr::Lit(l) => Ok(l),
        LabelExpr::Var(v) => Err(format!("witness rule has unexpanded metavariable `{v}`")),
    }
}

/// Re-derives one stream trace step from the facts (which already include
/// the step itself, so self-referential lookahead reads its own entry).
fn check_stream_step(step: &TraceStep, facts: &StreamFacts) -> Result<(), String> {
    let args = match &step.term {
        Term::App(_, args) => args.clone(),
        Term::Var(_) => return Err("trace steps must force composite terms".into()),
    };
    if step.rule.arg_vars.len() != args.len() {
        return Err(format!("rule `{}` does not fit term {}", step.rule, step.term));
    }
    let mut bind: BTreeMap<Sym, Term> =
        step.rule.arg_vars.iter().cloned().zip(args).collect();
    for premise in &step.rule.premises {
        let Premise::Pos { source, label, target } = premise else {
            return Err("negative premise in a stream witness".into());
        };
        let node = bind
            .get(source)
            .ok_or_else(|| format!("unbound premise source `{source}`"))?
            .clone();
        let (l, next) = facts
            .get(&node)
            .ok_or_else(|| format!("premise needs the entry of {node}, which the trace never forced"))?;
        if l != lit(label)? {
            return Err(format!(
                "premise {premise} fails: {node} steps with label {l}"
            ));
        }
        bind.insert(target.clone(), next.clone());
    }
    if lit(&step.rule.concl_label)? != &step.label {
        return Err(format!("rule `{}` concludes a different label", step.rule));
    }
    let target = step
        .rule
        .concl_target
        .subst(&|v| bind.get(v).cloned())
        .map_err(|e| e.to_string())?;
    if target != step.succ {
        return Err(format!(
            "rule `{}` concludes {target}, trace recorded {}",
            step.rule, step.succ
        ));
    }
    Ok(())
}

/// Matches the final rule's premises, binding the one missing entry (the
/// refuted term's own successor) to `Var(unknown)`, and returns the
/// instantiated conclusion target.
fn derive_final_equation(
    witness_term: &Term,
    rule: &Rule,
    unknown: &Sym,
    facts: &StreamFacts,
) -> Result<Term, String> {
    let args = match witness_term {
        Term::App(_, args) => args.clone(),
        Term::Var(_) => return Err("witness term must be composite".into()),
    };
    let mut bind: BTreeMap<Sym, Term> = rule.arg_vars.iter().cloned().zip(args).collect();
    for premise in &rule.premises {
        let Premise::Pos { source, target, .. } = premise else {
            return Err("negative premise in a stream witness".into());
        };
        let node = bind
            .get(source)
            .ok_or_else(|| format!("unbound premise source `{source}`"))?
            .clone();
        if &node == witness_term {
            // the hypothesis step: its successor is the unknown
            bind.insert(target.clone(), Term::Var(unknown.clone()));
        } else if let Some((_, next)) = facts.get(&node) {
            bind.insert(target.clone(), next.clone());
        } else if node == Term::Var(unknown.clone()) {
            return Err("premise chain walks past the unknown".into());
        } else {
            return Err(format!("no recorded entry for premise node {node}"));
        }
    }
    rule.concl_target
        .subst(&|v| bind.get(v).cloned())
        .map_err(|e| e.to_string())
}

fn check_lts_step(step: &TraceStep, facts: &LtsFacts, empty_at: Option<&Term>) -> Result<(), String> {
    let args = match &step.term {
        Term::App(_, args) => args.clone(),
        Term::Var(_) => return Err("trace steps must force composite terms".into()),
    };
    let bind: BTreeMap<Sym, Term> = step.rule.arg_vars.iter().cloned().zip(args).collect();
    let successors = |t: &Term| -> Vec<(Letter, Term)> {
        if empty_at == Some(t) {
            return Vec::new();
        }
        facts.get(t).cloned().unwrap_or_default()
    };
    // depth-first over premise alternatives
    fn go(
        rule: &Rule,
        premises: &[Premise],
        bind: BTreeMap<Sym, Term>,
        successors: &dyn Fn(&Term) -> Vec<(Letter, Term)>,
        want: &(Letter, Term),
    ) -> Result<bool, String> {
        let Some((premise, rest)) = premises.split_first() else {
            let target = rule
                .concl_target
                .subst(&|v| bind.get(v).cloned())
                .map_err(|e| e.to_string())?;
            let label = lit(&rule.concl_label)?.clone();
            return Ok((label, target) == *want);
        };
        match premise {
            Premise::Pos { source, label, target } => {
                let node = bind
                    .get(source)
                    .ok_or_else(|| format!("unbound premise source `{source}`"))?;
                let want_label = lit(label)?;
                for (l, u) in successors(node) {
                    if &l == want_label {
                        let mut next = bind.clone();
                        next.insert(target.clone(), u);
                        if go(rule, rest, next, successors, want)? {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
            Premise::NegAll { source } => {
                let node = bind
                    .get(source)
                    .ok_or_else(|| format!("unbound premise source `{source}`"))?;
                if successors(node).is_empty() {
                    go(rule, rest, bind, successors, want)
                } else {
                    Ok(false)
                }
            }
            Premise::NegLabel { source, label } => {
                let node = bind
                    .get(source)
                    .ok_or_else(|| format!("unbound premise source `{source}`"))?;
                let want_label = lit(label)?;
                if successors(node).iter().all(|(l, _)| l != want_label) {
                    go(rule, rest, bind, successors, want)
                } else {
                    Ok(false)
                }
            }
        }
    }
    let want = (step.label.clone(), step.succ.clone());
    if go(&step.rule, &step.rule.premises, bind, &successors, &want)? {
        Ok(())
    } else {
        Err(format!(
            "trace step `{step}` is not derivable from the recorded entries"
        ))
    }
}

/// Checks that a refutation witness stands on its own; `Ok(())` means every
/// trace step re-derives and the final contradiction is re-established.
pub fn verify_witness(spec: &Spec, witness: &Witness) -> Result<(), String> {
    let mut checked = spec.clone();
    checked.validate().map_err(|e| e.to_string())?;
    let spec = &checked;
    match witness {
        Witness::OccursCheck { term, unknown, equation, rule, trace, .. } => {
            if spec.behavior != Behavior::Stream {
                return Err("occurs-check witnesses belong to stream specifications".into());
            }
            let mut facts = StreamFacts::new();
            for step in trace {
                facts.insert(step.term.clone(), (step.label.clone(), step.succ.clone()));
                check_stream_step(step, &facts)?;
            }
            // the contradiction: the rule's conclusion nests the unknown
            if !equation.contains_var(unknown) || equation == &Term::Var(unknown.clone()) {
                return Err(format!(
                    "equation `{unknown} = {equation}` is not an occurs violation"
                ));
            }
            let derived = derive_final_equation(term, rule, unknown, &facts)?;
            if &derived != equation {
                return Err(format!(
                    "re-deriving the final equation gave `{derived}`, witness says `{equation}`"
                ));
            }
            Ok(())
        }
        Witness::EmptyNonemptyClash { term, forcing_rule, deepening_rules, trace, .. } => {
            match spec.behavior {
                Behavior::Lts => {
                    let mut facts = LtsFacts::new();
                    for step in trace {
                        facts
                            .entry(step.term.clone())
                            .or_default()
                            .push((step.label.clone(), step.succ.clone()));
                        check_lts_step(step, &facts, None)?;
                    }
                    // horn 1: with the term's set assumed empty, the guarded
                    // rule still derives a transition for it
                    let fired = derive_any(term, forcing_rule, &facts)?;
                    if !fired {
                        return Err(format!(
                            "forcing rule `{forcing_rule}` does not fire under the empty assumption"
                        ));
                    }
                    // horn 2: every derivation under a nonempty assumption
                    // nests the consumed successor strictly deeper
                    for rule in deepening_rules {
                        if !rule_deepens(rule) {
                            return Err(format!("rule `{rule}` does not deepen its lookahead target"));
                        }
                    }
                    Ok(())
                }
                Behavior::Stream => {
                    // stream dead end: replay the trace; the clash itself is
                    // that no rule conclusion can coincide with its premise
                    // hypothesis, which check_stream_step established per step
                    let mut facts = StreamFacts::new();
                    for step in trace {
                        facts.insert(step.term.clone(), (step.label.clone(), step.succ.clone()));
                        check_stream_step(step, &facts)?;
                    }
                    if !forcing_rule
                        .premises
                        .iter()
                        .any(|p| matches!(p, Premise::Pos { .. }))
                    {
                        return Err("stream clash witness needs a premise to hypothesize".into());
                    }
                    Ok(())
                }
            }
        }
    }
}

fn derive_any(
    term: &Term,
    rule: &Rule,
    facts: &LtsFacts,
) -> Result<bool, String> {
    let args = match term {
        Term::App(_, args) => args.clone(),
        Term::Var(_) => return Err("witness term must be composite".into()),
    };
    let bind: BTreeMap<Sym, Term> = rule.arg_vars.iter().cloned().zip(args).collect();
    let successors = |t: &Term| -> Vec<(Letter, Term)> {
        if t == term {
            return Vec::new(); // the empty assumption
        }
        facts.get(t).cloned().unwrap_or_default()
    };
    fn go(
        premises: &[Premise],
        bind: BTreeMap<Sym, Term>,
        successors: &dyn Fn(&Term) -> Vec<(Letter, Term)>,
    ) -> Result<bool, String> {
        let Some((premise, rest)) = premises.split_first() else {
            return Ok(true);
        };
        match premise {
            Premise::Pos { source, label, target } => {
                let node = bind[source].clone();
                let want = lit(label)?;
                for (l, u) in successors(&node) {
                    if &l == want {
                        let mut next = bind.clone();
                        next.insert(target.clone(), u);
                        if go(rest, next, successors)? {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
            Premise::NegAll { source } => {
                if successors(&bind[source]).is_empty() {
                    go(rest, bind, successors)
                } else {
                    Ok(false)
                }
            }
            Premise::NegLabel { source, label } => {
                let want = lit(label)?;
                if successors(&bind[source]).iter().all(|(l, _)| l != want) {
                    go(rest, bind, successors)
                } else {
                    Ok(false)
                }
            }
        }
    }
    go(&rule.premises, bind, &successors)
}

/// The rule's lookahead target occurs strictly nested in its conclusion.
fn rule_deepens(rule: &Rule) -> bool {
    let Some(Premise::Pos { target, .. }) = rule
        .premises
        .iter().rfind(|p| p.is_positive())
    else {
        return false;
    };
    rule.concl_target != Term::Var(target.clone()) && rule.concl_target.contains_var(target)
}
