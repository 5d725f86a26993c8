//! GSOS/coGSOS rule-format classification.
//!
//! A rule is GSOS-shaped when every premise tests an argument variable
//! directly (no lookahead); the conclusion target may be an arbitrary term.
//! A rule is coGSOS-shaped when its positive premises form chains rooted at
//! argument variables (lookahead is allowed) and the conclusion target is a
//! variable or a flat term. A specification is mixed when each operation's
//! rules can be uniformly assigned one of the two classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::term::{Sym, Term};

use super::{Behavior, Premise, Rule, Spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormatClass {
    #[serde(rename = "GSOS")]
    Gsos,
    #[serde(rename = "coGSOS")]
    CoGsos,
}

impl fmt::Display for FormatClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatClass::Gsos => f.write_str("GSOS"),
            FormatClass::CoGsos => f.write_str("coGSOS"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecVerdict {
    #[serde(rename = "GSOS")]
    Gsos,
    #[serde(rename = "coGSOS")]
    CoGsos,
    #[serde(rename = "mixed-GSOS")]
    MixedGsos,
    #[serde(rename = "biGSOS-only")]
    BiGsosOnly,
    #[serde(rename = "ill-formed")]
    IllFormed,
}

impl fmt::Display for SpecVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpecVerdict::Gsos => "GSOS",
            SpecVerdict::CoGsos => "coGSOS",
            SpecVerdict::MixedGsos => "mixed-GSOS",
            SpecVerdict::BiGsosOnly => "biGSOS-only",
            SpecVerdict::IllFormed => "ill-formed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatReport {
    pub verdict: SpecVerdict,
    /// Per rule (in spec order): rendered rule and its format set.
    pub per_rule: Vec<RuleFormats>,
    /// Chosen class per operation when the verdict is mixed (or pure).
    pub per_op: BTreeMap<Sym, Option<FormatClass>>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFormats {
    pub rule: String,
    pub formats: BTreeSet<FormatClass>,
}

/// The format set of a single rule within its specification.
pub fn classify_rule(spec: &Spec, rule: &Rule) -> BTreeSet<FormatClass> {
    let mut set = BTreeSet::new();
    if is_gsos(spec, rule) {
        set.insert(FormatClass::Gsos);
    }
    if is_cogsos(rule) {
        set.insert(FormatClass::CoGsos);
    }
    set
}

fn is_gsos(spec: &Spec, rule: &Rule) -> bool {
    let args: BTreeSet<&Sym> = rule.arg_vars.iter().collect();
    // no lookahead: every premise (positive or negative) tests an argument
    for p in &rule.premises {
        if !args.contains(p.source()) {
            return false;
        }
    }
    if spec.behavior == Behavior::Stream {
        // deterministic behavior: at most one positive premise per argument
        let mut seen = BTreeSet::new();
        for p in &rule.premises {
            if let Premise::Pos { source, .. } = p {
                if !seen.insert(source) {
                    return false;
                }
            }
        }
    }
    true
}

fn is_cogsos(rule: &Rule) -> bool {
    // chains: every variable is the source of at most one positive premise
    // (scoping already roots every chain at an argument variable)
    let mut seen = BTreeSet::new();
    for p in &rule.premises {
        if let Premise::Pos { source, .. } = p {
            if !seen.insert(source) {
                return false;
            }
        }
    }
    flat_or_var(&rule.concl_target)
}

fn flat_or_var(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(_, args) => args.iter().all(|a| matches!(a, Term::Var(_))),
    }
}

/// Classifies a whole specification. Runs validation first; a specification
/// that does not validate is reported as ill-formed rather than classified.
pub fn classify_spec(spec: &Spec) -> FormatReport {
    let mut checked = spec.clone();
    if let Err(e) = checked.validate() {
        return FormatReport {
            verdict: SpecVerdict::IllFormed,
            per_rule: Vec::new(),
            per_op: BTreeMap::new(),
            diagnostics: vec![e.to_string()],
        };
    }
    let spec = &checked;

    let sets: Vec<BTreeSet<FormatClass>> =
        spec.rules.iter().map(|r| classify_rule(spec, r)).collect();
    let per_rule: Vec<RuleFormats> = spec
        .rules
        .iter()
        .zip(&sets)
        .map(|(r, s)| RuleFormats { rule: r.to_string(), formats: s.clone() })
        .collect();

    let mut diagnostics = Vec::new();
    let all_gsos = sets.iter().all(|s| s.contains(&FormatClass::Gsos));
    let all_cogsos = sets.iter().all(|s| s.contains(&FormatClass::CoGsos));

    // per-operation assignability
    let mut op_can: BTreeMap<Sym, (bool, bool)> = BTreeMap::new();
    for (op, _) in spec.signature.operations() {
        op_can.insert(op.clone(), (true, true));
    }
    for (rule, set) in spec.rules.iter().zip(&sets) {
        let entry = op_can
            .get_mut(&rule.head_op)
            .expect("validated rule head is in signature");
        entry.0 &= set.contains(&FormatClass::Gsos);
        entry.1 &= set.contains(&FormatClass::CoGsos);
    }

    let verdict = if all_gsos {
        SpecVerdict::Gsos
    } else if all_cogsos {
        SpecVerdict::CoGsos
    } else if op_can.values().all(|(g, c)| *g || *c) {
        SpecVerdict::MixedGsos
    } else {
        for (op, (g, c)) in &op_can {
            if !*g && !*c {
                diagnostics.push(format!(
                    "operation `{op}` has rules that fit no single class uniformly"
                ));
            }
        }
        for (rule, set) in spec.rules.iter().zip(&sets) {
            if set.is_empty() {
                diagnostics.push(format!(
                    "rule `{rule}` combines lookahead with a nested conclusion target"
                ));
            }
        }
        SpecVerdict::BiGsosOnly
    };

    let per_op: BTreeMap<Sym, Option<FormatClass>> = op_can
        .iter()
        .map(|(op, (g, c))| {
            let class = match verdict {
                SpecVerdict::Gsos => Some(FormatClass::Gsos),
                SpecVerdict::CoGsos => Some(FormatClass::CoGsos),
                SpecVerdict::MixedGsos => {
                    // forced class when only one fits; coGSOS on a tie, which
                    // keeps lookahead-capable operations on the coGSOS side
                    if *c {
                        Some(FormatClass::CoGsos)
                    } else if *g {
                        Some(FormatClass::Gsos)
                    } else {
                        None
                    }
                }
                _ => None,
            };
            (op.clone(), class)
        })
        .collect();

    FormatReport { verdict, per_rule, per_op, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::super::parse_spec;
    use super::*;

    fn classify_text(text: &str) -> FormatReport {
        let spec = parse_spec(text).unwrap();
        classify_spec(&spec)
    }

    #[test]
    fn zip_rule_is_both() {
        let report = classify_text(
            "behavior stream\nalphabet a, b\nop zip/2\n\
             rule zip(x, y): x -l-> u, y -m-> v => l -> zip(y, u)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::Gsos);
        let set: Vec<_> = report.per_rule[0].formats.iter().copied().collect();
        assert_eq!(set, vec![FormatClass::Gsos, FormatClass::CoGsos]);
    }

    #[test]
    fn lookahead_rule_is_cogsos_only() {
        let report = classify_text(
            "behavior stream\nalphabet a, b\nop q/1\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::CoGsos);
        let set: Vec<_> = report.per_rule[0].formats.iter().copied().collect();
        assert_eq!(set, vec![FormatClass::CoGsos]);
    }

    #[test]
    fn nested_target_constant_rule_is_gsos_only() {
        let spec = parse_spec(
            "behavior stream\nalphabet $, €\nop C/0\nop q1/1\n\
             rule C => $ -> q1(q1(C))\n",
        )
        .unwrap();
        let set: Vec<_> = classify_rule(&spec, &spec.rules[0]).into_iter().collect();
        assert_eq!(set, vec![FormatClass::Gsos]);
    }

    #[test]
    fn rule_c_is_gsos_only() {
        // the target q1(C) has depth 2, so it is not flat
        let spec = parse_spec(
            "behavior stream\nalphabet $\nop C/0\nop q1/1\nrule C => $ -> q1(C)\n",
        )
        .unwrap();
        let set: Vec<_> = classify_rule(&spec, &spec.rules[0]).into_iter().collect();
        assert_eq!(set, vec![FormatClass::Gsos]);
    }

    #[test]
    fn mixed_spec_assigns_classes_per_op() {
        let report = classify_text(
            "behavior stream\nalphabet $, €\nop C/0\nop q/1\n\
             rule C => $ -> q(C)\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::MixedGsos);
        assert_eq!(report.per_op[&Sym::from("C")], Some(FormatClass::Gsos));
        assert_eq!(report.per_op[&Sym::from("q")], Some(FormatClass::CoGsos));
    }

    #[test]
    fn lookahead_plus_nested_target_is_bigsos_only() {
        let report = classify_text(
            "behavior stream\nalphabet a, b\nop q/1\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(q(z))\n",
        );
        assert_eq!(report.verdict, SpecVerdict::BiGsosOnly);
        assert!(report.per_rule[0].formats.is_empty());
        assert!(!report.diagnostics.is_empty());
    }

    #[test]
    fn conflicting_rules_for_one_op_are_bigsos_only() {
        // one GSOS-only rule and one coGSOS-only rule on the same operation
        let report = classify_text(
            "behavior lts\nalphabet a\nop f/1\nop g/2\n\
             rule f(x): x -a-> y => a -> g(g(y, y), y)\n\
             rule f(x): x -a-> y, y -a-> z => a -> f(z)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::BiGsosOnly);
    }

    #[test]
    fn negative_premise_on_target_blocks_gsos() {
        // the R2'-shaped rule: lookahead negative, flat target
        let report = classify_text(
            "behavior lts\nalphabet a\nop q/1\n\
             rule q(x): x -l-> y, y -| => l -> q(x)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::CoGsos);
        let set: Vec<_> = report.per_rule[0].formats.iter().copied().collect();
        assert_eq!(set, vec![FormatClass::CoGsos]);
    }

    #[test]
    fn branching_premises_block_cogsos_for_lts_gsos_rule() {
        let report = classify_text(
            "behavior lts\nalphabet a, b\nop f/1\nop g/2\n\
             rule f(x): x -a-> y, x -b-> z => a -> g(y, z)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::Gsos);
        let set: Vec<_> = report.per_rule[0].formats.iter().copied().collect();
        assert_eq!(set, vec![FormatClass::Gsos]);
    }

    #[test]
    fn ill_formed_spec_reported() {
        let spec = parse_spec(
            "behavior stream\nalphabet a\nop q/1\n\
             rule q(x): x -a-> y, y -| => a -> q(x)\n",
        )
        .unwrap();
        let report = classify_spec(&spec);
        assert_eq!(report.verdict, SpecVerdict::IllFormed);
    }

    #[test]
    fn disjoint_union_of_gsos_and_cogsos_specs_is_mixed() {
        // all rules of a GSOS-only spec plus all rules of a coGSOS-only spec
        // over disjoint operations stay classifiable, one class per op
        let report = classify_text(
            "behavior stream\nalphabet a, b\nop f/1\nop pair/2\nop q/1\n\
             rule f(x): x -l-> y => l -> pair(f(y), y)\n\
             rule pair(x, y): x -l-> u, y -m-> v => m -> pair(u, v)\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n",
        );
        assert_eq!(report.verdict, SpecVerdict::MixedGsos);
        assert_eq!(report.per_op[&Sym::from("f")], Some(FormatClass::Gsos));
        assert_eq!(report.per_op[&Sym::from("q")], Some(FormatClass::CoGsos));
    }

    #[test]
    fn gsos_monotone_under_lookahead_premise_deletion() {
        // deleting the lookahead premise of a coGSOS rule yields a rule whose
        // set now contains GSOS; deleting premises from a GSOS rule never
        // removes GSOS membership
        let spec = parse_spec(
            "behavior stream\nalphabet a, b\nop q/1\n\
             rule q(x): x -l1-> y, y -l2-> z => l2 -> q(y)\n",
        )
        .unwrap();
        let rule = &spec.rules[0];
        assert!(!classify_rule(&spec, rule).contains(&FormatClass::Gsos));
        let mut shorter = rule.clone();
        shorter.premises.pop();
        shorter.concl_target = Term::parse(&spec.signature, "q(y)").unwrap();
        assert!(classify_rule(&spec, &shorter).contains(&FormatClass::Gsos));
    }
}
