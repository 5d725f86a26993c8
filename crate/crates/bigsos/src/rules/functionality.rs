//! Determinism and exhaustiveness analysis of rule sets.
//!
//! Stream behaviors assign exactly one transition to every state, so a
//! stream specification must derive exactly one conclusion for every
//! operation and every combination of argument behaviors. This module checks
//! that at the level of label patterns: for each operation the ground rules
//! are matched against all label words up to the operation's maximal
//! lookahead depth, reporting uncovered patterns and overlapping rules.
//! For LTS specifications nondeterminism is allowed and only overlap
//! statistics are reported.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::Letter;
use crate::term::Sym;

use super::{ground_rules, Behavior, LabelExpr, Rule, Spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalityIssue {
    pub severity: Severity,
    pub op: Sym,
    pub message: String,
}

impl fmt::Display for FunctionalityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Info => "info",
        };
        write!(f, "{sev}: op `{}`: {}", self.op, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FunctionalityReport {
    pub issues: Vec<FunctionalityIssue>,
}

impl FunctionalityReport {
    pub fn is_clean(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }
}

/// The label pattern a ground rule tests: one word per argument position,
/// the labels along that argument's positive chain.
fn rule_pattern(rule: &Rule) -> Vec<Vec<Letter>> {
    rule.arg_vars
        .iter()
        .map(|v| {
            rule.chain_labels(v)
                .into_iter()
                .map(|l| match l {
                    LabelExpr::Lit(x) => x,
                    LabelExpr::Var(_) => unreachable!("patterns come from ground rules"),
                })
                .collect()
        })
        .collect()
}

fn is_prefix(short: &[Letter], long: &[Letter]) -> bool {
    short.len() <= long.len() && short.iter().zip(long).all(|(a, b)| a == b)
}

fn matches(pattern: &[Vec<Letter>], word: &[Vec<Letter>]) -> bool {
    pattern.iter().zip(word).all(|(p, w)| is_prefix(p, w))
}

/// Every assignment of one length-`depths[i]` word per argument.
fn all_words(alphabet: &[Letter], depths: &[usize]) -> Vec<Vec<Vec<Letter>>> {
    let mut out: Vec<Vec<Vec<Letter>>> = vec![Vec::new()];
    for &d in depths {
        let words = words_of_len(alphabet, d);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                words.iter().map(move |w| {
                    let mut p = prefix.clone();
                    p.push(w.clone());
                    p
                })
            })
            .collect();
    }
    out
}

fn words_of_len(alphabet: &[Letter], len: usize) -> Vec<Vec<Letter>> {
    let mut out: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |l| {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    w2
                })
            })
            .collect();
    }
    out
}

fn render_pattern(word: &[Vec<Letter>]) -> String {
    let args: Vec<String> = word
        .iter()
        .map(|w| {
            if w.is_empty() {
                "·".to_string()
            } else {
                w.iter().map(Letter::to_string).collect::<Vec<_>>().join(" ")
            }
        })
        .collect();
    format!("({})", args.join("; "))
}

// keeps the pattern enumeration at desk scale
const MAX_PATTERNS: usize = 100_000;

/// Checks determinism and exhaustiveness of a validated specification; see
/// the module documentation.
pub fn check_functionality(spec: &Spec) -> FunctionalityReport {
    let mut issues = Vec::new();
    for (op, arity) in spec.signature.operations() {
        let grounds = ground_rules(spec, op);
        if grounds.is_empty() {
            if spec.behavior == Behavior::Stream {
                issues.push(FunctionalityIssue {
                    severity: Severity::Error,
                    op: op.clone(),
                    message: "no rules; behavior is undefined for this operation".into(),
                });
            }
            continue;
        }
        let patterns: Vec<Vec<Vec<Letter>>> = grounds.iter().map(rule_pattern).collect();

        // uniform per-argument lookahead depth; anything else is flagged
        let mut depths = vec![0usize; *arity];
        for p in &patterns {
            for (i, w) in p.iter().enumerate() {
                depths[i] = depths[i].max(w.len());
            }
        }
        let uniform = patterns
            .iter()
            .all(|p| p.iter().enumerate().all(|(i, w)| w.len() == depths[i]));
        if !uniform {
            issues.push(FunctionalityIssue {
                severity: Severity::Info,
                op: op.clone(),
                message: format!(
                    "rules use non-uniform lookahead depths (checking at {depths:?})"
                ),
            });
        }

        let space: usize = depths
            .iter()
            .map(|d| spec.alphabet.len().checked_pow(*d as u32).unwrap_or(usize::MAX))
            .product();
        if space > MAX_PATTERNS {
            issues.push(FunctionalityIssue {
                severity: Severity::Info,
                op: op.clone(),
                message: "pattern space too large to enumerate; skipped".into(),
            });
            continue;
        }

        match spec.behavior {
            Behavior::Stream => {
                for word in all_words(&spec.alphabet, &depths) {
                    let hits: Vec<usize> = patterns
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| matches(p, &word))
                        .map(|(i, _)| i)
                        .collect();
                    match hits.len() {
                        0 => issues.push(FunctionalityIssue {
                            severity: Severity::Error,
                            op: op.clone(),
                            message: format!(
                                "missing pattern {}: no rule applies",
                                render_pattern(&word)
                            ),
                        }),
                        1 => {}
                        _ => issues.push(FunctionalityIssue {
                            severity: Severity::Error,
                            op: op.clone(),
                            message: format!(
                                "overlap at pattern {}: {} rules apply",
                                render_pattern(&word),
                                hits.len()
                            ),
                        }),
                    }
                }
            }
            Behavior::Lts => {
                // nondeterminism is fine; report overlap statistics only
                let mut overlaps: BTreeMap<String, usize> = BTreeMap::new();
                for i in 0..patterns.len() {
                    for j in (i + 1)..patterns.len() {
                        let compat = patterns[i].iter().zip(&patterns[j]).all(|(a, b)| {
                            is_prefix(a, b) || is_prefix(b, a)
                        });
                        if compat {
                            *overlaps
                                .entry(render_pattern(&patterns[i]))
                                .or_default() += 1;
                        }
                    }
                }
                if !overlaps.is_empty() {
                    let total: usize = overlaps.values().sum();
                    issues.push(FunctionalityIssue {
                        severity: Severity::Info,
                        op: op.clone(),
                        message: format!("{total} pairs of rules with compatible patterns"),
                    });
                }
            }
        }
    }
    FunctionalityReport { issues }
}
