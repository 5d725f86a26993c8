//! Base-stream environments and the distributive-law axiom suite.
//!
//! A [`BaseStreamEnv`] assigns an eventually-periodic label word to each base
//! variable; the stream engine reads variables as colors `v@k` stepping to
//! `v@(k+1)` under the k-th label. On top of that, [`check_axioms`] verifies
//! on length-`n` prefixes that unfolding behaves like a distributive law:
//!
//! 1. identity: a bare base variable unfolds to its own stream;
//! 2. head: the first node of `t`'s unfolding is `t` itself;
//! 3. composition: unfolding `t[s…]` equals unfolding `t` over the
//!    unfoldings of the `s`-terms, flattened by substitution;
//! 4. decomposition: every node of an unfolding reproduces, when unfolded
//!    itself, the suffix that starts at it;
//!
//! plus naturality: renaming base variables permutes colors in the output
//! without changing labels or term shapes.

use std::collections::BTreeMap;

use serde_json::json;

use crate::behavior::{Letter, StreamPrefix};
use crate::rules::Spec;
use crate::term::{Sym, Term};

use super::stream::unfold_stream_in_env;
use super::{ConsistentData, EngineError, Verdict};

/// An infinite label word with a finite description: `prefix` followed by
/// `cycle` repeated forever. The cycle must be nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventuallyPeriodic {
    prefix: Vec<Letter>,
    cycle: Vec<Letter>,
}

impl EventuallyPeriodic {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Self {
        assert!(!cycle.is_empty(), "cycle must be nonempty");
        EventuallyPeriodic { prefix, cycle }
    }

    pub fn constant(letter: Letter) -> Self {
        EventuallyPeriodic { prefix: Vec::new(), cycle: vec![letter] }
    }

    pub fn label_at(&self, k: usize) -> Letter {
        if k < self.prefix.len() {
            self.prefix[k].clone()
        } else {
            self.cycle[(k - self.prefix.len()) % self.cycle.len()].clone()
        }
    }
}

/// Base streams by variable name. Variable names must not contain `@`; the
/// engine uses `v@k` internally for the k-th color of base `v`.
#[derive(Debug, Clone, Default)]
pub struct BaseStreamEnv {
    streams: BTreeMap<Sym, EventuallyPeriodic>,
}

pub(crate) fn split_color(name: &Sym) -> (Sym, usize) {
    match name.as_str().rsplit_once('@') {
        Some((base, k)) => match k.parse() {
            Ok(k) => (Sym::from(base), k),
            Err(_) => (name.clone(), 0),
        },
        None => (name.clone(), 0),
    }
}

pub(crate) fn color(base: &Sym, k: usize) -> Sym {
    if k == 0 {
        base.clone()
    } else {
        Sym::from(format!("{base}@{k}"))
    }
}

impl BaseStreamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, base: Sym, word: EventuallyPeriodic) {
        assert!(!base.as_str().contains('@'), "base names must not contain `@`");
        self.streams.insert(base, word);
    }

    pub fn bases(&self) -> impl Iterator<Item = &Sym> {
        self.streams.keys()
    }

    pub fn word(&self, base: &Sym) -> Option<&EventuallyPeriodic> {
        self.streams.get(base)
    }

    /// One step of the color `v@k`: its label and the next color.
    pub(crate) fn color_step(&self, name: &Sym) -> Option<(Letter, Sym)> {
        let (base, k) = split_color(name);
        let word = self.streams.get(&base)?;
        Some((word.label_at(k), color(&base, k + 1)))
    }

    /// A deterministic assortment of base streams for the given variables:
    /// variable `i` gets the alphabet rotated by `i` as its cycle, so labels
    /// differ across arguments.
    pub fn generic(spec: &Spec, vars: &[Sym]) -> Self {
        let mut env = BaseStreamEnv::new();
        let k = spec.alphabet.len();
        for (i, v) in vars.iter().enumerate() {
            let cycle: Vec<Letter> = (0..k)
                .map(|j| spec.alphabet[(i + j) % k].clone())
                .collect();
            env.insert(v.clone(), EventuallyPeriodic::new(Vec::new(), cycle));
        }
        env
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckResult {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl CheckResult {
    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AxiomReport {
    pub identity: CheckResult,
    pub head: CheckResult,
    pub composition: CheckResult,
    pub decomposition: CheckResult,
    pub naturality: CheckResult,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.identity.passed()
            && self.head.passed()
            && self.composition.passed()
            && self.decomposition.passed()
            && self.naturality.passed()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let part = |c: &CheckResult| {
            json!({ "checked": c.checked, "passed": c.passed(), "failures": c.failures })
        };
        json!({
            "identity": part(&self.identity),
            "head": part(&self.head),
            "composition": part(&self.composition),
            "decomposition": part(&self.decomposition),
            "naturality": part(&self.naturality),
        })
    }
}

const AXIOM_FUEL: u64 = 200_000;

fn unfolded_prefix(
    spec: &Spec,
    env: &BaseStreamEnv,
    seed: &Term,
    n: usize,
) -> Result<StreamPrefix<Term>, String> {
    match unfold_stream_in_env(spec, env, std::slice::from_ref(seed), n, AXIOM_FUEL) {
        Ok(Verdict::ConsistentPrefix { data: ConsistentData::Stream { mut prefixes, .. }, .. }) => {
            prefixes
                .remove(seed)
                .ok_or_else(|| format!("no prefix recorded for {seed}"))
        }
        Ok(other) => Err(format!("unfolding {seed} gave {}", other.name())),
        Err(e) => Err(format!("unfolding {seed} failed: {e}")),
    }
}

fn rename_vars(t: &Term, f: &dyn Fn(&Sym) -> Sym) -> Term {
    match t {
        Term::Var(v) => Term::Var(f(v)),
        Term::App(op, args) => {
            Term::App(op.clone(), args.iter().map(|a| rename_vars(a, f)).collect())
        }
    }
}

/// Maps every color `v@k` of a node term through `f(base, k)`.
fn map_colors(t: &Term, f: &dyn Fn(&Sym, usize) -> Term) -> Term {
    match t {
        Term::Var(v) => {
            let (base, k) = split_color(v);
            f(&base, k)
        }
        Term::App(op, args) => {
            Term::App(op.clone(), args.iter().map(|a| map_colors(a, f)).collect())
        }
    }
}

/// Runs the axiom suite on length-`n` prefixes over the given base streams.
/// `terms` are seeds over the environment's base variables.
pub fn check_axioms(
    spec: &Spec,
    env: &BaseStreamEnv,
    terms: &[Term],
    n: usize,
) -> Result<AxiomReport, EngineError> {
    let mut report = AxiomReport::default();

    // (i) identity on bare base streams
    for base in env.bases() {
        report.identity.checked += 1;
        let seed = Term::Var(base.clone());
        match unfolded_prefix(spec, env, &seed, n) {
            Ok(p) => {
                let word = env.word(base).expect("base exists");
                for i in 0..n {
                    let expected_node = Term::Var(color(base, i));
                    if p.node(i) != Some(&expected_node) {
                        report.identity.fail(format!(
                            "{base}: node {i} is {:?}, expected {expected_node}",
                            p.node(i)
                        ));
                        break;
                    }
                    if p.steps[i].1 != word.label_at(i) {
                        report.identity.fail(format!(
                            "{base}: label {i} is {}, expected {}",
                            p.steps[i].1,
                            word.label_at(i)
                        ));
                        break;
                    }
                }
            }
            Err(e) => report.identity.fail(e),
        }
    }

    let mut prefixes: BTreeMap<Term, StreamPrefix<Term>> = BTreeMap::new();
    for t in terms {
        match unfolded_prefix(spec, env, t, n) {
            Ok(p) => {
                prefixes.insert(t.clone(), p);
            }
            Err(e) => {
                report.head.checked += 1;
                report.head.fail(e);
            }
        }
    }

    // (ii) the first node is the seed itself
    for (t, p) in &prefixes {
        report.head.checked += 1;
        if p.head() != t {
            report.head.fail(format!("head of {t} unfolds to {}", p.head()));
        }
    }

    // (iv) each node reproduces the suffix that starts at it
    for (t, p) in &prefixes {
        for i in 0..=p.len() {
            report.decomposition.checked += 1;
            let node = p.node(i).expect("within length");
            match unfolded_prefix(spec, env, node, n - i) {
                Ok(sub) => {
                    let suffix = p.tail_at(i).expect("within length");
                    if sub != suffix {
                        report.decomposition.fail(format!(
                            "{t}: node {i} ({node}) unfolds to `{sub}`, suffix is `{suffix}`"
                        ));
                    }
                }
                Err(e) => report.decomposition.fail(e),
            }
        }
    }

    // (iii) composition: substitute fresh copies of `s` for every variable of
    // `t`, unfold directly, and compare with unfolding `t` over the label
    // words of the copies' own unfoldings, flattened by substitution.
    let lookahead = spec
        .signature
        .operations()
        .iter()
        .map(|(op, _)| spec.max_lookahead(op))
        .max()
        .unwrap_or(0);
    for outer in terms {
        let outer_vars: Vec<Sym> = outer.vars().into_iter().collect();
        if outer_vars.is_empty() {
            continue;
        }
        for inner in terms {
            report.composition.checked += 1;
            if let Err(e) =
                check_composition(spec, env, outer, &outer_vars, inner, n, lookahead)
            {
                report.composition.fail(e);
            }
        }
    }

    // naturality: renaming base variables renames output colors and nothing else
    for (t, p) in &prefixes {
        report.naturality.checked += 1;
        let rename = |v: &Sym| Sym::from(format!("{v}_r"));
        let renamed_seed = rename_vars(t, &rename);
        let mut renamed_env = BaseStreamEnv::new();
        for base in env.bases() {
            renamed_env.insert(rename(base), env.word(base).expect("base").clone());
        }
        match unfolded_prefix(spec, &renamed_env, &renamed_seed, n) {
            Ok(rp) => {
                let mapped = p.map(|node| {
                    map_colors(node, &|base, k| Term::Var(color(&rename(base), k)))
                });
                if rp != mapped {
                    report
                        .naturality
                        .fail(format!("{t}: renamed unfolding differs from recolored one"));
                }
            }
            Err(e) => report.naturality.fail(e),
        }
    }

    Ok(report)
}

fn check_composition(
    spec: &Spec,
    env: &BaseStreamEnv,
    outer: &Term,
    outer_vars: &[Sym],
    inner: &Term,
    n: usize,
    lookahead: usize,
) -> Result<(), String> {
    // fresh copy of `inner` per outer variable, with disjoint base names
    let mut big_env = BaseStreamEnv::new();
    let mut inner_copies: BTreeMap<Sym, Term> = BTreeMap::new();
    for u in outer_vars {
        let rename = |v: &Sym| Sym::from(format!("{u}_{v}"));
        inner_copies.insert(u.clone(), rename_vars(inner, &rename));
        for base in inner.vars() {
            let word = env
                .word(&base)
                .ok_or_else(|| format!("no base stream for `{base}`"))?;
            big_env.insert(rename(&base), word.clone());
        }
    }
    let composed = outer
        .subst(&|v| inner_copies.get(v).cloned())
        .map_err(|e| e.to_string())?;
    let direct = unfolded_prefix(spec, &big_env, &composed, n)?;

    // every staged step consumes up to `lookahead` positions of each copy's
    // stream, so the copies must be unfolded that much further
    let horizon = (n + 1) * lookahead.max(1) + 1;
    let mut synth_env = BaseStreamEnv::new();
    let mut inner_prefixes: BTreeMap<Sym, StreamPrefix<Term>> = BTreeMap::new();
    for (u, copy) in &inner_copies {
        let p = unfolded_prefix(spec, &big_env, copy, horizon)?;
        let labels: Vec<Letter> = p.labels().cloned().collect();
        let last = labels.last().expect("horizon is positive").clone();
        synth_env.insert(u.clone(), EventuallyPeriodic::new(labels, vec![last]));
        inner_prefixes.insert(u.clone(), p);
    }
    let staged = unfolded_prefix(spec, &synth_env, outer, n)?;

    // flatten: replace color u@k by the k-th node of u's own unfolding
    let flattened = staged.map(|node| {
        map_colors(node, &|base, k| match inner_prefixes.get(base) {
            Some(p) => p.node(k).cloned().unwrap_or_else(|| Term::Var(color(base, k))),
            None => Term::Var(color(base, k)),
        })
    });
    if flattened != direct {
        return Err(format!(
            "composing {outer} over {inner}: staged unfolding `{flattened}` differs from direct `{direct}`"
        ));
    }
    Ok(())
}
