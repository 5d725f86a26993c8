//! Compilation of queue machines into rule specifications.
//!
//! A machine over states `Q` becomes a signature with one constant `C` and
//! one unary operation per state, and a rule set read off the transition
//! tables:
//!
//! ```text
//! C => $ -> q1(C)                                   (C)   always
//! q(x) => c -> q'(x)                                (R0)  when delta0(q) = (q',c)
//! q(x): x -a-> y => c -> q'(y)                      (R1)  when delta1(q,a) = (q',c)
//! q(x): x -a-> y, y -b-> z => c -> q'(z)            (R2)  when delta2(q,a,b) = (q',c)
//! q(x): x -a-> y, y -| => a -> q(x)                 (R2') LTS only, when delta0(q)
//!                                                         and delta1(q,a) undefined
//! ```
//!
//! Rules are emitted fully ground; the inclusion conditions are per-entry, so
//! no label metavariables are needed. [`lemma_prefix_oracle`] independently
//! turns a partial run of the machine into the stream prefix every behavior
//! assignment for `C` is forced to produce: after `i` steps reaching
//! configuration `(q_i, w_i)`, node `i` is `q_i(t_j)` with `j = i - |w_i|`
//! and the label into node `i+1` is the letter the step appended.

use std::collections::BTreeMap;

use crate::behavior::{Letter, StreamPrefix};
use crate::qm::{QmError, QueueMachine, RunOutcome, State};
use crate::rules::{Behavior, LabelExpr, Premise, Rule, Spec};
use crate::term::{Signature, Sym, Term};

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub spec: Spec,
    pub op_of_state: BTreeMap<State, Sym>,
    pub constant: Sym,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Operation names for the states: the state name itself when it is a usable
/// identifier, otherwise a `q_`-prefixed mangling, with suffixes on collision.
fn op_names(m: &QueueMachine) -> (BTreeMap<State, Sym>, Sym) {
    let constant = Sym::from("C");
    let mut taken: Vec<Sym> = vec![constant.clone()];
    let mut map = BTreeMap::new();
    for state in &m.states {
        let base = if is_ident(state) && state != "C" {
            state.clone()
        } else {
            let sanitized: String = state
                .chars()
                .map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' })
                .collect();
            format!("q_{sanitized}")
        };
        let mut candidate = Sym::from(base.clone());
        let mut suffix = 2;
        while taken.contains(&candidate) {
            candidate = Sym::from(format!("{base}_{suffix}"));
            suffix += 1;
        }
        taken.push(candidate.clone());
        map.insert(state.clone(), candidate);
    }
    (map, constant)
}

fn compile(m: &QueueMachine, behavior: Behavior) -> Result<ReductionOutput, QmError> {
    let issues = m.validate();
    if !issues.is_empty() {
        return Err(QmError::Invalid(issues.join("; ")));
    }
    let (op_of_state, constant) = op_names(m);
    let mut operations = vec![(constant.clone(), 0)];
    for state in &m.states {
        operations.push((op_of_state[state].clone(), 1));
    }
    let signature = Signature::new(operations).expect("op names are collision free");

    let x = Sym::from("x");
    let y = Sym::from("y");
    let z = Sym::from("z");
    let op = |q: &State| op_of_state[q].clone();
    let unary = |q: &State, arg: Term| Term::App(op_of_state[q].clone(), vec![arg]);

    let mut rules = Vec::new();
    rules.push(Rule {
        head_op: constant.clone(),
        arg_vars: vec![],
        premises: vec![],
        concl_label: LabelExpr::Lit(m.dollar.clone()),
        concl_target: unary(&m.start, Term::App(constant.clone(), vec![])),
    });
    for (q, (q2, c)) in &m.delta0 {
        rules.push(Rule {
            head_op: op(q),
            arg_vars: vec![x.clone()],
            premises: vec![],
            concl_label: LabelExpr::Lit(c.clone()),
            concl_target: unary(q2, Term::Var(x.clone())),
        });
    }
    for ((q, a), (q2, c)) in &m.delta1 {
        if m.delta0.contains_key(q) {
            continue; // inclusion condition; unreachable for valid machines
        }
        rules.push(Rule {
            head_op: op(q),
            arg_vars: vec![x.clone()],
            premises: vec![Premise::Pos {
                source: x.clone(),
                label: LabelExpr::Lit(a.clone()),
                target: y.clone(),
            }],
            concl_label: LabelExpr::Lit(c.clone()),
            concl_target: unary(q2, Term::Var(y.clone())),
        });
    }
    for ((q, a, b), (q2, c)) in &m.delta2 {
        if m.delta0.contains_key(q) || m.delta1.contains_key(&(q.clone(), a.clone())) {
            continue;
        }
        rules.push(Rule {
            head_op: op(q),
            arg_vars: vec![x.clone()],
            premises: vec![
                Premise::Pos {
                    source: x.clone(),
                    label: LabelExpr::Lit(a.clone()),
                    target: y.clone(),
                },
                Premise::Pos {
                    source: y.clone(),
                    label: LabelExpr::Lit(b.clone()),
                    target: z.clone(),
                },
            ],
            concl_label: LabelExpr::Lit(c.clone()),
            concl_target: unary(q2, Term::Var(z.clone())),
        });
    }
    if behavior == Behavior::Lts {
        for q in &m.states {
            if m.delta0.contains_key(q) {
                continue;
            }
            for a in &m.alphabet {
                if m.delta1.contains_key(&(q.clone(), a.clone())) {
                    continue;
                }
                rules.push(Rule {
                    head_op: op(q),
                    arg_vars: vec![x.clone()],
                    premises: vec![
                        Premise::Pos {
                            source: x.clone(),
                            label: LabelExpr::Lit(a.clone()),
                            target: y.clone(),
                        },
                        Premise::NegAll { source: y.clone() },
                    ],
                    concl_label: LabelExpr::Lit(a.clone()),
                    concl_target: unary(q, Term::Var(x.clone())),
                });
            }
        }
    }

    let mut spec = Spec {
        behavior,
        alphabet: m.alphabet.clone(),
        start_letter: Some(m.dollar.clone()),
        signature,
        rules,
    };
    spec.validate().expect("generated specs are valid by construction");
    Ok(ReductionOutput { spec, op_of_state, constant })
}

/// The stream specification of a machine; see the module documentation.
pub fn qm_to_stream_spec(m: &QueueMachine) -> Result<ReductionOutput, QmError> {
    compile(m, Behavior::Stream)
}

/// The LTS specification: the same rules read over tree behavior, plus the
/// `R2'` rules that force a transition out of a node whose argument ends.
pub fn qm_to_lts_spec(m: &QueueMachine) -> Result<ReductionOutput, QmError> {
    compile(m, Behavior::Lts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// Stream prefix with exactly `n` nodes.
    Prefix(StreamPrefix<Term>),
    /// The machine terminated after `k` steps, before the requested horizon.
    HaltsBefore(usize),
}

/// Runs the machine for up to `n - 1` steps from the initial configuration
/// and lays the run out as the forced stream prefix of the constant term:
/// `n` nodes, `n - 1` labeled steps. Returns [`OracleResult::HaltsBefore`]
/// when the machine terminates strictly before making `n - 1` steps.
pub fn lemma_prefix_oracle(m: &QueueMachine, n: usize) -> Result<OracleResult, QmError> {
    let issues = m.validate();
    if !issues.is_empty() {
        return Err(QmError::Invalid(issues.join("; ")));
    }
    let (op_of_state, constant) = op_names(m);
    let c_term = Term::App(constant, vec![]);
    if n <= 1 {
        return Ok(OracleResult::Prefix(StreamPrefix::single(c_term)));
    }
    let steps_wanted = n - 1;
    let run = m.run_initial(steps_wanted)?;
    if let RunOutcome::HaltedAt(k) = run.outcome {
        if k < steps_wanted {
            return Ok(OracleResult::HaltsBefore(k));
        }
    }

    // nodes[i] is the i-th node; configuration i (1-based) is trace[i-1]
    let mut nodes: Vec<Term> = Vec::with_capacity(n);
    nodes.push(c_term);
    for i in 1..n {
        let conf = &run.trace[i - 1];
        let j = i - conf.queue.len();
        let node = Term::App(op_of_state[&conf.state].clone(), vec![nodes[j].clone()]);
        nodes.push(node);
    }
    let mut labels: Vec<Letter> = Vec::with_capacity(n - 1);
    labels.push(m.dollar.clone());
    for i in 1..(n - 1) {
        // the letter appended by step i sits at the back of w_{i+1}
        let appended = run.trace[i]
            .queue
            .last()
            .expect("reachable queues are nonempty")
            .clone();
        labels.push(appended);
    }
    let steps = nodes[..n - 1]
        .iter()
        .cloned()
        .zip(labels)
        .collect::<Vec<_>>();
    Ok(OracleResult::Prefix(StreamPrefix { steps, tail: nodes[n - 1].clone() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qm::testutil::{delayed_halt_machine, immediate_halt_machine, loop_machine};
    use crate::rules::{check_functionality, classify_spec, parse_spec, FormatClass, SpecVerdict};

    #[test]
    fn loop_machine_stream_spec_has_c_and_r0() {
        let out = qm_to_stream_spec(&loop_machine()).unwrap();
        let rendered = out.spec.render();
        assert!(rendered.contains("rule C => $ -> q1(C)"));
        assert!(rendered.contains("rule q1(x) => $ -> q1(x)"));
        assert_eq!(out.spec.rules.len(), 2);
    }

    #[test]
    fn rule_count_matches_the_tables() {
        for m in [loop_machine(), immediate_halt_machine(), delayed_halt_machine()] {
            let out = qm_to_stream_spec(&m).unwrap();
            let expected = 1 + m.delta0.len() + m.delta1.len() + m.delta2.len();
            assert_eq!(out.spec.rules.len(), expected);
        }
    }

    #[test]
    fn generated_specs_classify_mixed() {
        // machines with lookahead rules classify mixed (constant op GSOS,
        // state ops coGSOS); a delta0-only machine degenerates to pure GSOS
        for m in [immediate_halt_machine(), delayed_halt_machine()] {
            for out in [qm_to_stream_spec(&m).unwrap(), qm_to_lts_spec(&m).unwrap()] {
                let report = classify_spec(&out.spec);
                assert_eq!(report.verdict, SpecVerdict::MixedGsos, "{}", out.spec.render());
                assert_eq!(report.per_op[&out.constant], Some(FormatClass::Gsos));
                for state_op in out.op_of_state.values() {
                    assert_eq!(report.per_op[state_op], Some(FormatClass::CoGsos));
                }
            }
        }
        let out = qm_to_stream_spec(&loop_machine()).unwrap();
        assert_eq!(classify_spec(&out.spec).verdict, SpecVerdict::Gsos);
    }

    #[test]
    fn lts_spec_adds_one_r2prime_per_pending_pair() {
        let m = immediate_halt_machine();
        let stream = qm_to_stream_spec(&m).unwrap();
        let lts = qm_to_lts_spec(&m).unwrap();
        // delta0/delta1 empty: every (q, a) pair gets an R2' rule
        let pairs: usize = m.states.len() * m.alphabet.len();
        assert_eq!(lts.spec.rules.len(), stream.spec.rules.len() + pairs);
        assert!(lts.spec.render().contains("y -|"));
    }

    #[test]
    fn delta0_total_machine_has_no_r2prime() {
        let m = loop_machine();
        let stream = qm_to_stream_spec(&m).unwrap();
        let lts = qm_to_lts_spec(&m).unwrap();
        assert_eq!(stream.spec.rules, lts.spec.rules);
        assert_eq!(lts.spec.behavior, Behavior::Lts);
    }

    #[test]
    fn generated_specs_round_trip_through_the_dsl() {
        let out = qm_to_stream_spec(&delayed_halt_machine()).unwrap();
        let mut reparsed = parse_spec(&out.spec.render()).unwrap();
        reparsed.validate().unwrap();
        assert_eq!(reparsed, out.spec);
    }

    #[test]
    fn generated_stream_specs_are_functional() {
        for m in [loop_machine(), immediate_halt_machine(), delayed_halt_machine()] {
            let out = qm_to_stream_spec(&m).unwrap();
            let report = check_functionality(&out.spec);
            assert!(report.is_clean(), "{:?}", report.issues);
        }
    }

    #[test]
    fn awkward_state_names_are_mangled() {
        let mut m = loop_machine();
        m.states = vec!["1 bad".into()];
        m.start = "1 bad".into();
        m.delta0 = [("1 bad".into(), ("1 bad".into(), Letter::from("$")))].into();
        let out = qm_to_stream_spec(&m).unwrap();
        assert_eq!(out.op_of_state[&"1 bad".to_string()], Sym::from("q_1_bad"));
        // and the constant never collides with a state named C
        let mut m2 = loop_machine();
        m2.states = vec!["C".into()];
        m2.start = "C".into();
        m2.delta0 = [("C".into(), ("C".into(), Letter::from("$")))].into();
        let out2 = qm_to_stream_spec(&m2).unwrap();
        assert_eq!(out2.op_of_state[&"C".to_string()], Sym::from("q_C"));
    }

    #[test]
    fn oracle_on_the_loop_machine_is_flat() {
        // delta0 never removes letters, so |w_i| = i and every node re-wraps
        // the constant: C -$-> q1(C) -$-> q1(C) -$-> q1(C)
        let m = loop_machine();
        let prefix = match lemma_prefix_oracle(&m, 4).unwrap() {
            OracleResult::Prefix(p) => p,
            other => panic!("expected prefix, got {other:?}"),
        };
        assert_eq!(prefix.len(), 3);
        let q1c = Term::App(Sym::from("q1"), vec![Term::App(Sym::from("C"), vec![])]);
        assert_eq!(prefix.node(0).unwrap().to_string(), "C");
        for i in 1..=3 {
            assert_eq!(prefix.node(i).unwrap(), &q1c);
        }
        for l in prefix.labels() {
            assert_eq!(l, &Letter::from("$"));
        }
    }

    #[test]
    fn oracle_base_case_is_the_lone_constant() {
        let p = match lemma_prefix_oracle(&loop_machine(), 1).unwrap() {
            OracleResult::Prefix(p) => p,
            other => panic!("{other:?}"),
        };
        assert!(p.is_empty());
        assert_eq!(p.head().to_string(), "C");
    }

    #[test]
    fn oracle_reports_early_halts() {
        let m = immediate_halt_machine();
        assert_eq!(lemma_prefix_oracle(&m, 4).unwrap(), OracleResult::HaltsBefore(0));
        // n = 1 needs no steps at all
        assert!(matches!(
            lemma_prefix_oracle(&m, 1).unwrap(),
            OracleResult::Prefix(_)
        ));
    }

    #[test]
    fn oracle_labels_spell_out_the_queue() {
        // a_j ... a_{i-1} = w_i for every configuration along the run
        let m = delayed_halt_machine();
        let n = 3; // halts at step 2, so three nodes exist
        let prefix = match lemma_prefix_oracle(&m, n).unwrap() {
            OracleResult::Prefix(p) => p,
            other => panic!("{other:?}"),
        };
        let run = m.run_initial(n - 1).unwrap();
        let labels: Vec<Letter> = prefix.labels().cloned().collect();
        for i in 1..n {
            let conf = &run.trace[i - 1];
            let j = i - conf.queue.len();
            assert_eq!(labels[j..i].to_vec(), conf.queue, "at configuration {i}");
        }
    }

    #[test]
    fn oracle_nesting_steps_by_one() {
        // whenever node i is q(node j), its depth is one more than node j's
        let m = delayed_halt_machine();
        let prefix = match lemma_prefix_oracle(&m, 3).unwrap() {
            OracleResult::Prefix(p) => p,
            other => panic!("{other:?}"),
        };
        let run = m.run_initial(2).unwrap();
        for i in 1..3 {
            let j = i - run.trace[i - 1].queue.len();
            let ni = prefix.node(i).unwrap();
            let nj = prefix.node(j).unwrap();
            assert_eq!(ni.depth(), nj.depth() + 1);
            match ni {
                Term::App(_, args) => assert_eq!(&args[0], nj),
                _ => panic!("oracle nodes are applications"),
            }
        }
    }
}
