//! Queue machines and their simulator.
//!
//! A [`QueueMachine`] is a deterministic finite automaton with a FIFO queue.
//! In each step it removes zero, one, or two letters from the front (by
//! whichever of the partial maps `delta0`, `delta1`, `delta2` is defined,
//! in that priority) and appends exactly one letter at the back. The three
//! maps must be disjointly defined and jointly total: for each state `q` and
//! letters `a, b`, exactly one of `delta0(q)`, `delta1(q,a)`, `delta2(q,a,b)`
//! is defined. A run terminates exactly in a configuration with a one-letter
//! queue whose letter admits neither a `delta0` nor a `delta1` move.
//!
//! [`ClassicalQm`] is the textbook variant (remove one letter, append a
//! word, halt when the queue empties); [`classical_to_qm`] compiles it into
//! the three-map form so that termination from the initial configuration is
//! preserved in both directions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::Letter;

pub type State = String;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QmError {
    #[error("machine is invalid: {0}")]
    Invalid(String),
    #[error("step from an empty queue (unreachable from the initial configuration)")]
    EmptyQueue,
    #[error("machine file error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueMachine {
    pub states: Vec<State>,
    pub alphabet: Vec<Letter>,
    pub dollar: Letter,
    pub start: State,
    pub delta0: BTreeMap<State, (State, Letter)>,
    pub delta1: BTreeMap<(State, Letter), (State, Letter)>,
    pub delta2: BTreeMap<(State, Letter, Letter), (State, Letter)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub state: State,
    /// Queue content, front at index 0.
    pub queue: Vec<Letter>,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word: String = self.queue.iter().map(Letter::to_string).collect();
        write!(f, "{} | {}", self.state, word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepResult {
    Next(Configuration),
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    /// Terminated after exactly this many steps.
    HaltedAt(usize),
    StillRunning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub trace: Vec<Configuration>,
    pub outcome: RunOutcome,
}

impl QueueMachine {
    pub fn initial(&self) -> Configuration {
        Configuration { state: self.start.clone(), queue: vec![self.dollar.clone()] }
    }

    /// Diagnostics for the disjointly-defined-and-jointly-total condition
    /// plus basic referential integrity. Empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.states.contains(&self.start) {
            out.push(format!("start state `{}` not in state list", self.start));
        }
        if !self.alphabet.contains(&self.dollar) {
            out.push(format!("dollar letter `{}` not in alphabet", self.dollar));
        }
        let mut seen = std::collections::BTreeSet::new();
        for q in &self.states {
            if q.is_empty() || q.contains(',') {
                out.push(format!("state name `{q}` must be nonempty and comma-free"));
            }
            if !seen.insert(q) {
                out.push(format!("duplicate state name `{q}`"));
            }
        }
        let check_target = |out: &mut Vec<String>, what: &str, q: &State, c: &Letter| {
            if !self.states.contains(q) {
                out.push(format!("{what}: target state `{q}` not in state list"));
            }
            if !self.alphabet.contains(c) {
                out.push(format!("{what}: appended letter `{c}` not in alphabet"));
            }
        };
        for (q, (q2, c)) in &self.delta0 {
            check_target(&mut out, &format!("delta0({q})"), q2, c);
        }
        for ((q, a), (q2, c)) in &self.delta1 {
            if !self.alphabet.contains(a) {
                out.push(format!("delta1({q},{a}): letter `{a}` not in alphabet"));
            }
            check_target(&mut out, &format!("delta1({q},{a})"), q2, c);
        }
        for ((q, a, b), (q2, c)) in &self.delta2 {
            for l in [a, b] {
                if !self.alphabet.contains(l) {
                    out.push(format!("delta2({q},{a},{b}): letter `{l}` not in alphabet"));
                }
            }
            check_target(&mut out, &format!("delta2({q},{a},{b})"), q2, c);
        }
        for q in &self.states {
            for a in &self.alphabet {
                for b in &self.alphabet {
                    let d0 = self.delta0.contains_key(q) as usize;
                    let d1 = self.delta1.contains_key(&(q.clone(), a.clone())) as usize;
                    let d2 = self
                        .delta2
                        .contains_key(&(q.clone(), a.clone(), b.clone()))
                        as usize;
                    match d0 + d1 + d2 {
                        1 => {}
                        0 => out.push(format!(
                            "nothing defined at ({q},{a},{b}): joint totality broken"
                        )),
                        _ => out.push(format!(
                            "multiple clauses defined at ({q},{a},{b}): disjointness broken"
                        )),
                    }
                }
            }
        }
        out
    }

    /// One transition; clause priority delta0 > delta1 > delta2.
    pub fn step(&self, c: &Configuration) -> Result<StepResult, QmError> {
        if c.queue.is_empty() {
            return Err(QmError::EmptyQueue);
        }
        if let Some((q2, out)) = self.delta0.get(&c.state) {
            let mut queue = c.queue.clone();
            queue.push(out.clone());
            return Ok(StepResult::Next(Configuration { state: q2.clone(), queue }));
        }
        let a = &c.queue[0];
        if let Some((q2, out)) = self.delta1.get(&(c.state.clone(), a.clone())) {
            let mut queue = c.queue[1..].to_vec();
            queue.push(out.clone());
            return Ok(StepResult::Next(Configuration { state: q2.clone(), queue }));
        }
        if c.queue.len() == 1 {
            return Ok(StepResult::Terminated);
        }
        let b = &c.queue[1];
        if let Some((q2, out)) =
            self.delta2.get(&(c.state.clone(), a.clone(), b.clone()))
        {
            let mut queue = c.queue[2..].to_vec();
            queue.push(out.clone());
            return Ok(StepResult::Next(Configuration { state: q2.clone(), queue }));
        }
        // unreachable for validated machines: delta2 is total where the
        // other clauses are undefined
        Err(QmError::Invalid(format!(
            "no clause applies in state {} with queue front {a}{b}",
            c.state
        )))
    }

    /// Runs up to `fuel` steps; the trace includes the start configuration
    /// and every successor.
    pub fn run(&self, start: Configuration, fuel: usize) -> Result<RunResult, QmError> {
        let mut trace = vec![start];
        for k in 0..fuel {
            match self.step(trace.last().expect("trace nonempty"))? {
                StepResult::Next(c) => trace.push(c),
                StepResult::Terminated => {
                    return Ok(RunResult { trace, outcome: RunOutcome::HaltedAt(k) })
                }
            }
        }
        // a final probe so that halting exactly at the fuel horizon is seen
        match self.step(trace.last().expect("trace nonempty"))? {
            StepResult::Terminated => {
                let k = trace.len() - 1;
                Ok(RunResult { trace, outcome: RunOutcome::HaltedAt(k) })
            }
            StepResult::Next(_) => Ok(RunResult { trace, outcome: RunOutcome::StillRunning }),
        }
    }

    pub fn run_initial(&self, fuel: usize) -> Result<RunResult, QmError> {
        self.run(self.initial(), fuel)
    }

    /// Like [`QueueMachine::run`] but without recording the trace; the queue
    /// is mutated in place, so long runs stay linear in the fuel.
    pub fn run_outcome(&self, start: &Configuration, fuel: usize) -> Result<RunOutcome, QmError> {
        let mut state = start.state.clone();
        let mut queue: std::collections::VecDeque<Letter> =
            start.queue.iter().cloned().collect();
        for k in 0..=fuel {
            if queue.is_empty() {
                return Err(QmError::EmptyQueue);
            }
            let step: Option<(State, Letter, usize)> =
                if let Some((q2, c)) = self.delta0.get(&state) {
                    Some((q2.clone(), c.clone(), 0))
                } else {
                    let a = queue.front().expect("nonempty").clone();
                    if let Some((q2, c)) = self.delta1.get(&(state.clone(), a.clone())) {
                        Some((q2.clone(), c.clone(), 1))
                    } else if queue.len() == 1 {
                        return Ok(RunOutcome::HaltedAt(k));
                    } else {
                        let b = queue[1].clone();
                        match self.delta2.get(&(state.clone(), a, b)) {
                            Some((q2, c)) => Some((q2.clone(), c.clone(), 2)),
                            None => {
                                return Err(QmError::Invalid(format!(
                                    "no clause applies in state {state}"
                                )))
                            }
                        }
                    }
                };
            if k == fuel {
                break;
            }
            let (q2, c, removed) = step.expect("checked above");
            for _ in 0..removed {
                queue.pop_front();
            }
            queue.push_back(c);
            state = q2;
        }
        Ok(RunOutcome::StillRunning)
    }

    pub fn run_outcome_initial(&self, fuel: usize) -> Result<RunOutcome, QmError> {
        self.run_outcome(&self.initial(), fuel)
    }
}

/// The classical queue machine: total transition map, one letter removed and
/// a word appended per step, halting exactly when the queue empties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalQm {
    pub states: Vec<State>,
    pub alphabet: Vec<Letter>,
    pub dollar: Letter,
    pub start: State,
    pub delta: BTreeMap<(State, Letter), (State, Vec<Letter>)>,
}

impl ClassicalQm {
    pub fn initial(&self) -> Configuration {
        Configuration { state: self.start.clone(), queue: vec![self.dollar.clone()] }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.states.contains(&self.start) {
            out.push(format!("start state `{}` not in state list", self.start));
        }
        if !self.alphabet.contains(&self.dollar) {
            out.push(format!("dollar letter `{}` not in alphabet", self.dollar));
        }
        for q in &self.states {
            for a in &self.alphabet {
                if !self.delta.contains_key(&(q.clone(), a.clone())) {
                    out.push(format!("delta({q},{a}) undefined: delta must be total"));
                }
            }
        }
        for ((_, _), (q2, w)) in &self.delta {
            if !self.states.contains(q2) {
                out.push(format!("target state `{q2}` not in state list"));
            }
            for c in w {
                if !self.alphabet.contains(c) {
                    out.push(format!("appended letter `{c}` not in alphabet"));
                }
            }
        }
        out
    }

    /// Runs up to `fuel` steps. Halting means the queue became empty.
    pub fn run_initial(&self, fuel: usize) -> Result<RunResult, QmError> {
        let mut trace = vec![self.initial()];
        for k in 0..=fuel {
            let c = trace.last().expect("trace nonempty").clone();
            if c.queue.is_empty() {
                return Ok(RunResult { trace, outcome: RunOutcome::HaltedAt(k) });
            }
            if k == fuel {
                break;
            }
            let a = c.queue[0].clone();
            let (q2, w) = self
                .delta
                .get(&(c.state.clone(), a))
                .ok_or_else(|| QmError::Invalid("delta not total".into()))?;
            let mut queue = c.queue[1..].to_vec();
            queue.extend(w.iter().cloned());
            trace.push(Configuration { state: q2.clone(), queue });
        }
        Ok(RunResult { trace, outcome: RunOutcome::StillRunning })
    }
}

/// Name of the blank letter introduced by [`classical_to_qm`]. Must not
/// collide with the classical machine's alphabet.
const BLANK: &str = "□";

/// Compiles a classical queue machine into the three-map variant over the
/// extended alphabet `A ∪ {□}`, preserving termination from the initial
/// configuration in both directions.
///
/// A classical step `delta(q,a) = (q', w)` with a nonempty `w` becomes a
/// `delta1` move that appends the first letter of `w`, followed by a chain of
/// append-only (`delta0`) states for the remaining letters. An erasing step
/// (`w` empty) appends the fresh blank `□` instead. Blanks are skipped when
/// read: `delta2(q, □, b)` processes `b` as if it were the front letter, and
/// `delta2(q, □, □)` shrinks runs of blanks. `delta1(q, □)` is left undefined
/// everywhere, so a queue holding a single blank terminates, which happens
/// exactly after the classical machine's queue has emptied.
pub fn classical_to_qm(cm: &ClassicalQm) -> QueueMachine {
    let blank = Letter::from(BLANK);
    debug_assert!(!cm.alphabet.contains(&blank), "blank letter must be fresh");
    let mut alphabet = cm.alphabet.clone();
    alphabet.push(blank.clone());

    let mut states = cm.states.clone();
    let mut delta0 = BTreeMap::new();
    let mut delta1 = BTreeMap::new();
    let mut delta2 = BTreeMap::new();

    // appender chains, shared per (target state, word suffix)
    let mut appenders: BTreeMap<(State, Vec<Letter>), State> = BTreeMap::new();

    fn appender_chain(
        q_target: &State,
        suffix: &[Letter],
        states: &mut Vec<State>,
        delta0: &mut BTreeMap<State, (State, Letter)>,
        appenders: &mut BTreeMap<(State, Vec<Letter>), State>,
    ) -> State {
        if suffix.is_empty() {
            return q_target.clone();
        }
        let key = (q_target.clone(), suffix.to_vec());
        if let Some(s) = appenders.get(&key) {
            return s.clone();
        }
        let next = appender_chain(q_target, &suffix[1..], states, delta0, appenders);
        let name = format!("app_{}_{}", q_target, render_word(suffix));
        states.push(name.clone());
        delta0.insert(name.clone(), (next, suffix[0].clone()));
        appenders.insert(key, name.clone());
        name
    }

    // entry move for processing front letter `a` in state `q`
    let mut entry_move = |q: &State, a: &Letter| -> (State, Letter) {
        let (q2, w) = cm
            .delta
            .get(&(q.clone(), a.clone()))
            .expect("classical delta is total")
            .clone();
        if w.is_empty() {
            (q2, blank.clone())
        } else {
            let tail_entry =
                appender_chain(&q2, &w[1..], &mut states, &mut delta0, &mut appenders);
            (tail_entry, w[0].clone())
        }
    };

    for q in &cm.states {
        for a in &cm.alphabet {
            delta1.insert((q.clone(), a.clone()), entry_move(q, a));
        }
        // blank at the front: look past it
        for b in &cm.alphabet {
            delta2.insert((q.clone(), blank.clone(), b.clone()), entry_move(q, b));
        }
        delta2.insert(
            (q.clone(), blank.clone(), blank.clone()),
            (q.clone(), blank.clone()),
        );
    }

    QueueMachine {
        states,
        alphabet,
        dollar: cm.dollar.clone(),
        start: cm.start.clone(),
        delta0,
        delta1,
        delta2,
    }
}

fn render_word(w: &[Letter]) -> String {
    w.iter().map(Letter::to_string).collect()
}

// ---------------------------------------------------------------------------
// JSON machine files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct QmFile {
    states: Vec<String>,
    alphabet: Vec<String>,
    dollar: String,
    start: String,
    #[serde(default)]
    delta0: BTreeMap<String, (String, String)>,
    #[serde(default)]
    delta1: BTreeMap<String, (String, String)>,
    #[serde(default)]
    delta2: BTreeMap<String, (String, String)>,
}

#[derive(Serialize, Deserialize)]
struct ClassicalFile {
    states: Vec<String>,
    alphabet: Vec<String>,
    dollar: String,
    start: String,
    delta: BTreeMap<String, (String, String)>,
}

fn check_letters(alphabet: &[String]) -> Result<Vec<Letter>, QmError> {
    let mut out = Vec::new();
    for l in alphabet {
        if l.chars().count() != 1 {
            return Err(QmError::Format(format!(
                "letter `{l}` must be a single character so map keys and words parse unambiguously"
            )));
        }
        if l == "," {
            return Err(QmError::Format("`,` cannot be a letter".into()));
        }
        out.push(Letter(l.clone()));
    }
    Ok(out)
}

fn split_key(key: &str, parts: usize) -> Result<Vec<String>, QmError> {
    let fields: Vec<String> = key.split(',').map(str::to_string).collect();
    if fields.len() != parts {
        return Err(QmError::Format(format!(
            "key `{key}` must have {parts} comma-separated fields"
        )));
    }
    Ok(fields)
}

impl QueueMachine {
    pub fn from_json(text: &str) -> Result<Self, QmError> {
        let file: QmFile =
            serde_json::from_str(text).map_err(|e| QmError::Format(e.to_string()))?;
        let alphabet = check_letters(&file.alphabet)?;
        let mut delta0 = BTreeMap::new();
        for (k, (q2, c)) in file.delta0 {
            delta0.insert(k, (q2, Letter(c)));
        }
        let mut delta1 = BTreeMap::new();
        for (k, (q2, c)) in file.delta1 {
            let f = split_key(&k, 2)?;
            delta1.insert((f[0].clone(), Letter(f[1].clone())), (q2, Letter(c)));
        }
        let mut delta2 = BTreeMap::new();
        for (k, (q2, c)) in file.delta2 {
            let f = split_key(&k, 3)?;
            delta2.insert(
                (f[0].clone(), Letter(f[1].clone()), Letter(f[2].clone())),
                (q2, Letter(c)),
            );
        }
        Ok(QueueMachine {
            states: file.states,
            alphabet,
            dollar: Letter(file.dollar),
            start: file.start,
            delta0,
            delta1,
            delta2,
        })
    }

    pub fn to_json(&self) -> String {
        let file = QmFile {
            states: self.states.clone(),
            alphabet: self.alphabet.iter().map(|l| l.0.clone()).collect(),
            dollar: self.dollar.0.clone(),
            start: self.start.clone(),
            delta0: self
                .delta0
                .iter()
                .map(|(q, (q2, c))| (q.clone(), (q2.clone(), c.0.clone())))
                .collect(),
            delta1: self
                .delta1
                .iter()
                .map(|((q, a), (q2, c))| (format!("{q},{a}"), (q2.clone(), c.0.clone())))
                .collect(),
            delta2: self
                .delta2
                .iter()
                .map(|((q, a, b), (q2, c))| (format!("{q},{a},{b}"), (q2.clone(), c.0.clone())))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("machine serializes")
    }
}

impl ClassicalQm {
    pub fn from_json(text: &str) -> Result<Self, QmError> {
        let file: ClassicalFile =
            serde_json::from_str(text).map_err(|e| QmError::Format(e.to_string()))?;
        let alphabet = check_letters(&file.alphabet)?;
        let mut delta = BTreeMap::new();
        for (k, (q2, w)) in file.delta {
            let f = split_key(&k, 2)?;
            let word: Vec<Letter> = w.chars().map(|c| Letter(c.to_string())).collect();
            delta.insert((f[0].clone(), Letter(f[1].clone())), (q2, word));
        }
        Ok(ClassicalQm {
            states: file.states,
            alphabet,
            dollar: Letter(file.dollar),
            start: file.start,
            delta,
        })
    }

    pub fn to_json(&self) -> String {
        let file = ClassicalFile {
            states: self.states.clone(),
            alphabet: self.alphabet.iter().map(|l| l.0.clone()).collect(),
            dollar: self.dollar.0.clone(),
            start: self.start.clone(),
            delta: self
                .delta
                .iter()
                .map(|((q, a), (q2, w))| {
                    (format!("{q},{a}"), (q2.clone(), render_word(w)))
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("machine serializes")
    }
}
