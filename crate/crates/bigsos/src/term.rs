//! Signatures and terms over them.
//!
//! A [`Signature`] is a finite list of operation symbols with arities;
//! constants are arity-0 operations. A [`Term`] is either a variable or an
//! operation applied to argument terms. Substitution glues terms built of
//! terms together and satisfies the usual unit and associativity laws, which
//! are property-tested below.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An interned-by-value symbol: an operation name or a variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sym(pub String);

impl Sym {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym(s.to_string())
    }
}

impl From<String> for Sym {
    fn from(s: String) -> Self {
        Sym(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("operation `{op}` expects {expected} arguments, got {got}")]
    ArityMismatch { op: Sym, expected: usize, got: usize },
    #[error("unknown operation `{0}`")]
    UnknownOp(Sym),
    #[error("duplicate operation `{0}` in signature")]
    DuplicateOp(Sym),
    #[error("unbound variable `{0}` in substitution")]
    UnboundVar(Sym),
    #[error("term syntax error at byte {at}: {msg}")]
    Syntax { at: usize, msg: String },
}

/// A finite algebraic signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    operations: Vec<(Sym, usize)>,
}

impl Signature {
    /// Builds a signature, rejecting duplicate operation names.
    pub fn new(operations: Vec<(Sym, usize)>) -> Result<Self, TermError> {
        let mut seen = BTreeSet::new();
        for (op, _) in &operations {
            if !seen.insert(op.clone()) {
                return Err(TermError::DuplicateOp(op.clone()));
            }
        }
        Ok(Signature { operations })
    }

    pub fn operations(&self) -> &[(Sym, usize)] {
        &self.operations
    }

    pub fn arity(&self, op: &Sym) -> Option<usize> {
        self.operations.iter().find(|(o, _)| o == op).map(|(_, a)| *a)
    }

    pub fn contains(&self, op: &Sym) -> bool {
        self.arity(op).is_some()
    }

    pub fn constants(&self) -> impl Iterator<Item = &Sym> {
        self.operations.iter().filter(|(_, a)| *a == 0).map(|(o, _)| o)
    }

    /// Enumerates all closed terms of size at most `max_size`, smallest
    /// first, in a deterministic order. Size counts operation nodes.
    pub fn closed_terms(&self, max_size: usize) -> Vec<Term> {
        let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max_size + 1];
        for size in 1..=max_size {
            let mut here = Vec::new();
            for (op, arity) in &self.operations {
                if *arity == 0 {
                    if size == 1 {
                        here.push(Term::App(op.clone(), Vec::new()));
                    }
                    continue;
                }
                // distribute size - 1 over `arity` children, each >= 1
                if size < 1 + *arity {
                    continue;
                }
                let mut stack: Vec<(Vec<Term>, usize)> = vec![(Vec::new(), size - 1)];
                while let Some((args, budget)) = stack.pop() {
                    let remaining = arity - args.len();
                    if remaining == 0 {
                        if budget == 0 {
                            here.push(Term::App(op.clone(), args));
                        }
                        continue;
                    }
                    let max_here = budget.saturating_sub(remaining - 1);
                    for child_size in 1..=max_here {
                        for child in &by_size[child_size] {
                            let mut next = args.clone();
                            next.push(child.clone());
                            stack.push((next, budget - child_size));
                        }
                    }
                }
            }
            here.sort();
            by_size[size] = here;
        }
        by_size.into_iter().flatten().collect()
    }
}

/// A term of the free monad over a signature: a variable or an operation
/// applied to as many argument terms as its arity demands.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(Sym),
    App(Sym, Vec<Term>),
}

/// The monad unit: a variable as a term.
pub fn var(name: impl Into<Sym>) -> Term {
    Term::Var(name.into())
}

/// Interprets a single operation symbol applied to variables as a depth-1
/// term, checking the arity against the signature.
pub fn flat_embed(sig: &Signature, op: impl Into<Sym>, args: &[Sym]) -> Result<Term, TermError> {
    let op = op.into();
    match sig.arity(&op) {
        None => Err(TermError::UnknownOp(op)),
        Some(arity) if arity != args.len() => Err(TermError::ArityMismatch {
            op,
            expected: arity,
            got: args.len(),
        }),
        Some(_) => Ok(Term::App(op, args.iter().cloned().map(Term::Var).collect())),
    }
}

impl Term {
    pub fn app(op: impl Into<Sym>, args: Vec<Term>) -> Term {
        Term::App(op.into(), args)
    }

    pub fn constant(op: impl Into<Sym>) -> Term {
        Term::App(op.into(), Vec::new())
    }

    /// Depth: 0 for variables, 1 + max over arguments for applications.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Number of operation nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Free variables, in first-occurrence-insensitive sorted order.
    pub fn vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Sym>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_closed),
        }
    }

    pub fn contains_var(&self, name: &Sym) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(name)),
        }
    }

    /// Simultaneous substitution. Every variable of the term must be bound
    /// in `env`; this is the monad multiplication restricted to the
    /// environment form used throughout the crate.
    pub fn subst(&self, env: &dyn Fn(&Sym) -> Option<Term>) -> Result<Term, TermError> {
        match self {
            Term::Var(v) => env(v).ok_or_else(|| TermError::UnboundVar(v.clone())),
            Term::App(op, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(a.subst(env)?);
                }
                Ok(Term::App(op.clone(), out))
            }
        }
    }

    /// Substitution from a map; see [`Term::subst`].
    pub fn subst_map(
        &self,
        env: &std::collections::BTreeMap<Sym, Term>,
    ) -> Result<Term, TermError> {
        self.subst(&|v| env.get(v).cloned())
    }

    /// Checks that every App node uses a signature operation at its arity.
    pub fn well_formed(&self, sig: &Signature) -> Result<(), TermError> {
        match self {
            Term::Var(_) => Ok(()),
            Term::App(op, args) => {
                match sig.arity(op) {
                    None => return Err(TermError::UnknownOp(op.clone())),
                    Some(a) if a != args.len() => {
                        return Err(TermError::ArityMismatch {
                            op: op.clone(),
                            expected: a,
                            got: args.len(),
                        })
                    }
                    Some(_) => {}
                }
                for a in args {
                    a.well_formed(sig)?;
                }
                Ok(())
            }
        }
    }

    /// Parses the `op(arg,…)` / bare-identifier grammar. Whether a bare
    /// identifier is a constant or a variable is decided by the signature.
    pub fn parse(sig: &Signature, text: &str) -> Result<Term, TermError> {
        let bytes: Vec<char> = text.chars().collect();
        let mut pos = 0usize;
        let term = parse_term(sig, &bytes, &mut pos)?;
        skip_ws(&bytes, &mut pos);
        if pos != bytes.len() {
            return Err(TermError::Syntax {
                at: pos,
                msg: format!("trailing input `{}`", bytes[pos..].iter().collect::<String>()),
            });
        }
        Ok(term)
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn ident(chars: &[char], pos: &mut usize) -> Option<String> {
    skip_ws(chars, pos);
    let start = *pos;
    while *pos < chars.len() {
        let c = chars[*pos];
        if c.is_alphanumeric() || c == '_' || c == '\'' {
            *pos += 1;
        } else {
            break;
        }
    }
    if *pos == start {
        None
    } else {
        Some(chars[start..*pos].iter().collect())
    }
}

fn parse_term(sig: &Signature, chars: &[char], pos: &mut usize) -> Result<Term, TermError> {
    let name = ident(chars, pos).ok_or(TermError::Syntax {
        at: *pos,
        msg: "expected identifier".into(),
    })?;
    let sym = Sym(name);
    skip_ws(chars, pos);
    if *pos < chars.len() && chars[*pos] == '(' {
        *pos += 1;
        let mut args = Vec::new();
        skip_ws(chars, pos);
        if *pos < chars.len() && chars[*pos] == ')' {
            *pos += 1;
        } else {
            loop {
                args.push(parse_term(sig, chars, pos)?);
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    Some(',') => {
                        *pos += 1;
                    }
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    _ => {
                        return Err(TermError::Syntax {
                            at: *pos,
                            msg: "expected `,` or `)`".into(),
                        })
                    }
                }
            }
        }
        match sig.arity(&sym) {
            None => Err(TermError::UnknownOp(sym)),
            Some(a) if a != args.len() => Err(TermError::ArityMismatch {
                op: sym,
                expected: a,
                got: args.len(),
            }),
            Some(_) => Ok(Term::App(sym, args)),
        }
    } else {
        // bare identifier: constant if the signature says so, else variable
        match sig.arity(&sym) {
            Some(0) => Ok(Term::App(sym, Vec::new())),
            Some(a) => Err(TermError::ArityMismatch {
                op: sym,
                expected: a,
                got: 0,
            }),
            None => Ok(Term::Var(sym)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(op, args) => {
                if args.is_empty() {
                    write!(f, "{op}")
                } else {
                    write!(f, "{op}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
