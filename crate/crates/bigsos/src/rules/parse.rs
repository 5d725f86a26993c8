//! Line-oriented parser for the rule DSL.
//!
//! ```text
//! # comment
//! behavior stream|lts
//! alphabet a, b, $
//! start-letter $
//! op NAME/ARITY
//! rule HEAD(args…): premise, premise, … => LABEL -> TERM
//! ```
//!
//! Premise forms: `x -L-> y` (positive), `x -L|` (no L-transition),
//! `x -|` (no transitions). A label token is a literal letter when it is
//! declared in the alphabet, and a lowercase metavariable otherwise. The
//! colon after a premise-free head may be omitted.

use thiserror::Error;

use crate::behavior::Letter;
use crate::term::{Signature, Sym, Term};

use super::{Behavior, LabelExpr, Premise, Rule, Spec};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, msg: msg.into() })
}

/// Characters that may not appear in letters or identifiers because the
/// grammar uses them as punctuation.
const RESERVED: &[char] = &[',', '#', '(', ')', ':', '|', '>', '-', '=', '/'];

fn valid_letter(tok: &str) -> bool {
    !tok.is_empty() && !tok.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

fn is_ident(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Parses the DSL. The result still needs [`Spec::validate`]; syntactic
/// problems are reported here with line/column positions, semantic ones
/// (unknown ops, arity or freshness violations, negative premises in stream
/// specs) by validation.
pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    let mut behavior: Option<Behavior> = None;
    let mut alphabet: Vec<Letter> = Vec::new();
    let mut start_letter: Option<Letter> = None;
    let mut operations: Vec<(Sym, usize)> = Vec::new();
    let mut rule_lines: Vec<(usize, String)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.find(char::is_whitespace) {
            Some(i) => (&line[..i], line[i..].trim()),
            None => (line, ""),
        };
        match head {
            "behavior" => {
                behavior = Some(match rest {
                    "stream" => Behavior::Stream,
                    "lts" => Behavior::Lts,
                    other => return err(line_no, 1, format!("unknown behavior `{other}`")),
                });
            }
            "alphabet" => {
                for tok in rest.split(',') {
                    let tok = tok.trim();
                    if !valid_letter(tok) {
                        return err(line_no, 1, format!("invalid letter `{tok}`"));
                    }
                    alphabet.push(Letter::from(tok));
                }
            }
            "start-letter" => {
                if !valid_letter(rest) {
                    return err(line_no, 1, format!("invalid letter `{rest}`"));
                }
                start_letter = Some(Letter::from(rest));
            }
            "op" => {
                let (name, arity) = match rest.split_once('/') {
                    Some((n, a)) => (n.trim(), a.trim()),
                    None => return err(line_no, 1, "expected `op NAME/ARITY`"),
                };
                if !is_ident(name) {
                    return err(line_no, 1, format!("invalid operation name `{name}`"));
                }
                let arity: usize = match arity.parse() {
                    Ok(a) => a,
                    Err(_) => return err(line_no, 1, format!("invalid arity `{arity}`")),
                };
                operations.push((Sym::from(name), arity));
            }
            "rule" => rule_lines.push((line_no, rest.to_string())),
            other => return err(line_no, 1, format!("unknown directive `{other}`")),
        }
    }

    let behavior = match behavior {
        Some(b) => b,
        None => return err(0, 0, "missing `behavior` line"),
    };
    let signature = Signature::new(operations)
        .map_err(|e| ParseError { line: 0, col: 0, msg: e.to_string() })?;

    let mut rules = Vec::new();
    for (line_no, body) in rule_lines {
        rules.push(parse_rule(line_no, &body, &alphabet, &signature)?);
    }

    Ok(Spec { behavior, alphabet, start_letter, signature, rules })
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(line: usize, text: &str) -> Self {
        Cursor { chars: text.chars().collect(), pos: 0, line }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        let mut i = self.pos;
        for c in s.chars() {
            if self.chars.get(i) != Some(&c) {
                return false;
            }
            i += 1;
        }
        true
    }

    fn ident(&mut self) -> Result<Sym, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start || !self.chars[start].is_alphabetic() && self.chars[start] != '_' {
            return err(self.line, start + 1, "expected identifier");
        }
        Ok(Sym(self.chars[start..self.pos].iter().collect()))
    }

    /// A label token: everything up to `-`, `|`, whitespace or end.
    fn label_token(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '-' || c == '|' || c.is_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return err(self.line, self.col(), "expected label");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn rest(&self) -> String {
        self.chars[self.pos..].iter().collect()
    }
}

fn resolve_label(
    line: usize,
    col: usize,
    tok: &str,
    alphabet: &[Letter],
) -> Result<LabelExpr, ParseError> {
    let as_letter = Letter::from(tok);
    if alphabet.contains(&as_letter) {
        return Ok(LabelExpr::Lit(as_letter));
    }
    if is_ident(tok) && tok.chars().next().is_some_and(char::is_lowercase) {
        return Ok(LabelExpr::Var(Sym::from(tok)));
    }
    err(
        line,
        col,
        format!("label `{tok}` is neither an alphabet letter nor a lowercase metavariable"),
    )
}

fn parse_rule(
    line: usize,
    body: &str,
    alphabet: &[Letter],
    signature: &Signature,
) -> Result<Rule, ParseError> {
    let mut cur = Cursor::new(line, body);
    let head_op = cur.ident()?;
    let mut arg_vars = Vec::new();
    cur.skip_ws();
    if cur.eat('(') {
        cur.skip_ws();
        if !cur.eat(')') {
            loop {
                arg_vars.push(cur.ident()?);
                cur.skip_ws();
                if cur.eat(')') {
                    break;
                }
                if !cur.eat(',') {
                    return err(line, cur.col(), "expected `,` or `)` in argument list");
                }
            }
        }
    }
    cur.skip_ws();
    let mut premises = Vec::new();
    let has_colon = cur.eat(':');
    if has_colon {
        cur.skip_ws();
        if !cur.starts_with("=>") {
            loop {
                premises.push(parse_premise(&mut cur, alphabet)?);
                cur.skip_ws();
                if cur.starts_with("=>") {
                    break;
                }
                if !cur.eat(',') {
                    return err(line, cur.col(), "expected `,` or `=>` after premise");
                }
                cur.skip_ws();
            }
        }
    }
    cur.skip_ws();
    if !(cur.eat('=') && cur.eat('>')) {
        return err(line, cur.col(), "expected `=>`");
    }
    let col = cur.col();
    let tok = cur.label_token()?;
    let concl_label = resolve_label(line, col, &tok, alphabet)?;
    cur.skip_ws();
    if !(cur.eat('-') && cur.eat('>')) {
        return err(line, cur.col(), "expected `->` before conclusion target");
    }
    let target_text = cur.rest();
    let concl_target = Term::parse(signature, &target_text).map_err(|e| ParseError {
        line,
        col: cur.col(),
        msg: e.to_string(),
    })?;
    Ok(Rule { head_op, arg_vars, premises, concl_label, concl_target })
}

fn parse_premise(cur: &mut Cursor, alphabet: &[Letter]) -> Result<Premise, ParseError> {
    let source = cur.ident()?;
    cur.skip_ws();
    if !cur.eat('-') {
        return err(cur.line, cur.col(), "expected `-` after premise source");
    }
    if cur.eat('|') {
        return Ok(Premise::NegAll { source });
    }
    let col = cur.col();
    let tok = cur.label_token()?;
    let label = resolve_label(cur.line, col, &tok, alphabet)?;
    cur.skip_ws();
    match cur.bump() {
        Some('-') => {
            if !cur.eat('>') {
                return err(cur.line, cur.col(), "expected `->` after premise label");
            }
            let target = cur.ident()?;
            Ok(Premise::Pos { source, label, target })
        }
        Some('|') => Ok(Premise::NegLabel { source, label }),
        _ => err(cur.line, cur.col(), "expected `->` or `|` after premise label"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_zip_spec() {
        let spec = parse_spec(
            "# interleave\n\
             behavior stream\n\
             alphabet a, b\n\
             op zip/2\n\
             rule zip(x, y): x -l-> u, y -m-> v => l -> zip(y, u)\n",
        )
        .unwrap();
        assert_eq!(spec.behavior, Behavior::Stream);
        assert_eq!(spec.signature.operations().len(), 1);
        assert_eq!(spec.rules.len(), 1);
        let r = &spec.rules[0];
        assert_eq!(r.arg_vars, vec![Sym::from("x"), Sym::from("y")]);
        assert_eq!(r.premises.len(), 2);
        assert_eq!(r.concl_label, LabelExpr::Var(Sym::from("l")));
        assert_eq!(r.concl_target.to_string(), "zip(y,u)");
    }

    #[test]
    fn premise_free_rule_with_and_without_colon() {
        for text in [
            "behavior stream\nalphabet $\nop C/0\nop q1/1\nrule C => $ -> q1(C)\n",
            "behavior stream\nalphabet $\nop C/0\nop q1/1\nrule C: => $ -> q1(C)\n",
        ] {
            let spec = parse_spec(text).unwrap();
            assert!(spec.rules[0].premises.is_empty());
            assert_eq!(spec.rules[0].concl_label, LabelExpr::Lit(Letter::from("$")));
        }
    }

    #[test]
    fn literal_letters_win_over_metavariables() {
        let spec = parse_spec(
            "behavior stream\nalphabet a, b\nop q/1\nrule q(x): x -a-> y => b -> q(y)\n",
        )
        .unwrap();
        match &spec.rules[0].premises[0] {
            Premise::Pos { label, .. } => assert_eq!(label, &LabelExpr::Lit(Letter::from("a"))),
            _ => panic!("expected positive premise"),
        }
    }

    #[test]
    fn negative_premise_forms() {
        let spec = parse_spec(
            "behavior lts\nalphabet a\nop q/1\n\
             rule q(x): x -a-> y, y -| => a -> q(x)\n\
             rule q(x): x -a|, x -a-> y => a -> q(y)\n",
        )
        .unwrap();
        assert!(matches!(spec.rules[0].premises[1], Premise::NegAll { .. }));
        assert!(matches!(spec.rules[1].premises[0], Premise::NegLabel { .. }));
    }

    #[test]
    fn non_ascii_letters() {
        let spec = parse_spec(
            "behavior stream\nalphabet $, €\nstart-letter $\nop C/0\nrule C => € -> C\n",
        )
        .unwrap();
        assert_eq!(spec.alphabet, vec![Letter::from("$"), Letter::from("€")]);
        assert_eq!(spec.start_letter, Some(Letter::from("$")));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_spec("behavior stream\nalphabet a\nop q/1\nrule q(x): x -a- y => a -> q(y)\n")
            .unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.col > 1);

        let e = parse_spec("behaviour stream\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("unknown directive"));
    }

    #[test]
    fn whitespace_insensitivity() {
        let a = parse_spec(
            "behavior stream\nalphabet a,b\nop q/1\nrule q( x ):x -a->y=>a->q( y )\n",
        )
        .unwrap();
        let b = parse_spec(
            "behavior stream\nalphabet a, b\nop q/1\nrule q(x): x -a-> y => a -> q(y)\n",
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
