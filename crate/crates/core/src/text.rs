//! Line-oriented machine documents.
//!
//! ```text
//! # comment
//! name: appender
//! tapes: 1
//! alphabet: > _ 0 1
//! states: s q
//! start: s
//! s (>) -> q (>,R)
//! q (1) -> q (1,R)
//! q (_) -> yes (1,S)
//! q * -> no (_,S)
//! ```
//!
//! `_` is the blank and `>` the start marker. A `*` read pattern is a
//! wildcard default covering every read tuple of that state with no explicit
//! rule. `mode: nondet` marks a relational machine, where several rule lines
//! may share a key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::machine::{
    specialize_default, valid_identifier, Action, Machine, MachineError, MachineSpec, Move,
    RuleSpec, Signature, Sym,
};
use crate::nondet::RelationalMachine;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("document declares mode `{found}` but a {expected} machine was requested")]
    Mode {
        found: &'static str,
        expected: &'static str,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Deterministic,
    Nondeterministic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Deterministic => "det",
            Mode::Nondeterministic => "nondet",
        }
    }
}

/// A parsed but not yet validated machine document.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MachineDocument {
    pub mode: Mode,
    pub spec: MachineSpec,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Star,
    Arrow,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Lexed {
                    tok: Tok::LParen,
                    col,
                });
                i += 1;
            }
            ')' => {
                out.push(Lexed {
                    tok: Tok::RParen,
                    col,
                });
                i += 1;
            }
            ',' => {
                out.push(Lexed {
                    tok: Tok::Comma,
                    col,
                });
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Lexed {
                    tok: Tok::Arrow,
                    col,
                });
                i += 2;
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | ',')
                    && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>'))
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word == "*" {
                    out.push(Lexed {
                        tok: Tok::Star,
                        col,
                    });
                } else if valid_identifier(&word) {
                    out.push(Lexed {
                        tok: Tok::Ident(word),
                        col,
                    });
                } else {
                    return Err(ParseError {
                        line: lineno,
                        column: col,
                        message: format!("invalid identifier `{word}`"),
                    });
                }
            }
        }
    }
    Ok(out)
}

struct RuleLine {
    line: usize,
    rule: RuleSpec,
    /// Column of every identifier, for undeclared-name errors.
    idents: Vec<(String, usize, bool)>,
}

struct Cursor<'a> {
    toks: &'a [Lexed],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let column = self.toks.get(self.pos).map_or(self.end_col, |t| t.col);
        Err(ParseError {
            line: self.line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some(Lexed {
                tok: Tok::Ident(s),
                col,
            }) => {
                self.pos += 1;
                Ok((s.clone(), *col))
            }
            _ => self.err(format!("expected {what}")),
        }
    }
}

fn parse_rule(line: &str, lineno: usize) -> Result<RuleLine, ParseError> {
    let toks = lex(line, lineno)?;
    let mut cur = Cursor {
        toks: &toks,
        pos: 0,
        line: lineno,
        end_col: line.chars().count() + 1,
    };
    let mut idents = Vec::new();
    let (state, col) = cur.ident("state name")?;
    idents.push((state.clone(), col, false));
    let read = if cur.peek() == Some(&Tok::Star) {
        cur.pos += 1;
        None
    } else {
        cur.expect(Tok::LParen, "`(` or `*`")?;
        let mut read = Vec::new();
        loop {
            let (s, col) = cur.ident("symbol")?;
            idents.push((s.clone(), col, true));
            read.push(s);
            match cur.peek() {
                Some(Tok::Comma) => cur.pos += 1,
                Some(Tok::RParen) => {
                    cur.pos += 1;
                    break;
                }
                _ => return cur.err("expected `,` or `)`"),
            }
        }
        Some(read)
    };
    cur.expect(Tok::Arrow, "`->`")?;
    let (next, col) = cur.ident("next state")?;
    idents.push((next.clone(), col, false));
    let mut writes = Vec::new();
    while cur.peek().is_some() {
        cur.expect(Tok::LParen, "`(`")?;
        let (w, col) = cur.ident("symbol")?;
        idents.push((w.clone(), col, true));
        cur.expect(Tok::Comma, "`,`")?;
        let (d, _) = cur.ident("direction L, R or S")?;
        let Some(mv) = Move::from_letter(&d) else {
            cur.pos -= 1;
            return cur.err(format!("invalid direction `{d}`"));
        };
        cur.expect(Tok::RParen, "`)`")?;
        writes.push((w, mv));
    }
    if writes.is_empty() {
        return cur.err("expected at least one (symbol,direction) pair");
    }
    Ok(RuleLine {
        line: lineno,
        rule: RuleSpec {
            state,
            read,
            next,
            writes,
        },
        idents,
    })
}

const HEADER_KEYS: [&str; 6] = ["name", "tapes", "alphabet", "states", "start", "mode"];

fn header_of(line: &str) -> Option<(&str, &str, usize)> {
    let (key, value) = line.split_once(':')?;
    let key_t = key.trim();
    if !HEADER_KEYS.contains(&key_t) || line.contains("->") {
        return None;
    }
    let col = key.chars().count() + 2;
    Some((key_t, value.trim(), col))
}

/// Parses a document without validating the rule table.
pub fn parse_document(text: &str) -> Result<MachineDocument, ParseError> {
    let mut headers: BTreeMap<&str, (String, usize, usize)> = BTreeMap::new();
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some((key, value, col)) = header_of(line) {
            if headers.contains_key(key) {
                return Err(ParseError {
                    line: lineno,
                    column: 1,
                    message: format!("header `{key}` given twice"),
                });
            }
            headers.insert(key, (value.to_string(), lineno, col));
        } else {
            rules.push(parse_rule(line, lineno)?);
        }
    }
    let missing = |key: &str| ParseError {
        line: 1,
        column: 1,
        message: format!("missing header `{key}:`"),
    };
    let (tapes, tl, tc) = headers.get("tapes").ok_or_else(|| missing("tapes"))?;
    let tape_count: usize = tapes.parse().map_err(|_| ParseError {
        line: *tl,
        column: *tc,
        message: format!("`tapes` must be a positive integer, got `{tapes}`"),
    })?;
    let list = |key: &str| -> Result<Vec<String>, ParseError> {
        let (v, _, _) = headers.get(key).ok_or_else(|| missing(key))?;
        Ok(v.split_whitespace().map(str::to_string).collect())
    };
    let alphabet = list("alphabet")?;
    let states = list("states")?;
    let (start, _, _) = headers.get("start").ok_or_else(|| missing("start"))?;
    let name = headers
        .get("name")
        .map_or_else(|| "unnamed".to_string(), |(v, _, _)| v.clone());
    let mode = match headers.get("mode") {
        None => Mode::Deterministic,
        Some((v, _, _)) if v == "det" => Mode::Deterministic,
        Some((v, _, _)) if v == "nondet" => Mode::Nondeterministic,
        Some((v, l, c)) => {
            return Err(ParseError {
                line: *l,
                column: *c,
                message: format!("unknown mode `{v}` (expected det or nondet)"),
            })
        }
    };

    for r in &rules {
        for (id, col, is_symbol) in &r.idents {
            let declared = if *is_symbol {
                alphabet.contains(id)
            } else {
                states.contains(id) || crate::machine::HALT_NAMES.contains(&id.as_str())
            };
            if !declared {
                let kind = if *is_symbol { "symbol" } else { "state" };
                return Err(ParseError {
                    line: r.line,
                    column: *col,
                    message: format!("undeclared {kind} `{id}`"),
                });
            }
        }
    }

    Ok(MachineDocument {
        mode,
        spec: MachineSpec {
            name,
            tape_count,
            alphabet,
            states,
            start: start.clone(),
            rules: rules.into_iter().map(|r| r.rule).collect(),
        },
    })
}

/// Parses and validates a deterministic machine.
pub fn parse_machine(text: &str) -> Result<Machine, TextError> {
    let doc = parse_document(text)?;
    if doc.mode != Mode::Deterministic {
        return Err(TextError::Mode {
            found: doc.mode.name(),
            expected: "deterministic",
        });
    }
    Ok(Machine::new(&doc.spec)?)
}

/// Parses a relational machine. Deterministic documents are accepted as
/// singleton relations.
pub fn parse_relational(text: &str) -> Result<RelationalMachine, TextError> {
    let doc = parse_document(text)?;
    Ok(RelationalMachine::new(&doc.spec)?)
}

/// Canonical text of a deterministic machine.
pub fn serialize_machine(machine: &Machine) -> String {
    let table: Vec<Vec<Action>> = machine.table().iter().map(|a| vec![a.clone()]).collect();
    serialize_table(machine.signature(), &table, Mode::Deterministic)
}

/// Canonical text of a relational machine.
pub fn serialize_relational(machine: &RelationalMachine) -> String {
    serialize_table(
        machine.signature(),
        machine.relation(),
        Mode::Nondeterministic,
    )
}

fn render_action(sig: &Signature, a: &Action) -> String {
    let mut s = String::from(sig.control_name(a.next));
    for (w, d) in &a.writes {
        let _ = write!(s, " ({},{})", sig.symbol_name(*w), d.letter());
    }
    s
}

fn specialize_all(defaults: &[Action], read: &[Sym]) -> Vec<Action> {
    let mut out: Vec<Action> = defaults
        .iter()
        .map(|d| specialize_default(d, read))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Rules are grouped by state name, sorted by read tuple within a state, and
/// each state's wildcard (when one reproduces at least two keys exactly)
/// comes last.
fn serialize_table(sig: &Signature, table: &[Vec<Action>], mode: Mode) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name: {}", sig.name);
    let _ = writeln!(out, "tapes: {}", sig.tape_count);
    let _ = writeln!(out, "alphabet: {}", sig.alphabet().join(" "));
    let _ = writeln!(out, "states: {}", sig.states().join(" "));
    let _ = writeln!(out, "start: {}", sig.state_name(sig.start_state()));
    if mode == Mode::Nondeterministic {
        let _ = writeln!(out, "mode: nondet");
    }
    out.push('\n');

    let per = sig.tuples_per_state();
    let mut order: Vec<usize> = (0..sig.states().len()).collect();
    order.sort_by(|a, b| sig.states()[*a].cmp(&sig.states()[*b]));
    for q in order {
        let keys: Vec<(Vec<Sym>, Vec<Action>)> = (q * per..(q + 1) * per)
            .map(|k| {
                let mut acts = table[k].clone();
                acts.sort();
                (sig.key_parts(k).1, acts)
            })
            .collect();

        // Candidate defaults come from keys that read no marker, since only
        // those pin down every tape's write.
        let mut best: Option<(usize, Vec<Action>)> = None;
        for (read, acts) in &keys {
            if read.contains(&Sym::START) {
                continue;
            }
            let cover = keys
                .iter()
                .filter(|(r, a)| specialize_all(acts, r) == *a)
                .count();
            let better = match &best {
                None => true,
                Some((c, b)) => cover > *c || (cover == *c && acts < b),
            };
            if better {
                best = Some((cover, acts.clone()));
            }
        }
        let default = best.filter(|(c, _)| *c >= 2).map(|(_, a)| a);

        let mut lines: Vec<(Vec<&str>, String)> = Vec::new();
        for (read, acts) in &keys {
            if let Some(d) = &default {
                if specialize_all(d, read) == *acts {
                    continue;
                }
            }
            let names: Vec<&str> = read.iter().map(|s| sig.symbol_name(*s)).collect();
            for a in acts {
                lines.push((names.clone(), render_action(sig, a)));
            }
        }
        lines.sort();
        let qname = &sig.states()[q];
        for (names, rhs) in lines {
            let _ = writeln!(out, "{qname} ({}) -> {rhs}", names.join(","));
        }
        if let Some(d) = default {
            for a in d {
                let _ = writeln!(out, "{qname} * -> {}", render_action(sig, &a));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Status;

    const APPENDER: &str = "\
# appends a 1 after a block of 1s
name: appender
tapes: 1
alphabet: > _ 0 1
states: s q
start: s
s (>) -> q (>,R)
s * -> no (_,S)
q (1) -> q (1,R)
q (_) -> yes (1,S)
q * -> no (_,S)
";

    #[test]
    fn parses_appender() {
        let m = parse_machine(APPENDER).unwrap();
        assert_eq!(m.signature().states().len(), 2);
        assert_eq!(m.name(), "appender");
        let x = m.parse_word("11").unwrap();
        let r = m.run(&x, 100).unwrap();
        assert_eq!(r.status, Status::Yes);
        assert_eq!(m.render_word(&r.output), "111");
    }

    #[test]
    fn undeclared_symbol_is_named() {
        let doc = APPENDER.replace("q (1) -> q (1,R)", "q (1) -> q (2,R)");
        let err = parse_machine(&doc).unwrap_err();
        match err {
            TextError::Syntax(e) => {
                assert_eq!(e.line, 9);
                assert_eq!(e.column, 13);
                assert!(e.message.contains("`2`"), "{}", e.message);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let doc = format!("{APPENDER}q (1) -> yes (1,S)\n");
        assert!(matches!(
            parse_machine(&doc),
            Err(TextError::Machine(MachineError::DuplicateRule { .. }))
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let doc = APPENDER.replace("q (_) -> yes (1,S)", "q (_) -> yes (1,X)");
        let err = parse_document(&doc).unwrap_err();
        assert_eq!((err.line, err.column), (10, 17));
        let doc = APPENDER.replace("q (_) -> yes (1,S)", "q (_) yes (1,S)");
        let err = parse_document(&doc).unwrap_err();
        assert_eq!((err.line, err.column), (10, 7));
        assert!(parse_document("tapes: x\n").is_err());
        assert!(parse_document("alphabet: > _\nstates: s\nstart: s\n").is_err());
    }

    #[test]
    fn serialize_is_canonical_and_round_trips() {
        let m = parse_machine(APPENDER).unwrap();
        let text = serialize_machine(&m);
        let back = parse_machine(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(serialize_machine(&back), text);
    }

    #[test]
    fn explicit_rules_recollapse_to_default() {
        let explicit = "\
name: e
tapes: 1
alphabet: > _ a b
states: s
start: s
s (>) -> h (>,R)
s (_) -> no (a,S)
s (a) -> no (a,S)
s (b) -> yes (b,S)
";
        let m = parse_machine(explicit).unwrap();
        let text = serialize_machine(&m);
        assert!(text.contains("s * -> no (a,S)"), "{text}");
        assert!(text.contains("s (b) -> yes (b,S)"));
        assert!(text.contains("s (>) -> h (>,R)"));
        assert_eq!(parse_machine(&text).unwrap().table(), m.table());
    }

    #[test]
    fn nondet_mode_requires_relational_parser() {
        let doc = APPENDER.replace("start: s", "start: s\nmode: nondet");
        assert!(matches!(parse_machine(&doc), Err(TextError::Mode { .. })));
        let rel = parse_relational(&doc).unwrap();
        let text = serialize_relational(&rel);
        assert!(text.contains("mode: nondet"));
        assert_eq!(parse_relational(&text).unwrap(), rel);
    }
}
