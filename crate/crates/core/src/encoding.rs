//! Flat encoding of a machine/input pair over a fixed finite alphabet.
//!
//! The encoding uses only the characters `0-9 a-f ; , #`:
//!
//! ```text
//! pair    := machine "#" input
//! machine := name ";" k ";" S ";" Q ";" start ";" symbols ";" states (";" action){Q*S^k}
//! symbols := hex ("," hex){S-1}          S names; ">" and "_" come first
//! states  := hex ("," hex){Q-1}          Q names
//! action  := next ("," write "," move){k}
//! input   := "" | index ("," index)*     symbol indices
//! ```
//!
//! `name` and every identifier are the lowercase hex of their UTF-8 bytes.
//! Numbers are decimal. `next` is a state index, or `Q`, `Q+1`, `Q+2` for
//! `h`, `yes`, `no`. Moves are `0` (L), `1` (R), `2` (S). Actions are listed
//! state-major, read tuples in mixed radix with tape 1 most significant.
//! Every field is delimited, so decoding is the inverse of encoding and the
//! encoding is injective.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::machine::{Control, Machine, MachineError, MachineSpec, Move, RuleSpec, Sym};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn malformed<T>(msg: impl Into<String>) -> Result<T, EncodingError> {
    Err(EncodingError::Malformed(msg.into()))
}

/// An encoded `<M;x>` string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodedPair(String);

impl EncodedPair {
    /// Wraps a string after checking it uses only the encoding alphabet.
    pub fn new(s: impl Into<String>) -> Result<EncodedPair, EncodingError> {
        let s = s.into();
        if let Some(c) = s
            .chars()
            .find(|c| !matches!(c, '0'..='9' | 'a'..='f' | ';' | ',' | '#'))
        {
            return malformed(format!("character `{c}` outside the encoding alphabet"));
        }
        Ok(EncodedPair(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EncodedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn hex(s: &str) -> String {
    s.bytes().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

fn unhex(s: &str) -> Result<String, EncodingError> {
    if !s.len().is_multiple_of(2) {
        return malformed("odd-length hex identifier");
    }
    let bytes = (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16))
        .collect::<Result<Vec<u8>, _>>()
        .map_err(|_| EncodingError::Malformed(format!("bad hex `{s}`")))?;
    String::from_utf8(bytes).map_err(|_| EncodingError::Malformed("identifier is not UTF-8".into()))
}

fn move_code(m: Move) -> u32 {
    match m {
        Move::Left => 0,
        Move::Right => 1,
        Move::Stay => 2,
    }
}

pub(crate) fn move_from_code(c: u32) -> Option<Move> {
    match c {
        0 => Some(Move::Left),
        1 => Some(Move::Right),
        2 => Some(Move::Stay),
        _ => None,
    }
}

/// Encodes a machine and an input word over its alphabet.
pub fn encode_pair(machine: &Machine, input: &[Sym]) -> Result<EncodedPair, EncodingError> {
    let sig = machine.signature();
    sig.check_word(input)?;
    let q = sig.states().len() as u32;
    let mut out = String::new();
    let _ = write!(
        out,
        "{};{};{};{};{};",
        hex(&sig.name),
        sig.tape_count,
        sig.alphabet().len(),
        q,
        sig.start_state().0
    );
    let syms: Vec<String> = sig.alphabet().iter().map(|s| hex(s)).collect();
    out.push_str(&syms.join(","));
    out.push(';');
    let states: Vec<String> = sig.states().iter().map(|s| hex(s)).collect();
    out.push_str(&states.join(","));
    for action in machine.table() {
        let next = match action.next {
            Control::State(s) => s.0,
            Control::Halt => q,
            Control::Yes => q + 1,
            Control::No => q + 2,
        };
        let _ = write!(out, ";{next}");
        for (w, d) in &action.writes {
            let _ = write!(out, ",{},{}", w.0, move_code(*d));
        }
    }
    out.push('#');
    let idx: Vec<String> = input.iter().map(|s| s.0.to_string()).collect();
    out.push_str(&idx.join(","));
    Ok(EncodedPair(out))
}

/// The numeric content of an encoding, as read by the universal interpreter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatProgram {
    pub name: String,
    pub tape_count: usize,
    pub symbol_count: usize,
    pub state_count: usize,
    pub start: u32,
    pub symbol_names: Vec<String>,
    pub state_names: Vec<String>,
    /// `1 + 2k` numbers per key: next, then (write, move) per tape.
    pub actions: Vec<u32>,
    pub input: Vec<u32>,
}

impl FlatProgram {
    pub fn stride(&self) -> usize {
        1 + 2 * self.tape_count
    }
}

fn num(field: &str, what: &str) -> Result<u32, EncodingError> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return malformed(format!("{what}: expected a decimal number, got `{field}`"));
    }
    field
        .parse()
        .map_err(|_| EncodingError::Malformed(format!("{what}: number out of range")))
}

/// Reads the numeric structure of an encoding without building a [`Machine`].
pub fn parse_flat(pair: &EncodedPair) -> Result<FlatProgram, EncodingError> {
    let s = pair.as_str();
    let Some((machine, input)) = s.split_once('#') else {
        return malformed("missing `#` separator");
    };
    if input.contains('#') {
        return malformed("more than one `#` separator");
    }
    let fields: Vec<&str> = machine.split(';').collect();
    if fields.len() < 7 {
        return malformed("truncated machine header");
    }
    let name = unhex(fields[0])?;
    let tape_count = num(fields[1], "tape count")? as usize;
    let symbol_count = num(fields[2], "symbol count")? as usize;
    let state_count = num(fields[3], "state count")? as usize;
    let start = num(fields[4], "start state")?;
    if tape_count == 0 || symbol_count < 2 || state_count == 0 {
        return malformed("empty tape, symbol or state set");
    }
    if start as usize >= state_count {
        return malformed("start state out of range");
    }
    let symbol_names = fields[5]
        .split(',')
        .map(unhex)
        .collect::<Result<Vec<_>, _>>()?;
    let state_names = fields[6]
        .split(',')
        .map(unhex)
        .collect::<Result<Vec<_>, _>>()?;
    if symbol_names.len() != symbol_count || state_names.len() != state_count {
        return malformed("name list length disagrees with header");
    }
    let keys = symbol_count
        .checked_pow(tape_count as u32)
        .and_then(|p| p.checked_mul(state_count))
        .filter(|k| *k <= crate::machine::MAX_TABLE_KEYS)
        .ok_or_else(|| EncodingError::Malformed("table too large".into()))?;
    if fields.len() != 7 + keys {
        return malformed(format!(
            "expected {keys} actions, found {}",
            fields.len() - 7
        ));
    }
    let stride = 1 + 2 * tape_count;
    let mut actions = Vec::with_capacity(keys * stride);
    for f in &fields[7..] {
        let parts: Vec<&str> = f.split(',').collect();
        if parts.len() != stride {
            return malformed("action has wrong arity");
        }
        let next = num(parts[0], "next state")?;
        if next as usize >= state_count + 3 {
            return malformed("next state out of range");
        }
        actions.push(next);
        for pair in parts[1..].chunks(2) {
            let w = num(pair[0], "written symbol")?;
            let d = num(pair[1], "move")?;
            if w as usize >= symbol_count || move_from_code(d).is_none() {
                return malformed("write or move out of range");
            }
            actions.push(w);
            actions.push(d);
        }
    }
    let input = if input.is_empty() {
        Vec::new()
    } else {
        input
            .split(',')
            .map(|f| num(f, "input symbol"))
            .collect::<Result<Vec<_>, _>>()?
    };
    if input.iter().any(|s| *s < 2 || *s as usize >= symbol_count) {
        return malformed("input symbol out of range");
    }
    Ok(FlatProgram {
        name,
        tape_count,
        symbol_count,
        state_count,
        start,
        symbol_names,
        state_names,
        actions,
        input,
    })
}

/// Inverse of [`encode_pair`].
pub fn decode_pair(pair: &EncodedPair) -> Result<(Machine, Vec<Sym>), EncodingError> {
    let flat = parse_flat(pair)?;
    if flat.symbol_names.first().map(String::as_str) != Some(crate::machine::START_NAME)
        || flat.symbol_names.get(1).map(String::as_str) != Some(crate::machine::BLANK_NAME)
    {
        return malformed("alphabet must begin with `>` and `_`");
    }
    let k = flat.tape_count;
    let stride = flat.stride();
    let per = flat.symbol_count.pow(k as u32);
    let control_name = |c: u32| -> String {
        let q = flat.state_count as u32;
        match c {
            c if c < q => flat.state_names[c as usize].clone(),
            c if c == q => "h".into(),
            c if c == q + 1 => "yes".into(),
            _ => "no".into(),
        }
    };
    let mut rules = Vec::with_capacity(flat.actions.len() / stride);
    for (key, chunk) in flat.actions.chunks(stride).enumerate() {
        let mut tuple = key % per;
        let mut read = vec![String::new(); k];
        for slot in read.iter_mut().rev() {
            *slot = flat.symbol_names[tuple % flat.symbol_count].clone();
            tuple /= flat.symbol_count;
        }
        let writes = chunk[1..]
            .chunks(2)
            .map(|wd| {
                (
                    flat.symbol_names[wd[0] as usize].clone(),
                    move_from_code(wd[1]).expect("checked by parse_flat"),
                )
            })
            .collect();
        rules.push(RuleSpec {
            state: flat.state_names[key / per].clone(),
            read: Some(read),
            next: control_name(chunk[0]),
            writes,
        });
    }
    let spec = MachineSpec {
        name: flat.name.clone(),
        tape_count: k,
        alphabet: flat.symbol_names.clone(),
        states: flat.state_names.clone(),
        start: flat.state_names[flat.start as usize].clone(),
        rules,
    };
    let machine = Machine::new(&spec)?;
    let input = flat.input.iter().map(|s| Sym(*s)).collect();
    Ok((machine, input))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_machine;

    const APPENDER: &str = "\
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
    fn layout_and_round_trip() {
        let m = parse_machine(APPENDER).unwrap();
        let x = m.parse_word("1").unwrap();
        let e = encode_pair(&m, &x).unwrap();
        // name hex, then k=1, |Σ|=4, |K|=2, start=0
        assert!(e
            .as_str()
            .starts_with("617070656e646572;1;4;2;0;3e,5f,30,31;73,71;"));
        assert!(e.as_str().ends_with("#3"));
        let (m2, x2) = decode_pair(&e).unwrap();
        assert_eq!(m2, m);
        assert_eq!(x2, x);
    }

    #[test]
    fn distinct_machines_distinct_codes() {
        let m = parse_machine(APPENDER).unwrap();
        let other = parse_machine(&APPENDER.replace("q (_) -> yes", "q (_) -> h")).unwrap();
        let x = m.parse_word("11").unwrap();
        assert_ne!(
            encode_pair(&m, &x).unwrap(),
            encode_pair(&other, &x).unwrap()
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(EncodedPair::new("zz").is_err());
        let m = parse_machine(APPENDER).unwrap();
        let e = encode_pair(&m, &[]).unwrap();
        let cut = EncodedPair::new(&e.as_str()[..e.as_str().len() - 8]).unwrap();
        assert!(decode_pair(&cut).is_err());
        let no_sep = EncodedPair::new(e.as_str().replace('#', ";")).unwrap();
        assert!(parse_flat(&no_sep).is_err());
        let bad_input = EncodedPair::new(format!("{}1", e.as_str())).unwrap();
        assert!(parse_flat(&bad_input).is_err());
        assert!(encode_pair(&m, &[Sym::BLANK]).is_err());
    }
}
