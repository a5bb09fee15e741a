//! Deterministic k-tape machines: validated transition tables, configurations,
//! the single-step rule and bounded runs.
//!
//! A machine is the quadruple of states, alphabet, transition function and
//! start state, together with a tape count. Every tape begins with the start
//! marker `>` in cell 0 followed by blanks `_`; the input is written on the
//! first tape starting at cell 1. Cursors start at cell 0 and can never move
//! left of the marker, because every rule that reads `>` must write `>` back
//! and move right.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Spelling of the start marker in machine documents.
pub const START_NAME: &str = ">";
/// Spelling of the blank symbol in machine documents.
pub const BLANK_NAME: &str = "_";

/// Names that denote the three halting controls and so cannot be states.
pub const HALT_NAMES: [&str; 3] = ["h", "yes", "no"];

/// Upper bound on `|K| * |Σ|^k`, the size of a fully expanded table.
pub const MAX_TABLE_KEYS: usize = 1 << 22;

/// Interned symbol. Index 0 is always the start marker and 1 the blank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub u32);

impl Sym {
    pub const START: Sym = Sym(0);
    pub const BLANK: Sym = Sym(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned non-halting control state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Control component of a configuration: a state of `K` or one of `h`, `yes`, `no`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Control {
    State(StateId),
    Halt,
    Yes,
    No,
}

impl Control {
    pub fn is_halted(self) -> bool {
        !matches!(self, Control::State(_))
    }

    /// The status a run reports when it stops in this control, if halted.
    pub fn status(self) -> Option<Status> {
        match self {
            Control::State(_) => None,
            Control::Halt => Some(Status::Halt),
            Control::Yes => Some(Status::Yes),
            Control::No => Some(Status::No),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Left,
    Right,
    Stay,
}

impl Move {
    pub fn letter(self) -> char {
        match self {
            Move::Left => 'L',
            Move::Right => 'R',
            Move::Stay => 'S',
        }
    }

    pub fn from_letter(c: &str) -> Option<Move> {
        match c {
            "L" => Some(Move::Left),
            "R" => Some(Move::Right),
            "S" => Some(Move::Stay),
            _ => None,
        }
    }
}

/// Right-hand side of a transition: next control plus one write/move per tape.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub next: Control,
    pub writes: Vec<(Sym, Move)>,
}

/// Outcome of a bounded run. `BudgetExhausted` is the finite stand-in for a
/// machine that computes forever; it is never conflated with `No`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Yes,
    No,
    Halt,
    BudgetExhausted,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Yes => "yes",
            Status::No => "no",
            Status::Halt => "h",
            Status::BudgetExhausted => "budget-exhausted",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("machine must have at least one tape")]
    NoTapes,
    #[error("alphabet must contain the blank `_` and the start marker `>`")]
    MissingReserved,
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("`{0}` is a halting state and cannot be declared in the state set")]
    ReservedState(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("start state `{0}` is not a declared state")]
    UnknownStartState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("rule for state `{state}` has {found} tape entries, expected {expected}")]
    Arity {
        state: String,
        expected: usize,
        found: usize,
    },
    #[error("rule ({state}, {read}) reads `>` on tape {tape} but does not write `>` and move R")]
    StartMarkerProtection {
        state: String,
        read: String,
        tape: usize,
    },
    #[error("rule ({state}, {read}) writes `>` over a non-marker cell on tape {tape}")]
    WritesStartMarker {
        state: String,
        read: String,
        tape: usize,
    },
    #[error("duplicate rule for key ({state}, {read})")]
    DuplicateRule { state: String, read: String },
    #[error("state `{0}` has more than one wildcard default")]
    DuplicateDefault(String),
    #[error("transition function is not total: no rule for ({state}, {read}) and no default")]
    NotTotal { state: String, read: String },
    #[error("expanded transition table would need {0} entries")]
    TableTooLarge(usize),
    #[error("input symbol `{0}` is not allowed (blank, start marker or undeclared)")]
    InvalidInput(String),
}

/// One rule line with identifiers still as names. `read == None` is a
/// wildcard default applying to every read tuple with no explicit rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSpec {
    pub state: String,
    pub read: Option<Vec<String>>,
    pub next: String,
    pub writes: Vec<(String, Move)>,
}

/// Unvalidated machine description, the common input of both the
/// deterministic and the relational constructors.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MachineSpec {
    pub name: String,
    pub tape_count: usize,
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub start: String,
    pub rules: Vec<RuleSpec>,
}

/// The parts of a machine shared by every variant: `K`, `Σ`, `s` and `k`.
///
/// The alphabet is stored with `>` at index 0 and `_` at index 1, followed by
/// the remaining symbols in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub name: String,
    pub tape_count: usize,
    alphabet: Vec<String>,
    states: Vec<String>,
    start: StateId,
}

pub(crate) fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s != "*"
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '#'))
}

impl Signature {
    pub fn new(
        name: &str,
        tape_count: usize,
        alphabet: &[String],
        states: &[String],
        start: &str,
    ) -> Result<Signature, MachineError> {
        if tape_count == 0 {
            return Err(MachineError::NoTapes);
        }
        if !alphabet.iter().any(|s| s == START_NAME) || !alphabet.iter().any(|s| s == BLANK_NAME) {
            return Err(MachineError::MissingReserved);
        }
        let mut syms = vec![START_NAME.to_string(), BLANK_NAME.to_string()];
        let mut seen = std::collections::HashSet::new();
        for s in alphabet {
            if !valid_identifier(s) {
                return Err(MachineError::InvalidIdentifier(s.clone()));
            }
            if !seen.insert(s.as_str()) {
                return Err(MachineError::DuplicateSymbol(s.clone()));
            }
            if s != START_NAME && s != BLANK_NAME {
                syms.push(s.clone());
            }
        }
        let mut seen = std::collections::HashSet::new();
        for q in states {
            if !valid_identifier(q) {
                return Err(MachineError::InvalidIdentifier(q.clone()));
            }
            if HALT_NAMES.contains(&q.as_str()) {
                return Err(MachineError::ReservedState(q.clone()));
            }
            if !seen.insert(q.as_str()) {
                return Err(MachineError::DuplicateState(q.clone()));
            }
        }
        let start = states
            .iter()
            .position(|q| q == start)
            .ok_or_else(|| MachineError::UnknownStartState(start.to_string()))?;
        Ok(Signature {
            name: name.to_string(),
            tape_count,
            alphabet: syms,
            states: states.to_vec(),
            start: StateId(start as u32),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tape_count(&self) -> usize {
        self.tape_count
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn start_state(&self) -> StateId {
        self.start
    }

    pub fn symbol(&self, name: &str) -> Option<Sym> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .map(|i| Sym(i as u32))
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u32))
    }

    pub fn control(&self, name: &str) -> Option<Control> {
        match name {
            "h" => Some(Control::Halt),
            "yes" => Some(Control::Yes),
            "no" => Some(Control::No),
            _ => self.state(name).map(Control::State),
        }
    }

    pub fn symbol_name(&self, s: Sym) -> &str {
        &self.alphabet[s.index()]
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q.index()]
    }

    pub fn control_name(&self, c: Control) -> &str {
        match c {
            Control::State(q) => self.state_name(q),
            Control::Halt => "h",
            Control::Yes => "yes",
            Control::No => "no",
        }
    }

    /// Number of read tuples per state, `|Σ|^k`.
    pub fn tuples_per_state(&self) -> usize {
        self.alphabet.len().pow(self.tape_count as u32)
    }

    pub fn key_count(&self) -> usize {
        self.states.len() * self.tuples_per_state()
    }

    pub(crate) fn key_of(&self, q: StateId, read: &[Sym]) -> usize {
        let radix = self.alphabet.len();
        let tuple = read.iter().fold(0usize, |acc, s| acc * radix + s.index());
        q.index() * self.tuples_per_state() + tuple
    }

    /// Inverse of the key index: state and read tuple (tape 1 most significant).
    pub fn key_parts(&self, key: usize) -> (StateId, Vec<Sym>) {
        let per = self.tuples_per_state();
        let radix = self.alphabet.len();
        let mut tuple = key % per;
        let mut read = vec![Sym(0); self.tape_count];
        for slot in read.iter_mut().rev() {
            *slot = Sym((tuple % radix) as u32);
            tuple /= radix;
        }
        (StateId((key / per) as u32), read)
    }

    pub fn render_tuple(&self, read: &[Sym]) -> String {
        let names: Vec<&str> = read.iter().map(|s| self.symbol_name(*s)).collect();
        format!("({})", names.join(","))
    }

    /// Parses an input word. Whitespace-separated symbol names are accepted;
    /// without whitespace every character is one symbol.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Sym>, MachineError> {
        let text = text.trim();
        let tokens: Vec<String> = if text.chars().any(char::is_whitespace) {
            text.split_whitespace().map(str::to_string).collect()
        } else {
            text.chars().map(|c| c.to_string()).collect()
        };
        tokens
            .iter()
            .map(|t| match self.symbol(t) {
                Some(s) if s != Sym::START && s != Sym::BLANK => Ok(s),
                _ => Err(MachineError::InvalidInput(t.clone())),
            })
            .collect()
    }

    pub fn check_word(&self, word: &[Sym]) -> Result<(), MachineError> {
        for s in word {
            if *s == Sym::START || *s == Sym::BLANK || s.index() >= self.alphabet.len() {
                let name = self
                    .alphabet
                    .get(s.index())
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", s.0));
                return Err(MachineError::InvalidInput(name));
            }
        }
        Ok(())
    }

    /// Renders a word; symbols are concatenated when all names are one
    /// character long and space-separated otherwise.
    pub fn render_word(&self, word: &[Sym]) -> String {
        let compact = word
            .iter()
            .all(|s| self.symbol_name(*s).chars().count() == 1);
        let names: Vec<&str> = word.iter().map(|s| self.symbol_name(*s)).collect();
        if compact {
            names.concat()
        } else {
            names.join(" ")
        }
    }

    /// Configuration at time 0 for `input`.
    pub fn initial_configuration(&self, input: &[Sym]) -> Result<Configuration, MachineError> {
        self.check_word(input)?;
        let mut tapes = vec![Tape::default(); self.tape_count];
        for (j, s) in input.iter().enumerate() {
            tapes[0].write(j + 1, *s);
        }
        Ok(Configuration {
            tapes,
            cursors: vec![0; self.tape_count],
            control: Control::State(self.start),
            step: 0,
        })
    }
}

/// Current contents of one tape: cell 0 holds `>`, absent cells are blank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tape {
    cells: BTreeMap<usize, Sym>,
}

impl Tape {
    pub fn read(&self, cell: usize) -> Sym {
        if cell == 0 {
            return Sym::START;
        }
        self.cells.get(&cell).copied().unwrap_or(Sym::BLANK)
    }

    pub(crate) fn write(&mut self, cell: usize, s: Sym) {
        if cell == 0 {
            debug_assert_eq!(s, Sym::START);
            return;
        }
        if s == Sym::BLANK {
            self.cells.remove(&cell);
        } else {
            self.cells.insert(cell, s);
        }
    }

    /// Index of the last non-blank cell after the marker, 0 if none.
    pub fn last_written(&self) -> usize {
        self.cells.keys().next_back().copied().unwrap_or(0)
    }

    /// Contents from cell 1 through the last non-blank cell.
    pub fn contents(&self) -> Vec<Sym> {
        (1..=self.last_written()).map(|j| self.read(j)).collect()
    }
}

/// One time-slice of a run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub tapes: Vec<Tape>,
    pub cursors: Vec<usize>,
    pub control: Control,
    pub step: u64,
}

impl Configuration {
    pub fn read_tuple(&self) -> Vec<Sym> {
        self.tapes
            .iter()
            .zip(&self.cursors)
            .map(|(t, c)| t.read(*c))
            .collect()
    }

    /// Applies one action in place: writes land at the pre-move cursor cells.
    pub(crate) fn apply(&mut self, action: &Action) {
        for (i, (sym, mv)) in action.writes.iter().enumerate() {
            let cur = self.cursors[i];
            self.tapes[i].write(cur, *sym);
            self.cursors[i] = match mv {
                Move::Left => cur
                    .checked_sub(1)
                    .expect("validated rules never move left of the start marker"),
                Move::Right => cur + 1,
                Move::Stay => cur,
            };
        }
        self.control = action.next;
        self.step += 1;
    }

    /// Output of the configuration: the last tape without the marker and
    /// trailing blanks.
    pub fn output(&self) -> Vec<Sym> {
        self.tapes.last().map(Tape::contents).unwrap_or_default()
    }
}

/// Free-function form of [`Configuration::output`].
pub fn output_of(config: &Configuration) -> Vec<Sym> {
    config.output()
}

/// Expands a rule table into one list of actions per key. Wildcard defaults
/// fill keys without an explicit rule; on tapes where the key reads `>` the
/// default's write/move is replaced by `(>, R)`.
pub(crate) fn compile_table(
    spec: &MachineSpec,
    relational: bool,
) -> Result<(Signature, Vec<Vec<Action>>), MachineError> {
    let sig = Signature::new(
        &spec.name,
        spec.tape_count,
        &spec.alphabet,
        &spec.states,
        &spec.start,
    )?;
    let keys = sig.states.len().saturating_mul(
        sig.alphabet
            .len()
            .checked_pow(sig.tape_count as u32)
            .unwrap_or(usize::MAX),
    );
    if keys > MAX_TABLE_KEYS {
        return Err(MachineError::TableTooLarge(keys));
    }
    let mut table: Vec<Vec<Action>> = vec![Vec::new(); keys];
    let mut defaults: Vec<Vec<Action>> = vec![Vec::new(); sig.states.len()];

    for rule in &spec.rules {
        let q = sig
            .state(&rule.state)
            .ok_or_else(|| MachineError::UnknownState(rule.state.clone()))?;
        let next = sig
            .control(&rule.next)
            .ok_or_else(|| MachineError::UnknownState(rule.next.clone()))?;
        if rule.writes.len() != sig.tape_count {
            return Err(MachineError::Arity {
                state: rule.state.clone(),
                expected: sig.tape_count,
                found: rule.writes.len(),
            });
        }
        let writes = rule
            .writes
            .iter()
            .map(|(w, d)| {
                sig.symbol(w)
                    .map(|s| (s, *d))
                    .ok_or_else(|| MachineError::UnknownSymbol(w.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let action = Action { next, writes };
        match &rule.read {
            Some(read_names) => {
                if read_names.len() != sig.tape_count {
                    return Err(MachineError::Arity {
                        state: rule.state.clone(),
                        expected: sig.tape_count,
                        found: read_names.len(),
                    });
                }
                let read = read_names
                    .iter()
                    .map(|r| {
                        sig.symbol(r)
                            .ok_or_else(|| MachineError::UnknownSymbol(r.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                check_marker(&sig, q, &read, &action)?;
                let slot = &mut table[sig.key_of(q, &read)];
                if slot.contains(&action) || (!relational && !slot.is_empty()) {
                    return Err(MachineError::DuplicateRule {
                        state: rule.state.clone(),
                        read: sig.render_tuple(&read),
                    });
                }
                slot.push(action);
            }
            None => {
                let slot = &mut defaults[q.index()];
                if slot.contains(&action) || (!relational && !slot.is_empty()) {
                    return Err(MachineError::DuplicateDefault(rule.state.clone()));
                }
                slot.push(action);
            }
        }
    }

    for (key, slot) in table.iter_mut().enumerate() {
        if !slot.is_empty() {
            continue;
        }
        let (q, read) = sig.key_parts(key);
        let defs = &defaults[q.index()];
        if defs.is_empty() {
            return Err(MachineError::NotTotal {
                state: sig.state_name(q).to_string(),
                read: sig.render_tuple(&read),
            });
        }
        for d in defs {
            let action = specialize_default(d, &read);
            check_marker(&sig, q, &read, &action)?;
            if !slot.contains(&action) {
                slot.push(action);
            }
        }
    }
    Ok((sig, table))
}

/// A default rule instantiated at a concrete read tuple.
pub(crate) fn specialize_default(default: &Action, read: &[Sym]) -> Action {
    Action {
        next: default.next,
        writes: default
            .writes
            .iter()
            .zip(read)
            .map(|(w, r)| {
                if *r == Sym::START {
                    (Sym::START, Move::Right)
                } else {
                    *w
                }
            })
            .collect(),
    }
}

fn check_marker(
    sig: &Signature,
    q: StateId,
    read: &[Sym],
    action: &Action,
) -> Result<(), MachineError> {
    for (i, (r, (w, d))) in read.iter().zip(&action.writes).enumerate() {
        if *r == Sym::START && (*w != Sym::START || *d != Move::Right) {
            return Err(MachineError::StartMarkerProtection {
                state: sig.state_name(q).to_string(),
                read: sig.render_tuple(read),
                tape: i + 1,
            });
        }
        if *r != Sym::START && *w == Sym::START {
            return Err(MachineError::WritesStartMarker {
                state: sig.state_name(q).to_string(),
                read: sig.render_tuple(read),
                tape: i + 1,
            });
        }
    }
    Ok(())
}

/// A deterministic k-tape machine with a total transition function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Machine {
    sig: Signature,
    delta: Vec<Action>,
}

impl Machine {
    /// Validates `spec` and expands wildcard defaults into a total table.
    pub fn new(spec: &MachineSpec) -> Result<Machine, MachineError> {
        let (sig, table) = compile_table(spec, false)?;
        let delta = table
            .into_iter()
            .map(|mut v| {
                debug_assert_eq!(v.len(), 1);
                v.pop().expect("compiled table is total")
            })
            .collect();
        Ok(Machine { sig, delta })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn name(&self) -> &str {
        &self.sig.name
    }

    pub fn tape_count(&self) -> usize {
        self.sig.tape_count
    }

    /// The fully expanded table, indexed by key (state-major, tape 1 most
    /// significant).
    pub fn table(&self) -> &[Action] {
        &self.delta
    }

    pub fn delta(&self, q: StateId, read: &[Sym]) -> &Action {
        &self.delta[self.sig.key_of(q, read)]
    }

    pub fn parse_word(&self, text: &str) -> Result<Vec<Sym>, MachineError> {
        self.sig.parse_word(text)
    }

    pub fn render_word(&self, word: &[Sym]) -> String {
        self.sig.render_word(word)
    }

    pub fn initial_configuration(&self, input: &[Sym]) -> Result<Configuration, MachineError> {
        self.sig.initial_configuration(input)
    }

    /// Advances `config` by one time step in place.
    pub fn advance(&self, config: &mut Configuration) {
        match config.control {
            Control::State(q) => {
                let read = config.read_tuple();
                let action = self.delta(q, &read);
                config.apply(action);
            }
            _ => config.step += 1,
        }
    }

    /// One step of the transition rule. Halted configurations are absorbing;
    /// only their step counter advances.
    pub fn step(&self, config: &Configuration) -> Configuration {
        let mut next = config.clone();
        self.advance(&mut next);
        next
    }

    /// Runs from the initial configuration for at most `budget` steps.
    pub fn run(&self, input: &[Sym], budget: u64) -> Result<RunResult, MachineError> {
        self.run_observed(input, budget, |_| {})
    }

    /// Like [`Machine::run`] but records every configuration, time 0 included.
    pub fn run_traced(&self, input: &[Sym], budget: u64) -> Result<RunResult, MachineError> {
        let mut trace = Vec::new();
        let mut result = self.run_observed(input, budget, |c| trace.push(c.clone()))?;
        result.trace = Some(trace);
        Ok(result)
    }

    /// Runs and hands each configuration (time 0 through the final one) to
    /// `observe`.
    pub fn run_observed(
        &self,
        input: &[Sym],
        budget: u64,
        mut observe: impl FnMut(&Configuration),
    ) -> Result<RunResult, MachineError> {
        let mut config = self.initial_configuration(input)?;
        observe(&config);
        while !config.control.is_halted() && config.step < budget {
            self.advance(&mut config);
            observe(&config);
        }
        Ok(RunResult::from_final(&config))
    }
}

/// Observables of a bounded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub status: Status,
    /// First step at which a halting control was entered.
    pub mtime: Option<u64>,
    /// Last-tape contents; empty when the budget ran out.
    pub output: Vec<Sym>,
    /// Steps actually taken.
    pub steps: u64,
    pub trace: Option<Vec<Configuration>>,
}

impl RunResult {
    pub(crate) fn from_final(config: &Configuration) -> RunResult {
        match config.control.status() {
            Some(status) => RunResult {
                status,
                mtime: Some(config.step),
                output: config.output(),
                steps: config.step,
                trace: None,
            },
            None => RunResult {
                status: Status::BudgetExhausted,
                mtime: None,
                output: Vec::new(),
                steps: config.step,
                trace: None,
            },
        }
    }

    /// The comparable part of a result: status, mtime and output.
    pub fn observables(&self) -> (Status, Option<u64>, &[Sym]) {
        (self.status, self.mtime, &self.output)
    }
}
